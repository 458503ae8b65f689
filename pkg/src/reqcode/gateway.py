"""Uniform completion interface: a live OpenAI-compatible client and a
deterministic offline mock.

The mock provider is keyed by (task_id, stage, sample_index) fixture files so
the same fixture set serves every generation stage without a network, and an
identical run configuration always yields identical completions.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import (
    BudgetExceeded,
    EmptyRun,
    InvalidRequest,
    MissingFixture,
    ProviderUnavailable,
)

log = logging.getLogger(__name__)

API_KEY_ENV = "REQCODE_API_KEY"
BASE_URL_ENV = "REQCODE_BASE_URL"


class Strategy(str, Enum):
    NUCLEUS = "nucleus"
    GREEDY = "greedy"


@dataclass(frozen=True)
class SamplingConfig:
    """Sampling parameters shared by every provider.

    Greedy strategy is treated as temperature 0 with one sample per request;
    requests are replicated client-side when n > 1.
    """

    n: int = 10
    temperature: float = 0.8
    top_p: float = 0.95
    max_tokens: int = 2048
    stop: tuple[str, ...] = ()
    strategy: Strategy = Strategy.NUCLEUS

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (0 < self.top_p <= 1):
            raise ValueError("top_p must be in (0, 1]")

    def params_hash(self) -> str:
        payload = {
            "n": self.n,
            "temperature": 0.0 if self.strategy is Strategy.GREEDY else self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
            "stop": list(self.stop),
            "strategy": self.strategy.value,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Completion:
    text: str
    sample_index: int
    provider: str
    usage: dict | None = None
    latency_ms: int = 0


@dataclass(frozen=True)
class FixtureKey:
    """Routing metadata for completion lookups and caching."""

    task_id: str
    stage: str

    def filename(self, index: int) -> str:
        return f"{self.task_id}.{self.stage}.{index}.txt"


class CompletionProvider:
    """Interface: return exactly cfg.n completions ordered by sample_index."""

    name = "base"

    def complete(
        self, prompt: str, cfg: SamplingConfig, *, key: FixtureKey | None = None
    ) -> list[Completion]:
        raise NotImplementedError


class MockProvider(CompletionProvider):
    """Deterministic table-lookup provider backed by fixture files.

    Fixtures live under ``fixtures_dir`` named ``<task_id>.<stage>.<index>.txt``
    (task ids may contain slashes; they become subdirectories).
    """

    name = "mock"

    def __init__(self, fixtures_dir: Path | str):
        self.fixtures_dir = Path(fixtures_dir)
        self.call_count = 0
        self._lock = threading.Lock()

    def complete(
        self, prompt: str, cfg: SamplingConfig, *, key: FixtureKey | None = None
    ) -> list[Completion]:
        if not prompt:
            raise InvalidRequest("prompt must be non-empty")
        if key is None:
            raise InvalidRequest("mock provider needs a (task_id, stage) fixture key")
        with self._lock:
            self.call_count += 1
        out = []
        for i in range(cfg.n):
            # Greedy sampling replicates the single deterministic completion.
            index = 0 if cfg.strategy is Strategy.GREEDY else i
            path = self.fixtures_dir / key.filename(index)
            if not path.exists():
                raise MissingFixture(f"no fixture for {key.task_id}.{key.stage}.{index}")
            out.append(
                Completion(
                    text=path.read_text(encoding="utf-8"),
                    sample_index=i,
                    provider=self.name,
                )
            )
        return out


@dataclass
class Budget:
    """Client-side budget so cost failures are deterministic in CI."""

    max_calls: int | None = None
    max_total_tokens: int | None = None
    calls: int = 0
    total_tokens: int = 0

    def charge_call(self):
        if self.max_calls is not None and self.calls + 1 > self.max_calls:
            raise BudgetExceeded(f"call budget of {self.max_calls} would be crossed")
        if self.max_total_tokens is not None and self.total_tokens >= self.max_total_tokens:
            raise BudgetExceeded(f"token budget of {self.max_total_tokens} exhausted")
        self.calls += 1

    def record_usage(self, usage: dict | None):
        if usage:
            self.total_tokens += int(usage.get("total_tokens", 0))


class RateLimiter:
    """Minimum spacing between request starts, shared across threads."""

    def __init__(self, min_interval_s: float = 0.0):
        self.min_interval_s = min_interval_s
        self._lock = threading.Lock()
        self._last = 0.0

    def wait(self):
        if self.min_interval_s <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._last + self.min_interval_s - now
            if delay > 0:
                time.sleep(delay)
            self._last = time.monotonic()


_NO_RETRY_STATUS = {400, 401, 403, 404, 405, 413, 422}


class OpenAIProvider(CompletionProvider):
    """Chat-completions client for any OpenAI-compatible endpoint.

    Transient transport failures are retried with exponential backoff up to
    ``retry_cap``; malformed-request rejections are never retried.
    """

    name = "openai"

    def __init__(
        self,
        model: str,
        base_url: str | None = None,
        api_key: str | None = None,
        fan_out: int = 4,
        retry_cap: int = 3,
        backoff_base_s: float = 0.5,
        budget: Budget | None = None,
        rate_limiter: RateLimiter | None = None,
        timeout_s: float = 120.0,
        transport=None,
    ):
        import httpx

        self.model = model
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV, "https://api.openai.com/v1")).rstrip("/")
        self.api_key = api_key or os.environ.get(API_KEY_ENV, "")
        self.retry_cap = retry_cap
        self.backoff_base_s = backoff_base_s
        self.budget = budget or Budget()
        self.rate_limiter = rate_limiter or RateLimiter()
        self._fan_out = threading.Semaphore(fan_out)
        self._client = httpx.Client(timeout=timeout_s, transport=transport)
        self._budget_lock = threading.Lock()

    def complete(
        self, prompt: str, cfg: SamplingConfig, *, key: FixtureKey | None = None
    ) -> list[Completion]:
        if not prompt:
            raise InvalidRequest("prompt must be non-empty")
        if cfg.strategy is Strategy.GREEDY:
            out: list[Completion] = []
            for i in range(cfg.n):
                got = self._request(prompt, cfg, n=1, temperature=0.0)
                out.append(dataclasses.replace(got[0], sample_index=i))
            return out
        out = self._request(prompt, cfg, n=cfg.n, temperature=cfg.temperature)
        if len(out) < cfg.n:
            raise ProviderUnavailable(
                f"provider returned {len(out)} of {cfg.n} requested completions"
            )
        return out

    def _request(self, prompt: str, cfg: SamplingConfig, n: int, temperature: float) -> list[Completion]:
        import httpx

        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "n": n,
            "temperature": temperature,
            "top_p": cfg.top_p,
            "max_tokens": cfg.max_tokens,
        }
        if cfg.stop:
            payload["stop"] = list(cfg.stop)
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error: Exception | None = None
        for attempt in range(self.retry_cap + 1):
            with self._budget_lock:
                self.budget.charge_call()
            self.rate_limiter.wait()
            started = time.monotonic()
            try:
                with self._fan_out:
                    resp = self._client.post(
                        f"{self.base_url}/chat/completions", json=payload, headers=headers
                    )
            except httpx.TransportError as exc:
                last_error = exc
                log.warning("transport failure (attempt %d): %s", attempt, exc)
                time.sleep(self.backoff_base_s * (2**attempt))
                continue
            if resp.status_code in _NO_RETRY_STATUS:
                raise InvalidRequest(f"provider rejected request ({resp.status_code}): {resp.text[:200]}")
            if resp.status_code != 200:
                last_error = ProviderUnavailable(f"status {resp.status_code}")
                time.sleep(self.backoff_base_s * (2**attempt))
                continue
            latency_ms = int((time.monotonic() - started) * 1000)
            body = resp.json()
            usage = body.get("usage")
            with self._budget_lock:
                self.budget.record_usage(usage)
            choices = sorted(body.get("choices", []), key=lambda ch: ch.get("index", 0))
            return [
                Completion(
                    text=ch.get("message", {}).get("content", ""),
                    sample_index=ch.get("index", i),
                    provider=self.name,
                    usage=usage if i == 0 else None,
                    latency_ms=latency_ms,
                )
                for i, ch in enumerate(choices)
            ]
        raise ProviderUnavailable(f"retries exhausted after {self.retry_cap + 1} attempts: {last_error}")


def count_generated_tests(counts) -> float:
    """Mean number of generated tests per problem.

    Accepts an iterable of per-problem counts or any object exposing
    ``generated_test_counts()``.
    """
    if hasattr(counts, "generated_test_counts"):
        counts = counts.generated_test_counts()
    values = [float(c) for c in counts]
    if not values:
        raise EmptyRun("no per-problem test counts to average")
    return sum(values) / len(values)
