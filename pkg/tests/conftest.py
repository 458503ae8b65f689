from __future__ import annotations

import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def doc_manifest() -> dict:
    return json.loads((FIXTURES / "docs" / "manifest.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def fx_dataset_path() -> Path:
    return FIXTURES / "dataset" / "fx.jsonl"


@pytest.fixture(scope="session")
def mock_fixtures_dir() -> Path:
    return FIXTURES / "mock"


def e2e_config_dict(out_dir: Path, **overrides) -> dict:
    cfg = {
        "dataset": str(FIXTURES / "dataset" / "fx.jsonl"),
        "out_dir": str(out_dir),
        "provider": {"kind": "mock", "fixtures_dir": str(FIXTURES / "mock")},
        "sampling": {"n": 4, "temperature": 0.8, "top_p": 0.95, "max_tokens": 2048},
        "stages": ["requirements", "code", "tests"],
        "k_values": [1, 2],
        "parallelism": 2,
        "runner": {"kind": "stub"},
        "seed_label": "fx",
    }
    cfg.update(overrides)
    return cfg
