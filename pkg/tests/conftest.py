import json
from pathlib import Path

import pytest

from sentext.fixture import generate
from sentext.locales import load_locale

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def locale_en():
    return load_locale("en")


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("mini_corpus")
    generate(root)
    return root


@pytest.fixture(scope="session")
def fixture_expected(fixture_dir) -> dict:
    rows = [json.loads(line)
            for line in (fixture_dir / "expected.jsonl").read_text().splitlines()]
    return {(r["participant_id"], r["exchange_id"]): r for r in rows}


def read_golden_pairs(name: str) -> list[tuple[str, str]]:
    pairs = []
    for line in (GOLDEN_DIR / name).read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition("\t")
        pairs.append((key, value))
    return pairs
