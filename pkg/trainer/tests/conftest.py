"""Shared fixture corpus for the trainer tests."""

import pytest

from sentext_trainer.data import (
    AUDIO_DIM,
    FACIAL_DIM,
    load_export,
    load_feature_csv,
    load_splits,
)
from sentext_trainer.fixture import gen_fixture
from sentext_trainer.train import lingual_features


@pytest.fixture(scope="session")
def small_fixture_dir(tmp_path_factory):
    """24 rows over 4 participants, 2 folds; enough for fast training runs."""
    out = tmp_path_factory.mktemp("small_fixture")
    gen_fixture(out, seed=0, participants=4, exchanges=6, k=2)
    return out


@pytest.fixture(scope="session")
def small_data(small_fixture_dir):
    rows = load_export(small_fixture_dir / "export.jsonl")
    splits = load_splits(small_fixture_dir / "splits.json")
    features = {
        "audio": load_feature_csv(small_fixture_dir / "audio_features.csv",
                                  AUDIO_DIM),
        "facial": load_feature_csv(small_fixture_dir / "facial_features.csv",
                                   FACIAL_DIM),
    }
    features["lingual"] = lingual_features(rows)
    return rows, splits, features
