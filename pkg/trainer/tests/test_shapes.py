"""Architecture audits: exact parameter counts, layer graphs, scaling rules,
freeze guarantees, and the data-loading error taxonomy."""

import json

import numpy as np
import pytest
import torch

from sentext_trainer.cli import parse_config
from sentext_trainer.data import (
    AUDIO_DIM,
    FACIAL_DIM,
    LINGUAL_DIM,
    Split,
    TextRow,
    ZScore,
    gather,
    load_export,
    load_feature_csv,
    load_splits,
)
from sentext_trainer.encoder import (
    CLS_ID,
    MAX_TOKENS,
    PAD_ID,
    EncoderConfig,
    Pooling,
    TrainingMode,
    batch_tokens,
    encoder_checksum,
    load_encoder,
    pool,
    tokenize,
)
from sentext_trainer.errors import (
    DimensionMismatchError,
    EncoderLoadError,
    MissingSplitKeyError,
)
from sentext_trainer.models import (
    BaselineConfig,
    BaselineKind,
    DiscriminativeModel,
    Head,
    build_baseline,
    check_block_shapes,
    param_count,
)
from sentext_trainer.train import (
    FINE_TUNE_HP,
    FROZEN_HP,
    default_hyperparams,
    fit_scalers,
    macro_f1,
    train_baseline,
    train_discriminative,
)


def linear_params(n_in, n_out):
    return n_in * n_out + n_out


def linears_of(module):
    return [m for m in module.modules() if isinstance(m, torch.nn.Linear)]


def shapes_of(module):
    return [(m.in_features, m.out_features) for m in linears_of(module)]


# parameter counts, closed form ------------------------------------------

FUSED_DIM = AUDIO_DIM + FACIAL_DIM + LINGUAL_DIM  # 1170


def test_dnn_base_parameter_count():
    expected = linear_params(FUSED_DIM, 768) + linear_params(768, 2)
    assert expected == 900_866
    model = build_baseline(BaselineConfig(kind=BaselineKind.DNN_BASE))
    assert param_count(model) == expected


def test_early_fusion_parameter_count():
    expected = (linear_params(FUSED_DIM, 128) + linear_params(128, 128)
                + linear_params(128, 64) + linear_params(64, 64)
                + linear_params(64, 2))
    assert expected == 178_946
    model = build_baseline(BaselineConfig(kind=BaselineKind.EARLY_FUSION))
    assert param_count(model) == expected


def test_late_fusion_1_parameter_count():
    towers = sum(linear_params(d, 128) + linear_params(128, 128)
                 for d in (AUDIO_DIM, FACIAL_DIM, LINGUAL_DIM))
    shared = linear_params(3 * 128, 64) + linear_params(64, 64)
    expected = towers + shared + linear_params(64, 2)
    assert expected == 228_610
    model = build_baseline(BaselineConfig(kind=BaselineKind.LATE_FUSION_1))
    assert param_count(model) == expected


def test_late_fusion_2_parameter_count():
    towers = sum(linear_params(d, 128) + linear_params(128, 128)
                 + linear_params(128, 64) + linear_params(64, 64)
                 for d in (AUDIO_DIM, FACIAL_DIM, LINGUAL_DIM))
    expected = towers + linear_params(64, 2)
    assert expected == 237_058
    model = build_baseline(BaselineConfig(kind=BaselineKind.LATE_FUSION_2))
    assert param_count(model) == expected


def test_head_parameter_count():
    expected = linear_params(768, 768) + linear_params(768, 2)
    assert expected == 592_130
    assert param_count(Head()) == expected


# layer graphs -------------------------------------------------------------

def test_dnn_base_layer_shapes():
    model = build_baseline(BaselineConfig(kind=BaselineKind.DNN_BASE))
    assert shapes_of(model) == [(FUSED_DIM, 768), (768, 2)]


def test_early_fusion_layer_shapes():
    model = build_baseline(BaselineConfig(kind=BaselineKind.EARLY_FUSION))
    assert shapes_of(model) == [(FUSED_DIM, 128), (128, 128), (128, 64),
                                (64, 64), (64, 2)]


def test_late_fusion_1_layer_shapes():
    model = build_baseline(BaselineConfig(kind=BaselineKind.LATE_FUSION_1))
    assert len(model.towers) == 3
    for tower, dim in zip(model.towers, (AUDIO_DIM, FACIAL_DIM, LINGUAL_DIM)):
        assert shapes_of(tower) == [(dim, 128), (128, 128)]
    assert shapes_of(model.shared) == [(384, 64), (64, 64)]
    assert (model.classifier.in_features, model.classifier.out_features) == (64, 2)


def test_late_fusion_2_sums_tower_outputs():
    model = build_baseline(BaselineConfig(kind=BaselineKind.LATE_FUSION_2))
    assert len(model.towers) == 3
    for tower, dim in zip(model.towers, (AUDIO_DIM, FACIAL_DIM, LINGUAL_DIM)):
        assert shapes_of(tower) == [(dim, 128), (128, 128), (128, 64), (64, 64)]
    blocks = [torch.randn(4, d) for d in (AUDIO_DIM, FACIAL_DIM, LINGUAL_DIM)]
    manual = model.classifier(
        sum(tower(x) for tower, x in zip(model.towers, blocks)))
    assert torch.allclose(model(blocks), manual)


def test_baseline_forward_output_shape():
    for kind in BaselineKind:
        model = build_baseline(BaselineConfig(kind=kind))
        blocks = [torch.randn(3, d)
                  for d in (AUDIO_DIM, FACIAL_DIM, LINGUAL_DIM)]
        assert model(blocks).shape == (3, 2)


def test_baseline_config_validation():
    with pytest.raises(ValueError):
        BaselineConfig(kind=BaselineKind.DNN_BASE, blocks=())
    with pytest.raises(ValueError):
        BaselineConfig(kind=BaselineKind.DNN_BASE, blocks=("audio", "tactile"))
    with pytest.raises(ValueError):
        BaselineConfig(kind=BaselineKind.DNN_BASE,
                       blocks=("lingual", "audio", "facial"))
    two = BaselineConfig(kind=BaselineKind.LATE_FUSION_1,
                         blocks=("audio", "lingual"))
    model = build_baseline(two)
    assert len(model.towers) == 2
    assert shapes_of(model.shared)[0] == (256, 64)


def test_check_block_shapes_rejects_wrong_width():
    cfg = BaselineConfig(kind=BaselineKind.DNN_BASE)
    good = [torch.zeros(2, d) for d in (AUDIO_DIM, FACIAL_DIM, LINGUAL_DIM)]
    check_block_shapes(cfg, good)
    bad = [torch.zeros(2, AUDIO_DIM), torch.zeros(2, FACIAL_DIM + 1),
           torch.zeros(2, LINGUAL_DIM)]
    with pytest.raises(DimensionMismatchError):
        check_block_shapes(cfg, bad)
    with pytest.raises(DimensionMismatchError):
        check_block_shapes(cfg, good[:2])


# tokenizer and encoder ----------------------------------------------------

def test_tokenize_shape_and_determinism():
    ids = tokenize("Saying tok0001, tok0002!")
    assert ids[0] == CLS_ID
    assert len(ids) == 4
    assert PAD_ID not in ids
    assert ids == tokenize("saying TOK0001 tok0002")
    long = tokenize(" ".join(f"w{i}" for i in range(100)))
    assert len(long) == MAX_TOKENS


def test_batch_tokens_padding_and_mask():
    # each sequence is CLS plus one id per word
    ids, mask = batch_tokens(["saying one two three", "saying one"])
    assert ids.shape == mask.shape == (2, 5)
    assert mask.tolist() == [[1.0, 1.0, 1.0, 1.0, 1.0],
                             [1.0, 1.0, 1.0, 0.0, 0.0]]
    assert ids[1, 3:].tolist() == [PAD_ID, PAD_ID]


def test_pooling_shapes_and_difference():
    encoder = load_encoder()
    ids, mask = batch_tokens(["saying tok0001 tok0002", "saying tok0003"])
    hidden = encoder(ids, mask)
    cls_vec = pool(hidden, mask, Pooling.CLS)
    mean_vec = pool(hidden, mask, Pooling.MEAN)
    assert cls_vec.shape == mean_vec.shape == (2, 768)
    assert not torch.allclose(cls_vec, mean_vec)


def test_mean_pooling_ignores_padding():
    encoder = load_encoder()
    encoder.eval()
    with torch.no_grad():
        ids_a, mask_a = batch_tokens(["saying tok0001", "saying tok0001 tok0002 tok0003"])
        ids_b, mask_b = batch_tokens(["saying tok0001"])
        padded = pool(encoder(ids_a, mask_a), mask_a, Pooling.MEAN)[0]
        alone = pool(encoder(ids_b, mask_b), mask_b, Pooling.MEAN)[0]
    assert torch.allclose(padded, alone, atol=1e-5)


def test_encoder_is_deterministic():
    assert encoder_checksum(load_encoder()) == encoder_checksum(load_encoder())


def test_unknown_encoder_name():
    with pytest.raises(EncoderLoadError):
        load_encoder("bert-base-uncased")


def test_discriminative_model_output_shape():
    model = DiscriminativeModel(EncoderConfig(pooling=Pooling.MEAN))
    ids, mask = batch_tokens(["saying tok0001", "saying tok0002 tok0003"])
    assert model(ids, mask).shape == (2, 2)


# z-score ------------------------------------------------------------------

def test_zscore_train_statistics():
    rng = np.random.default_rng(3)
    train = rng.normal(5.0, 3.0, size=(40, 6))
    z = ZScore.fit(train)
    out = z.apply(train)
    assert np.allclose(out.mean(axis=0), 0.0, atol=1e-6)
    assert np.allclose(out.std(axis=0), 1.0, atol=1e-6)


def test_zscore_constant_column_passthrough():
    train = np.ones((10, 3)) * 7.0
    z = ZScore.fit(train)
    assert np.allclose(z.apply(train), 0.0)


def test_zscore_statistics_come_from_train_rows_only(small_data):
    rows, splits, features = small_data
    cfg = BaselineConfig(kind=BaselineKind.EARLY_FUSION)
    split = splits[0]
    scalers = fit_scalers(cfg, features, split.train)
    train_audio = np.stack([features["audio"][k] for k in split.train])
    assert np.array_equal(scalers["audio"].mean, train_audio.mean(axis=0))
    assert "lingual" not in scalers

    # corrupting every test row must not move the statistics
    poisoned = {name: dict(table) for name, table in features.items()}
    for key in split.test:
        poisoned["audio"][key] = features["audio"][key] + 1e6
    again = fit_scalers(cfg, poisoned, split.train)
    assert np.array_equal(again["audio"].mean, scalers["audio"].mean)
    assert np.array_equal(again["audio"].std, scalers["audio"].std)


def test_training_decisions_ignore_test_rows(small_data):
    rows, splits, features = small_data
    cfg = BaselineConfig(kind=BaselineKind.EARLY_FUSION)
    split = splits[0]
    first = train_baseline(rows, features, split, cfg, seed=0)

    poisoned_rows = dict(rows)
    poisoned = {name: dict(table) for name, table in features.items()}
    for key in split.test:
        poisoned_rows[key] = TextRow(key=key, text="saying nonsense",
                                     label=1 - rows[key].label)
        for name in poisoned:
            poisoned[name][key] = np.zeros_like(features[name][key])
    second = train_baseline(poisoned_rows, poisoned, split, cfg, seed=0)

    assert second.best_epoch == first.best_epoch
    assert second.epochs_run == first.epochs_run
    assert second.validation_f1 == first.validation_f1
    assert second.train_f1 == first.train_f1


# hyperparameters ----------------------------------------------------------

def test_pinned_hyperparameter_echo():
    assert FINE_TUNE_HP.echo() == {
        "max_epochs": 40,
        "batch_size": 16,
        "learning_rate": 2e-5,
        "patience": 5,
        "optimizer": "adam",
        "loss": "cross_entropy",
    }
    assert FROZEN_HP.echo() == {
        "max_epochs": 200,
        "batch_size": 32,
        "learning_rate": 1e-3,
        "late_learning_rate": 5e-4,
        "switch_epoch": 51,
        "patience": 5,
        "optimizer": "adam",
        "loss": "cross_entropy",
    }


def test_default_hyperparams_by_mode():
    assert default_hyperparams(TrainingMode.FINETUNE) is FINE_TUNE_HP
    assert default_hyperparams(TrainingMode.FREEZE) is FROZEN_HP
    assert default_hyperparams() is FROZEN_HP


# macro-F1 -----------------------------------------------------------------

def test_macro_f1_hand_cases():
    assert macro_f1(np.array([0, 1, 0, 1]), np.array([0, 1, 0, 1])) == 1.0
    assert macro_f1(np.array([1, 0, 1, 0]), np.array([0, 1, 0, 1])) == 0.0
    # all-high predictions on a balanced set: class 0 scores 0,
    # class 1 gets precision 1/2 and recall 1
    got = macro_f1(np.array([1, 1, 1, 1]), np.array([0, 0, 1, 1]))
    assert got == pytest.approx((0.0 + 2 * 0.5 * 1.0 / 1.5) / 2)


def test_macro_f1_matches_naive_confusion_counts():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 40))
        preds = rng.integers(0, 2, size=n)
        golds = rng.integers(0, 2, size=n)
        scores = []
        for cls in (0, 1):
            tp = sum(1 for p, g in zip(preds, golds) if p == cls and g == cls)
            fp = sum(1 for p, g in zip(preds, golds) if p == cls and g != cls)
            fn = sum(1 for p, g in zip(preds, golds) if p != cls and g == cls)
            prec = tp / (tp + fp) if tp + fp else 0.0
            rec = tp / (tp + fn) if tp + fn else 0.0
            scores.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
        assert macro_f1(preds, golds) == pytest.approx(sum(scores) / 2,
                                                       abs=1e-12)


# freeze guarantee and overfit sanity --------------------------------------

def _toy_rows(n=16):
    rows = {}
    for i in range(n):
        label = i % 2
        words = ["gleam", "brill", "vives"] if label else ["murk", "dull", "somber"]
        key = ("P1", f"{i:03d}")
        rows[key] = TextRow(key=key, text="saying " + " ".join(words),
                            label=label)
    return rows


def _identity_split(rows):
    keys = tuple(rows)
    return Split(test_fold=0, train=keys, validation=keys, test=keys)


def test_freeze_leaves_encoder_untouched():
    rows = _toy_rows()
    cfg = EncoderConfig(pooling=Pooling.CLS, training_mode=TrainingMode.FREEZE)
    before = encoder_checksum(load_encoder())
    result = train_discriminative(rows, _identity_split(rows), cfg, seed=0)
    assert encoder_checksum(result.model.encoder) == before


def test_finetune_moves_encoder_weights():
    rows = _toy_rows()
    cfg = EncoderConfig(pooling=Pooling.MEAN,
                        training_mode=TrainingMode.FINETUNE)
    before = encoder_checksum(load_encoder())
    result = train_discriminative(rows, _identity_split(rows), cfg, seed=0)
    assert encoder_checksum(result.model.encoder) != before


def test_freeze_overfits_a_small_separable_set():
    rows = _toy_rows()
    cfg = EncoderConfig(pooling=Pooling.MEAN, training_mode=TrainingMode.FREEZE)
    result = train_discriminative(rows, _identity_split(rows), cfg, seed=0)
    assert result.train_f1 >= 0.99


# data loading and error taxonomy ------------------------------------------

def test_load_export_skips_config_header(tmp_path):
    path = tmp_path / "export.jsonl"
    lines = [
        json.dumps({"config": {"seed": 1}}),
        json.dumps({"participant_id": "P1", "exchange_id": "000",
                    "text": "saying words", "label": 1,
                    "label_name": "high", "label_view": "self"}),
        json.dumps({"participant_id": "P1", "exchange_id": "001",
                    "text": "saying more", "label": 0,
                    "label_name": "low", "label_view": "self"}),
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    rows = load_export(path)
    assert set(rows) == {("P1", "000"), ("P1", "001")}
    assert rows[("P1", "000")].label == 1
    assert rows[("P1", "001")].text == "saying more"


def test_load_splits_reads_fixture_plan(small_fixture_dir):
    splits = load_splits(small_fixture_dir / "splits.json")
    assert [s.test_fold for s in splits] == [0, 1]
    for split in splits:
        test_pids = {pid for pid, _ in split.test}
        train_pids = {pid for pid, _ in split.train + split.validation}
        assert not test_pids & train_pids
        m = len(split.train) + len(split.validation)
        assert len(split.train) == (4 * m) // 5


def test_feature_csv_roundtrip(small_fixture_dir):
    table = load_feature_csv(small_fixture_dir / "audio_features.csv",
                             AUDIO_DIM)
    vec = table[("T01", "000")]
    assert vec.shape == (AUDIO_DIM,)
    assert vec.dtype == np.float64


def test_feature_csv_width_errors(tmp_path):
    bad_header = tmp_path / "bad_header.csv"
    bad_header.write_text("participant_id,exchange_id,f0,f1\nP1,000,1.0,2.0\n",
                          encoding="utf-8")
    with pytest.raises(DimensionMismatchError):
        load_feature_csv(bad_header, 3)
    bad_row = tmp_path / "bad_row.csv"
    bad_row.write_text("participant_id,exchange_id,f0,f1\nP1,000,1.0\n",
                       encoding="utf-8")
    with pytest.raises(DimensionMismatchError):
        load_feature_csv(bad_row, 2)
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(DimensionMismatchError):
        load_feature_csv(empty, 2)


def test_missing_split_key_errors():
    rows = _toy_rows(4)
    keys = tuple(rows) + (("P9", "000"),)
    with pytest.raises(MissingSplitKeyError):
        gather(keys, rows, "export")
    split = Split(test_fold=0, train=keys, validation=tuple(rows),
                  test=tuple(rows))
    cfg = EncoderConfig(pooling=Pooling.CLS, training_mode=TrainingMode.FREEZE)
    with pytest.raises(MissingSplitKeyError):
        train_discriminative(rows, split, cfg, seed=0)


def test_train_baseline_requires_all_blocks(small_data):
    rows, splits, features = small_data
    cfg = BaselineConfig(kind=BaselineKind.DNN_BASE)
    partial = {"audio": features["audio"], "facial": features["facial"]}
    with pytest.raises(DimensionMismatchError):
        train_baseline(rows, partial, splits[0], cfg, seed=0)


# config tag parsing --------------------------------------------------------

def test_parse_config_tags():
    assert parse_config("dnn_base") == BaselineConfig(kind=BaselineKind.DNN_BASE)
    enc = parse_config("cls:freeze")
    assert enc == EncoderConfig(pooling=Pooling.CLS,
                                training_mode=TrainingMode.FREEZE)
    full = parse_config("builtin-tiny:mean:finetune")
    assert full.pooling is Pooling.MEAN
    assert full.training_mode is TrainingMode.FINETUNE
    for bad in ("bogus", "cls:bogus", "a:b:c:d", ""):
        with pytest.raises(ValueError):
            parse_config(bad)
