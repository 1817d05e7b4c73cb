import numpy as np
import pytest

from sentext.errors import (
    EmptyFileError,
    MissingColumnError,
    MissingLocaleKeyError,
    NonBinaryValueError,
)
from sentext.facial_text import (
    AUFrameMatrix,
    SUPPORTED_AU_IDS,
    appeared,
    au_column,
    describe_facial,
    parse_au_csv,
)
from sentext.locales import LocaleTable


def matrix_with_counts(counts: dict[int, int], n_frames: int) -> AUFrameMatrix:
    presence = np.zeros((len(SUPPORTED_AU_IDS), n_frames), dtype=np.int8)
    for au_id, count in counts.items():
        presence[SUPPORTED_AU_IDS.index(au_id), :count] = 1
    return AUFrameMatrix(presence=presence, n_frames=n_frames)


def test_au_column_names():
    assert au_column(1) == "AU01_c"
    assert au_column(9) == "AU09_c"
    assert au_column(45) == "AU45_c"


def test_strict_majority_boundary():
    m = matrix_with_counts({6: 5, 12: 6}, n_frames=10)
    result = appeared(m)
    assert 6 not in result  # exactly half is excluded
    assert 12 in result


def test_all_and_none():
    assert appeared(matrix_with_counts({}, 10)) == frozenset()
    everything = matrix_with_counts({au: 10 for au in SUPPORTED_AU_IDS}, 10)
    assert appeared(everything) == frozenset(SUPPORTED_AU_IDS)


def test_odd_frame_counts():
    # 4/7 > half, 3/7 is not
    m = matrix_with_counts({4: 4, 7: 3}, n_frames=7)
    assert appeared(m) == frozenset({4})


def test_monotonicity_1000_random_matrices():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        n_frames = int(rng.integers(1, 40))
        presence = (rng.random((len(SUPPORTED_AU_IDS), n_frames)) < 0.5).astype(np.int8)
        m = AUFrameMatrix(presence=presence, n_frames=n_frames)
        before = appeared(m)
        zeros = np.argwhere(presence == 0)
        if zeros.size == 0:
            continue
        i, j = zeros[rng.integers(0, len(zeros))]
        bumped = presence.copy()
        bumped[i, j] = 1
        after = appeared(AUFrameMatrix(presence=bumped, n_frames=n_frames))
        assert before <= after


def write_csv(path, header, rows):
    path.write_text("\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n")


def full_header():
    return ["frame", " timestamp"] + [" " + au_column(au) for au in SUPPORTED_AU_IDS]


def test_parse_csv_with_padded_headers(tmp_path):
    p = tmp_path / "au.csv"
    rows = []
    for i in range(4):
        vals = ["1" if (au == 12 and i < 3) else "0" for au in SUPPORTED_AU_IDS]
        rows.append([str(i), "0.0"] + vals)
    write_csv(p, full_header(), rows)
    m = parse_au_csv(p)
    assert m.n_frames == 4
    assert m.presence_count(12) == 3
    assert appeared(m) == frozenset({12})


def test_parse_csv_missing_column(tmp_path):
    p = tmp_path / "au.csv"
    header = [h for h in full_header() if h.strip() != "AU45_c"]
    write_csv(p, header, [["0", "0.0"] + ["0"] * (len(SUPPORTED_AU_IDS) - 1)])
    with pytest.raises(MissingColumnError):
        parse_au_csv(p)


def test_parse_csv_non_binary(tmp_path):
    p = tmp_path / "au.csv"
    vals = ["0"] * len(SUPPORTED_AU_IDS)
    vals[0] = "2"
    write_csv(p, full_header(), [["0", "0.0"] + vals])
    with pytest.raises(NonBinaryValueError):
        parse_au_csv(p)
    vals[0] = "0.5"
    write_csv(p, full_header(), [["0", "0.0"] + vals])
    with pytest.raises(NonBinaryValueError):
        parse_au_csv(p)


def test_parse_csv_empty(tmp_path):
    p = tmp_path / "au.csv"
    p.write_text("")
    with pytest.raises(EmptyFileError):
        parse_au_csv(p)
    write_csv(p, full_header(), [])
    with pytest.raises(EmptyFileError):
        parse_au_csv(p)


def test_parse_csv_float_presence_values(tmp_path):
    # the upstream toolkit writes 0.00/1.00
    p = tmp_path / "au.csv"
    vals = ["1.00" if au == 6 else "0.00" for au in SUPPORTED_AU_IDS]
    write_csv(p, full_header(), [["0", "0.0"] + vals])
    assert parse_au_csv(p).presence_count(6) == 1


def test_describe_ascending_order(locale_en):
    texts = describe_facial({12, 6, 45, 1}, locale_en)
    assert texts == ["raise inner brow", "raise cheek", "pull lip corner", "blink"]


def test_describe_empty_set(locale_en):
    assert describe_facial(frozenset(), locale_en) \
        == ["have no obvious facial expression"]


def test_describe_unknown_au(locale_en):
    with pytest.raises(ValueError):
        describe_facial({3}, locale_en)


def test_describe_missing_locale_key():
    with pytest.raises(MissingLocaleKeyError):
        describe_facial({6}, LocaleTable({}))
