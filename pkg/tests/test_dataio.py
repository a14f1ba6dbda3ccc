import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nodesal.dataio import (
    DatasetError,
    LabeledDataset,
    LabelError,
    NormalizationRecord,
    ParseError,
    apply_normalizer,
    fit_normalizer,
    generate_synthetic,
    load_matrix,
    save_matrix,
    select_subset,
    split_indices,
    split_train_validation,
)


def make(values, labels=None, tags=None):
    values = np.asarray(values, dtype=float)
    n, d = values.shape
    return LabeledDataset(values, [f"s{i}" for i in range(n)], [f"f{j}" for j in range(d)], labels, tags)


# -- parsing -------------------------------------------------------------------

def test_load_small_labeled_file(tmp_path):
    p = tmp_path / "x.tsv"
    p.write_text("sample\tg1\tg2\tlabel\na\t0.1\t0.2\t0\nb\t0.3\t0.4\t1\nc\t0.5\t0.6\t1\n")
    ds = load_matrix(p, has_labels=True)
    assert (ds.n, ds.d) == (3, 2)
    assert ds.feature_ids == ("g1", "g2")
    assert ds.sample_ids == ("a", "b", "c")
    assert ds.labels.tolist() == [0, 1, 1]
    assert ds.group_tags is None


def test_load_comma_with_group(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("id,f1,group,label\na,1.5,breast,0\nb,2,lung,1\n")
    ds = load_matrix(p)
    assert ds.group_tags == ("breast", "lung")
    assert ds.values.tolist() == [[1.5], [2.0]]


def test_load_without_labels(tmp_path):
    p = tmp_path / "x.tsv"
    p.write_text("id\tf1\tf2\na\t1\t2\n")
    ds = load_matrix(p)
    assert ds.labels is None and ds.d == 2


def test_ragged_row_names_row(tmp_path):
    p = tmp_path / "x.tsv"
    p.write_text("id\tf1\tf2\na\t1\t2\nb\t1\t2\t3\nc\t1\t2\n")
    with pytest.raises(ParseError, match="row 2"):
        load_matrix(p, has_labels=False)


def test_non_numeric_cell_names_coordinates(tmp_path):
    p = tmp_path / "x.tsv"
    p.write_text("id\tf1\tf2\na\t1\t2\nb\t1\tabc\n")
    with pytest.raises(ParseError, match=r"row 2, column 3"):
        load_matrix(p, has_labels=False)


def test_missing_cell_is_error(tmp_path):
    p = tmp_path / "x.tsv"
    p.write_text("id\tf1\tf2\na\t1\t\n")
    with pytest.raises(ParseError):
        load_matrix(p, has_labels=False)


def test_bad_label(tmp_path):
    p = tmp_path / "x.tsv"
    p.write_text("id\tf1\tlabel\na\t1\t2\n")
    with pytest.raises(LabelError):
        load_matrix(p)


def test_duplicate_ids_rejected():
    with pytest.raises(DatasetError):
        LabeledDataset(np.zeros((2, 1)), ["a", "a"], ["f"])
    with pytest.raises(DatasetError):
        LabeledDataset(np.zeros((1, 2)), ["a"], ["f", "f"])


def test_save_load_round_trip(tmp_path):
    ds = generate_synthetic(5, 4, 2, 3.0, seed=0, n_groups=2)
    save_matrix(ds, tmp_path / "d.tsv")
    back = load_matrix(tmp_path / "d.tsv")
    assert back.values.tobytes() == ds.values.tobytes()
    assert back.labels.tolist() == ds.labels.tolist()
    assert back.group_tags == ds.group_tags
    assert back.sample_ids == ds.sample_ids


def test_paired_layout_size(tmp_path):
    # 533 pairs -> 1066 rows; one breast block of 112 pairs
    n_pairs, d = 533, 3
    rows = ["sample\tt1\tt2\tt3\tgroup\tlabel"]
    for i in range(n_pairs):
        tag = "breast" if i < 112 else "other"
        for c in (0, 1):
            rows.append(f"p{i}_{c}\t0.1\t0.2\t0.3\t{tag}\t{c}")
    p = tmp_path / "pairs.tsv"
    p.write_text("\n".join(rows) + "\n")
    ds = load_matrix(p)
    assert ds.n == 2 * n_pairs and ds.d == d
    breast = select_subset(ds, "breast")
    assert breast.n == 224
    assert breast.labels.sum() == 112


# -- normalization ----------------------------------------------------------------

def test_min_max_identity():
    rec, out = fit_normalizer(make([[2.0], [4.0], [6.0]]))
    assert out.values.ravel().tolist() == [0.0, 0.5, 1.0]
    assert rec.minimum.tolist() == [2.0] and rec.maximum.tolist() == [6.0]


def test_constant_feature_maps_to_zero():
    _, out = fit_normalizer(make([[5.0], [5.0], [5.0]]))
    assert out.values.ravel().tolist() == [0.0, 0.0, 0.0]


def test_random_matrix_in_unit_box():
    X = np.random.default_rng(0).normal(0, 10, (10, 4))
    _, out = fit_normalizer(make(X))
    for v in out.values.ravel():
        assert 0.0 <= v <= 1.0


def test_apply_clamps_and_matches_fit():
    ds = make([[1.0, 10.0], [3.0, 20.0]])
    rec, out = fit_normalizer(ds)
    assert apply_normalizer(rec, ds).values.tobytes() == out.values.tobytes()
    new = apply_normalizer(rec, make([[1.0, 30.0], [-5.0, 10.0]]))
    assert new.values.tolist() == [[0.0, 1.0], [0.0, 0.0]]


def test_apply_dimension_mismatch():
    rec, _ = fit_normalizer(make([[1.0, 2.0]]))
    with pytest.raises(DatasetError):
        apply_normalizer(rec, make([[1.0]]))


def test_empty_fit_raises():
    with pytest.raises(DatasetError):
        fit_normalizer(make(np.zeros((0, 2))))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 6))
def test_normalization_idempotent(seed, n, d):
    X = np.random.default_rng(seed).normal(0, 5, (n, d))
    _, once = fit_normalizer(make(X))
    rec2, twice = fit_normalizer(once)
    assert np.max(np.abs(twice.values - once.values)) <= 1e-15
    assert np.max(np.abs(apply_normalizer(rec2, once).values - once.values)) <= 1e-15


def test_record_file_round_trip(tmp_path):
    rec, _ = fit_normalizer(make(np.random.default_rng(1).random((4, 3))))
    rec.save(tmp_path / "n.tsv")
    text = (tmp_path / "n.tsv").read_text().splitlines()
    assert text[0] == "v1" and text[1].startswith("f0\t")
    back = NormalizationRecord.load(tmp_path / "n.tsv")
    assert back.minimum.tobytes() == rec.minimum.tobytes()
    assert back.maximum.tobytes() == rec.maximum.tobytes()


def test_record_wrong_version(tmp_path):
    (tmp_path / "n.tsv").write_text("v2\nf\t0\t1\n")
    with pytest.raises(ParseError):
        NormalizationRecord.load(tmp_path / "n.tsv")


# -- splitting and subsetting -------------------------------------------------------

def test_split_sizes_and_determinism():
    ds = make(np.arange(10.0)[:, None])
    tr, va = split_train_validation(ds, 0.2, seed=7)
    assert (tr.n, va.n) == (8, 2)
    tr2, va2 = split_train_validation(ds, 0.2, seed=7)
    assert tr.sample_ids == tr2.sample_ids and va.sample_ids == va2.sample_ids


def test_split_two_samples():
    tr, va = split_train_validation(make([[0.0], [1.0]]), 0.5, seed=0)
    assert (tr.n, va.n) == (1, 1)


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
def test_split_fraction_bounds(fraction):
    with pytest.raises(ValueError):
        split_train_validation(make([[0.0], [1.0]]), fraction, seed=0)


def test_split_partition_over_seeds():
    n = 23
    for seed in range(100):
        tr, va = split_indices(n, 0.3, seed)
        assert set(tr) | set(va) == set(range(n))
        assert not set(tr) & set(va)


def test_select_subset():
    ds = make([[0.1], [0.2], [0.3]], labels=[0, 1, 1], tags=["A", "A", "B"])
    sub = select_subset(ds, "A")
    assert sub.n == 2 and sub.labels.tolist() == [0, 1]
    assert select_subset(ds, lambda t: t != "A").sample_ids == ("s2",)
    with pytest.raises(DatasetError):
        select_subset(ds, "C")
    with pytest.raises(DatasetError):
        select_subset(make([[0.1]]), "A")


# -- synthetic generator ----------------------------------------------------------

def test_synthetic_is_deterministic_and_balanced():
    a = generate_synthetic(30, 8, 3, 2.0, seed=4)
    b = generate_synthetic(30, 8, 3, 2.0, seed=4)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.labels.sum() == 30 and a.n == 60
    assert a.is_normalized()


def test_synthetic_argument_checks():
    with pytest.raises(ValueError):
        generate_synthetic(10, 5, 6, 1.0, seed=0)
    with pytest.raises(ValueError):
        generate_synthetic(10, 5, 2, -1.0, seed=0)
    with pytest.raises(ValueError):
        generate_synthetic(0, 5, 2, 1.0, seed=0)


def best_threshold_error(x, y):
    """Lowest misclassification rate over every threshold and both directions."""
    order = np.argsort(x)
    ys = y[order]
    n = len(y)
    best = 1.0
    ones_left = 0
    for i in range(n + 1):
        if i > 0:
            ones_left += ys[i - 1]
        zeros_left = i - ones_left
        ones_right = ys.sum() - ones_left
        zeros_right = (n - i) - ones_right
        err = min(ones_left + zeros_right, zeros_left + ones_right) / n
        best = min(best, err)
    return best


def test_informative_columns_separate_classes():
    ds = generate_synthetic(200, 50, 5, 4.0, seed=1)
    errs = [best_threshold_error(ds.values[:, j], ds.labels) for j in range(50)]
    assert max(errs[:5]) < 0.05
    assert min(errs[5:]) > 0.3


def test_zero_separation_is_null():
    ds = generate_synthetic(200, 20, 5, 0.0, seed=2)
    gap = np.abs(ds.values[ds.labels == 1].mean(0) - ds.values[ds.labels == 0].mean(0))
    # informative columns look like the noise columns
    assert gap[:5].max() < 3 * gap[5:].std() + gap[5:].mean()
