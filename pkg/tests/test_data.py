import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tabaug.data import (DataError, TabularDataset, grouped_kfold, load_csv,
                         make_synthetic, separation_for_auc, write_csv)
from tabaug.stats import auc

from conftest import make_ds


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_small_file(tmp_path):
    p = _write(tmp_path, "a,label,b,school\n0.1,0,1,s1\n0.2,0,2,s1\n0.3,1,3,s2\n0.4,1,4,s2\n")
    ds = load_csv(p, "label", "school")
    assert ds.features.shape == (4, 2)
    assert ds.feature_names == ("a", "b")
    assert ds.labels.tolist() == [0, 0, 1, 1]
    assert ds.groups.tolist() == ["s1", "s1", "s2", "s2"]


@pytest.mark.parametrize("body,msg", [
    ("a,label,g\n0.1,2,s\n", "invalid label"),
    ("a,label,g\nx,1,s\n", "non-numeric"),
    ("a,lab,g\n0.1,1,s\n", "missing column"),
    ("", "empty"),
    ("a,label,g\n", "empty"),
    ("a,label,g\nnan,1,s\n", "finite"),
])
def test_load_errors(tmp_path, body, msg):
    with pytest.raises(DataError, match=msg):
        load_csv(_write(tmp_path, body), "label", "g")


def test_full_scale_csv(tmp_path, full_scale):
    p = tmp_path / "full.csv"
    write_csv(full_scale, p, "enrolled", "school")
    ds = load_csv(p, "enrolled", "school")
    assert ds.n_rows == 1709 and ds.n_features == 18
    assert ds.class_counts() == (612, 1097)
    assert len(set(ds.groups)) == 4


def test_round_trip_exact(tmp_path):
    ds = make_synthetic(n=300, n_features=5, rng=9)
    write_csv(ds, tmp_path / "a.csv")
    back = load_csv(tmp_path / "a.csv", "label", "group")
    assert back.same_as(ds)
    write_csv(back, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_dataset_invariants():
    with pytest.raises(DataError, match="mismatch"):
        TabularDataset(np.zeros((3, 1)), [0, 1], ["a"] * 3, ["x"])
    with pytest.raises(DataError, match="invalid label"):
        TabularDataset(np.zeros((2, 1)), [0, 3], ["a"] * 2, ["x"])
    with pytest.raises(DataError, match="finite"):
        TabularDataset(np.array([[np.inf], [0]]), [0, 1], ["a"] * 2, ["x"])
    ds = make_ds([[1.0], [2.0]], [0, 1])
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5


def test_four_schools_four_folds(full_scale):
    folds = grouped_kfold(full_scale)
    assert len(folds) == 4
    for gid, (tr, te) in zip(folds.group_ids, folds):
        assert set(full_scale.groups[te]) == {gid}
        assert gid not in set(full_scale.groups[tr])


def test_single_group_rejected():
    ds = make_ds(np.arange(4.0), [0, 1, 0, 1], ["s"] * 4)
    with pytest.raises(DataError, match="grouped CV impossible"):
        grouped_kfold(ds)


def test_single_class_train_rejected():
    # every negative sits in school b, so the fold testing on b trains on positives only
    ds = make_ds(np.arange(6.0), [1, 1, 0, 0, 1, 1], ["a", "a", "b", "b", "c", "c"])
    with pytest.raises(DataError, match="single class"):
        grouped_kfold(ds)


def test_fold_sizes_enumerated():
    groups = ["a"] * 10 + ["b"] * 20 + ["c"] * 30
    y = [0, 1] * 30
    folds = grouped_kfold(make_ds(np.arange(60.0), y, groups))
    assert sorted(len(te) for _, te in folds) == [10, 20, 30]
    assert sorted(len(tr) for tr, _ in folds) == [30, 40, 50]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=6, max_size=60), st.integers(0, 10**6))
def test_folds_partition_rows(group_codes, seed):
    if len(set(group_codes)) < 2:
        return
    n = len(group_codes)
    y = np.random.default_rng(seed).integers(0, 2, n)
    y[:2] = [0, 1]
    ds = make_ds(np.zeros(n), y, [f"g{c}" for c in group_codes])
    try:
        folds = grouped_kfold(ds)
    except DataError as e:
        assert "single class" in str(e)
        return
    tests = np.concatenate([te for _, te in folds])
    assert sorted(tests.tolist()) == list(range(n))
    for tr, te in folds:
        assert not set(ds.groups[tr]) & set(ds.groups[te])
        assert len(set(ds.labels[tr])) == 2


def test_synthetic_bayes_auc():
    # the projection on the mean difference is the optimal ranking
    ds = make_synthetic(n=200_000, n_features=6, bayes_auc=0.69, rng=1)
    proj = ds.features.sum(axis=1)
    assert abs(auc(proj, ds.labels) - 0.69) < 0.005
    assert separation_for_auc(0.5) == 0.0
