import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.linear_model import LogisticRegression

from tabaug.classifiers import (ARCHITECTURES, LogisticModel, ModelSpec, fit_svm,
                                forward_feature_selection, mlp_loss_grads, score, train)
from tabaug.data import DataError, grouped_kfold
from tabaug.nets import NetCore
from tabaug.seeds import SeedStream
from tabaug.stats import auc

from conftest import blobs, make_ds
from oracles import central_diff_check

FAST = {"LR": {}, "SVM": {}, "RF": {"n_trees": 15}, "MLP": {"max_epochs": 30}}


def spec(arch):
    return ModelSpec(arch, FAST[arch])


def test_lr_separable_pair():
    ds = make_ds([[0, 0], [1, 1]], [0, 1])
    m = train(spec("LR"), ds)
    assert auc(score(m, ds), ds.labels) == 1.0


def test_lr_zero_weights_half():
    m = LogisticModel(np.zeros(3), 0.0)
    assert np.all(score(m, np.ones((4, 3))) == 0.5)


def test_lr_matches_sklearn(small):
    ours = train(spec("LR"), small)
    ref = LogisticRegression(C=1.0, tol=1e-10, max_iter=10000).fit(small.features, small.labels)
    assert np.allclose(ours.weights, ref.coef_[0], atol=1e-6)
    assert abs(ours.intercept - ref.intercept_[0]) < 1e-6


def test_lr_flipped_labels_reverse_auc():
    tr = blobs(40, 60, d=3, sep=0.7, seed=4)
    te = blobs(30, 30, d=3, sep=0.7, seed=5)
    flipped = make_ds(tr.features, 1 - tr.labels, tr.groups)
    a = auc(score(train(spec("LR"), tr), te), te.labels)
    b = auc(score(train(spec("LR"), flipped), te), te.labels)
    assert abs(b - (1 - a)) < 1e-12


def test_svm_dual_constraints(small):
    m = train(spec("SVM"), small)
    assert np.all(m.alpha >= 0) and np.all(m.alpha <= m.C)
    assert abs(np.sum(m.alpha * m.y_signed)) <= 1e-6
    assert m.n_iter > 0


def test_svm_matches_libsvm_ranking(small):
    from sklearn.svm import SVC

    ours = score(train(spec("SVM"), small), small)
    ref = SVC(C=1.0, gamma="scale").fit(small.features, small.labels).decision_function(small.features)
    assert np.corrcoef(ours, ref)[0, 1] > 0.9999


def test_svm_gamma_scale_rule():
    X = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 9.0], [1.0, 1.0]])
    m = fit_svm(X, np.array([0, 1, 1, 0]))
    assert m.gamma == pytest.approx(1 / (2 * X.var()))


def test_rf_same_seed_identical(small):
    probe = blobs(10, 10, d=small.n_features, seed=99)
    a = score(train(spec("RF"), small, SeedStream(3)), probe)
    b = score(train(spec("RF"), small, SeedStream(3)), probe)
    assert np.array_equal(a, b)


def test_rf_unanimous_votes():
    ds = make_ds(np.r_[np.zeros(10), np.ones(10) * 10], [0] * 10 + [1] * 10)
    s = score(train(spec("RF"), ds, 0), ds)
    assert set(s.tolist()) <= {0.0, 1.0}


@pytest.mark.parametrize("arch", ["LR", "SVM"])
def test_deterministic_architectures_ignore_seed(arch, small):
    a = score(train(spec(arch), small, SeedStream(1)), small)
    b = score(train(spec(arch), small, SeedStream(2)), small)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("arch", ["RF", "MLP"])
def test_random_architectures_reproducible(arch, small):
    a = score(train(spec(arch), small, SeedStream(7)), small)
    b = score(train(spec(arch), small, SeedStream(7)), small)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("arch", ARCHITECTURES)
def test_permutation_equivariance(arch, small):
    m = train(spec(arch), small, SeedStream(0))
    perm = np.random.default_rng(1).permutation(small.n_rows)
    s = score(m, small)
    assert np.allclose(score(m, small.features[perm]), s[perm], rtol=0, atol=1e-12)
    assert np.all(np.isfinite(s))


def test_mlp_gradients():
    for seed in range(20):
        gen = np.random.default_rng(seed)
        net = NetCore([4, 7, 1], ["relu", "linear"], gen)
        for b in net.params[1::2]:
            b += 0.1 * gen.standard_normal(b.shape)
        X = gen.standard_normal((9, 4))
        y = (gen.random(9) < 0.5).astype(int)
        _, grads = mlp_loss_grads(net, X, y, 0.3)
        err = central_diff_check(lambda: mlp_loss_grads(net, X, y, 0.3)[0], net.params, grads, rng=gen)
        assert err < 1e-4


def test_mlp_plateau_stop(small):
    m = train(ModelSpec("MLP", {"max_epochs": 200, "plateau_tol": 0.5, "plateau_epochs": 3}), small, 0)
    assert m.n_epochs < 200 and len(m.losses) == m.n_epochs


def test_errors(small):
    one = make_ds([[0.0], [1.0]], [1, 1])
    with pytest.raises(DataError):
        train(spec("LR"), one)
    m = train(spec("LR"), small)
    with pytest.raises(DataError, match="features"):
        score(m, np.ones((3, small.n_features + 1)))
    with pytest.raises(ValueError):
        ModelSpec("KNN")
    with pytest.raises(ValueError):
        ModelSpec("LR", {"depth": 3})


def _ffs_data(seed, informative):
    gen = np.random.default_rng(seed)
    n = 240
    y = (gen.random(n) < 0.5).astype(int)
    X = gen.standard_normal((n, 5))
    if informative is not None:
        X[:, informative] += 1.5 * y
    return make_ds(X, y, [f"s{i % 4}" for i in range(n)])


def test_ffs_picks_informative_first():
    ds = _ffs_data(0, 3)
    sel = forward_feature_selection(spec("LR"), ds, grouped_kfold(ds).folds, 0)
    assert sel[0] == 3


def test_ffs_noise_stops_early():
    ds = _ffs_data(1, None)
    sel = forward_feature_selection(spec("LR"), ds, grouped_kfold(ds).folds, 0)
    assert len(sel) <= 1


def test_ffs_single_feature():
    ds = make_ds(np.arange(8.0), [0, 1] * 4, [f"s{i // 2}" for i in range(8)])
    assert forward_feature_selection(spec("LR"), ds, grouped_kfold(ds).folds) == [0]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_scores_finite_property(seed):
    ds = blobs(15, 25, d=3, sep=0.5, seed=seed % 2003)
    probe = np.random.default_rng(seed).standard_normal((20, 3)) * 50
    for arch in ("LR", "SVM"):
        assert np.all(np.isfinite(score(train(spec(arch), ds), probe)))


def test_lr_converges_without_stalling():
    # large sums leave Armijo decreases below float resolution near the optimum
    from tabaug.classifiers import fit_logistic
    from tabaug.sampling import smote

    ds = smote(blobs(600, 1000, d=8, sep=0.35, seed=0), 5, SeedStream(0, (1,)))
    m = fit_logistic(ds.features, ds.labels)
    assert m.n_iter < 50
