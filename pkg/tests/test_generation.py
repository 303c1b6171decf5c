import numpy as np
import pytest

from tabaug.data import SYNTHETIC_GROUP
from tabaug.generation import (GenerationConfig, GenerationError, augment_by_generation,
                               gan_step_grads, generate, kl_standard_normal, train_cgan,
                               train_gan, train_vae, vae_loss_grads)
from tabaug.nets import Adam, NetCore, bce_with_logits
from tabaug.seeds import SeedStream

from conftest import blobs, make_ds
from oracles import central_diff_check

TINY = GenerationConfig(latent_dim=4, epochs=3, batch_size=16, hidden=(8, 8))
SEEDS = range(20)


def _jitter_biases(net, gen):
    # zero biases put exact ReLU kinks at z == 0 when a whole hidden row is dead
    for b in net.params[1::2]:
        b += 0.1 * gen.standard_normal(b.shape)
    return net


@pytest.mark.parametrize("act", ["relu", "linear", "sigmoid", "tanh"])
def test_netcore_gradients_every_activation(act):
    for s in SEEDS:
        gen = np.random.default_rng(s)
        net = _jitter_biases(NetCore([3, 5, 4, 1], [act, act, "linear"], gen), gen)
        x = gen.standard_normal((7, 3))
        t = (gen.random((7, 1)) < 0.5).astype(float)

        def loss():
            return bce_with_logits(net(x), t)[0]

        out, cache = net.forward(x)
        grads, _ = net.backward(cache, bce_with_logits(out, t)[1])
        assert central_diff_check(loss, net.params, grads, rng=gen) < 1e-4


def test_netcore_input_gradient():
    gen = np.random.default_rng(3)
    net = NetCore([4, 6, 2], ["tanh", "linear"], gen)
    x = gen.standard_normal((5, 4))
    w = gen.standard_normal((5, 2))
    out, cache = net.forward(x)
    _, gx = net.backward(cache, w)
    assert central_diff_check(lambda: float(np.sum(net(x) * w)), [x], [gx]) < 1e-4


@pytest.mark.parametrize("conditional", [False, True])
def test_adversarial_gradients(conditional):
    for s in SEEDS:
        gen = np.random.default_rng(100 + s)
        extra = 1 if conditional else 0
        G = _jitter_biases(NetCore([3 + extra, 6, 6, 2], ["relu", "relu", "linear"], gen), gen)
        D = _jitter_biases(NetCore([2 + extra, 6, 6, 1], ["relu", "relu", "linear"], gen), gen)
        real = gen.standard_normal((6, 2))
        z = gen.standard_normal((6, 3))
        cr = cf = None
        if conditional:
            cr = (gen.random((6, 1)) < 0.5).astype(float)
            cf = (gen.random((6, 1)) < 0.5).astype(float)
        _, gd, _, gg = gan_step_grads(D, G, real, z, cr, cf)
        assert central_diff_check(lambda: gan_step_grads(D, G, real, z, cr, cf)[0],
                                  D.params, gd, rng=gen) < 1e-4
        assert central_diff_check(lambda: gan_step_grads(D, G, real, z, cr, cf)[2],
                                  G.params, gg, rng=gen) < 1e-4


def test_vae_gradients():
    for s in SEEDS:
        gen = np.random.default_rng(200 + s)
        enc = _jitter_biases(NetCore([3, 6, 6, 4], ["relu", "relu", "linear"], gen), gen)
        dec = _jitter_biases(NetCore([2, 6, 6, 3], ["relu", "relu", "linear"], gen), gen)
        x = gen.standard_normal((5, 3))
        eps = gen.standard_normal((5, 2))
        _, _, _, ge, gd = vae_loss_grads(enc, dec, x, eps)
        f = lambda: vae_loss_grads(enc, dec, x, eps)[0]
        assert central_diff_check(f, enc.params, ge, rng=gen) < 1e-4
        assert central_diff_check(f, dec.params, gd, rng=gen) < 1e-4


def test_kl_closed_form():
    assert kl_standard_normal(np.zeros((1, 3)), np.zeros((1, 3))).tolist() == [0.0]
    assert np.allclose(kl_standard_normal(np.ones((1, 4)), np.zeros((1, 4))), 0.5 * 4)


def test_adam_zero_gradient_is_constant():
    gen = np.random.default_rng(0)
    params = [gen.standard_normal((3, 2)), gen.standard_normal(2)]
    before = [p.copy() for p in params]
    opt = Adam(params, lr=0.1)
    for _ in range(50):
        opt.step([np.zeros_like(p) for p in params])
    assert all(np.array_equal(a, b) for a, b in zip(before, params))


def test_epochs_zero_samples_have_width(small):
    cfg = GenerationConfig(latent_dim=5, epochs=0, hidden=(8,))
    for train in (train_gan, train_vae):
        model = train(small, cfg, SeedStream(1))
        assert model.losses == []
        assert model.sample(10, 0).shape == (10, small.n_features)


def test_gan_constant_column_moves_toward_c():
    c = 0.7
    ds = make_ds(np.full((64, 1), c), [0, 1] * 32)
    cfg0 = GenerationConfig(latent_dim=8, epochs=0, batch_size=64, learning_rate=1e-3, hidden=(16, 16))
    cfg = GenerationConfig(latent_dim=8, epochs=200, batch_size=64, learning_rate=1e-3, hidden=(16, 16))
    init = train_gan(ds, cfg0, SeedStream(5)).sample(1000, 9, clip=False)
    model = train_gan(ds, cfg, SeedStream(5))
    after = model.sample(1000, 9, clip=False)
    assert abs(after.mean() - c) < abs(init.mean() - c)
    assert abs(after.mean() - c) <= 0.5 * init.std()
    assert all(np.isfinite(r["loss_d"]) and np.isfinite(r["loss_g"]) for r in model.losses)
    # discriminator accuracy on a fresh real/fake batch is a proper fraction
    D = model.nets["discriminator"]
    real = np.zeros((50, 1))
    fake = model.nets["generator"](np.random.default_rng(1).standard_normal((50, 8)))
    acc = ((D(real) > 0).mean() + (D(fake) <= 0).mean()) / 2
    assert 0 <= acc <= 1


def test_vae_loss_decreases():
    ds = blobs(100, 100, d=2, sep=4.0, seed=7)
    cfg = GenerationConfig(latent_dim=2, epochs=100, batch_size=64, learning_rate=1e-3, hidden=(16, 16))
    model = train_vae(ds, cfg, SeedStream(2))
    first = model.losses[0]["recon"] + model.losses[0]["kl"]
    last = model.losses[-1]["recon"] + model.losses[-1]["kl"]
    assert last < first


def test_cgan_conditioning_with_1nn_oracle():
    ds = blobs(150, 150, d=2, sep=6.0, seed=11)
    cfg = GenerationConfig(latent_dim=4, epochs=200, batch_size=64, learning_rate=1e-3, hidden=(32, 32))
    model = train_cgan(ds, cfg, SeedStream(3))
    for label in (0, 1):
        rows = model.sample(500, SeedStream(4, (label,)), labels=np.full(500, label))
        assert rows.shape == (500, 2)
        d = ((rows[:, None, :] - ds.features[None, :, :]) ** 2).sum(axis=2)
        pred = ds.labels[d.argmin(axis=1)]
        assert (pred == label).mean() > 0.6


def test_cgan_label_contract_and_single_class(small):
    model = train_cgan(small, TINY, 0)
    out = augment_by_generation(small, model, 1)
    synth = out.labels[small.n_rows:]
    assert synth.sum() == small.class_counts()[1]
    one = make_ds(np.arange(12.0).reshape(6, 2), [1] * 6)
    with pytest.raises(GenerationError, match="both classes"):
        train_cgan(one, TINY, 0)


@pytest.mark.parametrize("kind", ["GAN", "VAE", "CGAN"])
def test_doubling_contract(kind, small):
    out = generate(small, kind, TINY, SeedStream(8))
    assert out.n_rows == 2 * small.n_rows
    assert np.array_equal(out.features[:small.n_rows], small.features)
    synth = slice(small.n_rows, None)
    assert np.bincount(out.labels[synth], minlength=2).tolist() == list(small.class_counts())
    assert np.all(out.groups[synth] == SYNTHETIC_GROUP)
    assert np.all(np.isfinite(out.features))
    lo, hi = small.features.min(axis=0), small.features.max(axis=0)
    assert np.all((out.features >= lo) & (out.features <= hi))
    again = generate(small, kind, TINY, SeedStream(8))
    assert out.same_as(again)


def test_full_scale_doubling(full_scale):
    cfg = GenerationConfig(latent_dim=4, epochs=1, hidden=(8,))
    out = generate(full_scale, "GAN", cfg, SeedStream(0))
    assert out.n_rows == 3418
    n_syn1 = int(out.labels[1709:].sum())
    assert abs(n_syn1 - 1097) <= 1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_empty_and_divergence(small):
    empty = small.subset(np.array([], dtype=int))
    with pytest.raises(GenerationError, match="empty training set"):
        train_gan(empty, TINY, 0)
    huge = small.with_features(small.features * 1e300)
    with pytest.raises(GenerationError, match="epoch 1"):
        train_vae(huge, GenerationConfig(latent_dim=2, epochs=2, learning_rate=1e300, hidden=(4,)), 0)


def test_count_batch_mode():
    cfg = GenerationConfig(batch_size=4, batch_mode="count")
    batches = cfg.batches(10, np.random.default_rng(0))
    assert len(batches) == 4 and sorted(np.concatenate(batches)) == list(range(10))


def test_loss_dump(tmp_path, small):
    model = train_vae(small, TINY, 0)
    path = tmp_path / "loss.csv"
    model.dump_losses(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,recon,kl" and len(lines) == 4
