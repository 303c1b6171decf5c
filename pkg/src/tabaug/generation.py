"""GAN, VAE and conditional GAN generators that double a training split."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import TabularDataset, require_both_classes
from .nets import Adam, NetCore, bce_with_logits
from .sampling import largest_remainder
from .seeds import as_generator

GENERATION_TECHNIQUES = ("GAN", "VAE", "CGAN")


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenerationConfig:
    latent_dim: int = 100
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 2e-4
    hidden: tuple[int, ...] = (128, 128)
    # "size": batch_size rows per minibatch; "count": batch_size minibatches per epoch
    batch_mode: str = "size"

    def __post_init__(self):
        if self.latent_dim < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("latent_dim, batch_size and learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden sizes must be positive")
        if self.batch_mode not in ("size", "count"):
            raise ValueError("batch_mode must be 'size' or 'count'")

    def batches(self, n: int, gen: np.random.Generator):
        size = self.batch_size if self.batch_mode == "size" else math.ceil(n / self.batch_size)
        size = max(1, min(size, n))
        perm = gen.permutation(n)
        return [perm[i:i + size] for i in range(0, n, size)]


@dataclass
class GeneratorModel:
    kind: str
    nets: dict
    latent_dim: int
    mean: np.ndarray
    scale: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    class_counts: tuple[int, int]
    losses: list = field(default_factory=list)

    def sample(self, n: int, rng=0, labels=None, clip: bool = True) -> np.ndarray:
        """Draw ``n`` feature rows; CGAN rows follow ``labels``."""
        gen = as_generator(rng)
        z = gen.standard_normal((n, self.latent_dim))
        if self.kind == "CGAN":
            if labels is None:
                raise GenerationError("CGAN sampling needs the requested labels")
            labels = np.asarray(labels, dtype=float).reshape(n, 1)
            z = np.hstack([z, labels])
        net = self.nets["decoder"] if self.kind == "VAE" else self.nets["generator"]
        out = net(z) * self.scale + self.mean
        if clip:
            out = np.clip(out, self.lo, self.hi)
        return out

    def dump_losses(self, path) -> None:
        if not self.losses:
            cols = ["epoch"]
        else:
            cols = ["epoch", *self.losses[0]]
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for e, rec in enumerate(self.losses, start=1):
                w.writerow([e, *(repr(rec[c]) for c in cols[1:])])


def _scaler(X):
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    # a constant column can leave rounding-level spread behind; treat it as flat
    flat = sd <= 1e-12 * np.maximum(1.0, np.abs(mean))
    return mean, np.where(flat, 1.0, sd)


def _check(train: TabularDataset):
    if train.n_rows == 0:
        raise GenerationError("empty training set")
    if not np.all(np.isfinite(train.features)):
        raise GenerationError("training features must be finite")


def _diverged(kind, epoch, *losses):
    if not all(np.isfinite(v) for v in losses):
        raise GenerationError(f"{kind} training diverged at epoch {epoch}: losses {losses}")


def gan_step_grads(D: NetCore, G: NetCore, real, z, cond_real=None, cond_fake=None):
    """Standard adversarial losses and gradients for one minibatch.

    Returns ``(loss_d, grads_d, loss_g, grads_g)``; the generator loss is the
    non-saturating ``-log D(G(z))``. ``cond_*`` columns are appended to the
    discriminator input (and ``cond_fake`` to the generator input) for the
    conditional variant.
    """
    g_in = z if cond_fake is None else np.hstack([z, cond_fake])
    fake, g_cache = G.forward(g_in)
    d_real_in = real if cond_real is None else np.hstack([real, cond_real])
    d_fake_in = fake if cond_fake is None else np.hstack([fake, cond_fake])
    ones = np.ones((real.shape[0], 1))
    zeros = np.zeros((fake.shape[0], 1))

    out_r, cache_r = D.forward(d_real_in)
    out_f, cache_f = D.forward(d_fake_in)
    l_r, g_r = bce_with_logits(out_r, ones)
    l_f, g_f = bce_with_logits(out_f, zeros)
    gr, _ = D.backward(cache_r, g_r)
    gf, _ = D.backward(cache_f, g_f)
    grads_d = [a + b for a, b in zip(gr, gf)]

    l_g, g_g = bce_with_logits(out_f, np.ones_like(out_f))
    _, dx = D.backward(cache_f, g_g)
    dx = dx[:, :fake.shape[1]]
    grads_g, _ = G.backward(g_cache, dx)
    return l_r + l_f, grads_d, l_g, grads_g


def _train_adversarial(kind, train: TabularDataset, cfg: GenerationConfig, rng):
    _check(train)
    conditional = kind == "CGAN"
    if conditional:
        n0, n1 = train.class_counts()
        if n0 == 0 or n1 == 0:
            raise GenerationError("CGAN needs both classes: conditioning on one class is vacuous")
    gen = as_generator(rng)
    X = train.features
    mean, scale = _scaler(X)
    Xs = (X - mean) / scale
    y = train.labels.astype(float).reshape(-1, 1)
    d, L = X.shape[1], cfg.latent_dim
    extra = 1 if conditional else 0
    G = NetCore([L + extra, *cfg.hidden, d], ["relu"] * len(cfg.hidden) + ["linear"], gen)
    D = NetCore([d + extra, *cfg.hidden, 1], ["relu"] * len(cfg.hidden) + ["linear"], gen)
    opt_g = Adam(G.params, cfg.learning_rate, betas=(0.5, 0.999))
    opt_d = Adam(D.params, cfg.learning_rate, betas=(0.5, 0.999))
    p1 = float(y.mean())
    losses = []
    for epoch in range(1, cfg.epochs + 1):
        ld_sum = lg_sum = 0.0
        batches = cfg.batches(len(Xs), gen)
        for idx in batches:
            z = gen.standard_normal((idx.size, L))
            if conditional:
                cf = (gen.random((idx.size, 1)) < p1).astype(float)
                ld, gd, lg, gg = gan_step_grads(D, G, Xs[idx], z, y[idx], cf)
            else:
                ld, gd, lg, gg = gan_step_grads(D, G, Xs[idx], z)
            _diverged(kind, epoch, ld, lg)
            opt_d.step(gd)
            opt_g.step(gg)
            ld_sum += ld
            lg_sum += lg
        losses.append({"loss_g": lg_sum / len(batches), "loss_d": ld_sum / len(batches)})
        if not (G.all_finite() and D.all_finite()):
            raise GenerationError(f"{kind} parameters became non-finite at epoch {epoch}")
    return GeneratorModel(kind, {"generator": G, "discriminator": D}, L, mean, scale,
                          X.min(axis=0), X.max(axis=0), train.class_counts(), losses)


def train_gan(train: TabularDataset, cfg: GenerationConfig = GenerationConfig(), rng=0) -> GeneratorModel:
    return _train_adversarial("GAN", train, cfg, rng)


def train_cgan(train: TabularDataset, cfg: GenerationConfig = GenerationConfig(), rng=0) -> GeneratorModel:
    return _train_adversarial("CGAN", train, cfg, rng)


def kl_standard_normal(mu, logvar):
    """Per-row KL(N(mu, exp(logvar)) || N(0, I))."""
    return 0.5 * np.sum(mu ** 2 + np.exp(logvar) - logvar - 1.0, axis=1)


def vae_loss_grads(enc: NetCore, dec: NetCore, x, eps):
    """Mean (squared-error reconstruction + KL) and gradients for both nets.

    Returns ``(total, recon, kl, grads_enc, grads_dec)``.
    """
    B = x.shape[0]
    L = eps.shape[1]
    h, e_cache = enc.forward(x)
    mu, logvar = h[:, :L], h[:, L:]
    std = np.exp(0.5 * logvar)
    z = mu + std * eps
    xhat, d_cache = dec.forward(z)
    diff = xhat - x
    recon = float(np.sum(diff ** 2) / B)
    kl = float(kl_standard_normal(mu, logvar).sum() / B)
    grads_dec, gz = dec.backward(d_cache, 2.0 * diff / B)
    g_mu = gz + mu / B
    g_logvar = gz * eps * 0.5 * std + 0.5 * (np.exp(logvar) - 1.0) / B
    grads_enc, _ = enc.backward(e_cache, np.hstack([g_mu, g_logvar]))
    return recon + kl, recon, kl, grads_enc, grads_dec


def train_vae(train: TabularDataset, cfg: GenerationConfig = GenerationConfig(), rng=0) -> GeneratorModel:
    _check(train)
    gen = as_generator(rng)
    X = train.features
    mean, scale = _scaler(X)
    Xs = (X - mean) / scale
    d, L = X.shape[1], cfg.latent_dim
    acts = ["relu"] * len(cfg.hidden) + ["linear"]
    enc = NetCore([d, *cfg.hidden, 2 * L], acts, gen)
    dec = NetCore([L, *cfg.hidden, d], acts, gen)
    opt_e = Adam(enc.params, cfg.learning_rate, betas=(0.9, 0.999))
    opt_d = Adam(dec.params, cfg.learning_rate, betas=(0.9, 0.999))
    losses = []
    for epoch in range(1, cfg.epochs + 1):
        rec_sum = kl_sum = 0.0
        batches = cfg.batches(len(Xs), gen)
        for idx in batches:
            eps = gen.standard_normal((idx.size, L))
            _, rec, kl, ge, gd = vae_loss_grads(enc, dec, Xs[idx], eps)
            _diverged("VAE", epoch, rec, kl)
            opt_e.step(ge)
            opt_d.step(gd)
            rec_sum += rec
            kl_sum += kl
        losses.append({"recon": rec_sum / len(batches), "kl": kl_sum / len(batches)})
        if not (enc.all_finite() and dec.all_finite()):
            raise GenerationError(f"VAE parameters became non-finite at epoch {epoch}")
    return GeneratorModel("VAE", {"encoder": enc, "decoder": dec}, L, mean, scale,
                          X.min(axis=0), X.max(axis=0), train.class_counts(), losses)


TRAINERS = {"GAN": train_gan, "VAE": train_vae, "CGAN": train_cgan}


def augment_by_generation(train: TabularDataset, model: GeneratorModel, rng=0) -> TabularDataset:
    """Append as many synthetic rows as there are real ones.

    Synthetic label counts reproduce the real class counts exactly.
    """
    n = train.n_rows
    if n == 0:
        raise GenerationError("empty training set")
    gen = as_generator(rng)
    counts = largest_remainder(np.array(train.class_counts(), dtype=float), n) \
        if sum(train.class_counts()) else np.array([0, 0])
    labels = np.concatenate([np.zeros(counts[0], dtype=np.int64), np.ones(counts[1], dtype=np.int64)])
    if model.kind == "CGAN":
        rows = model.sample(n, gen, labels=labels)
    else:
        rows = model.sample(n, gen)
        labels = gen.permutation(labels)
    if not np.all(np.isfinite(rows)):
        raise GenerationError(f"{model.kind} produced non-finite rows")
    return train.append(rows, labels)


def generate(train: TabularDataset, kind: str, cfg: GenerationConfig = GenerationConfig(),
             rng=0) -> TabularDataset:
    if kind not in TRAINERS:
        raise GenerationError(f"unknown generation technique {kind!r}")
    gen = as_generator(rng)
    model = TRAINERS[kind](train, cfg, gen)
    return augment_by_generation(train, model, gen)
