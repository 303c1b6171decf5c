"""Bayesian Knowledge Tracing mastery estimates used as cognitive features."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class BktParams:
    p_init: float
    p_learn: float
    p_guess: float
    p_slip: float

    def __post_init__(self):
        for name in ("p_init", "p_learn", "p_guess", "p_slip"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.p_guess + (1.0 - self.p_slip) == 0.0:
            raise ValueError("degenerate BKT parameters: p_guess + (1 - p_slip) == 0")


def bkt_update(params: BktParams, mastery: float, correct: bool) -> float:
    """Posterior given one response, then the learning transition."""
    if not 0.0 <= mastery <= 1.0:
        raise ValueError("mastery must lie in [0, 1]")
    s, g = params.p_slip, params.p_guess
    if correct:
        num = mastery * (1.0 - s)
        den = num + (1.0 - mastery) * g
    else:
        num = mastery * s
        den = num + (1.0 - mastery) * (1.0 - g)
    # a response that is impossible under the model carries no usable evidence
    post = num / den if den > 0 else mastery
    out = post + (1.0 - post) * params.p_learn
    return min(1.0, max(0.0, out))


def bkt_trace(params: BktParams, responses: Sequence[bool]) -> float:
    m = params.p_init
    for r in responses:
        m = bkt_update(params, m, bool(r))
    return m


def bkt_features(responses: Mapping[str, Mapping[str, Sequence[bool]]],
                 params: Mapping[str, BktParams],
                 topics: Sequence[str] | None = None) -> tuple[list[str], list[str], np.ndarray]:
    """Final mastery per (student, topic).

    ``responses`` maps student -> topic -> ordered correctness sequence.
    Topics a student never attempted get the topic's ``p_init``.
    Returns (students, topics, matrix).
    """
    topics = list(params) if topics is None else list(topics)
    for t in topics:
        if t not in params:
            raise KeyError(f"unknown topic {t!r}")
    students = list(responses)
    out = np.empty((len(students), len(topics)))
    for i, st in enumerate(students):
        for t in responses[st]:
            if t not in params:
                raise KeyError(f"unknown topic {t!r}")
        for j, t in enumerate(topics):
            out[i, j] = bkt_trace(params[t], responses[st].get(t, ()))
    return students, topics, out


def fit_bkt(sequences: Sequence[Sequence[bool]], step: float = 0.05) -> BktParams:
    """Grid search maximising response likelihood.

    Guess and slip range over [0, 0.5], init and learn over [0, 1].
    """
    gs = np.round(np.arange(0, 0.5 + step / 2, step), 10)
    il = np.round(np.arange(0, 1 + step / 2, step), 10)
    I, L, G, S = (a.ravel() for a in np.meshgrid(il, il, gs, gs, indexing="ij"))
    loglik = np.zeros(I.size)
    tiny = 1e-12
    for seq in sequences:
        m = I.copy()
        for r in seq:
            if r:
                p = m * (1 - S) + (1 - m) * G
                post = np.where(p > 0, m * (1 - S) / np.maximum(p, tiny), m)
            else:
                p = m * S + (1 - m) * (1 - G)
                post = np.where(p > 0, m * S / np.maximum(p, tiny), m)
            loglik += np.log(np.maximum(p, tiny))
            m = post + (1 - post) * L
    best = int(np.argmax(loglik))
    return BktParams(float(I[best]), float(L[best]), float(G[best]), float(S[best]))


def load_bkt_params(path) -> dict[str, BktParams]:
    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[row["topic"]] = BktParams(
                float(row["p_init"]), float(row["p_learn"]),
                float(row["p_guess"]), float(row["p_slip"]),
            )
    return out


def write_bkt_params(params: Mapping[str, BktParams], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["topic", "p_init", "p_learn", "p_guess", "p_slip"])
        for t, p in params.items():
            w.writerow([t, p.p_init, p.p_learn, p.p_guess, p.p_slip])


def load_responses(path) -> dict[str, dict[str, list[bool]]]:
    """Read a ``student,topic,correct`` log; row order is response order."""
    out: dict[str, dict[str, list[bool]]] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"student", "topic", "correct"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            c = row["correct"].strip()
            if c not in ("0", "1"):
                raise ValueError(f"{path}: correct must be 0 or 1, got {c!r}")
            out.setdefault(row["student"], {}).setdefault(row["topic"], []).append(c == "1")
    return out
