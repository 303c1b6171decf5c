"""Technique catalog, single/chained augmentation specs and their execution."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .data import TabularDataset
from .generation import GENERATION_TECHNIQUES, GenerationConfig, generate
from .perturbation import PERTURBATION_TECHNIQUES, apply_transform, fit_transform
from .sampling import SAMPLING_TECHNIQUES, SamplingSpec, resample
from .seeds import SeedStream

CATEGORY = {
    **{t: "sampling" for t in SAMPLING_TECHNIQUES},
    **{t: "perturbation" for t in PERTURBATION_TECHNIQUES},
    **{t: "generation" for t in GENERATION_TECHNIQUES},
}
CATALOG = (*SAMPLING_TECHNIQUES, *PERTURBATION_TECHNIQUES, *GENERATION_TECHNIQUES)
ARROW = "→"
CHAIN_CATEGORIES = (
    ("sampling", "generation"),
    ("perturbation", "sampling"),
    ("perturbation", "generation"),
)
CHAIN_GENERATOR = "GAN"


def category_pair(text: str) -> tuple[str, str]:
    """Parse ``perturbation→sampling`` (``->`` also accepted)."""
    parts = text.replace("->", ARROW).split(ARROW)
    if len(parts) != 2:
        raise ValueError(f"bad category pair {text!r}")
    return parts[0].strip(), parts[1].strip()


@dataclass(frozen=True)
class AugmenterSpec:
    stages: tuple[str, ...] = ()

    def __post_init__(self):
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        if len(stages) > 2:
            raise ValueError("at most two chained stages")
        for s in stages:
            if s not in CATEGORY:
                raise ValueError(f"unknown technique {s!r}")
        if len(stages) == 2:
            if stages[0] == stages[1]:
                raise ValueError("a chain must not repeat a technique")
            cats = (CATEGORY[stages[0]], CATEGORY[stages[1]])
            if cats not in CHAIN_CATEGORIES:
                raise ValueError(f"unsupported chain {cats[0]}{ARROW}{cats[1]}")

    @classmethod
    def parse(cls, text: str) -> "AugmenterSpec":
        text = text.strip()
        if text.lower() in ("", "baseline", "none", "identity"):
            return cls(())
        return cls(tuple(p.strip() for p in text.split("+")))

    @property
    def name(self) -> str:
        return " + ".join(self.stages) if self.stages else "baseline"

    @property
    def category(self) -> str:
        if not self.stages:
            return "none"
        return ARROW.join(CATEGORY[s] for s in self.stages)

    @property
    def is_baseline(self) -> bool:
        return not self.stages


BASELINE = AugmenterSpec(())


def enumerate_chains(catalog=CATALOG) -> list[AugmenterSpec]:
    """The 99 evaluated chains, sorted by (category pair, stage names)."""
    missing = set(CATEGORY) - set(catalog)
    if missing:
        raise ValueError(f"catalog incomplete, missing {sorted(missing)}")
    by_cat = {c: [t for t in catalog if CATEGORY[t] == c] for c in ("sampling", "perturbation")}
    chains = [AugmenterSpec((s, CHAIN_GENERATOR)) for s in by_cat["sampling"]]
    chains += [AugmenterSpec((p, s)) for p in by_cat["perturbation"] for s in by_cat["sampling"]]
    chains += [AugmenterSpec((p, CHAIN_GENERATOR)) for p in by_cat["perturbation"]]
    return sorted(chains, key=lambda a: (a.category, a.stages))


@dataclass(frozen=True)
class AugmentParams:
    k_neighbors: int = 5
    enn_neighbors: int = 3
    kmeans_clusters: int = 8
    nearmiss_version: int = 1
    noise_scale: float = 0.05
    generation: GenerationConfig = field(default_factory=GenerationConfig)

    def sampling_spec(self, technique: str) -> SamplingSpec:
        return SamplingSpec(technique, self.k_neighbors, self.enn_neighbors,
                            self.kmeans_clusters, self.nearmiss_version)


def augment(aug: AugmenterSpec, train: TabularDataset, test: TabularDataset,
            rng: SeedStream, params: AugmentParams = AugmentParams(),
            audit: Callable | None = None) -> tuple[TabularDataset, TabularDataset]:
    """Run each stage on the training rows; perturbations also map the test rows.

    ``audit(technique, row_ids)`` is called with the row ids every stage is
    fitted on.
    """
    for i, tech in enumerate(aug.stages):
        stage_rng = rng.child(i, tech)
        if audit is not None:
            audit(tech, train.row_ids)
        cat = CATEGORY[tech]
        if cat == "sampling":
            train = resample(train, params.sampling_spec(tech), stage_rng)
        elif cat == "perturbation":
            fitted, train = fit_transform(tech, train, stage_rng, params.noise_scale)
            test = apply_transform(fitted, test)
        else:
            train = generate(train, tech, params.generation, stage_rng)
    return train, test
