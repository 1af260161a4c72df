"""Monte-Carlo trials and accuracy-vs-SNR sweeps over the built-in layouts."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .channel import NoiseSpec, PropagationModel, noisy_distance_matrix
from .embedding import Embedding, auto_eigenvectors, embed, spectrum, embedding_from
from .geometry import GroundTruth, PositionSet, generate_layout, pairwise_distances
from .matching import (
    Assignment,
    align_with_anchor,
    best_anchor,
    cost_matrix,
    hungarian,
    match_with_orientation_search,
)

log = logging.getLogger(__name__)

Z_99 = 2.576

# Lattices are mirror-symmetric, so the sign of each axis can only be fixed
# from one node of known position.
DEFAULT_ALIGNMENT = {
    "factory": "search",
    "grid2d": "anchor",
    "random2d": "search",
    "biaxial_uniform": "anchor",
    "biaxial_random": "search",
    "strip": "anchor",
    "grid3d": "anchor",
    "random3d": "search",
}


@dataclass(frozen=True)
class TrialConfig:
    positions: PositionSet
    snr: float
    seed: int = 0
    eigenvectors: tuple[int, ...] | str = "auto"
    alignment: str = "search"
    anchor_position: int | None = None
    model: PropagationModel = PropagationModel()
    truth: GroundTruth | None = None

    def __post_init__(self):
        if self.alignment not in ("search", "anchor"):
            raise ValueError("alignment must be 'search' or 'anchor'")
        if self.eigenvectors != "auto":
            ev = tuple(int(i) for i in self.eigenvectors)
            if not ev or min(ev) < 1 or max(ev) > self.positions.size - 1:
                raise ValueError(f"eigenvector indices {ev} invalid for M={self.positions.size}")
            object.__setattr__(self, "eigenvectors", ev)
        if self.truth is not None and len(self.truth) != self.positions.size:
            raise ValueError("ground truth size differs from the layout")


@dataclass(frozen=True)
class TrialResult:
    assignment: Assignment
    accuracy: float
    truth: GroundTruth
    eigenvectors: tuple[int, ...]


@dataclass(frozen=True)
class Blueprint:
    """Everything about a layout that does not depend on the measurements."""

    positions: PositionSet
    distances: np.ndarray = field(repr=False)
    embedding: Embedding = field(repr=False)
    anchor_position: int = 0


@lru_cache(maxsize=64)
def prepare(positions: PositionSet, eigenvectors: tuple[int, ...] | str = "auto") -> Blueprint:
    d = pairwise_distances(positions)
    if eigenvectors == "auto":
        eigenvectors = auto_eigenvectors(d, positions.dim).indices
    p = embedding_from(spectrum(d), eigenvectors)
    return Blueprint(positions, d, p, best_anchor(p))


def accuracy(a: Assignment | Sequence[int], truth: GroundTruth) -> float:
    """Fraction of nodes assigned to their true position."""
    pairs = a.pairs if isinstance(a, Assignment) else tuple(a)
    if len(pairs) != len(truth):
        raise ValueError(f"assignment has {len(pairs)} nodes, ground truth {len(truth)}")
    hits = sum(1 for got, want in zip(pairs, truth.permutation) if got == want)
    return hits / len(pairs)


def match(n: Embedding, p: Embedding, alignment: str = "search", anchor: tuple[int, int] | None = None) -> Assignment:
    """Assign nodes to positions; ``anchor`` is (node, position) when aligning by anchor."""
    if alignment == "search":
        return match_with_orientation_search(n, p)
    if anchor is None:
        raise ValueError("anchor alignment needs an anchor (node, position)")
    signs = align_with_anchor(n, p, anchor[0], anchor[1], floor=0.0)
    a = hungarian(cost_matrix(n, p, signs))
    return replace(a, orientation=signs)


def run_trial(cfg: TrialConfig) -> TrialResult:
    """Blueprint -> noisy RSSI -> embeddings -> assignment -> accuracy."""
    bp = prepare(cfg.positions, cfg.eigenvectors)
    truth_seq, noise_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    truth = cfg.truth or GroundTruth.random(cfg.positions.size, np.random.default_rng(truth_seq))
    perm = np.array(truth.permutation)
    node_d = bp.distances[np.ix_(perm, perm)]
    noisy = noisy_distance_matrix(node_d, cfg.model, NoiseSpec(cfg.snr, noise_seq))
    n = embed(noisy, bp.embedding.selected_indices)
    anchor = None
    if cfg.alignment == "anchor":
        a_pos = bp.anchor_position if cfg.anchor_position is None else cfg.anchor_position
        anchor = (truth.node_at(a_pos), a_pos)
    a = match(n, bp.embedding, cfg.alignment, anchor)
    return TrialResult(a, accuracy(a, truth), truth, bp.embedding.selected_indices)


def trial_seed(master: int, snr_index: int, realization: int) -> int:
    """Seed for one trial; independent of grid size and execution order."""
    hi, lo = np.random.SeedSequence([master, snr_index, realization]).generate_state(2, np.uint32)
    return (int(hi) << 32) | int(lo)


def ci_half_width(samples: Sequence[float], z: float = Z_99) -> float:
    """Normal-approximation half-width, clipped so mean +- hw stays in [0, 1]."""
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        return 0.0
    hw = z * float(np.std(x, ddof=1)) / np.sqrt(len(x))
    mean = float(np.mean(x))
    return max(0.0, min(hw, mean, 1.0 - mean))


@dataclass(frozen=True)
class TrialRecord:
    snr: float
    seed: int
    accuracy: float
    total_cost: float
    ambiguous: bool


@dataclass(frozen=True)
class SweepPoint:
    snr: float
    samples: tuple[float, ...]
    mean: float
    ci_half_width: float

    @property
    def realizations(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    trials: tuple[TrialRecord, ...] = ()
    label: str = ""

    @property
    def snr_grid(self) -> tuple[float, ...]:
        return tuple(p.snr for p in self.points)

    @property
    def means(self) -> np.ndarray:
        return np.array([p.mean for p in self.points])

    def to_csv(self) -> str:
        lines = ["snr,mean_accuracy,ci_half_width,realizations"]
        for p in self.points:
            lines.append(f"{p.snr!r},{p.mean!r},{p.ci_half_width!r},{p.realizations}")
        return "\n".join(lines) + "\n"

    def trials_csv(self) -> str:
        lines = ["snr,seed,accuracy,total_cost,ambiguous"]
        for t in self.trials:
            lines.append(f"{t.snr!r},{t.seed},{t.accuracy!r},{t.total_cost!r},{str(t.ambiguous).lower()}")
        return "\n".join(lines) + "\n"


def _run_one(cfg: TrialConfig) -> TrialRecord:
    r = run_trial(cfg)
    return TrialRecord(cfg.snr, cfg.seed, r.accuracy, r.assignment.total_cost, r.assignment.ambiguous)


def default_snr_grid(points: int = 20) -> tuple[float, ...]:
    return tuple(float(s) for s in np.logspace(0, 2, points))


def run_sweep(
    template: TrialConfig,
    snr_grid: Sequence[float] | None = None,
    realizations: int = 100,
    master_seed: int = 0,
    jobs: int = 1,
    label: str = "",
) -> SweepResult:
    """Independent trials at every SNR; means with 99% confidence half-widths."""
    if realizations < 2:
        raise ValueError("need at least 2 realizations for a confidence interval")
    grid = default_snr_grid() if snr_grid is None else tuple(float(s) for s in snr_grid)
    cfgs = [
        replace(template, snr=snr, seed=trial_seed(master_seed, i, r))
        for i, snr in enumerate(grid)
        for r in range(realizations)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one, cfgs, chunksize=max(1, len(cfgs) // (4 * jobs))))
    else:
        records = [_run_one(c) for c in cfgs]
    points = []
    for i, snr in enumerate(grid):
        acc = tuple(t.accuracy for t in records[i * realizations : (i + 1) * realizations])
        points.append(SweepPoint(snr, acc, float(np.mean(acc)), ci_half_width(acc)))
        log.debug("%s snr=%.3g mean=%.4f", label, snr, points[-1].mean)
    return SweepResult(tuple(points), tuple(records), label)


# ---------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class Curve:
    label: str
    kind: str
    eigenvectors: tuple[int, ...] | str = "auto"
    count: int | None = None
    shift: float = 0.0
    layout_seed: int = 0
    alignment: str | None = None

    def positions(self) -> PositionSet:
        return generate_layout(self.kind, self.count, seed=self.layout_seed, shift=self.shift)

    def template(self, model: PropagationModel = PropagationModel()) -> TrialConfig:
        alignment = self.alignment or DEFAULT_ALIGNMENT[self.kind]
        return TrialConfig(self.positions(), snr=1.0, eigenvectors=self.eigenvectors, alignment=alignment, model=model)


@dataclass(frozen=True)
class Recipe:
    name: str
    curves: tuple[Curve, ...]
    snr_grid: tuple[float, ...] = field(default_factory=default_snr_grid)
    realizations: int = 100


def figure_recipes() -> dict[str, Recipe]:
    return {
        "fig1": Recipe("fig1", (Curve("factory", "factory", (1, 2)),)),
        "fig2": Recipe(
            "fig2",
            (
                Curve("grid", "grid2d", (1, 2)),
                Curve("random2d", "random2d", (1, 2)),
                Curve("biaxial_uniform", "biaxial_uniform", (1, 2)),
                Curve("biaxial_random", "biaxial_random", (1, 2)),
            ),
        ),
        "fig3": Recipe(
            "fig3",
            (
                Curve("ev123", "strip", (1, 2, 3)),
                Curve("ev14", "strip", (1, 4)),
                Curve("ev1234", "strip", (1, 2, 3, 4)),
            ),
            snr_grid=tuple(float(s) for s in np.logspace(0, 3, 20)),
        ),
        "fig4": Recipe(
            "fig4",
            (
                Curve("shift0.01_ev1", "strip", (1,), shift=0.01),
                Curve("shift0.01_ev14", "strip", (1, 4), shift=0.01),
                Curve("shift0.5_ev1", "strip", (1,), shift=0.5),
                Curve("shift0.5_ev14", "strip", (1, 4), shift=0.5),
            ),
            snr_grid=tuple(float(s) for s in np.logspace(0, 3, 20)),
        ),
        "fig5": Recipe(
            "fig5",
            (
                Curve("grid3d", "grid3d", (1, 2, 3)),
                Curve("random3d", "random3d", (1, 2, 3)),
            ),
        ),
    }


def recipe(name: str) -> Recipe:
    recipes = figure_recipes()
    if name not in recipes:
        raise KeyError(f"unknown preset {name!r}; expected one of {', '.join(recipes)}")
    return recipes[name]


def run_recipe(
    r: Recipe,
    master_seed: int = 0,
    realizations: int | None = None,
    snr_grid: Sequence[float] | None = None,
    jobs: int = 1,
    model: PropagationModel = PropagationModel(),
) -> list[SweepResult]:
    out = []
    for c in r.curves:
        out.append(
            run_sweep(
                c.template(model),
                snr_grid or r.snr_grid,
                realizations or r.realizations,
                master_seed,
                jobs,
                label=c.label,
            )
        )
    return out
