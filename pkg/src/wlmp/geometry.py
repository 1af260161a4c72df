"""Blueprints, ground truth and the layout generators used in the experiments."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

LAYOUT_KINDS = (
    "factory",
    "grid2d",
    "random2d",
    "biaxial_uniform",
    "biaxial_random",
    "strip",
    "grid3d",
    "random3d",
)

DEFAULT_COUNTS = {
    "factory": 58,
    "grid2d": 80,
    "random2d": 80,
    "biaxial_uniform": 81,
    "biaxial_random": 81,
    "strip": 40,
    "grid3d": 120,
    "random3d": 120,
}

# Row separation of the strip, in units of the long-axis lattice spacing.
# At this aspect eigenvector 4 is the first mode across the strip.
STRIP_ROW_GAP = 1.9


class LayoutError(ValueError):
    """Invalid layout request or malformed layout file."""


@dataclass(frozen=True)
class PositionSet:
    """M labeled points in 2D or 3D physical space."""

    labels: tuple[str, ...]
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        labels = tuple(str(lab) for lab in self.labels)
        if coords.ndim != 2 or coords.shape[1] not in (2, 3):
            raise LayoutError(f"coords must be M x 2 or M x 3, got shape {coords.shape}")
        if coords.shape[0] < 2:
            raise LayoutError("a layout needs at least 2 positions")
        if len(labels) != coords.shape[0]:
            raise LayoutError(f"{len(labels)} labels for {coords.shape[0]} points")
        if len(set(labels)) != len(labels):
            raise LayoutError("position labels must be unique")
        if not np.all(np.isfinite(coords)):
            raise LayoutError("coords must be finite")
        coords.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_coords(cls, coords, prefix: str = "p") -> "PositionSet":
        coords = np.asarray(coords, dtype=float)
        return cls(tuple(f"{prefix}{i}" for i in range(len(coords))), coords)

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other):
        if not isinstance(other, PositionSet):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.labels, self.coords.tobytes()))


@dataclass(frozen=True)
class GroundTruth:
    """True placement: node ``i`` sits at position ``permutation[i]``."""

    permutation: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.permutation)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError("ground truth must be a permutation of 0..M-1")
        object.__setattr__(self, "permutation", perm)

    @classmethod
    def random(cls, size: int, rng: np.random.Generator) -> "GroundTruth":
        return cls(tuple(rng.permutation(size)))

    @classmethod
    def identity(cls, size: int) -> "GroundTruth":
        return cls(tuple(range(size)))

    def __len__(self) -> int:
        return len(self.permutation)

    def position_of(self, node: int) -> int:
        return self.permutation[node]

    def node_at(self, position: int) -> int:
        return self.permutation.index(position)


def pairwise_distances(ps: PositionSet | np.ndarray) -> np.ndarray:
    """Euclidean distance matrix between all positions (zero diagonal)."""
    x = ps.coords if isinstance(ps, PositionSet) else np.asarray(ps, dtype=float)
    diff = x[:, None, :] - x[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    # exact symmetry regardless of rounding in the subtraction
    d = np.triu(d, 1)
    return d + d.T


# ---------------------------------------------------------------------------
# generators


def _most_square(n: int, parts: int) -> tuple[int, ...]:
    """Most balanced factorization of ``n`` into ``parts`` factors, sorted ascending."""
    best = None
    for combo in _factorizations(n, parts):
        spread = max(combo) / min(combo)
        if min(combo) < 2:
            continue
        if best is None or spread < best[0]:
            best = (spread, combo)
    if best is None:
        raise LayoutError(f"{n} positions cannot form a {parts}-D grid with every side >= 2")
    return best[1]


def _factorizations(n: int, parts: int, start: int = 1):
    if parts == 1:
        if n >= start:
            yield (n,)
        return
    for f in range(start, int(round(n ** (1.0 / parts))) + 2):
        if n % f == 0:
            for rest in _factorizations(n // f, parts - 1, f):
                yield (f,) + rest


def _lattice(shape: Sequence[int]) -> np.ndarray:
    # longest side spans [0, 1]; equal spacing along every axis
    spacing = 1.0 / (max(shape) - 1)
    axes = [np.arange(n) * spacing for n in sorted(shape, reverse=True)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _grid_extent(shape: Sequence[int]) -> np.ndarray:
    s = sorted(shape, reverse=True)
    return np.array([(n - 1) / (s[0] - 1) for n in s])


def _factory(count: int) -> np.ndarray:
    if count != DEFAULT_COUNTS["factory"]:
        raise LayoutError("the factory floor plan ships with exactly 58 positions")
    ps = load_layout(resources.files("wlmp.data").joinpath("factory.csv"))
    return ps.coords


def _grid2d(count: int, rng) -> np.ndarray:
    return _lattice(_most_square(count, 2))


def _grid3d(count: int, rng) -> np.ndarray:
    return _lattice(_most_square(count, 3))


def _random_box(count: int, rng, dim: int) -> np.ndarray:
    # same footprint as the grid with this count when one exists, otherwise the unit box
    try:
        extent = _grid_extent(_most_square(count, dim))
    except LayoutError:
        extent = np.ones(dim)
    return rng.uniform(0.0, 1.0, size=(count, dim)) * extent


def _biaxial_split(count: int) -> tuple[int, int]:
    if count < 3:
        raise LayoutError("biaxial layouts need at least 3 positions")
    n_x = count // 2 + 1
    return n_x, count - n_x


def _biaxial_uniform(count: int, rng) -> np.ndarray:
    n_x, n_y = _biaxial_split(count)
    step = 1.0 / (n_x - 1)
    xs = np.column_stack([np.arange(n_x) * step, np.zeros(n_x)])
    ys = np.column_stack([np.zeros(n_y), np.arange(1, n_y + 1) * step])
    return np.vstack([xs, ys])


def _biaxial_random(count: int, rng) -> np.ndarray:
    n_x, n_y = _biaxial_split(count)
    # the origin is shared by both axes and appears once
    x = np.concatenate([[0.0], rng.uniform(0.0, 1.0, n_x - 1)])
    y = rng.uniform(0.0, n_y / (n_x - 1), n_y)
    return np.vstack([np.column_stack([x, np.zeros(n_x)]), np.column_stack([np.zeros(n_y), y])])


def _strip(count: int, rng, shift: float = 0.0, row_gap: float = STRIP_ROW_GAP) -> np.ndarray:
    if count % 2 or count < 4:
        raise LayoutError("a strip needs an even number of positions (two rows)")
    n = count // 2
    spacing = 1.0 / (n - 1)
    x = np.arange(n) * spacing
    lower = np.column_stack([x, np.zeros(n)])
    upper = np.column_stack([x + shift * spacing, np.full(n, row_gap * spacing)])
    return np.vstack([lower, upper])


def _random3d(count: int, rng) -> np.ndarray:
    return _random_box(count, rng, 3)


def _random2d(count: int, rng) -> np.ndarray:
    return _random_box(count, rng, 2)


_GENERATORS = {
    "grid2d": _grid2d,
    "random2d": _random2d,
    "biaxial_uniform": _biaxial_uniform,
    "biaxial_random": _biaxial_random,
    "grid3d": _grid3d,
    "random3d": _random3d,
}


def generate_layout(
    kind: str,
    count: int | None = None,
    seed: int = 0,
    shift: float = 0.0,
) -> PositionSet:
    """Build one of the built-in layouts.

    Parameters
    ----------
    kind : str
        One of :data:`LAYOUT_KINDS`.
    count : int, optional
        Number of positions; defaults to the experiment size for ``kind``.
    seed : int
        Seed for the random layouts; ignored by the deterministic ones.
    shift : float
        Strip only: offset of the upper row along the strip, in lattice spacings.

    Returns
    -------
    PositionSet
        Labels ``p0 .. p{M-1}``; longest side of every generated layout is 1.
    """
    if kind not in LAYOUT_KINDS:
        raise LayoutError(f"unknown layout kind {kind!r}; expected one of {', '.join(LAYOUT_KINDS)}")
    count = DEFAULT_COUNTS[kind] if count is None else int(count)
    if count < 2:
        raise LayoutError("a layout needs at least 2 positions")
    rng = np.random.default_rng(seed)
    if kind == "factory":
        coords = _factory(count)
    elif kind == "strip":
        coords = _strip(count, rng, shift=shift)
    else:
        if shift:
            raise LayoutError("shift only applies to the strip layout")
        coords = _GENERATORS[kind](count, rng)
    return PositionSet.from_coords(coords)


# ---------------------------------------------------------------------------
# files


def _parse_row(row: list[str], lineno: int, dim: int | None):
    if len(row) not in (3, 4):
        raise LayoutError(f"line {lineno}: expected label plus 2 or 3 coordinates, got {len(row)} fields")
    label = row[0].strip()
    if not label:
        raise LayoutError(f"line {lineno}: empty label")
    try:
        coords = [float(v) for v in row[1:]]
    except ValueError:
        raise LayoutError(f"line {lineno}: non-numeric coordinate") from None
    if not all(math.isfinite(c) for c in coords):
        raise LayoutError(f"line {lineno}: non-finite coordinate")
    if dim is not None and len(coords) != dim:
        raise LayoutError(f"line {lineno}: {len(coords)} coordinates after {dim}-D rows (mixed dimensionality)")
    return label, coords


def _load_csv(text: str) -> PositionSet:
    labels, coords, seen = [], [], {}
    dim = None
    reader = csv.reader(text.splitlines())
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not f.strip() for f in row):
            continue
        if lineno == 1 and row[0].strip().lower() == "label":
            continue
        label, xyz = _parse_row(row, lineno, dim)
        if label in seen:
            raise LayoutError(f"line {lineno}: duplicate label {label!r} (first on line {seen[label]})")
        seen[label] = lineno
        dim = len(xyz)
        labels.append(label)
        coords.append(xyz)
    if len(labels) < 2:
        raise LayoutError("layout file holds fewer than 2 positions")
    return PositionSet(tuple(labels), np.array(coords))


def _load_json(text: str) -> PositionSet:
    try:
        items = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LayoutError(f"line {exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(items, list):
        raise LayoutError("JSON layout must be an array of {label, coords}")
    labels, coords, seen = [], [], set()
    dim = None
    for k, item in enumerate(items):
        try:
            label, xyz = str(item["label"]), [float(c) for c in item["coords"]]
        except (KeyError, TypeError, ValueError):
            raise LayoutError(f"entry {k}: expected {{label, coords}}") from None
        if len(xyz) not in (2, 3) or (dim is not None and len(xyz) != dim):
            raise LayoutError(f"entry {k}: bad or mixed dimensionality")
        if label in seen:
            raise LayoutError(f"entry {k}: duplicate label {label!r}")
        seen.add(label)
        dim = len(xyz)
        labels.append(label)
        coords.append(xyz)
    if len(labels) < 2:
        raise LayoutError("layout file holds fewer than 2 positions")
    return PositionSet(tuple(labels), np.array(coords))


def load_layout(path) -> PositionSet:
    """Read a layout from CSV (``label,x,y[,z]``) or JSON (by ``.json`` suffix)."""
    name = str(getattr(path, "name", path))
    text = path.read_text(encoding="utf-8") if hasattr(path, "read_text") else Path(path).read_text(encoding="utf-8")
    if name.endswith(".json"):
        return _load_json(text)
    return _load_csv(text)


def layout_to_csv(ps: PositionSet) -> str:
    header = ["label", "x", "y", "z"][: ps.dim + 1]
    lines = [",".join(header)]
    for label, xyz in zip(ps.labels, ps.coords):
        lines.append(",".join([label] + [repr(float(c)) for c in xyz]))
    return "\n".join(lines) + "\n"


def layout_to_json(ps: PositionSet) -> str:
    items = [{"label": lab, "coords": [float(c) for c in xyz]} for lab, xyz in zip(ps.labels, ps.coords)]
    return json.dumps(items, indent=1) + "\n"


def save_layout(ps: PositionSet, path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    text = layout_to_json(ps) if fmt == "json" else layout_to_csv(ps)
    path.write_text(text, encoding="utf-8")
