"""Sign resolution and minimum-cost node -> position assignment.

The assignment solver is the O(M^3) shortest augmenting path form of the
Kuhn-Munkres algorithm with row/column potentials. For very large M an
O(M^2.5 log M) scaling algorithm (Ramshaw-Tarjan) would be the next step; it
is not implemented here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .embedding import Embedding

MAX_SEARCH_AXES = 8
AMBIGUITY_RTOL = 1e-6


class AmbiguousAnchorError(ValueError):
    def __init__(self, column: int, msg: str):
        super().__init__(msg)
        self.column = column


@dataclass(frozen=True)
class Assignment:
    """``pairs[i]`` is the position index assigned to node ``i``."""

    pairs: tuple[int, ...]
    total_cost: float
    pair_costs: np.ndarray = field(repr=False, compare=False)
    orientation: tuple[int, ...] = ()
    ambiguous: bool = False
    tied_orientations: tuple[tuple[int, ...], ...] = ()

    def __len__(self):
        return len(self.pairs)


def cost_matrix(n: Embedding | np.ndarray, p: Embedding | np.ndarray, signs: Sequence[int] | None = None) -> np.ndarray:
    """Euclidean distances between sign-flipped node rows and position rows."""
    nc = n.coords if isinstance(n, Embedding) else np.asarray(n, dtype=float)
    pc = p.coords if isinstance(p, Embedding) else np.asarray(p, dtype=float)
    if nc.ndim == 1:
        nc = nc[:, None]
    if pc.ndim == 1:
        pc = pc[:, None]
    if nc.shape != pc.shape:
        raise ValueError(f"node embedding {nc.shape} and position embedding {pc.shape} differ in shape")
    if signs is not None:
        s = np.asarray(signs, dtype=float)
        if s.shape != (nc.shape[1],) or not np.all(np.abs(s) == 1):
            raise ValueError("signs must be one +1/-1 entry per embedding column")
        nc = nc * s
    diff = nc[:, None, :] - pc[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


@numba.njit(cache=True)
def _solve(cost):
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    owner = np.zeros(n + 1, dtype=np.int64)  # owner[j]: row (1-based) holding column j
    way = np.zeros(n + 1, dtype=np.int64)
    minv = np.empty(n + 1)
    used = np.empty(n + 1, dtype=np.bool_)
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv[:] = np.inf
        used[:] = False
        while True:
            used[j0] = True
            i0 = owner[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while True:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        row_to_col[owner[j] - 1] = j - 1
    return row_to_col, u[1:], v[1:]


def _lexicographic_min(row_to_col: np.ndarray, tight: np.ndarray) -> np.ndarray:
    """Smallest permutation (lexicographically) among perfect matchings of ``tight``.

    ``row_to_col`` is one perfect matching inside ``tight``. Rows are fixed in
    order; each takes the smallest column that still leaves a perfect matching
    of the remaining rows, found as an alternating cycle through free rows.
    """
    n = len(row_to_col)
    match = row_to_col.copy()
    owner = np.empty(n, dtype=np.int64)
    owner[match] = np.arange(n)
    adj = [np.flatnonzero(tight[i]) for i in range(n)]
    for i in range(n):
        for j in adj[i]:
            if j >= match[i]:
                break
            r = owner[j]
            if r < i:
                continue
            target = match[i]
            # BFS over rows > i from r, looking for a tight edge into `target`
            parent = {r: -1}
            queue = [r]
            found = -1
            while queue and found < 0:
                nxt = []
                for row in queue:
                    for c in adj[row]:
                        if c == j:
                            continue
                        if c == target:
                            found = row
                            break
                        o = owner[c]
                        if o > i and o not in parent:
                            parent[o] = row
                            nxt.append(o)
                    if found >= 0:
                        break
                queue = nxt
            if found < 0:
                continue
            # rotate along r -> ... -> found -> target, then i -> j
            row = found
            col = target
            while row != -1:
                prev_col = match[row]
                match[row] = col
                owner[col] = row
                col = prev_col
                row = parent[row]
            match[i] = j
            owner[j] = i
            break
    return match


def hungarian(cost) -> Assignment:
    """Minimum-cost perfect matching of rows (nodes) to columns (positions).

    Ties between optimal matchings go to the lexicographically smallest
    permutation.
    """
    e = np.ascontiguousarray(cost, dtype=float)
    if e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {e.shape}")
    if not np.all(np.isfinite(e)):
        raise ValueError("cost matrix has non-finite entries")
    if np.any(e < 0):
        raise ValueError("cost matrix has negative entries")
    n = e.shape[0]
    if n == 0:
        return Assignment((), 0.0, np.zeros(0))
    row_to_col, u, v = _solve(e)
    reduced = e - u[:, None] - v[None, :]
    # roundoff-level slack only; anything larger is a genuinely worse edge
    tight = reduced <= 1e-12 * max(1.0, float(e.max()))
    if np.count_nonzero(tight) > n:
        lex = _lexicographic_min(row_to_col, tight)
        rows = np.arange(n)
        if e[rows, lex].sum() <= e[rows, row_to_col].sum():
            row_to_col = lex
    pair_costs = e[np.arange(n), row_to_col]
    return Assignment(tuple(int(c) for c in row_to_col), float(pair_costs.sum()), pair_costs)


def _coords(x) -> np.ndarray:
    c = x.coords if isinstance(x, Embedding) else np.asarray(x, dtype=float)
    return c[:, None] if c.ndim == 1 else c


def noise_floor(p) -> np.ndarray:
    """Per-column magnitude below which a coordinate's sign is not trusted."""
    pc = _coords(p)
    return 0.05 * np.sqrt(np.mean(pc * pc, axis=0))


def align_with_anchor(n, p, anchor_node: int, anchor_position: int, floor: np.ndarray | None = None) -> tuple[int, ...]:
    """Column signs that make the anchor node agree in sign with its known position."""
    nc, pc = _coords(n), _coords(p)
    if nc.shape != pc.shape:
        raise ValueError("node and position embeddings differ in shape")
    floor = noise_floor(pc) if floor is None else np.broadcast_to(floor, (pc.shape[1],))
    a, b = nc[anchor_node], pc[anchor_position]
    for col in range(pc.shape[1]):
        if abs(a[col]) <= floor[col] or abs(b[col]) <= floor[col]:
            raise AmbiguousAnchorError(
                col, f"anchor coordinate in embedding column {col + 1} is within the noise floor; choose another anchor"
            )
    return tuple(int(s) for s in np.sign(a) * np.sign(b))


def best_anchor(p) -> int:
    """Position whose smallest relative coordinate magnitude is largest."""
    pc = _coords(p)
    rel = np.abs(pc) / np.sqrt(np.mean(pc * pc, axis=0))
    return int(np.argmax(rel.min(axis=1)))


def match_with_anchor(n, p, anchor_node: int, anchor_position: int) -> Assignment:
    signs = align_with_anchor(n, p, anchor_node, anchor_position)
    a = hungarian(cost_matrix(n, p, signs))
    return Assignment(a.pairs, a.total_cost, a.pair_costs, signs)


def orientations(k: int):
    """All sign vectors of length k, +1 before -1 in lexicographic order."""
    return list(itertools.product((1, -1), repeat=k))


def match_with_orientation_search(n, p) -> Assignment:
    """Try every per-axis sign flip of the node embedding; keep the cheapest.

    Ties within a relative ``AMBIGUITY_RTOL`` are flagged as ambiguous and
    resolved in favour of the lexicographically smallest sign vector.
    """
    nc, pc = _coords(n), _coords(p)
    k = pc.shape[1]
    if nc.shape != pc.shape:
        raise ValueError("node and position embeddings differ in shape")
    if k > MAX_SEARCH_AXES:
        raise ValueError(f"{2 ** k} orientations for k={k}; supply an anchor instead")
    results = [(s, hungarian(cost_matrix(nc, pc, s))) for s in orientations(k)]
    best_cost = min(a.total_cost for _, a in results)
    tol = AMBIGUITY_RTOL * best_cost + 1e-12
    tied = [s for s, a in results if a.total_cost - best_cost <= tol]
    signs, a = next((s, a) for s, a in results if s == tied[0])
    return Assignment(a.pairs, a.total_cost, a.pair_costs, signs, len(tied) > 1, tuple(tied))


def permutation_cost(cost, perm: Sequence[int]) -> float:
    e = np.asarray(cost, dtype=float)
    return float(e[np.arange(len(perm)), list(perm)].sum())
