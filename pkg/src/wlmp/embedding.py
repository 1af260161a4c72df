"""Diffusion-map coordinates from a distance matrix.

The pipeline is: Gaussian kernel similarity with a bandwidth set by the mean
squared distance, random-walk Laplacian ``I - D^-1 C``, and its right
eigenvectors as coordinates. The trivial (constant) eigenvector is dropped, so
index 1 always refers to the smallest non-zero eigenvalue.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

log = logging.getLogger(__name__)

# Above this size a partial decomposition (scipy.sparse.linalg.eigsh on the
# symmetric conjugate) is the intended path; the dense solver still works.
DENSE_LIMIT = 2000


class DegenerateInputError(ValueError):
    """Distance matrix carries no scale (all zeros)."""


class DisconnectedGraphError(ValueError):
    """Some node has zero total similarity to all others."""


class NearDisconnectionWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of the random-walk Laplacian, eigenvalues ascending.

    ``eigenvectors[:, i]`` is a unit-norm right eigenvector for ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    degrees: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]

    def laplacian(self, similarity: np.ndarray) -> np.ndarray:
        return np.eye(self.size) - similarity / self.degrees[:, None]


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray
    selected_indices: tuple[int, ...]
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    @property
    def k(self) -> int:
        return self.coords.shape[1]

    def columns(self, indices: Sequence[int]) -> "Embedding":
        """Sub-embedding restricted to the given (1-based) eigenvector indices."""
        pos = [self.selected_indices.index(i) for i in indices]
        return Embedding(self.coords[:, pos], tuple(indices), self.eigenvalues)


def validate_distances(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    if d.shape[0] < 2:
        raise ValueError("distance matrix needs at least 2 nodes")
    if not np.all(np.isfinite(d)):
        raise ValueError("distance matrix has non-finite entries")
    if np.any(d < 0):
        raise ValueError("distance matrix has negative entries")
    if np.any(np.diag(d) != 0):
        raise ValueError("distance matrix diagonal must be zero")
    if not np.allclose(d, d.T, rtol=1e-12, atol=0.0):
        raise ValueError("distance matrix must be symmetric")
    return d


def kernel_bandwidth(d) -> float:
    """Squared kernel width: mean of all M^2 squared distances, diagonal included."""
    d = np.asarray(d, dtype=float)
    sigma2 = float(np.mean(d * d))
    if not sigma2 > 0:
        raise DegenerateInputError("all distances are zero; kernel bandwidth is undefined")
    return sigma2


def similarity(d, sigma2: float) -> np.ndarray:
    """Gaussian kernel ``exp(-d^2 / sigma2)`` off the diagonal, zero on it."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    d = np.asarray(d, dtype=float)
    c = np.exp(-(d * d) / sigma2)
    np.fill_diagonal(c, 0.0)
    return c


def normalized_laplacian(c) -> SpectralDecomposition:
    """Eigen-decompose ``L = I - D^-1 C`` through its symmetric conjugate.

    ``D^1/2 L D^-1/2 = I - D^-1/2 C D^-1/2`` is symmetric with the same
    spectrum; its eigenvectors are mapped back by ``D^-1/2`` and renormalized.
    Signs are fixed so the largest-magnitude entry of each vector is positive.
    """
    c = np.asarray(c, dtype=float)
    deg = c.sum(axis=1)
    if np.any(deg <= 0):
        bad = np.flatnonzero(deg <= 0)
        raise DisconnectedGraphError(f"nodes {bad.tolist()} have zero similarity to every other node")
    inv_sqrt = 1.0 / np.sqrt(deg)
    sym = np.eye(len(c)) - c * inv_sqrt[:, None] * inv_sqrt[None, :]
    sym = 0.5 * (sym + sym.T)
    if len(c) > DENSE_LIMIT:
        log.info("dense eigensolve for M=%d; consider a partial decomposition", len(c))
    vals, vecs = linalg.eigh(sym)
    vecs = vecs * inv_sqrt[:, None]
    vecs /= np.linalg.norm(vecs, axis=0)
    # first entry at the maximum magnitude is made positive; the tolerance keeps
    # mirror-image extremes on symmetric layouts from flipping with roundoff
    mag = np.abs(vecs)
    idx = np.argmax(mag >= (1.0 - 1e-8) * mag.max(axis=0), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    vecs *= np.where(signs == 0, 1.0, signs)
    return SpectralDecomposition(vals, vecs, deg)


def zero_tolerance(eigenvalues) -> float:
    return 1e-9 * float(np.max(np.abs(eigenvalues)))


def spectrum(d) -> SpectralDecomposition:
    d = validate_distances(d)
    return normalized_laplacian(similarity(d, kernel_bandwidth(d)))


def embed(d, selected: Sequence[int] = (1, 2)) -> Embedding:
    """Diffusion coordinates of every node for the chosen eigenvectors.

    ``selected`` holds 1-based indices where 1 is the eigenvector of the
    smallest non-zero eigenvalue. The zero-eigenvalue vector is never used.
    """
    dec = spectrum(d)
    return embedding_from(dec, selected)


def embedding_from(dec: SpectralDecomposition, selected: Sequence[int]) -> Embedding:
    selected = tuple(int(i) for i in selected)
    if not selected:
        raise ValueError("select at least one eigenvector")
    m = dec.size
    for i in selected:
        if i < 1 or i > m - 1:
            raise IndexError(f"eigenvector index {i} out of range 1..{m - 1}")
    tol = zero_tolerance(dec.eigenvalues)
    if m > 2 and dec.eigenvalues[1] < tol:
        warnings.warn(
            "second-smallest Laplacian eigenvalue is ~0; the similarity graph is nearly disconnected",
            NearDisconnectionWarning,
            stacklevel=3,
        )
    coords = dec.eigenvectors[:, list(selected)].copy()
    return Embedding(coords, selected, dec.eigenvalues)


@dataclass(frozen=True)
class Selection:
    indices: tuple[int, ...]
    resolved: bool
    unresolved_pairs: tuple[tuple[int, int], ...] = ()
    min_separation: float = 0.0
    threshold: float = 0.0


def _nn_distances(x: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - x[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(d, np.inf)
    return d


def select_eigenvectors(
    candidates: Embedding,
    dim: int,
    resolution: float = 0.1,
) -> Selection:
    """Choose eigenvectors that keep every pair of positions apart.

    Starts from ``1..dim`` and appends the following eigenvectors one at a
    time. A set is accepted when every pair is farther apart than
    ``resolution`` times the median nearest-neighbour separation measured in
    the full candidate embedding. ``candidates`` must hold the first ``kmax``
    eigenvectors in order.
    """
    kmax = candidates.k
    if candidates.selected_indices != tuple(range(1, kmax + 1)):
        raise ValueError("candidate embedding must hold eigenvectors 1..kmax in order")
    if kmax < dim:
        raise ValueError(f"kmax={kmax} is below the spatial dimension {dim}")
    full = _nn_distances(candidates.coords)
    threshold = resolution * float(np.median(full.min(axis=1)))

    best = None
    for k in range(dim, kmax + 1):
        d = _nn_distances(candidates.coords[:, :k])
        iu, ju = np.nonzero(np.triu(d <= threshold, 1))
        pairs = tuple(zip(iu.tolist(), ju.tolist()))
        sel = Selection(tuple(range(1, k + 1)), not pairs, pairs, float(d.min()), threshold)
        if not pairs:
            return sel
        if best is None or len(pairs) < len(best.unresolved_pairs):
            best = sel
    log.warning("%d position pairs remain unresolved with %d eigenvectors", len(best.unresolved_pairs), kmax)
    return best


def auto_eigenvectors(positions_distances, dim: int, kmax: int | None = None, resolution: float = 0.1) -> Selection:
    """Eigenvector selection straight from the blueprint distance matrix."""
    m = len(positions_distances)
    kmax = min(kmax or dim + 4, m - 1)
    return select_eigenvectors(embed(positions_distances, range(1, kmax + 1)), dim, resolution)


def dump_csv(dec: SpectralDecomposition, count: int | None = None) -> str:
    """Eigen-decomposition as CSV: first row eigenvalues, then one row per node."""
    k = dec.size if count is None else min(count, dec.size)
    header = ",".join(f"v{i}" for i in range(k))
    rows = [header, ",".join(repr(float(v)) for v in dec.eigenvalues[:k])]
    for r in dec.eigenvectors[:, :k]:
        rows.append(",".join(repr(float(v)) for v in r))
    return "\n".join(rows) + "\n"
