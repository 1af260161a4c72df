"""Log-distance propagation model and RSSI-domain measurement noise."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class MeasurementError(ValueError):
    """Bad measurement input."""


class MissingPairsError(MeasurementError):
    pass


class UnknownLabelError(MeasurementError):
    pass


@dataclass(frozen=True)
class PropagationModel:
    """RSSI(d) = ref_power - 10 * exponent * log10(d / ref_distance).

    Distances are in layout units (built-in layouts have a longest side of 1).
    The default reference power fixes what a given SNR means; see README.
    """

    ref_power: float = -15.0
    ref_distance: float = 1.0
    path_loss_exponent: float = 2.0

    def __post_init__(self):
        if not self.ref_distance > 0:
            raise ValueError("ref_distance must be positive")
        if not self.path_loss_exponent > 0:
            raise ValueError("path_loss_exponent must be positive")


@dataclass(frozen=True)
class NoiseSpec:
    snr: float
    seed: int | np.random.SeedSequence = 0
    # "single": one draw per unordered pair; "average": mean of two directional draws
    symmetric: str = "single"

    def __post_init__(self):
        if not self.snr > 0:
            raise ValueError("snr must be positive")
        if self.symmetric not in ("single", "average"):
            raise ValueError("symmetric must be 'single' or 'average'")


def rssi_from_distance(d, m: PropagationModel = PropagationModel()):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    r = m.ref_power - 10.0 * m.path_loss_exponent * np.log10(d / m.ref_distance)
    return float(r) if r.ndim == 0 else r


def distance_from_rssi(r, m: PropagationModel = PropagationModel()):
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("rssi must be finite")
    d = m.ref_distance * 10.0 ** ((m.ref_power - r) / (10.0 * m.path_loss_exponent))
    return float(d) if d.ndim == 0 else d


def noise_sigma(rssi_offdiag: np.ndarray, snr: float) -> float:
    """Noise standard deviation in dB: mean absolute RSSI divided by the SNR."""
    return float(np.mean(np.abs(rssi_offdiag))) / snr


def noisy_distance_matrix(truth, m: PropagationModel = PropagationModel(), ns: NoiseSpec = NoiseSpec(np.inf)) -> np.ndarray:
    """Distances re-estimated from noisy RSSI; one symmetric draw per pair."""
    d = np.asarray(truth, dtype=float)
    n = d.shape[0]
    iu = np.triu_indices(n, 1)
    clean = d[iu]
    if np.any(clean <= 0):
        k = int(np.argmin(clean))
        raise MeasurementError(f"nodes {iu[0][k]} and {iu[1][k]} coincide (zero distance)")
    rssi = rssi_from_distance(clean, m)
    sigma = noise_sigma(rssi, ns.snr)
    rng = np.random.default_rng(ns.seed)
    if ns.symmetric == "single":
        noise = rng.normal(0.0, 1.0, size=clean.shape) * sigma
    else:
        noise = rng.normal(0.0, 1.0, size=(2,) + clean.shape).mean(axis=0) * sigma
    out = np.zeros_like(d)
    out[iu] = distance_from_rssi(rssi + noise, m)
    out.T[iu] = out[iu]
    return out


def rssi_matrix(d, m: PropagationModel = PropagationModel()) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    out = np.zeros_like(d)
    iu = np.triu_indices(len(d), 1)
    out[iu] = rssi_from_distance(d[iu], m)
    out.T[iu] = out[iu]
    return out


def load_measurements(path, labels: Sequence[str] | None = None) -> tuple[tuple[str, ...], np.ndarray]:
    """Read a ``node_a,node_b,rssi_dbm`` file into a dense symmetric RSSI matrix.

    Both directions of a pair may be given; they are averaged. Every pair must
    be present. If ``labels`` is given it fixes the node order and any other
    label is rejected.
    """
    rows = []
    with open(Path(path), newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not f.strip() for f in row):
                continue
            if lineno == 1 and row[0].strip().lower() == "node_a":
                continue
            if len(row) != 3:
                raise MeasurementError(f"line {lineno}: expected node_a,node_b,rssi_dbm")
            a, b = row[0].strip(), row[1].strip()
            try:
                r = float(row[2])
            except ValueError:
                raise MeasurementError(f"line {lineno}: non-numeric rssi") from None
            if not np.isfinite(r):
                raise MeasurementError(f"line {lineno}: non-finite rssi")
            if a == b:
                raise MeasurementError(f"line {lineno}: self-measurement for {a!r}")
            rows.append((a, b, r))
    if labels is None:
        labels = tuple(dict.fromkeys(x for a, b, _ in rows for x in (a, b)))
    labels = tuple(labels)
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    total = np.zeros((n, n))
    count = np.zeros((n, n), dtype=int)
    for a, b, r in rows:
        if a not in index or b not in index:
            raise UnknownLabelError(f"unknown node label {a if a not in index else b!r}")
        i, j = index[a], index[b]
        total[i, j] += r
        total[j, i] += r
        count[i, j] += 1
        count[j, i] += 1
    off = ~np.eye(n, dtype=bool)
    if np.any(count[off] == 0):
        i, j = np.argwhere((count == 0) & off)[0]
        missing = int(np.count_nonzero((count == 0) & off)) // 2
        raise MissingPairsError(f"{missing} node pairs have no measurement, e.g. {labels[i]!r}-{labels[j]!r}")
    rssi = np.where(off, total / np.maximum(count, 1), 0.0)
    return labels, rssi


def distances_from_rssi_matrix(rssi: np.ndarray, m: PropagationModel = PropagationModel()) -> np.ndarray:
    n = len(rssi)
    iu = np.triu_indices(n, 1)
    out = np.zeros((n, n))
    out[iu] = distance_from_rssi(rssi[iu], m)
    out.T[iu] = out[iu]
    return out


def measurements_to_csv(labels: Sequence[str], rssi: np.ndarray) -> str:
    lines = ["node_a,node_b,rssi_dbm"]
    n = len(labels)
    for i in range(n):
        for j in range(i + 1, n):
            lines.append(f"{labels[i]},{labels[j]},{float(rssi[i, j])!r}")
    return "\n".join(lines) + "\n"
