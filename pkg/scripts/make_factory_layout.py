"""Regenerate src/wlmp/data/factory.csv, the 58-position factory floor plan.

Six staggered rows of workstations (10 per row) with a cross aisle cut
through rows 2 and 3, plus a small fixed installation jitter. The plan
approximates a plausible floor, not any published coordinates.
"""

from pathlib import Path

import numpy as np

from wlmp.geometry import PositionSet, save_layout

ROW_Y = (0.0, 0.13, 0.26, 0.39, 0.52, 0.65)
PER_ROW = 10
PITCH = 0.11
STAGGER = 0.055
AISLE = {(2, 6), (3, 6)}  # (row, slot) left empty for the cross aisle
JITTER = 0.01


def factory_coords(seed: int = 2024) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = []
    for r, y in enumerate(ROW_Y):
        for i in range(PER_ROW):
            if (r, i) in AISLE:
                continue
            x = STAGGER * (r % 2) + PITCH * i
            pts.append((x, y))
    pts = np.array(pts) + rng.uniform(-JITTER, JITTER, size=(len(pts), 2))
    pts -= pts.min(axis=0)
    pts /= np.ptp(pts[:, 0])
    return np.round(pts, 4)


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "wlmp" / "data" / "factory.csv"
    ps = PositionSet(tuple(f"m{i:02d}" for i in range(58)), factory_coords())
    save_layout(ps, out)
    print(f"wrote {ps.size} positions to {out}")
