"""Plain-text exporters: CSV tables and legacy-ASCII VTK structured grids.

Floats are written with %.17g so a re-import reproduces the samples
bit-for-bit on the same platform.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def write_csv(path, columns: dict[str, np.ndarray]) -> Path:
    """Column-oriented CSV with a comment header naming the columns in order."""
    path = Path(path)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], float).ravel() for k in names])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=",".join(names))
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().lstrip("#").strip()
    names = header.split(",")
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return {name: data[:, k] for k, name in enumerate(names)}


def write_vtk_structured_grid(path, points: np.ndarray, vectors: dict) -> Path:
    """Legacy-ASCII VTK STRUCTURED_GRID.

    points: (ni, nj, nk, 3) with the first index fastest in file order,
    matching VTK's x-fastest convention.  vectors: name -> (ni, nj, nk, 3).
    """
    path = Path(path)
    ni, nj, nk, _ = points.shape
    n_total = ni * nj * nk

    def flat(arr):
        # VTK order: i fastest, then j, then k
        return arr.transpose(2, 1, 0, 3).reshape(n_total, 3)

    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("toroflux field export\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_GRID\n")
        fh.write(f"DIMENSIONS {ni} {nj} {nk}\n")
        fh.write(f"POINTS {n_total} double\n")
        np.savetxt(fh, flat(points), fmt=FLOAT_FMT)
        fh.write(f"POINT_DATA {n_total}\n")
        for name, arr in vectors.items():
            fh.write(f"VECTORS {name} double\n")
            np.savetxt(fh, flat(np.asarray(arr, float)), fmt=FLOAT_FMT)
    return path


def write_report(path, report: dict) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
