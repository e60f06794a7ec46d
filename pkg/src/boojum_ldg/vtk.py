"""Legacy ASCII VTK (version 2.0) unstructured-grid files for tetrahedral meshes."""
from __future__ import annotations

import numpy as np

VTK_TETRA = 10


def _fmt(a):
    return " ".join(repr(float(v)) for v in a)


def write_vtk(path, vertices, tets, point_data=None, title="boojum-ldg"):
    """Write points, tets and optional point data.

    ``point_data`` maps names to arrays of shape ``(N,)`` (scalars) or
    ``(N, 3)`` (vectors).  Output is byte-deterministic for fixed input.
    """
    vertices = np.asarray(vertices, dtype=float)
    tets = np.asarray(tets, dtype=np.int64)
    n, t = len(vertices), len(tets)
    lines = ["# vtk DataFile Version 2.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {n} double")
    lines += [_fmt(p) for p in vertices]
    lines.append(f"CELLS {t} {5 * t}")
    lines += ["4 " + " ".join(str(int(i)) for i in c) for c in tets]
    lines.append(f"CELL_TYPES {t}")
    lines += [str(VTK_TETRA)] * t
    if point_data:
        lines.append(f"POINT_DATA {n}")
        for name, arr in point_data.items():
            arr = np.asarray(arr)
            if arr.ndim == 2 and arr.shape[1] == 3:
                lines.append(f"VECTORS {name} double")
                lines += [_fmt(v) for v in arr]
            elif arr.ndim == 1:
                kind = "int" if np.issubdtype(arr.dtype, np.integer) else "double"
                lines.append(f"SCALARS {name} {kind} 1")
                lines.append("LOOKUP_TABLE default")
                if kind == "int":
                    lines += [str(int(v)) for v in arr]
                else:
                    lines += [repr(float(v)) for v in arr]
            else:
                raise ValueError(f"point data {name!r} must be (N,) or (N, 3), got {arr.shape}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk(path):
    """Read a file written by :func:`write_vtk`.

    Returns ``(vertices, tets, point_data)``.
    """
    with open(path) as fh:
        tokens_by_line = [ln.split() for ln in fh.read().splitlines()]
    if not tokens_by_line or not " ".join(tokens_by_line[0]).startswith("# vtk DataFile"):
        raise ValueError(f"{path}: not a legacy VTK file")
    i = 4
    vertices = tets = None
    point_data = {}
    n = 0
    while i < len(tokens_by_line):
        tok = tokens_by_line[i]
        if not tok:
            i += 1
            continue
        key = tok[0]
        if key == "POINTS":
            n = int(tok[1])
            vertices = np.array([[float(v) for v in r] for r in tokens_by_line[i + 1:i + 1 + n]])
            i += 1 + n
        elif key == "CELLS":
            t = int(tok[1])
            rows = tokens_by_line[i + 1:i + 1 + t]
            if any(r[0] != "4" for r in rows):
                raise ValueError(f"{path}: only tetrahedral cells are supported")
            tets = np.array([[int(v) for v in r[1:]] for r in rows], dtype=np.int64)
            i += 1 + t
        elif key == "CELL_TYPES":
            t = int(tok[1])
            types = {int(r[0]) for r in tokens_by_line[i + 1:i + 1 + t]}
            if types - {VTK_TETRA}:
                raise ValueError(f"{path}: unexpected cell types {types}")
            i += 1 + t
        elif key == "POINT_DATA":
            n = int(tok[1])
            i += 1
        elif key == "VECTORS":
            point_data[tok[1]] = np.array([[float(v) for v in r] for r in tokens_by_line[i + 1:i + 1 + n]])
            i += 1 + n
        elif key == "SCALARS":
            conv = int if tok[2] == "int" else float
            point_data[tok[1]] = np.array([conv(r[0]) for r in tokens_by_line[i + 2:i + 2 + n]])
            i += 2 + n
        else:
            raise ValueError(f"{path}: unexpected section {key!r} on line {i + 1}")
    if vertices is None or tets is None:
        raise ValueError(f"{path}: missing POINTS or CELLS")
    return vertices, tets, point_data
