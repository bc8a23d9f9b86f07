"""File formats: CSV time series, binary distribution dumps, PASS/FAIL reports.

Binary dump layout (all little-endian)::

    magic        4 bytes  b"MBGK"
    version      u32      1
    kind         u32      0 = velocity distributions, 1 = spatial field
    dim          u32      1 or 3
    per axis     u32 node_count, f64 v_min, f64 v_max
    species      u32      number of species blocks
    [kind 1]     u32 cell_count, f64 length, u32 components per species
    payload      f64 values, row-major

For kind 0 the payload is ``species`` arrays of the grid shape.  For kind 1
it is, for each species, ``components`` arrays of shape
``(cell_count, node_count)`` (components are ``g`` then ``h``).
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .discretization import DiscreteDistribution, VelocityGrid

MAGIC = b"MBGK"
VERSION = 1
KIND_DISTRIBUTION = 0
KIND_FIELD = 1


def format_number(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    """Write rows with 17 significant digits, '.' decimal separator."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_number(x) for x in row) + "\n")


def read_csv(path):
    """Return ``(header, array)``."""
    with Path(path).open(encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def _grid_header(grid: VelocityGrid) -> bytes:
    out = struct.pack("<I", grid.dim)
    for k, lo, hi in zip(grid.nodes, grid.v_min, grid.v_max):
        out += struct.pack("<Idd", k, lo, hi)
    return out


def _read_grid(buf, off):
    (dim,) = struct.unpack_from("<I", buf, off)
    off += 4
    nodes, lo, hi = [], [], []
    for _ in range(dim):
        k, a, b = struct.unpack_from("<Idd", buf, off)
        off += struct.calcsize("<Idd")
        nodes.append(k)
        lo.append(a)
        hi.append(b)
    return VelocityGrid(tuple(nodes), tuple(lo), tuple(hi)), off


def _payload(arrays):
    return b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)


def dump_distributions(path, dists):
    """Write one or more distributions sharing a grid."""
    dists = list(dists)
    grid = dists[0].grid
    if any(d.grid != grid for d in dists):
        raise ValueError("all dumped distributions must share a grid")
    head = MAGIC + struct.pack("<II", VERSION, KIND_DISTRIBUTION) + _grid_header(grid)
    head += struct.pack("<I", len(dists))
    Path(path).write_bytes(head + _payload(d.values for d in dists))


def _read_head(buf, kind):
    if buf[:4] != MAGIC:
        raise ValueError("not an MBGK dump")
    version, k = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise ValueError(f"unsupported dump version {version}")
    if k != kind:
        raise ValueError(f"dump kind {k}, expected {kind}")
    grid, off = _read_grid(buf, 12)
    (count,) = struct.unpack_from("<I", buf, off)
    return grid, count, off + 4


def load_distributions(path) -> list[DiscreteDistribution]:
    buf = Path(path).read_bytes()
    grid, count, off = _read_head(buf, KIND_DISTRIBUTION)
    size = int(np.prod(grid.shape))
    data = np.frombuffer(buf, dtype="<f8", count=count * size, offset=off)
    return [DiscreteDistribution(grid, data[i * size:(i + 1) * size].reshape(grid.shape), (i % 2) + 1)
            for i in range(count)]


def dump_field(path, grid: VelocityGrid, length: float, species_components):
    """``species_components`` is a list (per species) of lists of (cells, nodes) arrays."""
    cells = species_components[0][0].shape[0]
    ncomp = len(species_components[0])
    head = MAGIC + struct.pack("<II", VERSION, KIND_FIELD) + _grid_header(grid)
    head += struct.pack("<I", len(species_components))
    head += struct.pack("<IdI", cells, float(length), ncomp)
    arrays = [a for comps in species_components for a in comps]
    Path(path).write_bytes(head + _payload(arrays))


def load_field(path):
    """Return ``(grid, length, species_components)``."""
    buf = Path(path).read_bytes()
    grid, count, off = _read_head(buf, KIND_FIELD)
    cells, length, ncomp = struct.unpack_from("<IdI", buf, off)
    off += struct.calcsize("<IdI")
    size = cells * grid.nodes[0]
    data = np.frombuffer(buf, dtype="<f8", count=count * ncomp * size, offset=off)
    out = []
    for s in range(count):
        comps = []
        for c in range(ncomp):
            i = s * ncomp + c
            comps.append(data[i * size:(i + 1) * size].reshape(cells, grid.nodes[0]).copy())
        out.append(comps)
    return grid, length, out


def format_report(rows) -> str:
    """Plain-text PASS/FAIL lines for ``(name, value, tolerance, passed)`` rows."""
    lines = []
    for name, value, tol, ok in rows:
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}: {value:.3e} (tolerance {tol:.1e})")
    return "\n".join(lines)
