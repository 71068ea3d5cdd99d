"""Binary grid dumps and CSV slices.

Grid dump layout (all little-endian, no padding)::

    offset  size        content
    0       8           magic b"LMGRID\\x00\\x00"
    8       4           uint32 format version (1)
    12      4           uint32 flags: bit 0 fields present, bit 1 density present
    16      24          uint64 nt, nz, nd (T samples, Z samples, Doppler nodes)
    40      32          float64 t0, dt, z0, dz
    72      16*nd       float64 node detunings, then float64 node weights
    ...     16*nz*nt    Omega_s, row-major [z, t]   (if bit 0)
    ...     16*nz*nt    Omega_c, row-major [z, t]   (if bit 0)
    ...     144*nz*nd   rho, row-major [z, node, 3, 3] (if bit 1)

Every complex number is stored as a (real, imag) pair of float64. When only
a density is stored ``nt`` is 0 and ``t0``/``dt`` are 0; when only fields
are stored ``nd`` is 0.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .core import DensityField, FieldGrid

MAGIC = b"LMGRID\x00\x00"
VERSION = 1
_HEADER = struct.Struct("<8sII3Q4d")
_C16 = np.dtype("<c16")
_F8 = np.dtype("<f8")


class DumpFormatError(ValueError):
    pass


@dataclass
class GridDump:
    fields: FieldGrid | None
    density: DensityField | None


def _spacing(axis):
    axis = np.asarray(axis, dtype=float)
    if axis.size < 2:
        return (float(axis[0]) if axis.size else 0.0), 0.0
    return float(axis[0]), float(axis[1] - axis[0])


def write_grid(path, fields: FieldGrid | None = None, density: DensityField | None = None) -> None:
    if fields is None and density is None:
        raise ValueError("nothing to write")
    if fields is not None and density is not None and not np.allclose(fields.z_axis, density.z_axis):
        raise ValueError("field and density grids use different z axes")
    z = (fields or density).z_axis
    nt = 0 if fields is None else fields.t_axis.size
    nd = 0 if density is None else density.delta_nodes.size
    t0, dt = (0.0, 0.0) if fields is None else _spacing(fields.t_axis)
    z0, dz = _spacing(z)
    flags = (fields is not None) | (density is not None) << 1
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, flags, nt, z.size, nd, t0, dt, z0, dz))
        if density is not None:
            fh.write(np.ascontiguousarray(density.delta_nodes, dtype=_F8).tobytes())
            fh.write(np.ascontiguousarray(density.weights, dtype=_F8).tobytes())
        if fields is not None:
            fh.write(np.ascontiguousarray(fields.omega_s, dtype=_C16).tobytes())
            fh.write(np.ascontiguousarray(fields.omega_c, dtype=_C16).tobytes())
        if density is not None:
            fh.write(np.ascontiguousarray(density.rho, dtype=_C16).tobytes())


def read_grid(path) -> GridDump:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise DumpFormatError("file too short for a grid header")
    magic, version, flags, nt, nz, nd, t0, dt, z0, dz = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DumpFormatError("not a grid dump (bad magic)")
    if version != VERSION:
        raise DumpFormatError(f"unsupported dump version {version}")
    has_fields, has_density = bool(flags & 1), bool(flags & 2)
    sizes = [8 * nd, 8 * nd] if has_density else []
    sizes += [16 * nz * nt, 16 * nz * nt] if has_fields else []
    sizes += [144 * nz * nd] if has_density else []
    if len(raw) != _HEADER.size + sum(sizes):
        raise DumpFormatError(f"expected {_HEADER.size + sum(sizes)} bytes, found {len(raw)}")

    pos = _HEADER.size

    def take(dtype, count, shape):
        nonlocal pos
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=pos).reshape(shape)
        pos += arr.nbytes
        return arr.copy()

    z = z0 + dz * np.arange(nz)
    deltas = weights = None
    if has_density:
        deltas = take(_F8, nd, (nd,))
        weights = take(_F8, nd, (nd,))
    fields = density = None
    if has_fields:
        t = t0 + dt * np.arange(nt)
        om_s = take(_C16, nz * nt, (nz, nt))
        om_c = take(_C16, nz * nt, (nz, nt))
        fields = FieldGrid(t, z, om_s, om_c)
    if has_density:
        density = DensityField(z, deltas, weights, take(_C16, nz * nd * 9, (nz, nd, 3, 3)))
    return GridDump(fields, density)


def _fmt(x) -> str:
    return repr(float(x))


def write_field_slice(path, fields: FieldGrid, z: float) -> float:
    """Both envelopes against T at the z sample nearest ``z``; returns that sample's z."""
    k = int(np.argmin(np.abs(fields.z_axis - z)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "omega_s_re", "omega_s_im", "omega_c_re", "omega_c_im"])
        for t, s, c in zip(fields.t_axis, fields.omega_s[k], fields.omega_c[k]):
            w.writerow([_fmt(t), _fmt(s.real), _fmt(s.imag), _fmt(c.real), _fmt(c.imag)])
    return float(fields.z_axis[k])


def write_density_slice(path, density: DensityField, delta: float | None = None) -> None:
    """Ground-state elements against z, Doppler-averaged or at the node nearest ``delta``."""
    if delta is None:
        rho = density.averaged()
    else:
        rho = density.rho[:, int(np.argmin(np.abs(density.delta_nodes - delta)))]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["z", "rho11", "rho22", "rho33", "rho12_re", "rho12_im"])
        for z, r in zip(density.z_axis, rho):
            w.writerow([_fmt(z), _fmt(r[0, 0].real), _fmt(r[1, 1].real), _fmt(r[2, 2].real),
                        _fmt(r[0, 1].real), _fmt(r[0, 1].imag)])
