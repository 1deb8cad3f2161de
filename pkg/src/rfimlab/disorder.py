"""Gaussian random field on the sites of a box.

The value at a site is a pure function of ``(seed, site index)``: two raw
64-bit words of the Philox counter stream at positions ``2i`` and ``2i+1``
feed a Box-Muller transform.  Any contiguous slice can therefore be filled
independently of the rest.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lattice import Region

_HEADER = struct.Struct("<QQ")
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class DisorderField:
    """One standard-normal value per site of ``Lambda_N``."""

    values: np.ndarray
    N: int
    seed: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (Region(self.N).n_sites,):
            raise ValueError("field size does not match region")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __neg__(self) -> "DisorderField":
        return DisorderField(-self.values, self.N, self.seed)

    def __len__(self):
        return len(self.values)

    def scaled(self, eps: float) -> np.ndarray:
        if eps < 0:
            raise ValueError("field scale eps must be >= 0")
        return eps * self.values


def _normals(seed: int, start: int, stop: int) -> np.ndarray:
    # Philox4x64 emits four words per counter step; 2*start is a multiple of
    # four for even start, so the counter can jump straight there.
    lead = start % 2
    first = start - lead
    bitgen = np.random.Philox(key=seed, counter=first // 2)
    raw = bitgen.random_raw(2 * (stop - first)).reshape(-1, 2)[lead:]
    u1 = ((raw[:, 0] >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    u2 = (raw[:, 1] >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def sample_field_slice(N: int, seed: int, start: int, stop: int) -> np.ndarray:
    """Field values for site indices ``start:stop`` only."""
    n = Region(N).n_sites
    if not 0 <= start <= stop <= n:
        raise ValueError("slice out of range")
    return _normals(int(seed), start, stop)


def sample_field(region: Region | int, seed: int) -> DisorderField:
    """I.i.d. standard normals, one per site, deterministic in ``seed``."""
    N = region.N if isinstance(region, Region) else int(region)
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must fit in 64 bits")
    values = _normals(seed, 0, Region(N).n_sites)
    return DisorderField(values, N, seed)


def _site_array(C, n_sites: int) -> np.ndarray:
    C = np.asarray(C)
    if C.dtype == bool:
        if C.shape != (n_sites,):
            raise ValueError("mask size does not match field")
        return np.flatnonzero(C)
    C = C.astype(np.int64).ravel()
    if C.size and (C.min() < 0 or C.max() >= n_sites):
        raise IndexError("site outside the region")
    return C


def field_sum(h, C) -> float:
    """``h_C``: correctly rounded sum of the field over a site set.

    ``C`` may be an index array or a boolean mask over the sites.
    """
    values = np.asarray(getattr(h, "values", h), dtype=np.float64)
    idx = _site_array(C, len(values))
    return math.fsum(values[idx])


def shell_abs_sum(h, decomposition, radius_factor: int = 4) -> float:
    """``H_{B,B'}``: sum of ``|h_v|`` over ``Q_{Ball(B u B', 4k)}``."""
    from .lattice import ball

    values = np.asarray(getattr(h, "values", h), dtype=np.float64)
    grid = decomposition.grid
    X = decomposition.B | decomposition.B_prime
    shell = ball(X, radius_factor * decomposition.k)
    idx = grid.fine_sites(shell)
    return math.fsum(np.abs(values[idx]))


def save_field(field: DisorderField, path) -> None:
    """Flat little-endian float64 array in site order after a 16-byte header
    holding ``N`` and ``seed`` as unsigned 64-bit integers."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(field.N, field.seed))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def load_field(path) -> DisorderField:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated field file")
    N, seed = _HEADER.unpack_from(data)
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if len(values) != Region(N).n_sites:
        raise ValueError("field file length does not match header")
    return DisorderField(values.astype(np.float64), N, seed)
