"""Periodic uniform grids with spectral differentiation and quadrature.

Fields are plain numpy arrays shaped like ``grid.shape`` (C order, so the
last dimension varies fastest). The grid object carries the coordinates,
the wavenumbers and the volume element; every operation here is a pure
function of its inputs.

The box along axis ``j`` is ``[-L_j, L_j)`` sampled at ``n_j`` points, and
the wavenumbers follow the usual FFT ordering ``k = 2*pi*fftfreq(n, dx)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "integrate",
    "gradient",
    "laplacian",
    "inner",
    "l2_norm",
    "h1_norm",
    "h1_distance",
    "translate",
    "interpolate",
    "save_snapshot",
    "load_snapshot",
    "SNAPSHOT_MAGIC",
]

SNAPSHOT_MAGIC = b"NSEF1"


def _is_pow2(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the box ``prod_j [-L_j, L_j)``.

    Parameters
    ----------
    n : tuple of int
        Points per dimension; each a power of two, at least 16.
    L : tuple of float
        Box half-widths.
    """

    n: tuple
    L: tuple

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        L = tuple(float(v) for v in np.atleast_1d(self.L))
        if len(L) == 1 and len(n) > 1:
            L = L * len(n)
        if len(n) == 1 and len(L) > 1:
            n = n * len(L)
        if len(n) != len(L) or not 1 <= len(n) <= 3:
            raise ValueError(f"grid needs 1 to 3 dimensions, got n={n}, L={L}")
        for nj in n:
            if not _is_pow2(nj) or nj < 16:
                raise ValueError(f"points per dimension must be a power of two >= 16, got {nj}")
        for Lj in L:
            if not np.isfinite(Lj) or Lj <= 0:
                raise ValueError(f"box half-width must be positive, got {Lj}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", L)

    @classmethod
    def uniform(cls, dims, n, L):
        """Same ``n`` and ``L`` along every one of ``dims`` axes."""
        return cls((n,) * dims, (L,) * dims)

    @property
    def dims(self):
        return len(self.n)

    @property
    def shape(self):
        return self.n

    @property
    def size(self):
        return int(np.prod(self.n))

    @property
    def dx(self):
        return tuple(2.0 * Lj / nj for nj, Lj in zip(self.n, self.L))

    @property
    def cell(self):
        """Volume element ``prod_j dx_j``."""
        return float(np.prod(self.dx))

    @property
    def volume(self):
        return float(np.prod([2.0 * Lj for Lj in self.L]))

    @cached_property
    def axes(self):
        return tuple(-Lj + dxj * np.arange(nj) for nj, Lj, dxj in zip(self.n, self.L, self.dx))

    @cached_property
    def x(self):
        """Coordinate mesh, shape ``(dims,) + shape``."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def r2(self):
        return np.sum(self.x**2, axis=0)

    @cached_property
    def wavenumbers(self):
        return tuple(2.0 * np.pi * np.fft.fftfreq(nj, d=dxj) for nj, dxj in zip(self.n, self.dx))

    @cached_property
    def k(self):
        """Wavenumber mesh, shape ``(dims,) + shape``."""
        return np.stack(np.meshgrid(*self.wavenumbers, indexing="ij"))

    @cached_property
    def k_odd(self):
        # Nyquist mode zeroed for first derivatives so real fields stay real.
        ks = []
        for kj, nj in zip(self.wavenumbers, self.n):
            kj = kj.copy()
            kj[nj // 2] = 0.0
            ks.append(kj)
        return np.stack(np.meshgrid(*ks, indexing="ij"))

    @cached_property
    def k2(self):
        return np.sum(self.k**2, axis=0)

    def fft(self, f):
        return np.fft.fftn(f, axes=tuple(range(-self.dims, 0)))

    def ifft(self, F):
        return np.fft.ifftn(F, axes=tuple(range(-self.dims, 0)))

    def check(self, f, name="field"):
        """Return ``f`` as an array after checking shape and finiteness."""
        f = np.asarray(f)
        if f.shape != self.shape:
            raise ValueError(f"{name} has shape {f.shape}, grid expects {self.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError(f"{name} has non-finite entries")
        return f

    def to_dict(self):
        return {"n": list(self.n), "L": list(self.L)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["n"]), tuple(d["L"]))


def integrate(grid, f):
    """Rectangle-rule quadrature ``cell * sum(f)`` (spectrally accurate for smooth periodic f)."""
    return grid.cell * np.sum(f)


def _real_if_real(f, out):
    return out.real if np.isrealobj(f) else out


def gradient(grid, f):
    """Spectral gradient; returns an array of shape ``(dims,) + grid.shape``."""
    F = grid.fft(f)
    out = grid.ifft(1j * grid.k_odd * F[None, ...])
    return _real_if_real(f, out)


def laplacian(grid, f):
    F = grid.fft(f)
    return _real_if_real(f, grid.ifft(-grid.k2 * F))


def inner(grid, f, g):
    """L2 pairing ``integral conj(f) g``."""
    return grid.cell * np.vdot(f, g)


def l2_norm(grid, f):
    return float(np.sqrt(integrate(grid, np.abs(f) ** 2)))


def h1_norm(grid, f):
    g = gradient(grid, f)
    return float(np.sqrt(integrate(grid, np.abs(f) ** 2) + integrate(grid, np.sum(np.abs(g) ** 2, axis=0))))


def h1_distance(grid, f, g):
    """``sqrt(||f-g||^2 + ||grad(f-g)||^2)`` with the spectral gradient."""
    return h1_norm(grid, np.asarray(f) - np.asarray(g))


def translate(grid, f, shift):
    """Exact spectral translation ``f(x - shift)`` on the periodic box."""
    shift = np.broadcast_to(np.asarray(shift, dtype=float), (grid.dims,))
    phase = np.exp(-1j * np.tensordot(shift, grid.k_odd, axes=1))
    return _real_if_real(f, grid.ifft(phase * grid.fft(f)))


def _interp_matrix(n, L, xi):
    """Trigonometric interpolation matrix acting on DFT coefficients.

    Points outside ``[-L, L)`` get zero rows: sampled fields are assumed to
    have decayed there.
    """
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=2.0 * L / n)
    arg = np.outer(xi + L, k)
    M = np.exp(1j * arg)
    M[:, n // 2] = np.cos(arg[:, n // 2])
    M[(xi < -L) | (xi >= L), :] = 0.0
    return M / n


def interpolate(grid, f, points):
    """Evaluate the band-limited interpolant of ``f`` on a tensor-product point set.

    Parameters
    ----------
    grid : Grid
        Grid on which ``f`` is sampled.
    f : ndarray
        Samples, shape ``grid.shape``.
    points : sequence of 1-D arrays
        Per-axis evaluation coordinates.

    Returns
    -------
    ndarray of shape ``tuple(len(p) for p in points)``.
    """
    if len(points) != grid.dims:
        raise ValueError("need one coordinate array per grid axis")
    out = np.asarray(f, dtype=complex)
    for ax, (nj, Lj, xi) in enumerate(zip(grid.n, grid.L, points)):
        M = _interp_matrix(nj, Lj, np.asarray(xi, dtype=float))
        F = np.fft.fft(out, axis=ax)
        out = np.moveaxis(np.tensordot(M, F, axes=([1], [ax])), 0, ax)
    return out.real if np.isrealobj(f) else out


def save_snapshot(path, grid, f):
    """Write a field snapshot.

    Layout (little endian): magic ``NSEF1``; uint8 dims; uint8 kind
    (0 real, 1 complex); dims x uint32 point counts; dims x float64
    half-widths; then the values as float64, interleaved (re, im) for
    complex fields, last dimension fastest.
    """
    f = grid.check(f)
    is_complex = np.iscomplexobj(f)
    head = SNAPSHOT_MAGIC + struct.pack("<BB", grid.dims, int(is_complex))
    head += struct.pack(f"<{grid.dims}I", *grid.n)
    head += struct.pack(f"<{grid.dims}d", *grid.L)
    data = np.ascontiguousarray(f, dtype="<c16" if is_complex else "<f8")
    with open(Path(path), "wb") as fh:
        fh.write(head)
        fh.write(data.tobytes(order="C"))


def load_snapshot(path):
    """Read a snapshot written by :func:`save_snapshot`; returns ``(grid, values)``."""
    raw = Path(path).read_bytes()
    if raw[:5] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not an NSEF1 snapshot")
    dims, kind = struct.unpack_from("<BB", raw, 5)
    if not 1 <= dims <= 3 or kind not in (0, 1):
        raise ValueError(f"{path}: corrupt header")
    off = 7
    n = struct.unpack_from(f"<{dims}I", raw, off)
    off += 4 * dims
    L = struct.unpack_from(f"<{dims}d", raw, off)
    off += 8 * dims
    grid = Grid(n, L)
    dtype = "<c16" if kind else "<f8"
    expected = grid.size * np.dtype(dtype).itemsize
    if len(raw) - off != expected:
        raise ValueError(f"{path}: expected {expected} data bytes, found {len(raw) - off}")
    values = np.frombuffer(raw, dtype=dtype, offset=off).reshape(grid.shape).astype(
        complex if kind else float
    )
    return grid, values
