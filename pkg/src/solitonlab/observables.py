"""Functionals of the wave field: conserved quantities, barycenter dynamics,
concentration, orbital distance and hydrodynamic diagnostics.

All functions take the field ``psi`` as an array on ``grid``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .field import gradient, h1_distance, h1_norm, integrate, laplacian, translate

__all__ = [
    "EPS_MASK",
    "charge",
    "internal_energy",
    "energy_split",
    "momentum",
    "barycenter",
    "boundary_fraction",
    "barycenter_velocity",
    "barycenter_accel",
    "barycenter_accel_by_parts",
    "hh_residual",
    "concentration",
    "orbit_distance",
    "hydro",
    "ObservableRecord",
    "TimeSeries",
    "observe",
]

EPS_MASK = 1e-12


def charge(grid, psi):
    """Hylenic charge ``int |psi|^2``."""
    return float(integrate(grid, np.abs(psi) ** 2))


def internal_energy(grid, u, params, nl):
    """``J_h(u) = int h^2/2 |grad u|^2 + h^-alpha W(u)`` for a real amplitude u."""
    h = params.h
    g = gradient(grid, np.asarray(u, dtype=float))
    return float(integrate(grid, 0.5 * h**2 * np.sum(g**2, axis=0) + h ** (-params.alpha) * nl.value(np.abs(u))))


def _mask(u2):
    return u2 >= EPS_MASK * u2.max()


def _current(grid, psi, h):
    """Probability current ``h Im(conj(psi) grad psi)``."""
    return h * np.imag(np.conj(psi)[None, ...] * gradient(grid, psi))


def energy_split(grid, psi, params, nl, pot):
    """Energy ``E`` and its split into internal ``J`` and dynamical ``G = G_kin + G_pot``.

    ``G_kin = 1/2 int |p|^2/u^2`` with the current ``p = h Im(conj(psi) grad psi)``,
    restricted to ``u^2 >= EPS_MASK max u^2``; ``J`` is recovered as ``E - G``.
    ``masked_fraction`` is the share of the charge outside that mask.
    """
    psi = np.asarray(psi)
    h = params.h
    u2 = np.abs(psi) ** 2
    g = gradient(grid, psi)
    Vx = pot.value(grid.x)
    E = integrate(grid, 0.5 * h**2 * np.sum(np.abs(g) ** 2, axis=0) + h ** (-params.alpha) * nl.value(np.sqrt(u2)) + Vx * u2)
    G_pot = integrate(grid, Vx * u2)
    m = _mask(u2)
    p = h * np.imag(np.conj(psi)[None, ...] * g)
    dens = np.zeros_like(u2)
    dens[m] = np.sum(p[:, m] ** 2, axis=0) / u2[m]
    G_kin = 0.5 * integrate(grid, dens)
    G = G_kin + G_pot
    total = integrate(grid, u2)
    return {
        "E": float(E),
        "J": float(E - G),
        "G": float(G),
        "G_kin": float(G_kin),
        "G_pot": float(G_pot),
        "masked_fraction": float(integrate(grid, np.where(m, 0.0, u2)) / total),
    }


def momentum(grid, psi, h):
    """``P_j = h Im int d_j psi conj(psi)``."""
    g = gradient(grid, psi)
    return h * np.imag(grid.cell * np.sum(g * np.conj(psi)[None, ...], axis=tuple(range(1, grid.dims + 1))))


def boundary_fraction(grid, psi, layer=1 / 32):
    """Share of the charge within ``layer * 2L_j`` of any box face."""
    u2 = np.abs(psi) ** 2
    near = np.zeros(grid.shape, dtype=bool)
    for j in range(grid.dims):
        xj = grid.x[j]
        near |= np.abs(xj) >= grid.L[j] * (1.0 - 2.0 * layer)
    return float(np.sum(u2[near]) / np.sum(u2))


def barycenter(grid, psi, boundary_tol=1e-10):
    """``q = int x |psi|^2 / int |psi|^2``.

    Raises ValueError when more than ``boundary_tol`` of the charge sits at
    the box faces: the periodic box then no longer stands in for R^N.
    """
    u2 = np.abs(psi) ** 2
    if boundary_tol is not None:
        bf = boundary_fraction(grid, psi)
        if bf > boundary_tol:
            raise ValueError(f"boundary charge fraction {bf:.3g} exceeds {boundary_tol:g}; enlarge the box")
    total = np.sum(u2)
    return np.array([np.sum(grid.x[j] * u2) / total for j in range(grid.dims)])


def barycenter_velocity(grid, psi, h):
    """``qdot = Im(h int conj(psi) grad psi) / ||psi||^2``."""
    return momentum(grid, psi, h) / charge(grid, psi)


def barycenter_accel(grid, psi, pot):
    """``qddot = -int grad V |psi|^2 / ||psi||^2``."""
    u2 = np.abs(psi) ** 2
    gV = pot.grad(grid.x)
    return -np.array([np.sum(gV[j] * u2) for j in range(grid.dims)]) / np.sum(u2)


def barycenter_accel_by_parts(grid, psi, pot):
    """Integrated-by-parts form ``int V grad(|psi|^2) / ||psi||^2``."""
    u2 = np.abs(psi) ** 2
    gu2 = gradient(grid, u2)
    Vx = pot.value(grid.x)
    return np.array([np.sum(Vx * gu2[j]) for j in range(grid.dims)]) / np.sum(u2)


def hh_residual(grid, psi, pot, q=None):
    """Defect ``qddot + grad V(q)`` of Newton's law for the barycenter."""
    q = barycenter(grid, psi) if q is None else q
    return pot.grad(np.asarray(q, dtype=float)) + barycenter_accel(grid, psi, pot)


def _ball_indicator(grid, radius):
    # ball of the given radius centred on the origin, wrapped periodically
    d2 = np.zeros(grid.shape)
    for j in range(grid.dims):
        xj = grid.x[j] + grid.L[j]  # distance from the first grid point
        per = 2.0 * grid.L[j]
        dj = np.minimum(xj, per - xj)
        d2 = d2 + dj**2
    return (d2 <= radius**2).astype(float)


def concentration(grid, psi, params, Rhat=10.0):
    """Concentration point and the charge share outside its ball.

    ``qhat`` is the grid point maximising the charge inside
    ``B(qhat, Rhat h^beta)``; window sums come from a periodic FFT
    convolution with the ball indicator.
    """
    u2 = np.abs(psi) ** 2
    radius = Rhat * params.width()
    ball = _ball_indicator(grid, radius)
    inside = np.real(grid.ifft(grid.fft(u2) * np.conj(grid.fft(ball))))
    idx = np.unravel_index(np.argmax(inside), grid.shape)
    qhat = np.array([grid.axes[j][idx[j]] for j in range(grid.dims)])
    total = np.sum(u2)
    # recompute the best window exactly to keep roundoff out of small fractions
    d2 = np.zeros(grid.shape)
    for j in range(grid.dims):
        per = 2.0 * grid.L[j]
        dj = np.abs(grid.x[j] - qhat[j])
        dj = np.minimum(dj, per - dj)
        d2 = d2 + dj**2
    outside = float(np.sum(u2[d2 > radius**2]) / total)
    return {"qhat": qhat, "fraction_outside": outside}


def orbit_distance(grid, psi, profile, params, coarse=None):
    """``inf_y || |psi| - U_h(. - y) ||_H1`` over translations y.

    ``profile`` is the physically rescaled ground state sampled on ``grid``
    and centred at the origin. The search starts on a coarse lattice of
    shifts around the concentration point (window radius h^beta) and is refined per axis by
    golden-section search.
    """
    a = np.abs(psi)
    width = params.width()
    # a tight window keeps far-field radiation from pulling the seed off the peak
    qhat = concentration(grid, psi, params, Rhat=1.0)["qhat"]
    if coarse is None:
        coarse = np.linspace(-2.0, 2.0, 17) * width

    def dist(y):
        return h1_distance(grid, a, translate(grid, profile, y))

    y = qhat.astype(float).copy()
    best = dist(y)
    for j in range(grid.dims):
        vals = []
        for s in coarse:
            yy = y.copy()
            yy[j] = qhat[j] + s
            vals.append(dist(yy))
        i = int(np.argmin(vals))
        i = min(max(i, 1), len(coarse) - 2)
        y[j] = qhat[j] + coarse[i]
        lo, mid, hi = qhat[j] + coarse[i - 1], y[j], qhat[j] + coarse[i + 1]

        def along(t, j=j):
            yy = y.copy()
            yy[j] = t
            return dist(yy)

        if along(mid) <= min(along(lo), along(hi)):
            res = minimize_scalar(along, bracket=(lo, mid, hi), method="golden", tol=1e-10)
            y[j] = res.x
        best = dist(y)
    return float(best)


def hydro(grid, psi, params, nl):
    """Madelung variables: amplitude, velocity field and quantum potential.

    ``vel = h Im(conj(psi) grad psi)/u^2`` and
    ``Q = (-h^2 Lap u + h^-alpha W'(u)) / (2u)`` on ``u^2 >= EPS_MASK max u^2``,
    zero elsewhere.
    """
    h = params.h
    u = np.abs(psi)
    u2 = u**2
    m = _mask(u2)
    p = _current(grid, psi, h)
    vel = np.zeros_like(p)
    vel[:, m] = p[:, m] / u2[m]
    lap = laplacian(grid, u)
    Q = np.zeros_like(u)
    Q[m] = (-(h**2) * lap[m] + h ** (-params.alpha) * nl.prime(u[m])) / (2.0 * u[m])
    return {"u": u, "vel": vel, "Q": Q, "mask": m}


@dataclass
class ObservableRecord:
    t: float
    charge: float
    energy: float
    internal: float
    dynamical: float
    dyn_kin: float
    dyn_pot: float
    momentum: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    qddot: np.ndarray
    qddot_by_parts: np.ndarray
    hh: np.ndarray
    qhat: np.ndarray
    fraction_outside: float
    orbit_distance: float = float("nan")
    extra: dict = field(default_factory=dict)

    _scalars = ("charge", "energy", "internal", "dynamical", "dyn_kin", "dyn_pot")
    _vectors = ("momentum", "q", "qdot", "qddot", "qddot_by_parts", "hh", "qhat")

    def row(self):
        out = {"t": self.t}
        for k in self._scalars:
            out[k] = getattr(self, k)
        for k in self._vectors:
            for j, v in enumerate(np.atleast_1d(getattr(self, k))):
                out[f"{k}_{j + 1}"] = float(v)
        out["fraction_outside"] = self.fraction_outside
        out["orbit_distance"] = self.orbit_distance
        out.update(self.extra)
        return out


def observe(grid, psi, t, params, nl, pot, Rhat=10.0, profile=None, boundary_tol=1e-10):
    """Evaluate every observable at one instant; ``profile`` enables the orbital distance."""
    parts = energy_split(grid, psi, params, nl, pot)
    q = barycenter(grid, psi, boundary_tol)
    conc = concentration(grid, psi, params, Rhat)
    od = orbit_distance(grid, psi, profile, params) if profile is not None else float("nan")
    return ObservableRecord(
        t=float(t),
        charge=charge(grid, psi),
        energy=parts["E"],
        internal=parts["J"],
        dynamical=parts["G"],
        dyn_kin=parts["G_kin"],
        dyn_pot=parts["G_pot"],
        momentum=momentum(grid, psi, params.h),
        q=q,
        qdot=barycenter_velocity(grid, psi, params.h),
        qddot=barycenter_accel(grid, psi, pot),
        qddot_by_parts=barycenter_accel_by_parts(grid, psi, pot),
        hh=hh_residual(grid, psi, pot, q),
        qhat=conc["qhat"],
        fraction_outside=conc["fraction_outside"],
        orbit_distance=od,
    )


class TimeSeries:
    """Ordered observable records at a uniform cadence."""

    def __init__(self, records=None, meta=None):
        self.records = []
        self.meta = dict(meta or {})
        for r in records or []:
            self.append(r)

    def append(self, rec):
        if self.records and not rec.t > self.records[-1].t:
            raise ValueError("time series must be strictly increasing in t")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def t(self):
        return np.array([r.t for r in self.records])

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def columns(self):
        return list(self.records[0].row().keys()) if self.records else []

    def drift(self, name):
        """``max_t |x(t) - x(0)| / |x(0)|`` for a scalar column (vector norms for vectors)."""
        x = self.column(name)
        if x.ndim == 1:
            return float(np.max(np.abs(x - x[0])) / abs(x[0]))
        return float(np.max(np.linalg.norm(x - x[0], axis=1)) / np.linalg.norm(x[0]))

    def to_csv(self, path):
        cols = self.columns()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.records:
                row = r.row()
                w.writerow([repr(float(row[c])) for c in cols])
        return cols
