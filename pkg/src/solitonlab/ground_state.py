"""Ground states: minimise J(u) = int |grad u|^2/2 + W(u) on the sphere ||u|| = sigma.

Everything here lives in rescaled units (h = 1). Physical-scale profiles are
obtained with :func:`rescale_to_physical`, which samples ``U(x / h^beta)``.

Sign convention: ``-Lap U + W'(U) = 2 mu U``, so the stationary wave is
``U(x/h^beta) exp(-i mu t / h^(alpha+1))`` and ``mu < 0`` for a bound state.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .field import Grid, gradient, integrate, interpolate, l2_norm, laplacian, load_snapshot, save_snapshot

log = logging.getLogger(__name__)

__all__ = [
    "GroundState",
    "MinimizeError",
    "minimize",
    "energy",
    "lagrange_multiplier",
    "residual",
    "analytic_sech",
    "gaussian_profile",
    "TailReport",
    "tail_check",
    "rescale_to_physical",
    "save_ground_state",
    "load_ground_state",
]


class MinimizeError(RuntimeError):
    """The normalised gradient flow failed (no convergence, collapse, spreading, sign flip)."""


@dataclass(frozen=True)
class GroundState:
    grid: Grid
    profile: np.ndarray
    mu: float
    energy: float
    residual: float
    sigma: float
    iterations: int = 0
    energy_history: tuple = field(default=(), repr=False)


def energy(grid, u, nl):
    """Internal energy J(u) at h = 1."""
    g = gradient(grid, u)
    return float(integrate(grid, 0.5 * np.sum(np.abs(g) ** 2, axis=0) + nl.value(np.abs(u))))


def lagrange_multiplier(grid, U, nl):
    """mu from pairing the Euler-Lagrange equation with U:
    ``2 mu = (int |grad U|^2 + int W'(U) U) / int U^2``.
    """
    U = np.asarray(U, dtype=float)
    mass = float(integrate(grid, U**2))
    if not mass > 0:
        raise ValueError("multiplier undefined for a zero-charge profile")
    g = gradient(grid, U)
    num = integrate(grid, np.sum(g**2, axis=0)) + integrate(grid, nl.prime(np.abs(U)) * np.sign(U) * U)
    return float(num / (2.0 * mass))


def residual(grid, U, mu, nl):
    """``|| -Lap U + W'(U) - 2 mu U ||_L2``."""
    U = np.asarray(U, dtype=float)
    r = -laplacian(grid, U) + nl.prime_over_s(np.abs(U)) * U - 2.0 * mu * U
    return l2_norm(grid, r)


def gaussian_profile(grid, sigma):
    """Centred unit-width Gaussian normalised to sigma (the flow's default start)."""
    u = np.exp(-0.5 * grid.r2)
    return sigma * u / l2_norm(grid, u)


def minimize(nl, grid, sigma, init=None, dtau=0.1, tol=1e-9, tol_r=1e-6, max_iter=50000):
    """Normalised gradient flow for the constrained minimiser.

    Each step solves, diagonally in Fourier space,
    ``(1 + dtau (-Lap)/2) u* = u + dtau (mu_n u - W'(u)/2)``
    with ``mu_n`` the current multiplier, then rescales ``u* -> sigma u*/||u*||``.
    The multiplier term makes exact Euler-Lagrange solutions fixed points of
    the discrete step. ``dtau`` is halved whenever J increases.

    Stops when ``max|u_{n+1} - u_n| / dtau < tol`` and the Euler-Lagrange
    residual is below ``tol_r``.

    Raises
    ------
    MinimizeError
        On non-convergence within ``max_iter``, collapse of ``||u*||``, a
        sign flip of the profile, or a non-negative energy at convergence
        (the spreading regime, no bound state at this charge).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    u = gaussian_profile(grid, sigma) if init is None else np.array(init, dtype=float)
    u = sigma * u / l2_norm(grid, u)
    J = energy(grid, u, nl)
    history = [J]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = lagrange_multiplier(grid, u, nl)
        while True:
            rhs = u + dtau * (mu * u - 0.5 * nl.prime_over_s(np.abs(u)) * u)
            ustar = grid.ifft(grid.fft(rhs) / (1.0 + 0.5 * dtau * grid.k2)).real
            norm = l2_norm(grid, ustar)
            if not norm > 1e-12 * sigma:
                raise MinimizeError(f"collapse: ||u*|| = {norm:.3g} at iteration {it}")
            unew = sigma * ustar / norm
            Jnew = energy(grid, unew, nl)
            if Jnew <= J + 1e-13 * max(1.0, abs(J)) or dtau < 1e-8:
                break
            dtau *= 0.5
            log.debug("energy increased, dtau -> %g", dtau)
        if unew.min() < -1e-8 * unew.max():
            raise MinimizeError(f"profile changed sign at iteration {it}")
        step = float(np.max(np.abs(unew - u))) / dtau
        u, J = unew, Jnew
        history.append(J)
        if step < tol:
            mu = lagrange_multiplier(grid, u, nl)
            if residual(grid, u, mu, nl) < tol_r:
                converged = True
                break
    if not converged:
        raise MinimizeError(f"no convergence in {max_iter} iterations (last step norm {step:.3g})")
    mu = lagrange_multiplier(grid, u, nl)
    res = residual(grid, u, mu, nl)
    if J >= 0:
        raise MinimizeError(f"converged energy J = {J:.4g} >= 0: spreading regime, no focusing bound state")
    log.info("ground state: %d iterations, mu=%.10g, J=%.10g, residual=%.3g", it, mu, J, res)
    return GroundState(grid, u, mu, J, res, float(sigma), it, tuple(history))


def analytic_sech(grid, sigma):
    """1-D cubic oracle (W = -s^4/2): ``U = eta sech(eta x)``, ``eta = sigma^2/2``."""
    if grid.dims != 1:
        raise ValueError("the sech oracle is one-dimensional")
    eta = 0.5 * sigma**2
    U = eta / np.cosh(eta * grid.axes[0])
    return GroundState(grid, U, -0.5 * eta**2, -(eta**3) / 3.0, 0.0, float(sigma))


@dataclass
class TailReport:
    passed: bool
    rate: float
    C: float
    window: tuple
    detail: str = ""


def tail_check(grid, U, min_rate=0.5, floor=1e-13):
    """Exponential tail test on the outer quarter of the box.

    Fits ``log U ~ log C - rate |x|`` along the radial profile for
    ``|x| in [3L/4, L)``. Passes when the fitted rate is at least
    ``min_rate`` and ``C exp(-min_rate |x|)``, anchored at the inner edge of
    the window, bounds U on the whole window. Values below ``floor`` times
    the peak are treated as numerically zero; a tail entirely below the
    floor passes.
    """
    U = np.abs(np.asarray(U, dtype=float))
    r = np.sqrt(grid.r2).ravel()
    vals = U.ravel()
    L = min(grid.L)
    win = (r >= 0.75 * L) & (r < L)
    keep = win & (vals > floor * vals.max())
    window = (0.75 * L, L)
    if keep.sum() < 4:
        return TailReport(True, float("inf"), 0.0, window, "tail below numerical floor")
    slope, logC = np.polyfit(r[keep], np.log(vals[keep]), 1)
    rate = float(-slope)
    r_in = r[keep].min()
    anchor = vals[keep][np.argmin(r[keep])]
    C = float(anchor * np.exp(min_rate * r_in))
    bound_ok = bool(np.all(vals[keep] <= C * np.exp(-min_rate * r[keep]) * 1.01))
    passed = rate >= min_rate and bound_ok
    return TailReport(passed, rate, float(np.exp(logC)), window,
                      f"fitted rate {rate:.4g} (need >= {min_rate}); bound {'holds' if bound_ok else 'violated'}")


def rescale_to_physical(gs, params, grid_phys, center=None):
    """Sample ``U((x - center)/h^beta)`` on the physical grid."""
    center = np.zeros(grid_phys.dims) if center is None else np.broadcast_to(np.asarray(center, float), (grid_phys.dims,))
    hb = params.width()
    pts = [(grid_phys.axes[j] - center[j]) / hb for j in range(grid_phys.dims)]
    return interpolate(gs.grid, gs.profile, pts)


def save_ground_state(path_stem, gs):
    """Write ``<stem>.nsef`` plus a ``<stem>.json`` sidecar."""
    stem = Path(path_stem)
    save_snapshot(stem.with_suffix(".nsef"), gs.grid, gs.profile)
    meta = {"sigma": gs.sigma, "mu": gs.mu, "energy": gs.energy, "residual": gs.residual,
            "iterations": gs.iterations, "grid": gs.grid.to_dict()}
    stem.with_suffix(".json").write_text(json.dumps(meta, indent=2))


def load_ground_state(path_stem):
    stem = Path(path_stem)
    grid, U = load_snapshot(stem.with_suffix(".nsef"))
    meta = json.loads(stem.with_suffix(".json").read_text())
    return GroundState(grid, U, meta["mu"], meta["energy"], meta["residual"], meta["sigma"], meta.get("iterations", 0))
