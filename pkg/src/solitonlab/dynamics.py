"""Time evolution: Strang split-step propagator for the h-scaled NLS and a
velocity-Verlet integrator for the point particle ``qddot = -grad V(q)``.

The field equation is split into the kinetic part ``-(h/2) Lap`` (exact in
Fourier space) and the multiplicative part
``V/h + W'(|psi|)/(2 h^(alpha+1) |psi|)``, which preserves ``|psi|``
pointwise and is therefore integrated exactly as a phase rotation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .observables import barycenter

log = logging.getLogger(__name__)

__all__ = [
    "PropagatorState",
    "PropagationError",
    "BlowUpError",
    "step_strang",
    "evolve",
    "auto_dt",
    "ParticleState",
    "particle_step",
    "particle_trajectory",
]


class PropagationError(RuntimeError):
    """Non-finite field encountered during time stepping."""


class BlowUpError(PropagationError):
    """sup |psi| grew past the surveillance threshold."""


@dataclass
class PropagatorState:
    grid: object
    psi: np.ndarray
    params: object
    pot: object
    nl: object
    dt: float
    t: float = 0.0
    blowup_factor: float = 10.0
    steps: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.psi = np.array(self.grid.check(self.psi, "psi"), dtype=complex)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        self.sup0 = float(np.max(np.abs(self.psi)))

    @property
    def kinetic_phase(self):
        key = ("kin", self.dt)
        if key not in self._cache:
            self._cache[key] = np.exp(-0.5j * self.params.h * self.grid.k2 * self.dt)
        return self._cache[key]

    @property
    def potential_term(self):
        if "V" not in self._cache:
            self._cache["V"] = self.pot.value(self.grid.x) / self.params.h
        return self._cache["V"]

    def rate(self, psi):
        """Pointwise phase rate of the multiplicative substep."""
        h, a = self.params.h, self.params.alpha
        return self.potential_term + self.nl.prime_over_s(np.abs(psi)) / (2.0 * h ** (a + 1.0))

    def copy(self, dt=None):
        return PropagatorState(self.grid, self.psi.copy(), self.params, self.pot, self.nl,
                               self.dt if dt is None else dt, self.t, self.blowup_factor)


def step_strang(state):
    """Advance ``state`` in place by one Strang step and return it."""
    psi = state.psi
    half = 0.5 * state.dt
    psi = psi * np.exp(-1j * half * state.rate(psi))
    psi = state.grid.ifft(state.kinetic_phase * state.grid.fft(psi))
    psi = psi * np.exp(-1j * half * state.rate(psi))
    state.steps += 1
    state.t = state.t + state.dt
    sup = np.max(np.abs(psi))
    if not np.isfinite(sup):
        raise PropagationError(f"non-finite field at t = {state.t:.6g}")
    if sup > state.blowup_factor * state.sup0:
        raise BlowUpError(f"sup|psi| = {sup:.4g} exceeds {state.blowup_factor:g} x initial at t = {state.t:.6g}")
    state.psi = psi
    return state


def evolve(state, T, cadence=1, observer=None):
    """Step to time ``T`` (from the current time), calling ``observer(state)``
    at the start and every ``cadence`` steps; the final state is always observed.

    Returns the list of observer results.
    """
    nsteps = int(round((T - state.t) / state.dt))
    out = []
    if observer is not None:
        out.append(observer(state))
    for i in range(1, nsteps + 1):
        step_strang(state)
        if observer is not None and (i % cadence == 0 or i == nsteps):
            out.append(observer(state))
    return out


def _initial_dt(state):
    h, a = state.params.h, state.params.alpha
    x = state.grid.x
    rate = np.abs(0.5 * state.nl.prime_over_s(np.abs(state.psi)) + state.pot.value(x) * h**a)
    peak = float(np.max(rate[np.abs(state.psi) > 1e-8 * np.max(np.abs(state.psi))]))
    if peak <= 0:
        return 0.01
    return min(0.1 * h ** (a + 1.0) / peak, 0.01)


def _barycenter(state):
    return barycenter(state.grid, state.psi)


def _trajectory(state, T, dt, every, monitors):
    s = state.copy(dt=dt)
    rows = evolve(s, state.t + T, every, lambda st: [np.asarray(fn(st), dtype=float) for fn, _ in monitors])
    return [np.array([r[i] for r in rows]) for i in range(len(monitors))]


def auto_dt(state, T_probe, tol, dt0=None, max_halvings=12, quantity=None, monitors=()):
    """Halve dt until the barycenter path over ``T_probe`` moves by less than
    ``tol`` (max abs difference) between successive halvings; returns the
    coarser dt of the last pair.

    ``quantity(state)`` replaces the barycenter as the monitored output, e.g.
    ``|psi|`` for runs whose barycenter does not move. ``monitors`` adds
    further ``(quantity, tol)`` pairs that must converge as well.

    Paths are compared at the sample times of the first run. The default
    start is ``min(0.1 h^(alpha+1) / max|W'(|psi|)/(2|psi|) + V h^alpha|, 0.01)``,
    the maximum taken where ``|psi|`` exceeds 1e-8 of its peak.
    """
    monitors = [(_barycenter if quantity is None else quantity, tol)] + list(monitors)
    if not all(t > 0 for _, t in monitors):
        raise ValueError("unreachable tolerance: tol must be positive")
    dt = _initial_dt(state) if dt0 is None else float(dt0)
    dt = T_probe / max(1, int(np.ceil(T_probe / dt - 1e-9)))
    every = 1
    coarse = _trajectory(state, T_probe, dt, every, monitors)
    for _ in range(max_halvings):
        fine = _trajectory(state, T_probe, dt / 2, 2 * every, monitors)
        diffs = [float(np.max(np.abs(f - c))) for f, c in zip(fine, coarse)]
        log.debug("auto_dt: dt=%g, changes %s", dt, ", ".join(f"{d:.3g}" for d in diffs))
        if all(d < t for d, (_, t) in zip(diffs, monitors)):
            return dt
        dt, every, coarse = dt / 2, 2 * every, fine
    raise ValueError(f"auto_dt: tolerance {tol:g} not reached after {max_halvings} halvings")


@dataclass
class ParticleState:
    q: np.ndarray
    v: np.ndarray
    t: float = 0.0


def particle_step(p, pot, dt):
    """One velocity-Verlet step for ``qddot = -grad V(q)`` (unit mass)."""
    q = np.asarray(p.q, dtype=float)
    v = np.asarray(p.v, dtype=float)
    a = -pot.grad(q)
    vh = v + 0.5 * dt * a
    q1 = q + dt * vh
    v1 = vh - 0.5 * dt * pot.grad(q1)
    return ParticleState(q1, v1, p.t + dt)


def particle_trajectory(q0, v, pot, T, dt, cadence=1):
    """Integrate from ``(q0, v)`` to T; returns ``(t, q, v)`` sampled every ``cadence`` steps."""
    p = ParticleState(np.atleast_1d(np.asarray(q0, dtype=float)), np.atleast_1d(np.asarray(v, dtype=float)))
    nsteps = int(round(T / dt))
    ts, qs, vs = [p.t], [p.q], [p.v]
    for i in range(1, nsteps + 1):
        p = particle_step(p, pot, dt)
        if i % cadence == 0 or i == nsteps:
            ts.append(p.t)
            qs.append(p.q)
            vs.append(p.v)
    return np.array(ts), np.array(qs), np.array(vs)
