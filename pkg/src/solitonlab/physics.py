"""Model definition: nonlinearity W, potential V, scaling parameters, initial data.

Hypothesis validators work by sampling and are falsifiers only: a PASS
means no counterexample was found on the stated sample ranges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linprog

from .field import Grid, integrate, interpolate

__all__ = [
    "Nonlinearity",
    "Potential",
    "ModelParams",
    "Check",
    "ValidationReport",
    "validate_nonlinearity",
    "validate_potential",
    "InitialData",
    "make_initial_data",
    "check_admissible",
    "ResolutionError",
]


class ResolutionError(ValueError):
    """Grid too coarse, or the soliton too close to the box edge."""


def _nonneg(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("W is defined on s >= 0 only")
    return s


@dataclass(frozen=True)
class Nonlinearity:
    """Nonlinear potential W on the half line.

    Use :meth:`focusing_power` for ``W(s) = -(c/p) s**p``,
    :meth:`defocusing_power` for the opposite sign, or :meth:`custom` with
    callables. ``q``, ``p`` are the declared growth exponents for the
    bound on W'' and ``nu`` the exponent of the lower bound on W.
    """

    kind: str
    c: float = 0.0
    p: float = 4.0
    q: float = 4.0
    nu: float = 4.0
    fns: Optional[tuple] = field(default=None, repr=False, compare=False)

    @classmethod
    def focusing_power(cls, c=2.0, p=4.0):
        if c <= 0 or p <= 2:
            raise ValueError("focusing power needs c > 0 and p > 2")
        return cls("focusing_power", c=float(c), p=float(p), q=float(p), nu=float(p))

    @classmethod
    def defocusing_power(cls, c=2.0, p=4.0):
        """``W(s) = +(c/p) s**p``: no negative values, so (W1) fails and there is no ground state."""
        if c <= 0 or p <= 2:
            raise ValueError("defocusing power needs c > 0 and p > 2")
        return cls("defocusing_power", c=float(c), p=float(p), q=float(p), nu=float(p))

    @classmethod
    def zero(cls):
        return cls("zero")

    @property
    def _power(self):
        return self.kind in ("focusing_power", "defocusing_power")

    @property
    def _sign(self):
        return -1.0 if self.kind == "focusing_power" else 1.0

    @classmethod
    def custom(cls, W, dW, d2W, q, p, nu, dW_over_s=None):
        """W, W', W'' as vectorised callables; ``dW_over_s`` optional (else W'(s)/s with 0 at s=0)."""
        return cls("custom", q=float(q), p=float(p), nu=float(nu), fns=(W, dW, d2W, dW_over_s))

    def value(self, s):
        s = _nonneg(s)
        if self._power:
            return self._sign * (self.c / self.p) * s**self.p
        if self.kind == "zero":
            return np.zeros_like(s)
        return np.asarray(self.fns[0](s), dtype=float)

    def prime(self, s):
        s = _nonneg(s)
        if self._power:
            return self._sign * self.c * s ** (self.p - 1)
        if self.kind == "zero":
            return np.zeros_like(s)
        return np.asarray(self.fns[1](s), dtype=float)

    def second(self, s):
        s = _nonneg(s)
        if self._power:
            return self._sign * self.c * (self.p - 1) * s ** (self.p - 2)
        if self.kind == "zero":
            return np.zeros_like(s)
        return np.asarray(self.fns[2](s), dtype=float)

    def prime_over_s(self, s):
        """W'(s)/s, extended by 0 at s = 0 (W''(0) = 0 makes the singularity removable)."""
        s = _nonneg(s)
        if self._power:
            return self._sign * self.c * s ** (self.p - 2)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.fns[3] is not None:
            return np.asarray(self.fns[3](s), dtype=float)
        out = np.zeros_like(s)
        nz = s > 0
        out[nz] = np.asarray(self.fns[1](s[nz]), dtype=float) / s[nz]
        return out

    def to_dict(self):
        if self.kind == "custom":
            raise ValueError("custom nonlinearities are not serialisable")
        if self.kind == "zero":
            return {"kind": "zero"}
        return {"kind": self.kind, "c": self.c, "p": self.p}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind", "focusing_power")
        if kind == "focusing_power":
            return cls.focusing_power(d.get("c", 2.0), d.get("p", 4.0))
        if kind == "defocusing_power":
            return cls.defocusing_power(d.get("c", 2.0), d.get("p", 4.0))
        if kind == "zero":
            return cls.zero()
        raise ValueError(f"unknown nonlinearity kind {kind!r}")


def _harmonic_radius(kappa, a, b):
    # smallest R with V >= |x|^a and |grad V| <= V^b for |x| > R, V = kappa/2 |x|^2
    r_a = (2.0 / kappa) ** (1.0 / (2.0 - a))
    r_b = (kappa ** (1.0 - b) * 2.0**b) ** (1.0 / (2.0 * b - 1.0))
    return max(r_a, r_b, 1.0) * (1.0 + 1e-9)


def _quartic_radius(lam, a, b):
    # V = lam/4 |x|^4, |grad V| = lam |x|^3
    r_a = (4.0 / lam) ** (1.0 / (4.0 - a))
    r_b = (lam ** (1.0 - b) * 4.0**b) ** (1.0 / (4.0 * b - 3.0))
    return max(r_a, r_b, 1.0) * (1.0 + 1e-9)


@dataclass(frozen=True)
class Potential:
    """External potential V(x) >= 0.

    Points are arrays with the coordinate index first, shape ``(N, ...)``;
    ``value`` returns shape ``(...)`` and ``grad`` shape ``(N, ...)``.
    ``a``, ``b``, ``R1`` are the declared witnesses of the confinement bounds.
    """

    kind: str
    strength: float = 0.0
    a: float = float("nan")
    b: float = float("nan")
    R1: float = float("nan")
    fns: Optional[tuple] = field(default=None, repr=False, compare=False)

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def harmonic(cls, kappa=1.0):
        if kappa <= 0:
            raise ValueError("harmonic stiffness must be positive")
        a, b = 1.5, 0.75
        return cls("harmonic", float(kappa), a, b, _harmonic_radius(kappa, a, b))

    @classmethod
    def quartic(cls, lam=0.1):
        if lam <= 0:
            raise ValueError("quartic strength must be positive")
        a, b = 2.0, 0.8
        return cls("quartic", float(lam), a, b, _quartic_radius(lam, a, b))

    @classmethod
    def custom(cls, V, gradV, a, b, R1):
        return cls("custom", 0.0, float(a), float(b), float(R1), fns=(V, gradV))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x**2, axis=0)
        if self.kind == "zero":
            return np.zeros_like(r2)
        if self.kind == "harmonic":
            return 0.5 * self.strength * r2
        if self.kind == "quartic":
            return 0.25 * self.strength * r2**2
        return np.asarray(self.fns[0](x), dtype=float)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "harmonic":
            return self.strength * x
        if self.kind == "quartic":
            return self.strength * np.sum(x**2, axis=0) * x
        return np.asarray(self.fns[1](x), dtype=float)

    def to_dict(self):
        if self.kind == "custom":
            raise ValueError("custom potentials are not serialisable")
        d = {"kind": self.kind}
        if self.kind == "harmonic":
            d["kappa"] = self.strength
        elif self.kind == "quartic":
            d["lambda"] = self.strength
        return d

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind", "zero")
        if kind == "zero":
            return cls.zero()
        if kind == "harmonic":
            return cls.harmonic(d.get("kappa", 1.0))
        if kind == "quartic":
            return cls.quartic(d.get("lambda", 0.1))
        raise ValueError(f"unknown potential kind {kind!r}")


@dataclass(frozen=True)
class ModelParams:
    """Scale parameter h, exponent alpha > 0 and charge level sigma (rescaled units)."""

    h: float
    alpha: float
    sigma: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def beta(self):
        return 1.0 + self.alpha / 2.0

    def width(self):
        """Length scale h**beta of the rescaled soliton."""
        return self.h**self.beta

    def charge(self, dims):
        """Physical charge ``h**(N beta) sigma**2`` of rescaled data."""
        return self.h ** (dims * self.beta) * self.sigma**2

    def energy_scale(self, dims):
        """Factor ``h**(N beta - alpha)`` relating J_h to J_1."""
        return self.h ** (dims * self.beta - self.alpha)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    values: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    subject: str
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self):
        return [f"{self.subject} {c.name}: {'PASS' if c.passed else 'FAIL'} {c.detail}".rstrip() for c in self.checks]

    def to_dict(self):
        return {
            "subject": self.subject,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail, **c.values} for c in self.checks],
        }


def validate_nonlinearity(nl, dims=1):
    """Sample the hypotheses (W), (Wp), (W0), (W1) on W.

    (W)  W, W', W'' vanish at 0 and W'' = O(s) on (0, 1e-3].
    (Wp) smallest c1, c2 >= 0 with |W''| <= c1 s^(q-2) + c2 s^(p-2) on [1e-6, 1e3],
         with 2 < q <= p < 2N/(N-2).
    (W0) W >= -c s^nu for large s with 2 < nu < 2 + 4/N.
    (W1) some s in (0, 100] with W(s) < 0.
    """
    checks = []

    zero = np.array([0.0])
    at0 = [float(abs(nl.value(zero)[0])), float(abs(nl.prime(zero)[0])), float(abs(nl.second(zero)[0]))]
    s_small = np.geomspace(1e-9, 1e-3, 200)
    ratio = np.abs(nl.second(s_small)) / s_small
    ok = max(at0) <= 1e-12 and np.all(np.isfinite(ratio)) and ratio[0] <= 10.0 * max(ratio[-1], 1e-300) + 1e-12
    checks.append(Check("W", bool(ok), f"|W(0)|,|W'(0)|,|W''(0)| = {at0}; W''(s)/s on [1e-9, 1e-3]",
                        {"at_zero": at0, "ratio_small": float(ratio[0]), "ratio_1e-3": float(ratio[-1])}))

    crit = np.inf if dims <= 2 else 2.0 * dims / (dims - 2.0)
    s = np.geomspace(1e-6, 1e3, 400)
    d2 = np.abs(nl.second(s))
    exps_ok = 2.0 < nl.q <= nl.p < crit
    if nl.kind == "zero":
        c1 = c2 = 0.0
        feasible = True
    else:
        A = -np.column_stack([s ** (nl.q - 2.0), s ** (nl.p - 2.0)])
        res = linprog([1.0, 1.0], A_ub=A, b_ub=-d2, bounds=[(0, None), (0, None)], method="highs")
        feasible = bool(res.success)
        c1, c2 = (float(v) for v in res.x) if feasible else (np.inf, np.inf)
    checks.append(Check("Wp", bool(exps_ok and feasible),
                        f"q={nl.q}, p={nl.p}, 2*={crit}; fitted c1={c1:.4g}, c2={c2:.4g} on [1e-6, 1e3]",
                        {"c1": c1, "c2": c2}))

    nu_ok = 2.0 < nl.nu < 2.0 + 4.0 / dims
    s_big = np.geomspace(1.0, 1e3, 200)
    r = np.maximum(0.0, -nl.value(s_big)) / s_big**nl.nu
    c = float(np.max(r))
    # ratio still increasing over the last decade means W falls faster than -s^nu
    bounded = bool(r[-1] <= r[len(r) * 2 // 3] * (1.0 + 1e-8) + 1e-300)
    checks.append(Check("W0", bool(nu_ok and bounded),
                        f"nu={nl.nu} (need 2 < nu < {2 + 4 / dims:g}); fitted c={c:.4g} on [1, 1e3]",
                        {"c": c}))

    s_scan = np.linspace(0.0, 100.0, 100001)[1:]
    w = nl.value(s_scan)
    neg = np.nonzero(w < 0)[0]
    if neg.size:
        s0 = float(s_scan[neg[0]])
        checks.append(Check("W1", True, f"W({s0:g}) = {w[neg[0]]:.4g} < 0", {"s0": s0}))
    else:
        checks.append(Check("W1", False, "no s in (0, 100] with W(s) < 0: not focusing", {}))
    return ValidationReport("nonlinearity", checks)


def _sample_points(pot, grid):
    pts = [grid.x.reshape(grid.dims, -1)]
    if np.isfinite(pot.R1):
        rmax = 1e3 * max(pot.R1, max(grid.L))
        r = np.geomspace(max(pot.R1, 1e-3), rmax, 400)
        dirs = [np.eye(grid.dims)[j] * sgn for j in range(grid.dims) for sgn in (1, -1)]
        if grid.dims > 1:
            dirs.append(np.ones(grid.dims) / np.sqrt(grid.dims))
        for d in dirs:
            pts.append(np.outer(d, r))
    return np.concatenate(pts, axis=1)


def validate_potential(pot, grid):
    """Sample (V0) V >= 0, (Vinf) |grad V| <= V^b and (Vinf1) V >= |x|^a for |x| > R1.

    Samples are the grid points plus rays from R1 out to 1e3 times the box.
    """
    checks = []
    x = _sample_points(pot, grid)
    V = pot.value(x)
    vmin = float(np.min(V))
    checks.append(Check("V0", vmin >= 0.0, f"min V = {vmin:.4g}", {"min_V": vmin}))

    if pot.kind == "zero":
        msg = "V=0 runs valid only for V-free experiments"
        checks.append(Check("Vinf", False, msg))
        checks.append(Check("Vinf1", False, msg))
        return ValidationReport("potential", checks)

    a, b, R1 = pot.a, pot.b, pot.R1
    r = np.sqrt(np.sum(x**2, axis=0))
    far = r > R1
    g = np.sqrt(np.sum(pot.grad(x) ** 2, axis=0))
    decl_b = 0.0 < b < 1.0 and R1 > 1.0
    grad_ok = bool(np.all(g[far] <= np.clip(V[far], 0.0, None) ** b * (1.0 + 1e-12)))
    checks.append(Check("Vinf", bool(decl_b and grad_ok),
                        f"b={b}, R1={R1:.4g}; {int(far.sum())} samples beyond R1",
                        {"b": b, "R1": R1}))
    decl_a = a > 1.0 and R1 > 1.0
    grow_ok = bool(np.all(V[far] >= r[far] ** a * (1.0 - 1e-12)))
    detail = f"a={a}, R1={R1:.4g}"
    if not decl_a:
        detail += "; need a > 1 and R1 > 1"
    checks.append(Check("Vinf1", bool(decl_a and grow_ok), detail, {"a": a}))
    return ValidationReport("potential", checks)


@dataclass(frozen=True)
class InitialData:
    q0: tuple
    v: tuple
    ground: object
    K: float


def _half_width(gs):
    """Half-width of the ground state at 1/e of its peak (smallest over axes)."""
    U = gs.profile
    peak = np.unravel_index(np.argmax(U), U.shape)
    widths = []
    for ax in range(gs.grid.dims):
        idx = list(peak)
        idx[ax] = slice(None)
        line = U[tuple(idx)]
        xs = gs.grid.axes[ax]
        above = xs[line >= line.max() / np.e]
        widths.append(0.5 * (above.max() - above.min()) + 0.5 * gs.grid.dx[ax])
    return float(min(widths))


def make_initial_data(params, ground, q0, v, grid):
    """Build psi0(x) = U((x - q0)/h^beta) exp(i v.x / h) on the physical grid.

    Raises
    ------
    ResolutionError
        If ``max dx > h^beta w_U / 8`` (w_U the half-width at 1/e of the peak),
        or q0 sits within four soliton widths of the box boundary.
    """
    q0 = np.broadcast_to(np.asarray(q0, dtype=float), (grid.dims,))
    v = np.broadcast_to(np.asarray(v, dtype=float), (grid.dims,))
    if ground.grid.dims != grid.dims:
        raise ValueError("ground state and physical grid differ in dimension")
    width = params.width() * _half_width(ground)
    if max(grid.dx) > width / 8.0:
        raise ResolutionError(f"dx = {max(grid.dx):.3g} does not resolve soliton half-width {width:.3g} (need dx <= width/8)")
    for j in range(grid.dims):
        if grid.L[j] - abs(q0[j]) < 4.0 * width:
            raise ResolutionError(f"q0[{j}] = {q0[j]} is within 4 soliton widths of the box edge")
    hb = params.width()
    pts = [(grid.axes[j] - q0[j]) / hb for j in range(grid.dims)]
    u = interpolate(ground.grid, ground.profile, pts)
    phase = np.exp(1j * np.tensordot(v, grid.x, axes=1) / params.h)
    return u * phase


@dataclass
class AdmissibilityReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failing(self):
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"passed": self.passed,
                "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail, **c.values} for c in self.checks]}


def check_admissible(psi0, grid, params, nl, pot, K, m, v):
    """Check the four clauses of the admissible data class B_h^K.

    ``m`` is the constrained minimum J(U) in rescaled units and ``v`` the
    phase gradient of ``S = v.x``.
    """
    from .observables import internal_energy

    N = grid.dims
    h, alpha, beta = params.h, params.alpha, params.beta
    u = np.abs(psi0)
    charge = float(integrate(grid, u**2))
    target = params.charge(N)
    rel = abs(charge - target) / target
    checks = [Check("charge", rel <= 1e-8, f"||psi0||^2 = {charge:.10g}, h^(N beta) sigma^2 = {target:.10g}",
                    {"value": charge, "target": target})]

    J_resc = float(internal_energy(grid, u, params, nl)) / params.energy_scale(N)
    bound = m + K * h**alpha
    checks.append(Check("internal_energy", J_resc <= bound, f"J(U+w) = {J_resc:.6g} <= m + K h^alpha = {bound:.6g}",
                        {"value": J_resc, "bound": bound}))

    speed = float(np.linalg.norm(np.asarray(v, dtype=float)))
    checks.append(Check("phase_gradient", speed <= K, f"|grad S| = |v| = {speed:.6g} <= K = {K}",
                        {"value": speed, "bound": float(K)}))

    moment = float(integrate(grid, pot.value(grid.x) * u**2))
    mbound = K * h ** (N * beta - 2.0 * alpha)
    checks.append(Check("potential_moment", moment <= mbound,
                        f"int V u^2 = {moment:.6g} <= K h^(N beta - 2 alpha) = {mbound:.6g}",
                        {"value": moment, "bound": mbound}))
    return AdmissibilityReport(checks)
