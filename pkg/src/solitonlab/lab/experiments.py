"""Experiment harness: stationary rotation, transport, h-sweep, orbital
stability and concentration runs.

Every run returns a manifest dict and, when given an output directory,
writes ``manifest.json``, ``series.csv`` and initial/final NSEF1 snapshots
there. The manifest is written even when a run aborts.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .. import __version__
from ..dynamics import PropagationError, PropagatorState, auto_dt, evolve, particle_trajectory
from ..field import interpolate, l2_norm, save_snapshot
from ..ground_state import GroundState, MinimizeError, gaussian_profile, minimize, rescale_to_physical, save_ground_state
from ..observables import TimeSeries, charge, energy_split, observe
from ..physics import (ModelParams, Potential, ResolutionError, check_admissible, make_initial_data,
                       validate_nonlinearity, validate_potential)
from .config import ConfigError, RunConfig

log = logging.getLogger(__name__)

__all__ = [
    "PreconditionError",
    "CHARGE_TOL",
    "ENERGY_TOL",
    "MOMENTUM_TOL",
    "ground_state_for",
    "run_ground_state",
    "run_validate",
    "run_stationary",
    "run_transport",
    "run_sweep",
    "run_stability",
    "run_concentration",
    "run",
]

CHARGE_TOL = 1e-10
ENERGY_TOL = 1e-6
MOMENTUM_TOL = 1e-10
PROFILE_TOL = 1e-6
RATE_TOL = 0.01
HARMONIC_HH_TOL = 1e-6
SAMPLE_EVERY = 0.02


class PreconditionError(RuntimeError):
    """The configured experiment cannot run (admissibility, resolution, no ground state...)."""


def _check(name, value, bound, passed=None, op="<="):
    if passed is None:
        passed = bool(value <= bound) if op == "<=" else bool(value < bound)
    return {"name": name, "passed": bool(passed), "value": _f(value), "bound": _f(bound)}


def _f(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return x


def _new_manifest(cfg, kind):
    return {
        "experiment": kind,
        "config": cfg.raw,
        "code_version": __version__,
        "status": "running",
        "abort_reason": None,
        "dt": {},
        "wall_time": None,
        "summary": {},
        "checks": [],
    }


def _finish(manifest, out, t0):
    manifest["wall_time"] = time.perf_counter() - t0
    if manifest["status"] == "running":
        manifest["status"] = "pass" if all(c["passed"] for c in manifest["checks"]) else "fail"
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_f))
    return manifest


def _abort(manifest, out, t0, exc):
    manifest["status"] = "abort"
    manifest["abort_reason"] = f"{type(exc).__name__}: {exc}"
    _finish(manifest, out, t0)
    raise PreconditionError(manifest["abort_reason"]) from exc


def ground_state_for(cfg):
    """Constrained minimiser for the configured W and charge, on the rescaled grid."""
    return minimize(cfg.nl, cfg.ground_grid, cfg.sigma)


def _cadence(cfg, dt):
    if cfg.cadence != "auto":
        return int(cfg.cadence)
    return max(1, int(round(SAMPLE_EVERY / dt)))


def _pick_dt(cfg, state, quantity=None, tol=None, monitors=()):
    """Configured dt, or the auto_dt step shrunk so that it divides T (the run then ends exactly at T)."""
    if cfg.dt != "auto":
        return float(cfg.dt)
    dt = auto_dt(state, min(cfg.T_probe, cfg.T), cfg.dt_tol if tol is None else tol, quantity=quantity,
                 monitors=monitors)
    return cfg.T / int(np.ceil(cfg.T / dt - 1e-9))


def _energy_monitor(cfg, params):
    """Relative energy as an auto_dt monitor; the barycenter alone misses dt errors under linear forces."""
    E0 = {}

    def rel_energy(s):
        E = energy_split(s.grid, s.psi, params, cfg.nl, s.pot)["E"]
        E0.setdefault("E", E)
        return E / abs(E0["E"])

    # successive halvings agree to ENERGY_TOL/4, leaving room for drift beyond T_probe
    return (rel_energy, ENERGY_TOL / 4)


def run_validate(cfg):
    """Assumption reports for the configured W (in dimension N) and V (on the grid)."""
    rn = validate_nonlinearity(cfg.nl, cfg.grid.dims)
    rp = validate_potential(cfg.pot, cfg.grid)
    return {"nonlinearity": rn.to_dict(), "potential": rp.to_dict(), "passed": rn.passed and rp.passed,
            "lines": rn.lines() + rp.lines()}


def run_ground_state(cfg, out=None):
    t0 = time.perf_counter()
    manifest = _new_manifest(cfg, "ground_state")
    try:
        gs = ground_state_for(cfg)
    except MinimizeError as exc:
        _abort(manifest, out, t0, exc)
    manifest["summary"] = {"sigma": gs.sigma, "mu": gs.mu, "energy": gs.energy, "residual": gs.residual,
                           "iterations": gs.iterations}
    manifest["checks"] = [
        _check("energy_negative", gs.energy, 0.0, op="<"),
        _check("mu_negative", gs.mu, 0.0, op="<"),
        _check("residual", gs.residual, 1e-6),
    ]
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        save_ground_state(Path(out) / "ground_state", gs)
    return _finish(manifest, out, t0)


def _write_run(out, grid, psi0, psi1, series):
    if out is None:
        return
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    save_snapshot(out / "initial.nsef", grid, psi0)
    save_snapshot(out / "final.nsef", grid, psi1)
    if series is not None:
        series.to_csv(out / "series.csv")


def _conservation_checks(series, pot):
    checks = [
        _check("charge_drift", series.drift("charge"), CHARGE_TOL, op="<"),
        _check("energy_drift", series.drift("energy"), ENERGY_TOL, op="<"),
    ]
    if pot.kind == "zero":
        P = series.column("momentum")
        # normalised by |P(0)|, or by the charge when the soliton is at rest
        scale = max(float(np.linalg.norm(P[0])), series[0].charge)
        drift = float(np.max(np.linalg.norm(P - P[0], axis=1)) / scale)
        checks.append(_check("momentum_drift", drift, MOMENTUM_TOL, op="<"))
    return checks


def run_transport(cfg, out=None, assert_concentration=False):
    """Evolve B_h^K data ``U((x-q0)/h^beta) exp(i v.x/h)`` and the reference particle.

    Returns ``(manifest, series)``. Admissibility or resolution failures abort
    with :class:`PreconditionError` naming the failing clause.
    """
    t0 = time.perf_counter()
    kind = "concentration" if assert_concentration else "transport"
    manifest = _new_manifest(cfg, kind)
    params, grid = cfg.params, cfg.grid
    try:
        gs = ground_state_for(cfg)
        psi0 = make_initial_data(params, gs, cfg.q0, cfg.v, grid)
    except (MinimizeError, ResolutionError) as exc:
        _abort(manifest, out, t0, exc)
    adm = check_admissible(psi0, grid, params, cfg.nl, cfg.pot, cfg.K, gs.energy, cfg.v)
    manifest["admissibility"] = adm.to_dict()
    if not adm.passed:
        _abort(manifest, out, t0, PreconditionError(f"initial data not in B_h^K: failing {adm.failing()}"))

    state = PropagatorState(grid, psi0, params, cfg.pot, cfg.nl, dt=1.0)
    try:
        dt = _pick_dt(cfg, state, monitors=[_energy_monitor(cfg, params)])
    except (ValueError, PropagationError) as exc:
        _abort(manifest, out, t0, exc)
    state = PropagatorState(grid, psi0, params, cfg.pot, cfg.nl, dt=dt)
    manifest["dt"] = {str(cfg.h): dt}
    cadence = _cadence(cfg, dt)
    manifest["cadence"] = cadence

    series = TimeSeries(meta={"h": cfg.h, "dt": dt, "cadence": cadence})
    try:
        recs = evolve(state, cfg.T, cadence, lambda s: observe(s.grid, s.psi, s.t, params, cfg.nl, cfg.pot, cfg.Rhat))
    except (PropagationError, ValueError) as exc:
        _write_run(out, grid, psi0, state.psi, None)
        _abort(manifest, out, t0, exc)
    tp, qp, vp = particle_trajectory(cfg.q0, cfg.v, cfg.pot, cfg.T, dt, cadence)
    for r, q_, v_ in zip(recs, qp, vp):
        for j in range(grid.dims):
            r.extra[f"q_particle_{j + 1}"] = float(q_[j])
        for j in range(grid.dims):
            r.extra[f"v_particle_{j + 1}"] = float(v_[j])
        series.append(r)

    q = series.column("q")
    hh = series.column("hh")
    frac = series.column("fraction_outside")
    acc, acc2 = series.column("qddot"), series.column("qddot_by_parts")
    manifest["summary"] = {
        "sup_hh": float(np.max(np.linalg.norm(hh, axis=1))),
        "sup_q_minus_particle": float(np.max(np.linalg.norm(q - qp, axis=1))),
        "max_fraction_outside": float(np.max(frac)),
        "charge_drift": series.drift("charge"),
        "energy_drift": series.drift("energy"),
        "momentum_drift_abs": float(np.max(np.linalg.norm(series.column("momentum") - series[0].momentum, axis=1))),
        "max_accel_form_gap": float(np.max(np.linalg.norm(acc - acc2, axis=1))),
        "n_records": len(series),
        "steps": state.steps,
    }
    manifest["checks"] = _conservation_checks(series, cfg.pot)
    if assert_concentration:
        manifest["checks"].append(_check("fraction_outside", manifest["summary"]["max_fraction_outside"], cfg.eps, op="<"))
    manifest["columns"] = series.columns()
    _write_run(out, grid, psi0, state.psi, series)
    return _finish(manifest, out, t0), series


def run_concentration(cfg, out=None):
    """Transport run asserting ``sup_t fraction_outside < eps`` at the configured Rhat."""
    return run_transport(cfg, out, assert_concentration=True)


def _sweep_one(args):
    raw, h, out = args
    cfg = RunConfig.from_dict(raw).with_h(h)
    try:
        manifest, _ = run_transport(cfg, out)
    except PreconditionError as exc:
        return {"status": "abort", "abort_reason": str(exc), "summary": {}, "dt": {}}
    return manifest


def run_sweep(cfg, out=None, workers=None):
    """Transport runs over the h list; rows ``{h, sup|H_h|, sup|q - q_particle|, dt}``.

    For potentials with a nonlinear gradient the sup|H_h| column must be
    strictly decreasing down the list; for linear gradients (harmonic) every
    entry must be below ``HARMONIC_HH_TOL`` instead.
    """
    t0 = time.perf_counter()
    manifest = _new_manifest(cfg, "sweep")
    workers = cfg.workers if workers is None else workers
    jobs = [(cfg.raw, h, None if out is None else str(Path(out) / f"h_{h:g}")) for h in cfg.h_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]

    rows = []
    for h, m in zip(cfg.h_list, results):
        s = m.get("summary", {})
        rows.append({"h": h, "sup_hh": s.get("sup_hh", float("nan")),
                     "sup_q_minus_particle": s.get("sup_q_minus_particle", float("nan")),
                     "max_fraction_outside": s.get("max_fraction_outside", float("nan")),
                     "energy_drift": s.get("energy_drift", float("nan")),
                     "charge_drift": s.get("charge_drift", float("nan")),
                     "dt": next(iter(m.get("dt", {}).values()), float("nan")),
                     "status": m.get("status")})
    manifest["rows"] = rows
    manifest["dt"] = {str(r["h"]): r["dt"] for r in rows}
    checks = [{"name": f"run_h_{r['h']:g}", "passed": r["status"] == "pass", "value": r["status"], "bound": "pass"}
              for r in rows]
    sup = np.array([r["sup_hh"] for r in rows])
    if cfg.pot.kind in ("harmonic", "zero"):
        checks.append(_check("sup_hh_linear_force", float(np.max(sup)), HARMONIC_HH_TOL, op="<"))
    elif len(rows) > 1:
        checks.append({"name": "sup_hh_decreasing", "passed": bool(np.all(np.diff(sup) < 0)),
                       "value": sup.tolist(), "bound": "strictly decreasing"})
    if len(rows) > 1 and np.all(sup > 0) and np.all(np.isfinite(sup)):
        manifest["summary"]["empirical_rate"] = float(np.polyfit(np.log([r["h"] for r in rows]), np.log(sup), 1)[0])
    manifest["summary"]["sup_hh"] = sup.tolist()
    manifest["checks"] = checks
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        cols = ["h", "sup_hh", "sup_q_minus_particle", "max_fraction_outside", "energy_drift", "charge_drift", "dt", "status"]
        lines = [",".join(cols)] + [",".join(repr(r[c]) if not isinstance(r[c], str) else r[c] for c in cols) for r in rows]
        (Path(out) / "sweep.csv").write_text("\n".join(lines) + "\n")
    return _finish(manifest, out, t0)


def _stationary_data(cfg, gs, params):
    return make_initial_data(params, gs, np.zeros(cfg.grid.dims), np.zeros(cfg.grid.dims), cfg.grid)


def run_stationary(cfg, out=None):
    """Evolve ground-state data at V = 0 and measure the phase rotation rate.

    Passes when ``|psi|`` stays within ``PROFILE_TOL`` (sup norm) of its
    initial value and the rate matches ``-mu / h^(alpha+1)`` to 1%.
    """
    t0 = time.perf_counter()
    manifest = _new_manifest(cfg, "stationary")
    rep = validate_nonlinearity(cfg.nl, cfg.grid.dims)
    manifest["validation"] = rep.to_dict()
    if not rep["W1"].passed:
        _abort(manifest, out, t0, PreconditionError("no stationary state: W is not focusing (W1 fails)"))
    params, grid, pot = cfg.params, cfg.grid, Potential.zero()
    try:
        gs = ground_state_for(cfg)
        psi0 = _stationary_data(cfg, gs, params)
    except (MinimizeError, ResolutionError) as exc:
        _abort(manifest, out, t0, exc)

    def amplitude(s):
        return np.abs(s.psi)

    state = PropagatorState(grid, psi0, params, pot, cfg.nl, dt=1.0)
    # successive halvings agree to PROFILE_TOL/4, so the accepted step is well inside PROFILE_TOL
    dt = _pick_dt(cfg, state, quantity=amplitude, tol=PROFILE_TOL / 4)
    state = PropagatorState(grid, psi0, params, pot, cfg.nl, dt=dt)
    manifest["dt"] = {str(cfg.h): dt}
    cadence = _cadence(cfg, dt)
    ipeak = np.unravel_index(np.argmax(np.abs(psi0)), grid.shape)
    a0 = np.abs(psi0)

    def obs(s):
        return s.t, float(np.angle(s.psi[ipeak])), float(np.max(np.abs(np.abs(s.psi) - a0))), charge(grid, s.psi)

    try:
        rec = np.array(evolve(state, cfg.T, cadence, obs))
    except PropagationError as exc:
        _abort(manifest, out, t0, exc)
    rate = float(np.polyfit(rec[:, 0], np.unwrap(rec[:, 1]), 1)[0])
    expected = -gs.mu / cfg.h ** (cfg.alpha + 1.0)
    manifest["summary"] = {"rate": rate, "expected_rate": expected, "mu": gs.mu,
                           "relative_rate_error": abs(rate - expected) / abs(expected),
                           "profile_deviation": float(np.max(rec[:, 2])),
                           "charge_drift": float(np.max(np.abs(rec[:, 3] - rec[0, 3])) / rec[0, 3])}
    manifest["checks"] = [
        _check("rotation_rate", manifest["summary"]["relative_rate_error"], RATE_TOL),
        _check("profile_invariance", manifest["summary"]["profile_deviation"], PROFILE_TOL),
        _check("charge_drift", manifest["summary"]["charge_drift"], CHARGE_TOL, op="<"),
    ]
    if out is not None:
        _write_run(out, grid, psi0, state.psi, None)
        np.savetxt(Path(out) / "series.csv", rec, delimiter=",", header="t,phase_at_peak,profile_deviation,charge",
                   comments="")
    return _finish(manifest, out, t0)


def perturbed_ground_state(gs, grid, sigma, delta, kind="dilate"):
    """Perturbed ground-state amplitude on ``grid`` (rescaled units).

    ``dilate``: ``U((1+delta) x)``, renormalised to sigma. ``bump``: U plus a
    unit-width Gaussian of height ``delta max U`` one unit off centre,
    renormalised. ``amplitude``: ``(1+delta) U`` (charge not restored).
    """
    x = grid.x
    if kind == "dilate":
        u = interpolate(gs.grid, gs.profile, [ax * (1.0 + delta) for ax in grid.axes])
    else:
        u = interpolate(gs.grid, gs.profile, list(grid.axes))
    if kind == "bump":
        off = np.zeros(grid.dims)
        off[0] = 1.0
        u = u + delta * u.max() * np.exp(-np.sum((x - off.reshape((-1,) + (1,) * grid.dims)) ** 2, axis=0))
    if kind == "amplitude":
        return (1.0 + delta) * u
    return sigma * u / l2_norm(grid, u)


def _trend_ratio(t, d):
    """Mean distance over the last quarter of the window divided by the mean over the third quarter."""
    T = t[-1]
    q3 = d[(t >= 0.5 * T) & (t < 0.75 * T)]
    q4 = d[t >= 0.75 * T]
    return float(np.mean(q4) / np.mean(q3)) if np.mean(q3) > 0 else float("nan")


STABILITY_RATIO = 10.0
TREND_TOL = 1.1
EXACT_ORBIT_TOL = 1e-5


def run_stability(cfg, out=None):
    """Orbital stability at V = 0, h = 1 for a perturbed ground state.

    Tracks ``orbit_distance(t)`` and checks ``sup_t d <= 10 d(0)`` (or
    ``sup_t d < 1e-5`` for unperturbed data) and that the final-quarter
    mean does not exceed the third-quarter mean by more than 10%. If W is
    not focusing there is no ground state: the run proceeds against the
    normalised Gaussian reference and the checks are skipped.
    """
    t0 = time.perf_counter()
    manifest = _new_manifest(cfg, "stability")
    params = ModelParams(1.0, cfg.alpha, cfg.sigma)
    grid, pot = cfg.grid, Potential.zero()
    rep = validate_nonlinearity(cfg.nl, grid.dims)
    manifest["validation"] = rep.to_dict()
    focusing = rep["W1"].passed
    if focusing:
        try:
            gs = ground_state_for(cfg)
        except MinimizeError as exc:
            _abort(manifest, out, t0, exc)
    else:
        manifest["notes"] = ["W1 violated: no ground state, the reference is the normalised Gaussian"]
        g0 = gaussian_profile(cfg.ground_grid, cfg.sigma)
        gs = GroundState(cfg.ground_grid, g0, float("nan"), float("nan"), float("nan"), cfg.sigma)
    profile = rescale_to_physical(gs, params, grid)
    u0 = perturbed_ground_state(gs, grid, cfg.sigma, cfg.delta, cfg.perturbation)
    psi0 = u0.astype(complex)

    state = PropagatorState(grid, psi0, params, pot, cfg.nl, dt=1.0)
    dt = _pick_dt(cfg, state, quantity=lambda s: np.abs(s.psi))
    state = PropagatorState(grid, psi0, params, pot, cfg.nl, dt=dt)
    manifest["dt"] = {"1": dt}
    cadence = _cadence(cfg, dt) if cfg.cadence != "auto" else max(1, int(round(0.25 / dt)))

    series = TimeSeries(meta={"h": 1.0, "dt": dt})

    def obs(s):
        return observe(grid, s.psi, s.t, params, cfg.nl, pot, cfg.Rhat, profile=profile, boundary_tol=None)

    try:
        for r in evolve(state, cfg.T, cadence, obs):
            series.append(r)
    except PropagationError as exc:
        _abort(manifest, out, t0, exc)
    t = series.t
    d = series.column("orbit_distance")
    d0, dsup = float(d[0]), float(np.max(d))
    trend = _trend_ratio(t, d)
    manifest["summary"] = {"initial_distance": d0, "sup_distance": dsup,
                           "ratio": dsup / d0 if d0 > 0 else float("inf"),
                           "trend_ratio": trend, "charge_drift": series.drift("charge"),
                           "energy_drift": series.drift("energy"), "focusing": focusing}
    if not focusing:
        manifest["checks"] = []
        manifest["notes"].append("stability checks skipped")
    elif cfg.delta == 0:
        manifest["checks"] = [_check("sup_distance", dsup, EXACT_ORBIT_TOL, op="<")]
    else:
        manifest["checks"] = [
            _check("sup_over_initial", dsup / d0, STABILITY_RATIO),
            _check("no_growth_trend", trend, TREND_TOL),
        ]
    _write_run(out, grid, psi0, state.psi, series)
    return _finish(manifest, out, t0)


def run(cfg, out=None):
    """Dispatch on ``cfg.experiment``; returns the manifest."""
    if cfg.experiment == "stationary":
        return run_stationary(cfg, out)
    if cfg.experiment == "transport":
        return run_transport(cfg, out)[0]
    if cfg.experiment == "concentration":
        return run_concentration(cfg, out)[0]
    if cfg.experiment == "sweep":
        return run_sweep(cfg, out)
    if cfg.experiment == "stability":
        return run_stability(cfg, out)
    raise ConfigError(f"unknown experiment {cfg.experiment!r}")
