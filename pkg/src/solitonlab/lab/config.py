"""Run configuration: one JSON file per run.

Schema (all keys optional unless noted)::

    {
      "experiment": "stationary" | "transport" | "sweep" | "stability" | "concentration",
      "model": {
        "nonlinearity": {"kind": "focusing_power", "c": 2.0, "p": 4.0},   # or defocusing_power, zero
        "potential": {"kind": "quartic", "lambda": 0.1},                # or harmonic {"kappa"}, zero
        "h": 0.5, "alpha": 1.0,
        "sigma": 1.4142135623730951,      # or "sigma2": 2.0
        "q0": [1.0], "v": [0.0], "K": 50.0
      },
      "grid": {"dims": 1, "n": 4096, "L": 16.0},
      "ground_grid": {"n": 1024, "L": 20.0},
      "time": {"T": 8.0, "cadence": "auto", "dt": "auto", "dt_tol": 1e-7, "T_probe": 2.0},
      "sweep": {"h": [0.5, 0.25, 0.125], "workers": 1},
      "concentration": {"Rhat": 10.0, "eps": 1e-3},
      "stability": {"delta": 0.01, "perturbation": "dilate"},
      "output": "out"
    }

``cadence`` is in steps; ``"auto"`` samples roughly every 0.02 time units.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..field import Grid
from ..physics import ModelParams, Nonlinearity, Potential

__all__ = ["ConfigError", "RunConfig", "load_config", "FLAGSHIP"]

EXPERIMENTS = ("stationary", "transport", "sweep", "stability", "concentration")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


FLAGSHIP = {
    "experiment": "sweep",
    "model": {
        "nonlinearity": {"kind": "focusing_power", "c": 2.0, "p": 4.0},
        "potential": {"kind": "quartic", "lambda": 0.1},
        "h": 0.5,
        "alpha": 1.0,
        "sigma2": 2.0,
        "q0": [1.0],
        "v": [0.0],
        "K": 50.0,
    },
    "grid": {"dims": 1, "n": 4096, "L": 16.0},
    "ground_grid": {"n": 1024, "L": 20.0},
    "time": {"T": 8.0, "cadence": "auto", "dt": "auto", "dt_tol": 1e-7, "T_probe": 2.0},
    "sweep": {"h": [0.5, 0.25, 0.125], "workers": 1},
    "concentration": {"Rhat": 10.0, "eps": 1e-3},
    "output": "out",
}


def _vec(val, dims, name):
    if isinstance(val, (int, float)):
        val = [val] * dims
    if not isinstance(val, list) or len(val) != dims or not all(isinstance(v, (int, float)) for v in val):
        raise ConfigError(f"{name} must be a list of {dims} numbers")
    return tuple(float(v) for v in val)


def _num(d, key, default, name=None, positive=False):
    v = d.get(key, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ConfigError(f"{name or key} must be a finite number")
    if positive and not v > 0:
        raise ConfigError(f"{name or key} must be positive")
    return float(v)


@dataclass
class RunConfig:
    experiment: str
    nl: Nonlinearity
    pot: Potential
    h: float
    alpha: float
    sigma: float
    q0: tuple
    v: tuple
    K: float
    grid: Grid
    ground_grid: Grid
    T: float
    cadence: object
    dt: object
    dt_tol: float
    T_probe: float
    h_list: tuple
    workers: int
    Rhat: float
    eps: float
    delta: float
    perturbation: str
    output: str
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def params(self):
        return ModelParams(self.h, self.alpha, self.sigma)

    def with_h(self, h):
        """Copy of this config at another scale parameter (used by sweeps)."""
        raw = copy.deepcopy(self.raw)
        raw["model"]["h"] = h
        raw["experiment"] = "transport"
        return RunConfig.from_dict(raw)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        d = copy.deepcopy(d)
        exp = d.get("experiment", "transport")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
        model = d.setdefault("model", {})
        g = d.setdefault("grid", {})
        dims = int(g.get("dims", 1))
        if dims not in (1, 2, 3):
            raise ConfigError("grid.dims must be 1, 2 or 3")
        try:
            grid = Grid((int(g.get("n", 4096)),) * dims, (_num(g, "L", 16.0, "grid.L", True),) * dims)
            gg = d.get("ground_grid", {})
            ground_grid = Grid((int(gg.get("n", 1024)),) * dims, (_num(gg, "L", 20.0, "ground_grid.L", True),) * dims)
            nl = Nonlinearity.from_dict(model.get("nonlinearity", {"kind": "focusing_power"}))
            pot = Potential.from_dict(model.get("potential", {"kind": "zero"}))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if "sigma" in model:
            sigma = _num(model, "sigma", 1.0, "model.sigma", True)
        else:
            sigma = math.sqrt(_num(model, "sigma2", 2.0, "model.sigma2", True))
        h = _num(model, "h", 1.0, "model.h", True)
        alpha = _num(model, "alpha", 1.0, "model.alpha", True)

        t = d.get("time", {})
        T = _num(t, "T", 8.0, "time.T", True)
        cadence = t.get("cadence", "auto")
        if cadence != "auto" and (not isinstance(cadence, int) or cadence < 1):
            raise ConfigError("time.cadence must be a positive integer or \"auto\"")
        dt = t.get("dt", "auto")
        if dt != "auto":
            dt = _num(t, "dt", 0.0, "time.dt", True)
        sw = d.get("sweep", {})
        h_list = sw.get("h", [h])
        if not isinstance(h_list, list) or not h_list or not all(isinstance(x, (int, float)) and x > 0 for x in h_list):
            raise ConfigError("sweep.h must be a non-empty list of positive numbers")
        if any(b >= a for a, b in zip(h_list, h_list[1:])):
            raise ConfigError("sweep.h must be strictly decreasing")
        c = d.get("concentration", {})
        st = d.get("stability", {})
        pert = st.get("perturbation", "dilate")
        if pert not in ("dilate", "bump", "amplitude"):
            raise ConfigError("stability.perturbation must be dilate, bump or amplitude")
        return cls(
            experiment=exp,
            nl=nl,
            pot=pot,
            h=h,
            alpha=alpha,
            sigma=sigma,
            q0=_vec(model.get("q0", [0.0] * dims), dims, "model.q0"),
            v=_vec(model.get("v", [0.0] * dims), dims, "model.v"),
            K=_num(model, "K", 50.0, "model.K", True),
            grid=grid,
            ground_grid=ground_grid,
            T=T,
            cadence=cadence,
            dt=dt,
            dt_tol=_num(t, "dt_tol", 1e-7, "time.dt_tol", True),
            T_probe=_num(t, "T_probe", min(T, 2.0), "time.T_probe", True),
            h_list=tuple(float(x) for x in h_list),
            workers=int(sw.get("workers", 1)),
            Rhat=_num(c, "Rhat", 10.0, "concentration.Rhat", True),
            eps=_num(c, "eps", 1e-3, "concentration.eps", True),
            delta=_num(st, "delta", 0.01, "stability.delta"),
            perturbation=pert,
            output=str(d.get("output", "out")),
            raw=d,
        )


def load_config(path):
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_dict(d)
