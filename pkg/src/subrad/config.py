"""Run configuration: JSON schema validation with precise error paths.

A run config selects exactly one task and carries the model, drive, and
task-specific blocks.  All frequencies are ordinary MHz, times ns; validation
strictly precedes any simulation."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .model import EmitterParams, MediumParams, ModelError, SystemModel

TASKS = ("spectrum", "g2", "lifetime", "extinction", "saturate", "fit",
         "baseline-prob")

DEFAULT_ALPHA = 0.3  # single-molecule zero-phonon branching fraction
DEFAULT_DEPHASING = 0.0


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


def _check_unknown(d: dict, allowed: set, path: str) -> None:
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown field `{path}{key}`")


def _req(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(f"missing required field `{path}{key}`")
    return d[key]


def _num(d: dict, key: str, path: str, default=None, lo=None, hi=None,
         required=False):
    if key not in d:
        if required:
            raise ConfigError(f"missing required field `{path}{key}`")
        return default
    v = d[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"field `{path}{key}` must be a number")
    if lo is not None and v < lo or hi is not None and v > hi:
        raise ConfigError(
            f"field `{path}{key}` = {v} outside allowed range "
            f"[{lo if lo is not None else '-inf'}, {hi if hi is not None else 'inf'}]")
    return float(v)


@dataclass
class RunConfig:
    """Validated run description."""

    task: str
    model: SystemModel
    seed: int = 0
    drive_rabi: Optional[float] = None
    task_block: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _parse_emitters(block: list, path: str) -> List[EmitterParams]:
    if not isinstance(block, list) or not block:
        raise ConfigError(f"field `{path}` must be a nonempty list")
    out = []
    for k, e in enumerate(block):
        p = f"{path}[{k}]."
        _check_unknown(e, {"omega_mhz", "position_nm", "dipole",
                           "dipole_moment_debye"}, p)
        omega = _num(e, "omega_mhz", p, required=True, lo=1e-9)
        kwargs = {"omega": omega}
        if "position_nm" in e:
            kwargs["position"] = tuple(float(x) for x in e["position_nm"])
        if "dipole" in e:
            d = np.asarray(e["dipole"], float)
            n = np.linalg.norm(d)
            if n == 0:
                raise ConfigError(f"field `{p}dipole` must be a nonzero vector")
            kwargs["dipole"] = tuple(d / n)
        if "dipole_moment_debye" in e:
            kwargs["dipole_moment"] = _num(e, "dipole_moment_debye", p, lo=0.0)
        try:
            out.append(EmitterParams(**kwargs))
        except ModelError as exc:
            raise ConfigError(f"invalid emitter at `{path}[{k}]`: {exc}") from exc
    return out


def _parse_model(block: dict) -> SystemModel:
    path = "model."
    _check_unknown(block, {"gamma0_mhz", "alpha", "dephasing_mhz", "emitters",
                           "coupling"}, path)
    gamma0 = _num(block, "gamma0_mhz", path, required=True, lo=1e-9)
    alpha = _num(block, "alpha", path, default=DEFAULT_ALPHA, lo=0.0, hi=1.0)
    dephasing = _num(block, "dephasing_mhz", path, default=DEFAULT_DEPHASING, lo=0.0)
    emitters = _parse_emitters(_req(block, "emitters", path), "model.emitters")
    n = len(emitters)
    coupling = block.get("coupling", {})
    _check_unknown(coupling, {"j_mhz", "geometry", "gamma12_mhz"}, "model.coupling.")
    if "geometry" in coupling:
        geo = coupling["geometry"]
        _check_unknown(geo, {"epsilon_r", "wavelength_nm", "retardation"},
                       "model.coupling.geometry.")
        medium = MediumParams(
            epsilon_r=_num(geo, "epsilon_r", "model.coupling.geometry.",
                           default=1.0, lo=1.0),
            wavelength=_num(geo, "wavelength_nm", "model.coupling.geometry.",
                            default=785.0, lo=1e-9))
        try:
            return SystemModel.from_geometry(
                emitters, medium, gamma0=gamma0, alpha=alpha, dephasing=dephasing,
                retardation=bool(geo.get("retardation", False)))
        except ModelError as exc:
            raise ConfigError(f"invalid geometric model: {exc}") from exc
    j = coupling.get("j_mhz", 0.0)
    if isinstance(j, list):
        jm = np.asarray(j, float)
    else:
        if n != 2 and j != 0.0:
            raise ConfigError("scalar `model.coupling.j_mhz` needs exactly 2 emitters")
        jm = np.zeros((n, n))
        if n == 2:
            jm[0, 1] = jm[1, 0] = float(j)
    g12 = coupling.get("gamma12_mhz")
    gm = alpha * gamma0 * np.eye(n)
    if g12 is not None:
        if n != 2:
            raise ConfigError("`model.coupling.gamma12_mhz` needs exactly 2 emitters")
        gm[0, 1] = gm[1, 0] = float(g12)
    elif n == 2 and jm[0, 1] != 0.0:
        gm[0, 1] = gm[1, 0] = alpha * gamma0
    try:
        return SystemModel(emitters=tuple(emitters), gamma0=gamma0, alpha=alpha,
                           dephasing=dephasing, J=jm, Gamma_coll=gm)
    except ModelError as exc:
        raise ConfigError(f"invalid model: {exc}") from exc


def _parse_scan(block: dict, path: str) -> np.ndarray:
    _check_unknown(block, {"start_mhz", "stop_mhz", "points"}, path)
    start = _num(block, "start_mhz", path, required=True)
    stop = _num(block, "stop_mhz", path, required=True)
    points = _req(block, "points", path)
    if not isinstance(points, int) or points < 2:
        raise ConfigError(f"field `{path}points` must be an integer >= 2")
    if stop <= start:
        raise ConfigError(f"field `{path}stop_mhz` must exceed `{path}start_mhz`")
    return np.linspace(start, stop, points)


_TASK_FIELDS = {
    "spectrum": {"scan", "normalize"},
    "g2": {"tau_max_ns", "points", "detection", "symmetric"},
    "lifetime": {"initial", "t_max_ns", "points"},
    "extinction": {"detunings_mhz"},
    "saturate": {"s_values", "scan"},
    "fit": {"kind", "free", "fixed", "context", "synthesize"},
    "baseline-prob": {"n_molecules", "inhom_width_ghz", "crystal_size_nm",
                      "n_samples", "threshold_scale", "dipole_moment_debye",
                      "epsilon_r"},
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Raises ConfigError naming the offending field on any problem."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    top_allowed = {"task", "seed", "model", "drive"} | set(TASKS) | {"baseline_prob"}
    _check_unknown(raw, top_allowed, "")
    task = _req(raw, "task", "")
    if task not in TASKS:
        raise ConfigError(f"field `task` must be one of {', '.join(TASKS)}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("field `seed` must be a nonnegative integer")

    if task == "baseline-prob":
        # model block optional for the Monte Carlo task
        model = _parse_model(raw["model"]) if "model" in raw else \
            SystemModel.independent([1.0], gamma0=33.0, alpha=DEFAULT_ALPHA)
    else:
        model = _parse_model(_req(raw, "model", ""))

    drive_rabi = None
    if "drive" in raw:
        db = raw["drive"]
        _check_unknown(db, {"rabi_mhz", "s"}, "drive.")
        if "rabi_mhz" in db and "s" in db:
            raise ConfigError("give either `drive.rabi_mhz` or `drive.s`, not both")
        if "rabi_mhz" in db:
            drive_rabi = _num(db, "rabi_mhz", "drive.", lo=0.0)
        elif "s" in db:
            s = _num(db, "s", "drive.", lo=0.0)
            drive_rabi = model.gamma0 * float(np.sqrt(s / 2.0))
        else:
            raise ConfigError("field `drive` must contain `rabi_mhz` or `s`")
    if task in ("spectrum", "g2", "extinction") and drive_rabi is None:
        raise ConfigError(f"task `{task}` requires a `drive` block")

    key = "baseline_prob" if task == "baseline-prob" and "baseline_prob" in raw else task
    block = raw.get(key, {})
    if not isinstance(block, dict):
        raise ConfigError(f"field `{key}` must be an object")
    _check_unknown(block, _TASK_FIELDS[task], f"{key}.")
    task_block = _validate_task_block(task, block, model, key)
    return RunConfig(task=task, model=model, seed=seed, drive_rabi=drive_rabi,
                     task_block=task_block, raw=raw)


def _validate_task_block(task: str, block: dict, model: SystemModel,
                         key: str) -> dict:
    path = f"{key}."
    out: Dict[str, Any] = {}
    if task == "spectrum":
        out["scan"] = _parse_scan(_req(block, "scan", path), f"{path}scan.")
        out["normalize"] = bool(block.get("normalize", False))
    elif task == "g2":
        out["tau_max_ns"] = _num(block, "tau_max_ns", path, default=100.0, lo=1e-9)
        pts = block.get("points", 200)
        if not isinstance(pts, int) or pts < 2:
            raise ConfigError(f"field `{path}points` must be an integer >= 2")
        out["points"] = pts
        det = block.get("detection", "total")
        if det not in ("total", "plus", "minus"):
            raise ConfigError(f"field `{path}detection` must be total|plus|minus")
        out["detection"] = det
        out["symmetric"] = bool(block.get("symmetric", False))
    elif task == "lifetime":
        initial = block.get("initial", "plus")
        if initial not in ("plus", "minus", "single"):
            raise ConfigError(f"field `{path}initial` must be plus|minus|single")
        out["initial"] = initial
        out["t_max_ns"] = _num(block, "t_max_ns", path, lo=1e-9)
        pts = block.get("points", 240)
        if not isinstance(pts, int) or pts < 8:
            raise ConfigError(f"field `{path}points` must be an integer >= 8")
        out["points"] = pts
    elif task == "extinction":
        dets = _req(block, "detunings_mhz", path)
        if not isinstance(dets, list) or not dets:
            raise ConfigError(f"field `{path}detunings_mhz` must be a nonempty list")
        out["detunings"] = [float(d) for d in dets]
        if model.n != 2:
            raise ConfigError("extinction task requires exactly 2 emitters")
    elif task == "saturate":
        svals = _req(block, "s_values", path)
        if not isinstance(svals, list) or not svals:
            raise ConfigError(f"field `{path}s_values` must be a nonempty list")
        sv = [float(s) for s in svals]
        if any(b <= a for a, b in zip(sv, sv[1:])) or min(sv) <= 0:
            raise ConfigError(f"field `{path}s_values` must be positive and increasing")
        out["s_values"] = sv
        out["scan"] = _parse_scan(_req(block, "scan", path), f"{path}scan.")
    elif task == "fit":
        kind = _req(block, "kind", path)
        free = _req(block, "free", path)
        if not isinstance(free, dict) or not free:
            raise ConfigError(f"field `{path}free` must be a nonempty object")
        out["kind"] = kind
        out["free"] = free
        out["fixed"] = block.get("fixed", {})
        out["context"] = block.get("context", {})
        out["synthesize"] = _req(block, "synthesize", path)
    elif task == "baseline-prob":
        nm = block.get("n_molecules", 2)
        if not isinstance(nm, int) or nm < 2:
            raise ConfigError(f"field `{path}n_molecules` must be an integer >= 2")
        out["n_molecules"] = nm
        out["inhom_width_ghz"] = _num(block, "inhom_width_ghz", path,
                                      required=True, lo=1e-12)
        out["crystal_size_nm"] = _num(block, "crystal_size_nm", path,
                                      required=True, lo=1.0)
        ns = block.get("n_samples", 1_000_000)
        if not isinstance(ns, int) or ns < 10_000:
            raise ConfigError(f"field `{path}n_samples` must be an integer >= 10000")
        out["n_samples"] = ns
        out["threshold_scale"] = _num(block, "threshold_scale", path,
                                      default=2.0, lo=1e-9)
        out["dipole_moment"] = _num(block, "dipole_moment_debye", path,
                                    default=10.0, lo=1e-9)
        out["epsilon_r"] = _num(block, "epsilon_r", path, default=2.5, lo=1.0)
    return out
