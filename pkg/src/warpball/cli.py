"""Command-line front end.

Every subcommand reads a JSON run configuration, writes its CSV/JSON artifacts
into the output directory, and records a ``manifest.json`` with the config
hash, library versions and wall time.  Artifacts other than the manifest are
byte-identical across runs of the same configuration.

Precedence for settings: command-line flag > config file > built-in default.
The output directory additionally honours ``WARPBALL_OUTPUT_DIR``, which sits
between the ``--output-dir`` flag and the config key ``outputs.directory``.

Exit codes: 0 success, 1 unexpected library error, 2 configuration error,
3 validation or model error, 4 domain error, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .errors import ConfigError, DataError, WarpballError
from .jost import jost_function
from .kernel import jump_estimate, solve_kernel
from .model import (WarpSpec, build_potential, load_config, shifted_momenta, sphere_spectrum,
                    template_spec)
from .poles import constant_A, index_beta_family, locate_poles, predict_poles

OUTPUT_ENV = "WARPBALL_OUTPUT_DIR"

DEFAULTS = {
    "numerics": {
        "grid_size": 513,
        "N": 512,
        "kernel_tol": 1e-10,
        "pole_tol": 1e-10,
        "count_tol": 2e-3,
        "truncation_radius": 20.0,
        "dk": 0.05,
        "delta": 0.01,
        "K_max": None,
        "x_stride": 2,
        "window": 1.5,
        "refine": 0,
        "tail_tol": 1e-3,
        "kernel_csv_stride": 4,
        "workers": 1,
    },
    "regions": {"poles": None},
    "jost": {"grid": "-5:5:-5:5:11"},
    "wt": {"test_points": None},
    "dtn": {"mu_sq": None, "sphere_kmax": 3, "source": "reconstruct"},
    "outputs": {"directory": "warpball_out"},
}

_POSITIVE = ("grid_size", "N", "kernel_tol", "pole_tol", "count_tol", "truncation_radius",
             "dk", "delta", "x_stride", "window", "tail_tol", "kernel_csv_stride", "workers")


# ---------------------------------------------------------------- serialisation

def _num(v) -> str:
    return format(float(v), ".17g")


def _to_json(obj) -> str:
    """JSON with floats at 17 significant digits; NaN and infinities become null."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, (complex, np.complexfloating)):
        return _to_json([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {_to_json(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


class _Table:
    """CSV artifact whose rows are checked against a column schema before writing."""

    _CHECKS = {
        "float": lambda v: isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, bool),
        "int": lambda v: isinstance(v, (int, np.integer)) and not isinstance(v, bool),
        "str": lambda v: isinstance(v, str),
        "bool": lambda v: isinstance(v, (bool, np.bool_)),
    }

    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise DataError("artifact row has the wrong number of fields", expected=len(self.columns),
                            got=len(values))
        for (name, kind), v in zip(self.columns, values):
            if not self._CHECKS[kind](v):
                raise DataError("artifact field has the wrong type", column=name, value=repr(v))
        self.rows.append(values)

    @staticmethod
    def _fmt(v) -> str:
        if isinstance(v, (bool, np.bool_)):
            return "true" if v else "false"
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, str):
            return v
        return _num(v)

    def write(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([c for c, _ in self.columns])
            for row in self.rows:
                w.writerow([self._fmt(v) for v in row])


# ---------------------------------------------------------------- configuration

def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _set_path(cfg: dict, path: str, value) -> None:
    keys = path.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            node[k] = {}
        node = node[k]
    node[keys[-1]] = value


def _parse_rect(text: str, field: str) -> list:
    try:
        vals = [float(v) for v in text.split(":")]
    except ValueError:
        raise ConfigError("region must be re0:re1:im0:im1", field=field)
    if len(vals) != 4:
        raise ConfigError("region must be re0:re1:im0:im1", field=field)
    return vals


def resolve_config(args) -> dict:
    """Defaults, then the config file, then flags."""
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        user = load_config(args.config)
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object", field="")
        cfg = _merge(cfg, user)
    flag_map = {"N": "numerics.N", "workers": "numerics.workers",
                "truncation_radius": "numerics.truncation_radius", "K_max": "numerics.K_max",
                "refine": "numerics.refine", "grid": "jost.grid", "test_points": "wt.test_points"}
    for attr, path in flag_map.items():
        v = getattr(args, attr, None)
        if v is not None:
            _set_path(cfg, path, v)
    if getattr(args, "region", None):
        _set_path(cfg, "regions.poles", _parse_rect(args.region, "regions.poles"))
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError("--set expects path=value", field=item)
        path, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        _set_path(cfg, path.strip(), value)
    _validate_numerics(cfg)
    return cfg


def _validate_numerics(cfg: dict) -> None:
    num = cfg.get("numerics")
    if not isinstance(num, dict):
        raise ConfigError("numerics must be a mapping", field="numerics")
    for key in _POSITIVE:
        v = num.get(key)
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            raise ConfigError(f"numerics.{key} must be a positive number", field=f"numerics.{key}")
    for key in ("K_max",):
        v = num.get(key)
        if v is not None and (not isinstance(v, (int, float)) or v <= 0):
            raise ConfigError(f"numerics.{key} must be positive or null", field=f"numerics.{key}")
    if not isinstance(num.get("refine"), int) or num["refine"] < 0:
        raise ConfigError("numerics.refine must be a nonnegative integer", field="numerics.refine")


def warp_from_config(cfg: dict) -> WarpSpec:
    """``warp`` section: full WarpSpec fields, or ``template`` with ``jump`` or ``c``."""
    if "warp" not in cfg:
        raise ConfigError("missing section 'warp'", field="warp")
    w = cfg["warp"]
    if not isinstance(w, dict):
        raise ConfigError("warp must be a mapping", field="warp")
    if "template" in w:
        for key in ("n", "lambda", "a", "p"):
            if key not in w:
                raise ConfigError(f"missing key '{key}'", field=f"warp.{key}")
        t = w["template"]
        if not isinstance(t, dict) or not ({"jump", "c"} & set(t)):
            raise ConfigError("template needs 'jump' or 'c'", field="warp.template")
        try:
            return template_spec(int(w["n"]), float(w["lambda"]), float(w["a"]), int(w["p"]),
                                 c=t.get("c"), jump=t.get("jump"))
        except WarpballError as exc:
            raise ConfigError(exc.message, field=f"warp.{exc.details.get('field', 'template')}")
    return WarpSpec.from_mapping(w, prefix="warp")


def output_dir(args, cfg: dict) -> Path:
    d = args.output_dir or os.environ.get(OUTPUT_ENV) or cfg["outputs"].get("directory")
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------- shared steps

def _kernel_for(cfg: dict):
    spec = warp_from_config(cfg)
    num = cfg["numerics"]
    pot = build_potential(spec, grid_size=int(num["grid_size"]))
    sol = solve_kernel(pot, N=int(num["N"]), tol=float(num["kernel_tol"]))
    return spec, pot, sol


def _run_meta(spec: WarpSpec, sol, cfg: dict) -> dict:
    num = cfg["numerics"]
    return {"lambda": spec.lam, "a": spec.a, "p": spec.p, "n": spec.n, "N": sol.N,
            "kernel_tol": num["kernel_tol"], "pole_tol": num["pole_tol"],
            "count_tol": num["count_tol"]}


def _write_json(path: Path, obj) -> None:
    path.write_text(_to_json(obj) + "\n")


def _parse_grid(text: str) -> np.ndarray:
    try:
        re0, re1, im0, im1, n = text.split(":")
        re0, re1, im0, im1, n = float(re0), float(re1), float(im0), float(im1), int(n)
    except ValueError:
        raise ConfigError("grid must be re0:re1:im0:im1:n", field="jost.grid")
    if n < 1:
        raise ConfigError("grid needs n >= 1", field="jost.grid")
    re = np.linspace(re0, re1, n)
    im = np.linspace(im0, im1, n)
    return (re[None, :] + 1j * im[:, None]).ravel()


def default_region(spec: WarpSpec, pairs: int = 8) -> list:
    """``[-R, 1] x [-R, R]`` with ``R`` past the predicted ``pairs``-th beta pair."""
    R = (np.pi / (2 * spec.a)) * (2 * pairs + (spec.p - 1) / 2 + 3)
    return [-R, 1.0, -R, R]


def _search(cfg: dict, sol, spec: WarpSpec):
    num = cfg["numerics"]
    rect = cfg["regions"].get("poles")
    if rect is None:
        rect = default_region(spec)
    if not isinstance(rect, (list, tuple)) or len(rect) != 4 or not (rect[0] < rect[1] and rect[2] < rect[3]):
        raise ConfigError("regions.poles must be a nonempty [re0, re1, im0, im1]", field="regions.poles")
    return locate_poles(tuple(float(v) for v in rect), jost=jost_function(sol),
                        tol=float(num["pole_tol"]), count_tol=float(num["count_tol"]),
                        workers=int(num["workers"]))


# ---------------------------------------------------------------- subcommands

def cmd_potential(cfg, args, out: Path):
    spec = warp_from_config(cfg)
    pot = build_potential(spec, grid_size=int(cfg["numerics"]["grid_size"]))
    t = _Table([("x", "float"), ("Qf", "float")])
    for x, q in zip(pot.grid, pot.qf_values):
        t.add(float(x), float(q))
    t.write(out / "potential.csv")
    meta = {"warp": spec.to_mapping(), **pot.metadata(), "max_abs_Qf": float(np.max(np.abs(pot.qf_values)))}
    _write_json(out / "potential.json", meta)
    return ["potential.csv", "potential.json"], meta


def cmd_kernel(cfg, args, out: Path):
    spec, pot, sol = _kernel_for(cfg)
    stride = int(cfg["numerics"]["kernel_csv_stride"])
    t = _Table([("x", "float"), ("t", "float"), ("K", "float"), ("dKx", "float"), ("dKt", "float")])
    x, tt = sol.grid.xt()
    dKx, dKt = sol.dKx, sol.dKt
    for i in range(0, sol.N + 1, stride):
        for j in range(0, i + 1, stride):
            t.add(float(x[i, j]), float(tt[i, j]), float(sol.K[i, j]), float(dKx[i, j]), float(dKt[i, j]))
    t.write(out / "kernel.csv")
    sol.save(out / "kernel.bin")
    meta = {**_run_meta(spec, sol, cfg), "iterations": sol.iterations, "residual": sol.residual,
            "contraction_M": sol.M, "jump_s_p_analytic": sol.jump_s_p,
            "jump_s_p_numeric": jump_estimate(sol, check=False), "backend": sol.backend}
    _write_json(out / "kernel.json", meta)
    return ["kernel.csv", "kernel.bin", "kernel.json"], meta


def cmd_jost(cfg, args, out: Path):
    spec, pot, sol = _kernel_for(cfg)
    z = _parse_grid(str(cfg["jost"]["grid"]))
    J = jost_function(sol)
    v, dx, dz, scale = J.all(z)
    t = _Table([("re", "float"), ("im", "float"), ("psi_re", "float"), ("psi_im", "float"),
                ("abs_psi", "float")])
    tm = _Table([("re", "float"), ("im", "float"), ("dpsi_re", "float"), ("dpsi_im", "float"),
                 ("m_re", "float"), ("m_im", "float"), ("at_pole", "bool")])
    for k in range(z.size):
        pole = bool(abs(v[k]) <= 1e-12 * scale[k])
        m = complex("nan") if pole else dx[k] / v[k]
        t.add(z[k].real, z[k].imag, v[k].real, v[k].imag, abs(v[k]))
        tm.add(z[k].real, z[k].imag, dx[k].real, dx[k].imag, m.real, m.imag, pole)
    t.write(out / "jost.csv")
    tm.write(out / "jost_m.csv")
    meta = {**_run_meta(spec, sol, cfg), "grid": cfg["jost"]["grid"], "points": int(z.size),
            "pole_threshold": "abs(psi) <= 1e-12 * sum of series term moduli"}
    _write_json(out / "jost.json", meta)
    return ["jost.csv", "jost_m.csv", "jost.json"], meta


def _pole_table(poles) -> _Table:
    t = _Table([("re", "float"), ("im", "float"), ("multiplicity", "int"), ("family", "str"),
                ("res_re", "float"), ("res_im", "float"), ("winding", "int")])
    for p in poles:
        t.add(p.location.real, p.location.imag, p.multiplicity, p.family,
              p.residue.real, p.residue.imag, p.winding_certificate)
    return t


def cmd_poles(cfg, args, out: Path):
    spec, pot, sol = _kernel_for(cfg)
    found = _search(cfg, sol, spec)
    _pole_table(found).write(out / "poles.csv")
    meta = {**_run_meta(spec, sol, cfg), "region": list(found.region), "cells": found.cells,
            "uncovered": [list(r) for r in found.uncovered], "notes": found.notes,
            "poles": [{"location": p.location, "multiplicity": p.multiplicity, "family": p.family,
                       "residue": p.residue, "winding": p.winding_certificate} for p in found]}
    _write_json(out / "poles.json", meta)
    counts = {f: sum(1 for p in found if p.family == f) for f in ("alpha", "beta", "unclassified")}
    return ["poles.csv", "poles.json"], {"counts": counts, "uncovered": len(found.uncovered)}


def cmd_verify_asymptotics(cfg, args, out: Path):
    spec, pot, sol = _kernel_for(cfg)
    found = _search(cfg, sol, spec)
    alpha = sorted((p for p in found if p.family == "alpha"), key=lambda p: -p.location.real)
    ta = _Table([("k", "int"), ("alpha_re", "float"), ("alpha_im", "float"), ("deviation", "float")])
    for p in alpha:
        k = int(round(-p.location.real))
        ta.add(k, p.location.real, p.location.imag, p.location.real + k)
    ta.write(out / "alpha.csv")
    report = {**_run_meta(spec, sol, cfg), "alpha_count": len(alpha),
              "alpha_max_deviation_k_ge_5": max([abs(p.location.real + round(-p.location.real))
                                                 for p in alpha if -p.location.real > 4.5], default=None)}
    upper = sorted((p for p in found if p.family == "beta" and p.location.imag > 0),
                   key=lambda p: p.location.imag)
    tb = _Table([("j", "int"), ("beta_re", "float"), ("beta_im", "float"), ("pred_re", "float"),
                 ("pred_im", "float"), ("re_deviation", "float"), ("spacing_over_pi_a", "float"),
                 ("conjugate_found", "bool")])
    if not pot.degenerate and upper:
        A = constant_A(sol.jump_s_p, spec.p)
        prev = None
        devs, spacings = [], []
        nan = complex(float("nan"), float("nan"))
        for p, j in zip(upper, index_beta_family(upper, A, spec.a, spec.p)):
            # j = 0 marks a pole below the predictor's index range
            pred = predict_poles([j], A, spec.a, spec.p)[0] if j else nan
            dev = p.location.real - pred.real
            sp = (p.location.imag - prev) / (np.pi / spec.a) if prev is not None else float("nan")
            conj = any(p.conjugate_of(q) for q in found if q is not p)
            tb.add(j or 0, p.location.real, p.location.imag, pred.real, pred.imag, dev, sp, conj)
            if j:
                devs.append(abs(dev))
            if prev is not None:
                spacings.append(sp)
            prev = p.location.imag
        report.update({"A": A, "beta_pairs": len(upper),
                       "last_spacings_over_pi_a": spacings[-4:],
                       "last_abs_re_deviations": devs[-5:]})
    else:
        report.update({"A": None, "beta_pairs": len(upper)})
    tb.write(out / "beta.csv")
    _write_json(out / "asymptotics.json", report)
    return ["alpha.csv", "beta.csv", "asymptotics.json"], report


def _read_points(path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise ConfigError(f"test point file not found: {path}", field="wt.test_points")
    if not rows:
        raise ConfigError("test point file is empty", field="wt.test_points")
    start = 1 if rows[0] and rows[0][0].strip().lower() in ("z_re", "re") else 0
    try:
        return np.array([complex(float(r[0]), float(r[1]) if len(r) > 1 else 0.0)
                         for r in rows[start:] if r])
    except ValueError:
        raise ConfigError("test points must be rows z_re,z_im", field="wt.test_points")


def _weyl_model(cfg, sol):
    from .wt import build_weyl_model

    num = cfg["numerics"]
    return build_weyl_model(jost_function(sol), float(num["truncation_radius"]),
                            tol=float(num["pole_tol"]), workers=int(num["workers"]))


def cmd_wt(cfg, args, out: Path):
    from .wt import reconstruct_m, truncation_budget

    path = cfg["wt"].get("test_points")
    if not path:
        raise ConfigError("wt-reconstruct needs test points", field="wt.test_points")
    zs = _read_points(path)
    spec, pot, sol = _kernel_for(cfg)
    model = _weyl_model(cfg, sol)
    J = jost_function(sol)
    t = _Table([("z_re", "float"), ("z_im", "float"), ("m_direct_re", "float"),
                ("m_direct_im", "float"), ("m_recon_re", "float"), ("m_recon_im", "float"),
                ("abs_err", "float")])
    errs = []
    for z in zs:
        d = complex(J.m(z))
        r = reconstruct_m(z, model)
        t.add(z.real, z.imag, d.real, d.imag, r.real, r.imag, abs(r - d))
        errs.append(abs(r - d) / max(abs(d), 1e-300))
    t.write(out / "wt.csv")
    meta = {**_run_meta(spec, sol, cfg), "truncation_radius": model.truncation_radius,
            "poles_used": len(model.poles), "zero_pole_mode": model.zero_pole_mode,
            "m0": model.m0, "m0_prime": model.m0_prime, "max_relative_error": max(errs),
            "budgets": [truncation_budget(z, model) for z in zs], "notes": list(model.notes)}
    _write_json(out / "wt.json", meta)
    return ["wt.csv", "wt.json"], {"max_relative_error": max(errs)}


def cmd_dtn(cfg, args, out: Path):
    from .wt import dtn_multipliers

    spec, pot, sol = _kernel_for(cfg)
    d = cfg["dtn"]
    if d.get("mu_sq") is not None:
        spectrum = shifted_momenta(d["mu_sq"], spec.n)
    else:
        kmax = d.get("sphere_kmax")
        if not isinstance(kmax, int) or kmax < 0:
            raise ConfigError("dtn.sphere_kmax must be a nonnegative integer", field="dtn.sphere_kmax")
        spectrum = shifted_momenta(sphere_spectrum(spec.n, kmax), spec.n)
    J = jost_function(sol)
    model = _weyl_model(cfg, sol) if d.get("source") == "reconstruct" else None
    modes = dtn_multipliers(model, spectrum, pot.f0, pot.f0_prime, spec.n, jost=J,
                            source=d.get("source", "reconstruct"))
    direct = dtn_multipliers(None, spectrum, pot.f0, pot.f0_prime, spec.n, jost=J, source="direct")
    t = _Table([("mu_sq", "float"), ("multiplicity", "int"), ("z", "float"), ("dtn_re", "float"),
                ("dtn_im", "float"), ("direct_re", "float"), ("direct_im", "float"),
                ("collision", "bool")])
    for m, dm in zip(modes, direct):
        t.add(m.mu_sq, m.multiplicity, m.z, m.value.real, m.value.imag, dm.value.real,
              dm.value.imag, bool(m.collision or dm.collision))
    t.write(out / "dtn.csv")
    meta = {**_run_meta(spec, sol, cfg), "source": d.get("source"), "modes": len(modes),
            "f0": pot.f0, "f0_prime": pot.f0_prime}
    _write_json(out / "dtn.json", meta)
    return ["dtn.csv", "dtn.json"], {"modes": len(modes)}


def cmd_marchenko(cfg, args, out: Path):
    from .marchenko import roundtrip

    spec = warp_from_config(cfg)
    num = cfg["numerics"]
    pot = build_potential(spec, grid_size=int(num["grid_size"]))
    res = roundtrip(pot, N=int(num["N"]), dk=float(num["dk"]), K_max=num["K_max"],
                    delta=float(num["delta"]), stride=int(num["x_stride"]),
                    window=float(num["window"]), refine=int(num["refine"]),
                    workers=int(num["workers"]), tail_tol=float(num["tail_tol"]))
    t = _Table([("x", "float"), ("Qf_true", "float"), ("Qf_recovered", "float"), ("abs_err", "float")])
    for x, a, b in zip(res.x, res.qf_true, res.qf_recovered):
        t.add(float(x), float(a), float(b), float(abs(a - b)))
    t.write(out / "roundtrip.csv")
    summary = {"lambda": spec.lam, "a": spec.a, "p": spec.p, "n": spec.n, **res.summary()}
    _write_json(out / "roundtrip.json", summary)
    return ["roundtrip.csv", "roundtrip.json"], {"l2_relative_error": res.l2_error,
                                                 "linf_error": res.linf_error}


COMMANDS = {
    "potential": cmd_potential,
    "kernel": cmd_kernel,
    "jost": cmd_jost,
    "poles": cmd_poles,
    "verify-asymptotics": cmd_verify_asymptotics,
    "wt-reconstruct": cmd_wt,
    "dtn": cmd_dtn,
    "marchenko-roundtrip": cmd_marchenko,
}


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--output-dir", help=f"artifact directory (overrides ${OUTPUT_ENV})")
    common.add_argument("--set", action="append", metavar="PATH=VALUE",
                        help="override any config key, value parsed as JSON")
    common.add_argument("--N", type=int, help="kernel grid intervals (numerics.N)")
    common.add_argument("--workers", type=int, help="worker pool size (numerics.workers)")
    p = argparse.ArgumentParser(prog="warpball", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"warpball {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("potential", parents=[common], help="sample Q_f")
    sub.add_parser("kernel", parents=[common], help="solve for the transformation kernel")
    sj = sub.add_parser("jost", parents=[common], help="Jost function and m on a grid")
    sj.add_argument("--grid", help="re0:re1:im0:im1:n")
    for name, text in (("poles", "locate Regge poles"),
                       ("verify-asymptotics", "compare located poles with the asymptotic predictors")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--region", help="re0:re1:im0:im1")
    sw = sub.add_parser("wt-reconstruct", parents=[common], help="residue reconstruction of m")
    sw.add_argument("--test-points", help="CSV of z_re,z_im")
    sw.add_argument("--truncation-radius", type=float)
    sd = sub.add_parser("dtn", parents=[common], help="Dirichlet-to-Neumann multipliers")
    sd.add_argument("--truncation-radius", type=float)
    sm = sub.add_parser("marchenko-roundtrip", parents=[common], help="forward data then GLM inversion")
    sm.add_argument("--K-max", type=float)
    sm.add_argument("--refine", type=int)
    return p


def _versions() -> dict:
    import scipy

    return {"warpball": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "backend": _accel.BACKEND}


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(command: str, args, cfg: dict, out: Path | None = None) -> tuple:
    """Execute one subcommand; returns ``(output_dir, artifact names, summary)``."""
    out = out or output_dir(args, cfg)
    artifacts, summary = COMMANDS[command](cfg, args, out)
    return out, artifacts, summary


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    out = None
    try:
        cfg = resolve_config(args)
        out = output_dir(args, cfg)
        out, artifacts, summary = run(args.command, args, cfg, out)
        manifest = {"command": args.command, "config_hash": config_hash(cfg), "config": cfg,
                    "versions": _versions(),
                    "artifacts": {a: _file_hash(out / a) for a in artifacts},
                    "wall_time_s": time.perf_counter() - t0}
        _write_json(out / "manifest.json", manifest)
        sys.stdout.write(_to_json({"status": "ok", "command": args.command,
                                   "output_dir": str(out), "summary": summary}) + "\n")
        return 0
    except WarpballError as exc:
        err = {**exc.to_dict(), "exit_code": exc.exit_code, "command": args.command}
        text = _to_json(err)
        sys.stderr.write(text + "\n")
        if out is not None:
            (out / "error.json").write_text(text + "\n")
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
