"""Command-line front end: JSON config in, CSV and JSON reports out.

Exit codes: 0 on success, 2 for configuration or input errors, 3 when a
numerical method fails its accuracy contract.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import analysis
from .core import (ConcentricBall, ConstantVector, DomainSpec, Ellipsoid, LinearX1, Modal,
                   OffCenterBall, RadialVector, validate_domain)
from .exceptions import IllConditioned, NumericalError, SweepTooShort
from .norms import lp_gradient_norms, lp_source_norm
from .quadrature import QuadratureConfig, sphere_points

CSV_COLUMNS = ("epsilon", "p", "grad_lp", "source_lp", "ratio", "converged")
DUAL_COLUMNS = ("epsilon", "p", "source_lp", "grad_lp", "lower_bound", "ratio", "converged")

_NUM = {"type": "number"}
_NUMS = {"type": "array", "items": _NUM, "minItems": 1}
_NUM_OR_LIST = {"oneOf": [_NUM, _NUMS]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["epsilon"],
    "properties": {
        "dimension": {"type": "integer", "minimum": 3},
        "epsilon": _NUM_OR_LIST,
        "p": _NUM_OR_LIST,
        "hole": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["concentric", "off_center", "ellipsoid"]},
                "radius": _NUM,
                "center": _NUMS,
                "semi_axes": _NUMS,
            },
        },
        "source": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["linear_x1", "constant_vector", "radial_power",
                                  "radial_table", "modal"]},
                "vector": _NUMS,
                "coefficient": _NUM,
                "power": {"type": "number", "minimum": 0},
                "r": _NUMS,
                "g": _NUMS,
                "l": {"type": "integer", "minimum": 0},
                "m": {"type": "integer"},
            },
        },
        "solver": {"enum": ["shell", "mfs", "auto"]},
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grading_ratio": _NUM,
                "n_panels": {"type": "integer", "minimum": 1},
                "nodes_per_panel": {"type": "integer", "minimum": 4},
                "n_polar": {"type": "integer", "minimum": 4},
                "n_azimuth": {"type": "integer", "minimum": 4},
                "tol": _NUM,
                "max_refinements": {"type": "integer", "minimum": 1},
            },
        },
        "mfs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_charges": {"type": "integer", "minimum": 1},
                "n_collocation": {"type": "integer", "minimum": 1},
                "inner_scale": _NUM,
                "outer_scale": _NUM,
                "rcond": _NUM,
                "residual_tol": _NUM,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"prefix": {"type": "string"}},
        },
        "samples": {"type": "integer", "minimum": 0},
    },
}


class ConfigError(ValueError):
    pass


class RunConfig:
    """Parsed and validated run configuration."""

    def __init__(self, raw, seed=None):
        try:
            jsonschema.validate(raw, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(k) for k in exc.absolute_path) or "<root>"
            raise ConfigError(f"config {where}: {exc.message}") from None
        self.raw = raw
        self.dim = int(raw.get("dimension", 3))
        eps = raw["epsilon"]
        self.epsilons = [float(e) for e in (eps if isinstance(eps, list) else [eps])]
        p = raw.get("p", [2.0])
        self.ps = [float(x) for x in (p if isinstance(p, list) else [p])]
        self.hole = _hole(raw.get("hole", {"type": "concentric"}))
        self.source = _source(raw.get("source", {"type": "linear_x1"}), self.dim)
        self.solver = raw.get("solver", "auto")
        self.quadrature = QuadratureConfig(**raw.get("quadrature", {}))
        self.mfs = dict(raw.get("mfs", {}))
        if seed is not None:
            self.mfs["seed"] = int(seed)
        self.prefix = raw.get("output", {}).get("prefix", "")
        self.samples = int(raw.get("samples", 0))
        self.domains = [validate_domain(DomainSpec(self.dim, e, self.hole)) for e in self.epsilons]

    @classmethod
    def load(cls, path, seed=None):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON config: {exc}") from None
        return cls(raw, seed)


def _hole(desc):
    kind = desc["type"]
    if kind == "concentric":
        return ConcentricBall(desc.get("radius", 1.0))
    if kind == "off_center":
        if "center" not in desc:
            raise ConfigError("off_center hole needs 'center'")
        return OffCenterBall(tuple(desc["center"]), desc.get("radius", 1.0))
    if "center" not in desc or "semi_axes" not in desc:
        raise ConfigError("ellipsoid hole needs 'center' and 'semi_axes'")
    return Ellipsoid(tuple(desc["center"]), tuple(desc["semi_axes"]))


def _source(desc, dim):
    kind = desc["type"]
    if kind == "linear_x1":
        return LinearX1()
    if kind == "constant_vector":
        vec = desc.get("vector", [1.0] + [0.0] * (dim - 1))
        if len(vec) != dim:
            raise ConfigError(f"constant vector needs {dim} components")
        return ConstantVector(tuple(float(v) for v in vec))
    if kind == "radial_power":
        a, k = float(desc.get("coefficient", 1.0)), float(desc.get("power", 1.0))
        return RadialVector(profile=lambda r: a * np.asarray(r) ** k,
                            derivative=lambda r: a * k * np.asarray(r) ** (k - 1) if k else 0 * r,
                            name=f"{a:g}*r^{k:g}")
    if kind == "radial_table":
        if "r" not in desc or "g" not in desc or len(desc["r"]) != len(desc["g"]):
            raise ConfigError("radial_table needs equal-length 'r' and 'g'")
        return RadialVector.from_table(desc["r"], desc["g"], name="table")
    if dim != 3:
        raise ConfigError("modal sources are three-dimensional")
    a, k = float(desc.get("coefficient", 1.0)), float(desc.get("power", 0.0))
    return Modal(int(desc.get("l", 0)), int(desc.get("m", 0)), lambda r: a * np.asarray(r) ** k)


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return ""
    return "%.17g" % x


def _json_value(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_value) + "\n")


def _out_path(args, cfg, name):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / f"{cfg.prefix}{name}"


def _fit_payload(result, ps, dim):
    fits = {}
    for p in ps:
        pred = analysis.predict_regime(dim, p)
        fit = result.fits.get(p)
        entry = {
            "p": p,
            "prediction": pred.predicted.value,
            "predicted_rate": pred.rate,
            "slope": fit.slope if fit else None,
            "r_squared": fit.r_squared if fit else None,
            "regime": fit.regime.value if fit else None,
            "agreement": analysis.agrees(pred, fit.regime) if fit else None,
        }
        fits[_fmt(p)] = entry
    return fits


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _boundary_residual(sol, domain, n=256):
    if hasattr(sol, "boundary_residual_"):
        return sol.boundary_residual_
    w = sphere_points(n, domain.dim)
    outer = domain.outer_radius * w
    inner = domain.hole_center + domain.inner_distance(w)[:, None] * w
    return float(np.max(np.abs(sol.predict(np.vstack([outer, inner])))))


def _sample_points(domain, n, seed):
    rng = np.random.default_rng(seed)
    pts = []
    while sum(len(p) for p in pts) < n:
        X = rng.uniform(-1.0, 1.0, size=(4 * n, domain.dim)) * domain.outer_radius
        keep = domain.contains(X, rtol=0.0) & (np.linalg.norm(X, axis=1) < 0.999 * domain.outer_radius)
        pts.append(X[keep])
    return np.vstack(pts)[:n]


def cmd_solve(args, cfg):
    if len(cfg.epsilons) != 1:
        raise ConfigError("solve takes a single epsilon")
    domain = cfg.domains[0]
    sol = analysis.solve(domain, cfg.source, cfg.solver, cfg.quadrature, cfg.mfs)
    kind = analysis.choose_solver(domain, cfg.source, cfg.solver)
    grads = lp_gradient_norms(sol, cfg.ps, cfg=cfg.quadrature)
    norms = []
    for p, g in zip(cfg.ps, grads):
        s = lp_source_norm(cfg.source, domain, p, cfg.quadrature)
        norms.append({"p": p, "grad_norm": g.value, "source_norm": s.value,
                      "ratio": g.value / s.value if s.value else None,
                      "converged": g.converged and s.converged,
                      "refinement_delta": g.refinement_delta})
    report = {"dimension": cfg.dim, "epsilon": domain.epsilon, "solver": kind,
              "boundary_residual": _boundary_residual(sol, domain), "norms": norms}
    if kind == "mfs":
        report["condition"] = {"estimate": sol.condition_, "truncated": sol.truncated_condition_,
                               "rank": sol.rank_}
    write_json(_out_path(args, cfg, "solve.json"), report)
    if cfg.samples:
        X = _sample_points(domain, cfg.samples, cfg.mfs.get("seed", 0))
        u, du = sol.evaluate(X)
        cols = [f"x{i + 1}" for i in range(cfg.dim)] + ["u"] + [f"du{i + 1}" for i in range(cfg.dim)]
        write_csv(_out_path(args, cfg, "samples.csv"), cols, np.column_stack([X, u, du]).tolist())
    return 0


def _sweep_rows_csv(rows):
    return [(r.epsilon, r.p, r.grad_norm, r.source_norm, r.ratio, r.converged) for r in rows]


def cmd_sweep(args, cfg):
    if len(cfg.epsilons) < analysis.FIT_POINTS:
        raise ConfigError(f"sweep needs at least {analysis.FIT_POINTS} epsilon values")
    status = 0
    try:
        result = analysis.epsilon_sweep(cfg.epsilons, cfg.source, cfg.ps, cfg.dim, cfg.hole,
                                        cfg.solver, cfg.quadrature, cfg.mfs, args.threads)
    except SweepTooShort as exc:
        result = exc.result
        print(f"error: {exc}", file=sys.stderr)
        status = 3
    write_csv(_out_path(args, cfg, "sweep.csv"), CSV_COLUMNS, _sweep_rows_csv(result.rows))
    payload = {"dimension": cfg.dim, "fits": _fit_payload(result, cfg.ps, cfg.dim),
               "errors": [{"epsilon": r.epsilon, "p": r.p, "error": r.error}
                          for r in result.rows if r.error]}
    if len(cfg.ps) == 1:
        payload.update(payload["fits"][_fmt(cfg.ps[0])])
    write_json(_out_path(args, cfg, "sweep.json"), payload)
    return status


def cmd_check_counterexample(args, cfg):
    integral = analysis.counterexample_integral(cfg.source, cfg.dim, cfg.quadrature)
    u0 = analysis.limit_point_value(cfg.source, cfg.dim, cfg.quadrature)
    payload = {"dimension": cfg.dim, "integral": integral, "u0": u0,
               "nonzero": abs(integral) > 1e-8}
    write_json(_out_path(args, cfg, "counterexample.json"), payload)
    return 0


def cmd_dual_blowup(args, cfg):
    if len(cfg.ps) != 1:
        raise ConfigError("dual-blowup takes a single p")
    p = cfg.ps[0]
    status = 0
    try:
        result = analysis.dual_blowup_sweep(cfg.epsilons, p, cfg.dim, cfg.source,
                                            cfg.quadrature, args.threads)
    except SweepTooShort as exc:
        result = exc.result
        print(f"error: {exc}", file=sys.stderr)
        status = 3
    rows = [(r.epsilon, r.p, r.source_norm, r.grad_norm, r.lower_bound, r.ratio, r.converged)
            for r in result.rows]
    write_csv(_out_path(args, cfg, "dual_blowup.csv"), DUAL_COLUMNS, rows)
    payload = {"dimension": cfg.dim, **_fit_payload(result, [p], cfg.dim)[_fmt(p)]}
    write_json(_out_path(args, cfg, "dual_blowup.json"), payload)
    return status


def cmd_validate(args, cfg):
    summary = {"dimension": cfg.dim, "epsilon": cfg.epsilons, "p": cfg.ps,
               "solver": [analysis.choose_solver(d, cfg.source, cfg.solver) for d in cfg.domains]}
    print(json.dumps(summary, sort_keys=True))
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "check-counterexample": cmd_check_counterexample,
    "dual-blowup": cmd_dual_blowup,
    "validate": cmd_validate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="smallholes",
                                     description="Gradient estimates on perforated balls.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="JSON run configuration")
        cmd.add_argument("--out", default=".", help="output directory")
        cmd.add_argument("--threads", type=int, default=1)
        cmd.add_argument("--seed", type=int, default=None, help="seed for MFS sampling points")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = RunConfig.load(args.config, args.seed)
        return COMMANDS[args.command](args, cfg)
    except IllConditioned as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(json.dumps(exc.report(), sort_keys=True), file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError, NotImplementedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
