"""Command-line entry point.

Subcommands::

    basis check      orthonormality and sup-norm sweep of a basis
    kernel analyze   coefficient aggregates and canonicality of a kernel
    stat eval        U/V-statistic of one simulated sample
    bound compute    tail-bound certificate (JSON, with constant trace)
    bound curve      bound values on the configured grid (CSV)
    mc run           Monte Carlo tail curve (CSV) plus envelope report
    verify           bound compute + mc run + envelope check
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .basis import check_orthonormality, make_finite_basis, make_trig_basis
from .bounds import certificate_A, certificate_B, certificate_dedecker, certificate_hoeffding
from .config import (
    ConfigError,
    ExperimentConfig,
    build_basis,
    build_certificate,
    build_grid,
    build_kernel,
    build_process,
    load_config,
    load_tensor,
)
from .kernels import (
    CoefficientTensor,
    canonicality_defect,
    coefficient_norm,
    hoeffding_project,
    kernel_from_coefficients,
    kernel_mean,
    named_kernel,
)
from .mc import TailCurve, run_hoeffding_experiment, run_tail_experiment, verify_envelope
from .mixing import check_condition, phi_profile
from .seeding import derive_seed
from .stats import (
    NAIVE_MAX_M,
    NAIVE_MAX_N,
    u_statistic_naive,
    u_statistic_series,
    v_statistic_naive,
    v_statistic_series,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


class Context:
    """Resolved config plus output handling shared by all subcommands."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.cfg = load_config(args.config) if args.config else ExperimentConfig.from_dict({})
        if args.seed is not None:
            self.cfg.set("mc", "seed", args.seed)
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("mc.workers", "must be positive")
            self.cfg.set("mc", "workers", args.workers)
        out = args.out or self.cfg.get("output", "dir")
        self.out = Path(out) if out else None

    @property
    def provenance(self) -> dict:
        return {
            "config_hash": self.cfg.config_hash,
            "master_seed": self.cfg.seed,
            "version": __version__,
        }

    def emit(self, name: str, text: str) -> None:
        if self.out is None:
            sys.stdout.write(text)
            return
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(text)

    def emit_json(self, name: str, payload: dict) -> None:
        self.emit(name, _dump({"provenance": self.provenance, **payload}))


def _parse_probs(text: Optional[str]):
    return None if text is None else [float(p) for p in text.split(",")]


def cmd_basis_check(ctx: Context) -> int:
    a = ctx.args
    if a.basis == "finite" or a.probabilities:
        basis = make_finite_basis(_parse_probs(a.probabilities))
    elif a.basis == "trig":
        basis = make_trig_basis()
    else:
        basis = build_basis(ctx.cfg, build_process(ctx.cfg) if ctx.cfg.get("process", "kind") else None)
    max_index = a.max_index or min(basis.max_index or 8, 8)
    report = check_orthonormality(basis, max_index, a.tolerance)
    pts = basis.measure.grid() if basis.name == "trig" else np.arange(basis.max_index + 1)
    sweep = max(float(np.max(np.abs(basis.evaluate(i, pts)))) for i in range(max_index + 1))
    ok = report.passed and sweep <= basis.bound + 1e-12
    ctx.emit_json("basis_check.json", {
        "basis": basis.to_dict(),
        "defect": report.defect,
        "tolerance": report.tolerance,
        "max_index": report.max_index,
        "passed": report.passed,
        "message": report.message,
        "sup_sweep": sweep,
        "bound_respected": sweep <= basis.bound + 1e-12,
    })
    return EXIT_OK if ok else EXIT_FAIL


def _tensor_and_basis(ctx: Context):
    a = ctx.args
    tensor = CoefficientTensor.from_json(Path(a.tensor).read_text()) if a.tensor else load_tensor(ctx.cfg)
    if a.basis == "trig":
        basis = make_trig_basis()
    elif a.basis == "finite" or getattr(a, "probabilities", None):
        basis = make_finite_basis(_parse_probs(a.probabilities))
    else:
        process = build_process(ctx.cfg) if ctx.cfg.get("process", "kind") else None
        basis = build_basis(ctx.cfg, process)
    return tensor, basis


def cmd_kernel_analyze(ctx: Context) -> int:
    tensor, basis = _tensor_and_basis(ctx)
    explicit = ctx.args.explicit or ctx.cfg.get("kernel", "explicit")
    if explicit:
        kernel = named_kernel(explicit, basis.measure)
        projected = hoeffding_project(kernel)
        payload = {
            "kernel": explicit,
            "m": kernel.order,
            "mean": kernel_mean(kernel),
            "canonicality_defect": canonicality_defect(kernel),
            "projected_defect": canonicality_defect(projected),
        }
        ctx.emit_json("kernel_analysis.json", payload)
        return EXIT_OK
    if tensor is None:
        raise ConfigError("kernel", "need a tensor (--tensor or kernel.tensor/entries) or --explicit")
    kernel = kernel_from_coefficients(tensor, basis)
    defect = canonicality_defect(kernel)
    payload = {
        "m": tensor.order,
        "entries": len(tensor),
        "basis": basis.name,
        "sum_abs": coefficient_norm(tensor, 1.0),
        "sum_sqrt_abs": coefficient_norm(tensor, 0.5),
        "canonicality_defect": defect,
    }
    ctx.emit_json("kernel_analysis.json", payload)
    return EXIT_OK


def cmd_stat_eval(ctx: Context) -> int:
    cfg = ctx.cfg
    process = build_process(cfg)
    basis = build_basis(cfg, process)
    tensor = load_tensor(cfg)
    if tensor is None:
        raise ConfigError("kernel", "stat eval needs a coefficient tensor")
    n = cfg.require("statistic", "n")
    seed = derive_seed(cfg.seed, process.id, 0)
    sample = process.sample(seed, n)
    payload = {
        "process": process.id,
        "n": n,
        "sample_seed": seed,
        "V_series": v_statistic_series(tensor, basis, sample),
        "U_series": u_statistic_series(tensor, basis, sample),
    }
    if n <= NAIVE_MAX_N and tensor.order <= NAIVE_MAX_M:
        kernel = kernel_from_coefficients(tensor, basis)
        payload["V_naive"] = v_statistic_naive(kernel, sample)
        payload["U_naive"] = u_statistic_naive(kernel, sample)
    ctx.emit_json("stat_eval.json", payload)
    return EXIT_OK


def _certificate(ctx: Context):
    a = ctx.args
    cfg = ctx.cfg
    if getattr(a, "epsilon", None) is not None:
        cfg.set("bound", "epsilon", a.epsilon)
    process = build_process(cfg)
    tensor, basis = _tensor_and_basis(ctx)
    cert = build_certificate(cfg, process, basis, tensor, getattr(a, "condition", None))
    return process, basis, tensor, cert


def cmd_bound_compute(ctx: Context) -> int:
    process, basis, tensor, cert = _certificate(ctx)
    if cert is None:
        raise ConfigError("bound.condition", "missing required value")
    payload = {"process": process.id, "certificate": cert.to_dict()}
    if cert.condition in ("A", "B") and tensor is not None:
        report = check_condition(process, tensor, cert.condition,
                                 epsilon=cert.epsilon, c0=ctx.cfg.get("bound", "c0"),
                                 c1=ctx.cfg.get("bound", "c1", 1.0))
        payload["hypothesis"] = {
            "condition": report.which,
            "passed": report.passed,
            "aggregates": report.aggregates,
            "message": report.message,
        }
    ctx.emit_json("certificate.json", payload)
    return EXIT_OK


def cmd_bound_curve(ctx: Context) -> int:
    cfg = ctx.cfg
    process = build_process(cfg)
    tensor, basis = _tensor_and_basis(ctx)
    profile = phi_profile(process)
    n = cfg.get("statistic", "n")
    columns: dict[str, object] = {}
    if tensor is not None:
        columns["bound_A"] = certificate_A(tensor, basis.bound, profile,
                                           cfg.get("bound", "c0"), cfg.get("bound", "c1"))
        eps = cfg.get("bound", "epsilon")
        if eps is not None:
            columns["bound_B"] = certificate_B(tensor, basis.bound, profile, eps)
        if tensor.order == 1 and n is not None and n >= 2:
            columns["dedecker"] = certificate_dedecker(tensor, basis.bound, profile, n)
    if n is not None and cfg.get("bound", "b") is not None:
        m = tensor.order if tensor is not None else 2
        columns["hoeffding"] = certificate_hoeffding(n, m, cfg.get("bound", "a", 0.0),
                                                     cfg.get("bound", "b"))
    if not columns:
        raise ConfigError("kernel", "no bound applies to this configuration")
    primary = build_certificate(cfg, process, basis, tensor) or next(iter(columns.values()))
    grid = build_grid(cfg, primary)
    values = {name: np.asarray(c.bound(grid), dtype=float) for name, c in columns.items()}
    lines = [f"# {k}={v}" for k, v in ctx.provenance.items()]
    lines.append(",".join(["x", *values]))
    for j, x in enumerate(grid):
        lines.append(",".join([f"{x:.17g}", *(f"{v[j]:.17g}" for v in values.values())]))
    ctx.emit("bound_curve.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def _run_curve(ctx: Context, require_bound: bool):
    cfg = ctx.cfg
    process = build_process(cfg)
    basis = build_basis(cfg, process)
    tensor = load_tensor(cfg)
    cert = build_certificate(cfg, process, basis, tensor)
    if require_bound and cert is None:
        raise ConfigError("bound.condition", "verify needs a bound condition")
    grid = build_grid(cfg, cert)
    n = cfg.require("statistic", "n")
    reps = cfg.require("mc", "reps")
    if cert is not None and cert.condition == "hoeffding1963":
        kernel = build_kernel(cfg, basis, tensor)
        curve = run_hoeffding_experiment(kernel, process, n, reps, grid, cfg.seed,
                                         kernel_mean(kernel), cfg.workers)
    else:
        if tensor is None:
            raise ConfigError("kernel", "mc run needs a coefficient tensor")
        kind = cfg.get("statistic", "kind", "V")
        if kind not in ("U", "V"):
            raise ConfigError("statistic.kind", "must be 'U' or 'V'")
        curve = run_tail_experiment(process, tensor, basis, kind, n, reps, grid, cfg.seed,
                                    cfg.workers)
    if cert is not None:
        curve = curve.with_bound(cert.bound(curve.x_grid))
    return cert, curve


def _csv_header(ctx: Context, curve: TailCurve) -> dict:
    return {
        **ctx.provenance,
        "process": curve.meta.get("process"),
        "stat": curve.stat_kind,
        "n": curve.meta.get("n"),
        "reps": curve.reps,
    }


def _report(ctx: Context, cert, curve: TailCurve) -> int:
    ctx.emit("curve.csv", curve.to_csv(_csv_header(ctx, curve)))
    if cert is None:
        return EXIT_OK
    report = verify_envelope(curve)
    ctx.emit_json("report.json", {
        "condition": cert.condition,
        "reps": curve.reps,
        **report.to_dict(),
    })
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_mc_run(ctx: Context) -> int:
    cert, curve = _run_curve(ctx, require_bound=False)
    return _report(ctx, cert, curve)


def cmd_verify(ctx: Context) -> int:
    cert, curve = _run_curve(ctx, require_bound=True)
    ctx.emit_json("certificate.json", {"certificate": cert.to_dict()})
    return _report(ctx, cert, curve)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML experiment config")
    common.add_argument("--seed", type=int, help="override mc.seed")
    common.add_argument("--workers", type=int, help="override mc.workers")
    common.add_argument("--out", help="output directory (default: stdout)")

    shape = argparse.ArgumentParser(add_help=False)
    shape.add_argument("--tensor", help="coefficient tensor JSON (overrides the config)")
    shape.add_argument("--basis", choices=["trig", "finite"], help="override basis.kind")
    shape.add_argument("--probabilities", help="comma-separated law for a finite basis")

    parser = argparse.ArgumentParser(prog="canonstat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)

    def sub(group: str, actions: dict[str, tuple]):
        p = groups.add_parser(group)
        acts = p.add_subparsers(dest="action", required=True)
        for name, (func, parents, extra) in actions.items():
            q = acts.add_parser(name, parents=parents)
            q.set_defaults(func=func)
            extra(q)

    def nothing(p):
        pass

    def basis_args(p):
        p.add_argument("--basis", choices=["trig", "finite"])
        p.add_argument("--probabilities")
        p.add_argument("--max-index", type=int)
        p.add_argument("--tolerance", type=float, default=1e-10)

    def kernel_args(p):
        p.add_argument("--explicit", help="named explicit kernel (product, exp_sum, cos_diff)")

    def bound_args(p):
        p.add_argument("--condition", choices=["A", "B", "dedecker", "hoeffding1963"])
        p.add_argument("--epsilon", type=float)

    sub("basis", {"check": (cmd_basis_check, [common], basis_args)})
    sub("kernel", {"analyze": (cmd_kernel_analyze, [common, shape], kernel_args)})
    sub("stat", {"eval": (cmd_stat_eval, [common], nothing)})
    sub("bound", {
        "compute": (cmd_bound_compute, [common, shape], bound_args),
        "curve": (cmd_bound_curve, [common, shape], nothing),
    })
    sub("mc", {"run": (cmd_mc_run, [common], nothing)})
    v = groups.add_parser("verify", parents=[common])
    v.set_defaults(func=cmd_verify)
    return parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(Context(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())
