"""Command line front end: ``epsrb validate|solve|offline|online|report``.

Exit codes: 0 success, 2 assumption violation / parameter outside the box /
stale basis, 3 solver failure or unmet tolerance, 64 unusable configuration
or arguments.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys

import numpy as np

from . import elliptic
from .archive import load_basis, save_basis
from .config import load_config, parse_config
from .exceptions import (
    ArchiveMismatch,
    AssumptionViolation,
    ConfigError,
    ContainmentFailure,
    EmptyBasis,
    ParameterOutOfDomain,
    SolverError,
    StagnationWithoutConvergence,
)
from .greedy import TrainingGrid, default_workers, reconstruct_online, surrogate_report, train_offline
from .tychonoff import audit_containment, estimate_eta_interval

log = logging.getLogger("epsrb")

EXIT_OK = 0
EXIT_ASSUMPTION = 2
EXIT_SOLVER = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


def _num(x):
    """Round-trip decimal text for a float (``null`` for non-finite in JSON)."""
    return repr(float(x))


def _json_float(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _parse_nu(text):
    try:
        return np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"cannot parse parameter vector {text!r}")


def _out_dir(args):
    if args.out is None:
        return None
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {args.out!r}: {exc}")
    if not os.access(args.out, os.W_OK):
        raise UsageError(f"output directory {args.out!r} is not writable")
    return args.out


def _emit(args, name, text):
    """Write ``text`` to ``<out>/<name>`` or, without ``--out``, to stdout."""
    out = _out_dir(args)
    if out is None:
        sys.stdout.write(text)
        return None
    path = os.path.join(out, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _config(args):
    if args.config is None:
        return parse_config({}, source="<default>")
    return load_config(args.config)


def _validation_samples(family, cfg, seed):
    parts = [family.grid(cfg.n_nu)]
    if cfg.n_validation:
        parts.append(family.sample(cfg.n_validation, seed=seed))
    return np.vstack(parts)


# subcommands ----------------------------------------------------------------

def cmd_validate(args):
    cfg = _config(args)
    family = cfg.build_family(eps=args.eps)
    samples = _validation_samples(family, cfg, args.seed)
    checks = {}
    report = {"config": cfg.source, "n": family.n, "eps": family.eps, "alpha": family.coeff.alpha}

    coer = elliptic.coercivity_report(family, samples)
    report["coercivity"] = coer
    checks["H1"] = coer["ok"]

    norms = family.target_norms(samples)
    report["f_minus"] = float(norms.min())
    checks["A3"] = bool(norms.min() > family.eps)

    if checks["H1"]:
        lam_norms = [family.operator(nu).gram_operator().norm() for nu in samples]
        report["L_plus"] = float(max(lam_norms))
        c = elliptic.lower_gram_constant(family, samples)
        report["A2_constant"] = c
        checks["A2"] = bool(c > 0)
        gn = elliptic.graph_norm_constants(family, samples)
        report["graph_norm"] = gn
        checks["H3"] = bool(np.isfinite(gn["ratio"]) and gn["c_lo"] > 0)
        report["shifted_norm"] = elliptic.shifted_norm_bounds(family, samples[0], beta=-1.0)

    report["checks"] = checks
    failed = [k for k, ok in checks.items() if not ok]
    report["status"] = "ok" if not failed else "failed"
    _emit(args, "validate.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    for name in failed:
        print(f"{name} violated", file=sys.stderr)
    return EXIT_ASSUMPTION if failed else EXIT_OK


def cmd_solve(args):
    cfg = _config(args)
    if args.nu is None or len(args.nu) != 1:
        raise UsageError("solve needs exactly one --nu")
    family = cfg.build_family(eps=args.eps)
    nu = family.check_nu(_parse_nu(args.nu[0]))
    sol = elliptic.solve_elliptic_eps(family, nu)
    record = {
        "nu": nu.tolist(),
        "eps": family.eps,
        "u_norm_X": family.domain.norm(sol.u_tilde),
        "misfit": sol.misfit,
        "eta_star": _json_float(sol.eta_star),
        "s": sol.s,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "zero_solution": sol.is_zero,
        "condition": sol.condition,
    }
    _emit(args, "solve.json", json.dumps(record, indent=2, sort_keys=True) + "\n")
    if args.dump:
        out = _out_dir(args) or "."
        if args.dump == "csv":
            x = elliptic.grid_points(family.n)
            text = _csv_text(["x", "u"], [[_num(a), _num(b)] for a, b in zip(x, sol.u_tilde)])
            with open(os.path.join(out, "u.csv"), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            with open(os.path.join(out, "u.bin"), "wb") as fh:
                fh.write(np.ascontiguousarray(sol.u_tilde, dtype="<f8").tobytes())
    return EXIT_OK


def cmd_offline(args):
    cfg = _config(args)
    out = _out_dir(args) or "."
    family = cfg.build_family(eps=args.eps)
    delta = cfg.delta if args.delta is None else args.delta
    if delta < 0:
        raise UsageError("--delta must be nonnegative")
    nus = family.grid(cfg.n_nu)
    family.check_feasible(nus)
    interval = estimate_eta_interval(family, nus, cfg.safety_factor)
    grid = TrainingGrid.from_interval(nus, interval, cfg.n_eta, cfg.eta_spacing)

    status = EXIT_OK
    warning = None
    try:
        basis = train_offline(family, grid, delta, workers=args.workers, projection=cfg.projection)
    except StagnationWithoutConvergence as exc:
        basis = exc.basis
        warning = f"stagnation: {exc}"
        status = EXIT_SOLVER

    containment = None
    if cfg.n_validation:
        try:
            etas = audit_containment(interval, family, family.sample(cfg.n_validation, seed=args.seed))
            containment = {"ok": True, "eta_min": float(etas.min()), "eta_max": float(etas.max())}
        except ContainmentFailure as exc:
            containment = {"ok": False, "message": str(exc)}
            warning = warning or f"containment: {exc}"
            status = EXIT_SOLVER

    training = {
        "nu_points": grid.nu_points.tolist(),
        "eta_points": grid.eta_points.tolist(),
        "eta_interval": [interval.eta_minus, interval.eta_plus],
        "v_bounds": [interval.v_minus, interval.v_plus],
    }
    save_basis(basis, family, os.path.join(out, "basis.rbz"), training=training,
               extra={"warning": warning, "containment": containment})

    d = family.n_params
    header = ["iteration"] + [f"selected_nu_{k + 1}" for k in range(d)] + ["selected_eta", "max_surrogate"]
    rows = [
        [str(i + 1)] + [_num(v) for v in nu] + [_num(eta), _num(basis.history[i + 1])]
        for i, (nu, eta) in enumerate(basis.selected)
        if i + 1 < len(basis.history)
    ]
    with open(os.path.join(out, "decay.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_csv_text(header, rows))

    summary = {
        "m": basis.size,
        "converged": basis.converged,
        "delta": delta,
        "final_surrogate": basis.history[-1] if basis.history else None,
        "eta_interval": [interval.eta_minus, interval.eta_plus],
        "containment": containment,
        "warning": warning,
    }
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if warning:
        print(f"warning: {warning}", file=sys.stderr)
    return status


def cmd_online(args):
    cfg = _config(args)
    if args.basis is None:
        raise UsageError("online needs --basis")
    family = cfg.build_family(eps=args.eps)
    basis = load_basis(args.basis, family)
    nus = [_parse_nu(t) for t in (args.nu or [])]
    if args.random:
        nus.extend(family.sample(args.random, seed=args.seed))
    limit = family.eps * (1.0 + cfg.tol_online)

    d = family.n_params
    header = [f"nu_{k + 1}" for k in range(d)] + ["misfit", "m", "alphas_hash"]
    rows, violators = [], []
    for nu in nus:
        nu = family.check_nu(nu)
        res = reconstruct_online(basis, family, nu)
        digest = hashlib.sha256(np.ascontiguousarray(res.alphas, dtype="<f8").tobytes()).hexdigest()[:16]
        rows.append([_num(v) for v in nu] + [_num(res.misfit), str(res.m), digest])
        if res.misfit > limit:
            violators.append(nu.tolist())
    _emit(args, "online.csv", _csv_text(header, rows))
    if violators:
        print(f"misfit above eps*(1+tol_online) at nu={violators}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_report(args):
    cfg = _config(args)
    if args.basis is None:
        raise UsageError("report needs --basis")
    family = cfg.build_family(eps=args.eps)
    basis = load_basis(args.basis, family)
    training = basis.metadata["training"]
    grid = TrainingGrid(training["nu_points"], training["eta_points"])
    d = family.n_params
    header = [f"nu_{k + 1}" for k in range(d)] + [
        "eta", "surrogate", "true_error", "effectivity", "c_minus", "c_plus"]
    rows = [
        [_num(v) for v in r["nu"]]
        + [_num(r[k]) for k in ("eta", "surrogate", "true_error", "effectivity", "c_minus", "c_plus")]
        for r in surrogate_report(basis, grid, family)
    ]
    _emit(args, "report.csv", _csv_text(header, rows))
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "offline": cmd_offline,
    "online": cmd_online,
    "report": cmd_report,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="epsrb",
        description="Minimal-norm eps-solutions and greedy reduced bases for "
                    "parametric ill-posed elliptic problems.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", metavar="PATH", help="TOML family configuration (default: built-in)")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--nu", metavar="V1,V2", action="append",
                        help="parameter vector; repeat for several (online)")
    parser.add_argument("--eps", type=float, help="override eps")
    parser.add_argument("--delta", type=float, help="override the greedy tolerance")
    parser.add_argument("--workers", type=int, default=None,
                        help="threads for the offline sweep (default: $EPSRB_WORKERS or CPU count)")
    parser.add_argument("--seed", type=int, default=0, help="seed for validation samples")
    parser.add_argument("--basis", metavar="PATH", help="basis archive (online, report)")
    parser.add_argument("--random", type=int, default=0, metavar="N",
                        help="online: add N parameters drawn uniformly with --seed")
    parser.add_argument("--dump", choices=("csv", "bin"), help="solve: also write the solution vector")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers is None:
        args.workers = default_workers()
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AssumptionViolation, ParameterOutOfDomain, ArchiveMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (SolverError, EmptyBasis) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
