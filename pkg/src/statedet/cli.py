"""Command-line experiments: ``python -m statedet <subcommand> ...``.

Every subcommand is deterministic for a fixed seed. CSV goes to ``--out`` (or
stdout) with a header row and 12 significant digits; a one-line summary goes
to stderr. Exit status: 0 success, 1 failed to converge / check failed,
2 input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from typing import Any, Optional, Sequence

import numpy as np

from .core import RandomSource, random_state, ray_distance, state_to_json
from .imposition import (
    ImpositionData,
    impose_distribution,
    impose_phases,
    load_distributions,
    post_imposition_bound,
)
from .observables import build_observable, parse_observable
from .partners import (
    J_SURFACES,
    enumerate_partners,
    j_bases,
    j_distributions,
    j_partner_construct,
    pathological_expected_count,
    sample_on_surface,
)
from .reconstruct import ReconstructionConfig, contraction_factors, limit_distances, reconstruct

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2

# Subcommand defaults; a --config file overrides these, flags override both.
DEFAULTS: dict[str, dict[str, Any]] = {
    "common": {
        "dim": 3, "seed": 0, "tol": 1e-12, "max_cycles": 500, "restart": "orthogonal",
        "order": "cyclic", "out": None, "format": "csv", "stall_window": 20,
        "stall_factor": 0.99, "max_restarts": 10,
    },
    "scatter-t": {"obs": ["random:1"], "trials": 8000},
    "scatter-p": {"obs": ["random:1"], "trials": 8000},
    "converge": {"obs": ["mub:0", "mub:1", "mub:2"], "trials": 1},
    "reconstruct": {"obs": [], "trials": 1, "format": "json"},
    "partners": {"obs": ["mub:0", "mub:1"], "trials": 100, "format": "json", "uniform": False},
    "pathological": {"obs": [], "trials": 600, "m": 3, "format": "json"},
    "j-symmetry": {"obs": [], "trials": 100, "crosscheck": 2, "format": "json"},
}


class InputError(Exception):
    """Bad command-line or file input; maps to exit status 2."""


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from None


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _resolve(args: argparse.Namespace) -> dict[str, Any]:
    opts = dict(DEFAULTS["common"])
    opts.update(DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config) as fh:
                file_opts = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
        opts.update({k.replace("-", "_"): v for k, v in file_opts.items()})
    for key, value in vars(args).items():
        if key not in ("command", "config", "func") and value is not None:
            opts[key] = value
    return opts


def _recon_config(opts, stream: int = 1) -> ReconstructionConfig:
    try:
        return ReconstructionConfig(
            max_cycles=int(opts["max_cycles"]),
            residual_tol=float(opts["tol"]),
            stall_window=int(opts["stall_window"]),
            stall_factor=float(opts["stall_factor"]),
            max_restarts=int(opts["max_restarts"]),
            restart_policy=opts["restart"],
            ordering_policy={"cyclic": "fixed-cyclic", "random": "random-per-cycle"}.get(opts["order"], opts["order"]),
            rng=RandomSource(int(opts["seed"]), stream),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _bases(opts):
    try:
        return [build_observable(parse_observable(o, int(opts["dim"]))) for o in opts["obs"]]
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _generator(opts) -> np.ndarray:
    return random_state(int(opts["dim"]), RandomSource(int(opts["seed"]), 0))


def _echo(opts) -> dict:
    return {k: v for k, v in sorted(opts.items()) if k != "out"}


# ---------------------------------------------------------------------------


def _scatter(opts, phase: bool) -> int:
    bases = _bases(opts)
    if len(bases) != 1:
        raise InputError("scatter experiments take exactly one --obs")
    basis = bases[0]
    phi = _generator(opts)
    data = ImpositionData.from_state(basis, phi)
    bound = post_imposition_bound(data)
    psis = RandomSource(int(opts["seed"]), 1).generator()
    rows = []
    for _ in range(int(opts["trials"])):
        psi = random_state(basis.dim, psis)
        moved = impose_phases(basis, phi, psi) if phase else impose_distribution(data, psi)
        rows.append((ray_distance(psi, phi), ray_distance(moved, phi)))
    above = sum(after > before + 1e-12 for before, after in rows)
    violations = sum(after > bound + 1e-12 for _, after in rows)
    summary = {"rows": len(rows), "above_diagonal": above, "bound": bound, "bound_violations": violations}
    if opts["format"] == "json":
        _emit(_json({"config": _echo(opts), "summary": summary, "rows": rows}), opts["out"])
    else:
        _emit(_csv(["d_before", "d_after"], rows), opts["out"])
    print(" ".join(f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in summary.items()), file=sys.stderr)
    return EXIT_OK


def cmd_scatter_t(opts) -> int:
    return _scatter(opts, phase=False)


def cmd_scatter_p(opts) -> int:
    return _scatter(opts, phase=True)


def cmd_converge(opts) -> int:
    bases = _bases(opts)
    phi = _generator(opts)
    data = [ImpositionData.from_state(b, phi) for b in bases]
    config = _recon_config(opts)
    result = reconstruct(data, config, reference=phi)
    rows = [(e.cycle, e.distance, e.residual) for e in result.trace.entries]
    summary: dict[str, Any] = {"status": result.status, "restarts": result.restarts_used, "cycles": len(rows)}
    if result.converged:
        _, dists = limit_distances(data, config)
        ratios = contraction_factors(dists)
        summary["median_contraction"] = float(np.median(ratios)) if ratios else float("nan")
        summary["limit"] = "generator" if ray_distance(result.final_state, phi) < 1e-6 else "partner"
    if opts["format"] == "json":
        _emit(_json({"config": _echo(opts), "summary": summary,
                     "trace": [dict(zip(("cycle", "distance", "residual"), r)) for r in rows]}), opts["out"])
    else:
        _emit(_csv(["cycle", "distance", "residual"], rows), opts["out"])
    print(" ".join(f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in summary.items()), file=sys.stderr)
    return EXIT_OK if result.converged else EXIT_FAILED


def _load(opts) -> list[ImpositionData]:
    try:
        return load_distributions(opts["input"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{opts['input']}: {exc}") from None


def cmd_reconstruct(opts) -> int:
    if not opts.get("input"):
        raise InputError("reconstruct needs --input FILE")
    data = _load(opts)
    config = _recon_config(opts)
    result = reconstruct(data, config)
    if opts["format"] == "csv":
        _emit(result.trace.to_csv(), opts["out"])
    else:
        report = result.to_dict(config)
        report["options"] = _echo(opts)
        _emit(_json(report), opts["out"])
    print(f"status={result.status} restarts={result.restarts_used} residual={_fmt(result.final_residual)}",
          file=sys.stderr)
    return EXIT_OK if result.converged else EXIT_FAILED


def _partner_report(data, opts, extra: dict) -> tuple[dict, Any]:
    pset = enumerate_partners(data, int(opts["trials"]), _recon_config(opts))
    report = pset.to_dict()
    report.update(extra)
    report["config"] = _echo(opts)
    return report, pset


def cmd_partners(opts) -> int:
    extra: dict[str, Any] = {}
    if opts.get("input"):
        data = _load(opts)
    else:
        bases = _bases(opts)
        if opts["uniform"]:
            data = [ImpositionData(b, np.full(b.dim, 1 / np.sqrt(b.dim))) for b in bases]
            if all(o.startswith("mub:") for o in opts["obs"]):
                extra["expected_count"] = pathological_expected_count(int(opts["dim"]), len(bases))
        else:
            phi = _generator(opts)
            extra["generator"] = state_to_json(phi)
            data = [ImpositionData.from_state(b, phi) for b in bases]
    report, pset = _partner_report(data, opts, extra)
    _emit(pset.to_csv() if opts["format"] == "csv" else _json(report), opts["out"])
    print(f"partners={len(pset)} hits={pset.hit_counts} failures={pset.failures}"
          + (f" expected={extra['expected_count']}" if "expected_count" in extra else ""), file=sys.stderr)
    return EXIT_OK if len(pset) else EXIT_FAILED


def cmd_pathological(opts) -> int:
    n, m = int(opts["dim"]), int(opts["m"])
    try:
        expected = pathological_expected_count(n, m)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if m > n:
        raise InputError("with all N + 1 bases uniform no state exists; use M <= N")
    specs = [f"mub:{i}" for i in range(m)]
    bases = _bases({**opts, "obs": specs})
    data = [ImpositionData(b, np.full(n, 1 / np.sqrt(n))) for b in bases]
    report, pset = _partner_report(data, opts, {"expected_count": expected, "observables": specs})
    report["match"] = len(pset) == expected
    _emit(pset.to_csv() if opts["format"] == "csv" else _json(report), opts["out"])
    print(f"N={n} M={m} expected={expected} found={len(pset)} hits={pset.hit_counts}", file=sys.stderr)
    return EXIT_OK if report["match"] else EXIT_FAILED


def cmd_j_symmetry(opts) -> int:
    rng = RandomSource(int(opts["seed"]), 2).generator()
    samples = int(opts["trials"])
    n_cross = int(opts["crosscheck"])
    rows = []
    failures = []
    for surface in J_SURFACES:
        worst = 0.0
        verified = 0
        rediscovered = checked = 0
        for i in range(samples):
            state = sample_on_surface(surface, rng)
            partners = j_partner_construct(state)
            err = max(float(np.max(np.abs(j_distributions(p) - j_distributions(state)))) for p in partners)
            worst = max(worst, err)
            if err <= 1e-10:
                verified += 1
            else:
                failures.append({"surface": surface, "state": state_to_json(state.vector), "error": err})
            if i < n_cross:
                data = [ImpositionData.from_state(b, state.vector) for b in j_bases()]
                cfg = replace(_recon_config(opts), rng=RandomSource(int(opts["seed"]), 3, (len(rows), i)))
                found = enumerate_partners(data, 100, cfg).representatives
                for p in partners:
                    checked += 1
                    rediscovered += any(ray_distance(p.vector, r) < 1e-5 for r in found)
        rows.append({
            "surface": surface, "samples": samples, "verified": verified, "max_error": worst,
            "crosschecked": checked, "rediscovered": rediscovered,
            "pass": verified == samples and rediscovered == checked,
        })
    if opts["format"] == "csv":
        _emit(_csv(list(rows[0]), [list(r.values()) for r in rows]), opts["out"])
    else:
        _emit(_json({"config": _echo(opts), "surfaces": rows, "failures": failures}), opts["out"])
    for r in rows:
        print(f"{r['surface']}: {'PASS' if r['pass'] else 'FAIL'} {r['verified']}/{r['samples']} "
              f"rediscovered {r['rediscovered']}/{r['crosschecked']}", file=sys.stderr)
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAILED


COMMANDS = {
    "scatter-t": (cmd_scatter_t, "distances before/after a physical imposition"),
    "scatter-p": (cmd_scatter_p, "distances before/after a phase imposition"),
    "converge": (cmd_converge, "convergence trace toward a random generator state"),
    "reconstruct": (cmd_reconstruct, "reconstruct a state from a distributions file"),
    "partners": (cmd_partners, "enumerate Pauli partners from many random starts"),
    "pathological": (cmd_pathological, "uniform distributions on M unbiased bases: count partners"),
    "j-symmetry": (cmd_j_symmetry, "verify the closed-form spin-1 partners"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults (flags take precedence)")
    common.add_argument("--dim", type=int)
    common.add_argument("--obs", action="append", help="observable spec; repeatable")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float, help="residual tolerance for convergence")
    common.add_argument("--max-cycles", type=int)
    common.add_argument("--max-restarts", type=int)
    common.add_argument("--stall-window", type=int)
    common.add_argument("--stall-factor", type=float)
    common.add_argument("--restart", choices=["random", "orthogonal"])
    common.add_argument("--order", choices=["cyclic", "random"])
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=["csv", "json"])

    parser = argparse.ArgumentParser(prog="statedet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        if name in ("reconstruct", "partners"):
            p.add_argument("--input", help="JSON array of {basis, probs} objects")
        if name == "partners":
            p.add_argument("--uniform", action="store_true", default=None,
                           help="use uniform target distributions instead of a random generator")
        if name == "pathological":
            p.add_argument("--m", type=int, help="number of unbiased observables with uniform data")
        if name == "j-symmetry":
            p.add_argument("--crosscheck", type=int, help="samples per surface rediscovered by enumeration")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(_resolve(args))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
