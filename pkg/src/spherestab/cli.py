"""Command-line front end: ``spherestab <command> [flags]``.

Every command writes JSON lines (or CSV) to stdout or ``--output-path``.
Each record carries a hash of the resolved configuration. Exit codes:
0 success, 2 configuration error, 3 failed ``--check``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from importlib import resources

import numpy as np

from spherestab.conformal import pullback
from spherestab.errors import DomainError, MembershipError, QuadratureFailure, ResolutionError
from spherestab.functionals import (
    l2_distance_to_M,
    ls_deficit,
    mo_deficit,
    sharp_constant,
)
from spherestab.harmonics import SpectralFunction, SphereGrid
from spherestab.operators import eigenvalue_lambda, multiplier_H, pv_H_zonal_oracle
from spherestab.specfun import gegenbauer_eval
from spherestab.stability import (
    degree_one_degeneracy,
    estimate_homogeneity,
    koenig_gap_probe,
    local_constant_sweep,
    scaling_counterexample,
)

COMMANDS = (
    "eigen-table",
    "ls-local",
    "ls-gap",
    "ls-d0-counterexample",
    "mo-local",
    "mo-scaling",
    "invariance-check",
    "distance",
    "homogeneity",
)
SWEEP_COLUMNS = ("experiment", "n", "L", "param", "deficit", "d2", "ratio")


class ConfigError(Exception):
    pass


def load_defaults() -> dict:
    text = resources.files("spherestab").joinpath("defaults.json").read_text()
    return json.loads(text)


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _points(text: str) -> list:
    return [_floats(p) for p in text.split(";") if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    defaults = load_defaults()
    common = defaults["common"]
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--n", type=int, help=f"sphere dimension (default {common['n']})")
    shared.add_argument("--L", type=int, help="band limit (default per command, see defaults.json)")
    shared.add_argument("--lmax", type=int, help="largest degree for eigen-table")
    shared.add_argument("--oversample", type=int, help=f"LS quadrature oversampling (default {common['oversample']})")
    shared.add_argument("--eps", type=_floats, help="comma-separated epsilon grid")
    shared.add_argument("--lambda", dest="lam", type=_floats, help="comma-separated lambda grid")
    shared.add_argument("--starts", type=_points, default=None, help="extra minimizer starts 'x,y,z;x,y,z'")
    shared.add_argument("--input", help="SpectralFunction JSON for the distance command")
    shared.add_argument("--output", choices=("json", "csv"), help="record format (default json)")
    shared.add_argument("--output-path", help="write records here instead of stdout")
    shared.add_argument("--seed", type=int, help="seed for randomized checks (default 0)")
    shared.add_argument("--check", action="store_true", help="exit 3 unless the acceptance tolerance holds")
    shared.add_argument("--threads", type=int, help="accepted for compatibility; evaluation is single threaded")
    parser = argparse.ArgumentParser(
        prog="spherestab",
        description="Log-Sobolev and Moser-Onofri stability experiments on S^n.",
        epilog=f"defaults file version {defaults['version']}",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "eigen-table": "digamma symbol of H against a principal-value quadrature",
        "ls-local": "local LS constant from an epsilon sweep along 1 + eps Y_2",
        "ls-gap": "third-order slope of LS / d^2 along 1 + eps y_2 on S^2",
        "ls-d0-counterexample": "LS / d_0^2 along 1 + eps Y_1",
        "mo-local": "local MO constant from an epsilon sweep along 1 + eps Y_2",
        "mo-scaling": "MO(lambda u) / d^2(lambda u, M) against lambda",
        "invariance-check": "LS and MO before and after a random conformal pullback",
        "distance": "L^2 distance to M along 1 + eps Y_2 or for --input",
        "homogeneity": "homogeneity degrees of LS, MO and the L^2 norm",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[shared], help=helps[name], description=helps[name])
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over the command defaults into a flat, hashable config."""
    defaults = load_defaults()
    cfg = dict(defaults["common"])
    cfg.update(defaults.get(args.command, {}))
    cfg["command"] = args.command
    cfg["check"] = bool(args.check)
    for key, attr in (
        ("n", "n"), ("L", "L"), ("lmax", "lmax"), ("oversample", "oversample"), ("eps", "eps"),
        ("lambda", "lam"), ("starts", "starts"), ("input", "input"), ("output", "output"),
        ("seed", "seed"), ("threads", "threads"),
    ):
        val = getattr(args, attr)
        if val is not None:
            cfg[key] = val
    cfg["defaults_version"] = defaults["version"]
    n = cfg["n"]
    if n < 1:
        raise ConfigError(f"--n must be >= 1, got {n}")
    if cfg["oversample"] < 1:
        raise ConfigError("--oversample must be >= 1")
    if cfg.get("L", 1) < 1:
        raise ConfigError("--L must be >= 1")
    if args.command == "ls-gap" and n != 2:
        raise ConfigError("ls-gap needs the full S^2 transform (y_2 is not zonal); use --n 2")
    if args.command in ("ls-local", "mo-local") and cfg["L"] < 2:
        raise ConfigError("local sweeps need L >= 2")
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _zonal(n: int) -> bool:
    return n not in (1, 2)


def _y2(n: int, L: int) -> SpectralFunction:
    return SpectralFunction.harmonic(n, L, 2, 0, zonal=_zonal(n))


def local_ls_constant(n: int) -> float:
    return 8 * math.pi ** (n / 2) / (math.gamma(n / 2) * (n + 2))


def local_mo_constant(n: int) -> float:
    return math.gamma(n + 1) / (2 ** (n - 1) * math.pi ** (n / 2) * math.gamma(n / 2))


# --------------------------------------------------------------------------
# commands: each returns (records, passed)


def cmd_eigen_table(cfg):
    n, lmax = cfg["n"], cfg["lmax"]
    rows = []
    worst = 0.0
    for l in range(1, lmax + 1):
        H = multiplier_H(n, l)
        oracle = pv_H_zonal_oracle(n, lambda t: gegenbauer_eval(n, l, t) / gegenbauer_eval(n, l, 1.0), 64)
        rel = abs(oracle - H) / abs(H)
        worst = max(worst, rel)
        rows.append({"l": l, "lambda": eigenvalue_lambda(n, l), "multiplier_H": H, "pv_oracle": oracle, "rel_err": rel})
    return rows, worst < 1e-7


def _sweep_rows(res):
    rows = res.records()
    summary = {k: v for k, v in res.to_dict().items() if k not in ("deficits", "d2", "ratios")}
    return rows, summary


def cmd_local(cfg, functional):
    n, L = cfg["n"], cfg["L"]
    target = local_ls_constant(n) if functional == "LS" else local_mo_constant(n)
    over = cfg["oversample"]
    handle = (lambda u: ls_deficit(u, oversample=over).deficit) if functional == "LS" else "MO"
    res = local_constant_sweep(handle, _y2(n, L), cfg["eps"], name=f"{functional.lower()}-local")
    rows, summary = _sweep_rows(res)
    summary["target"] = target
    summary["rel_err"] = abs(res.limit / target - 1)
    return rows + [{"summary": summary}], summary["rel_err"] < 0.01


def cmd_ls_gap(cfg):
    res = koenig_gap_probe(cfg["eps"], L=cfg["L"], oversample=cfg["oversample"])
    rows, summary = _sweep_rows(res)
    ex = res.extra
    ok = (
        abs(ex["slope"] / ex["predicted_slope"] - 1) < 0.02
        and ex["gap"] > 10 * ex["quadrature_budget"]
        and ex["sign_test"]
    )
    return rows + [{"summary": summary}], ok


def degree_one_check(res) -> dict:
    """Acceptance reading of the degree-one sequence.

    The ratio only means LS / d_0^2(u, M) if every minimization found an
    interior minimizer; a run that drifts to xi -> 0 is an upper bound set by
    the stopping rule, not the infimum.
    """
    r = res.ratios
    decreasing = all(b < a for a, b in zip(r, r[1:]))
    halved = r[-1] < 0.5 * r[0]
    identity = abs(res.extra["H1_minus_Cn"]) < 1e-12
    attained = not any(res.extra["at_boundary"])
    return {
        "decreasing": decreasing,
        "halved": halved,
        "identity": identity,
        "attained": attained,
        "passed": decreasing and halved and identity and attained,
    }


def cmd_d0(cfg):
    res = degree_one_degeneracy(cfg["eps"], cfg["n"], "d0", L=cfg["L"])
    rows, summary = _sweep_rows(res)
    verdict = degree_one_check(res)
    summary["verdict"] = verdict
    return rows + [{"summary": summary}], verdict["passed"]


def cmd_mo_scaling(cfg):
    n, L = cfg["n"], cfg["L"]
    u = 1.0 + 0.1 * _y2(n, L)
    res = scaling_counterexample(
        lambda v: mo_deficit(v).deficit,
        lambda v: l2_distance_to_M(v, residual=False).d,
        u, 2.0, cfg["lambda"], name="mo-scaling",
    )
    rows, summary = _sweep_rows(res)
    return rows + [{"summary": summary}], abs(res.exponent + 2) < 1e-3


def cmd_homogeneity(cfg):
    n, L = cfg["n"], cfg["L"]
    u = 1.0 + 0.1 * _y2(n, L)
    over = cfg["oversample"]
    probes = [
        (estimate_homogeneity(lambda v: ls_deficit(v, oversample=over).deficit, u, cfg["lambda"], "LS"), 2.0),
        (estimate_homogeneity(lambda v: mo_deficit(v).deficit, u, cfg["lambda"], "MO"), 0.0),
        (estimate_homogeneity(lambda v: v.norm(), u, cfg["lambda"], "L2"), 1.0),
    ]
    rows = [dict(p.to_dict(), expected=e) for p, e in probes]
    return rows, all(abs(p.p_hat - e) < 1e-8 for p, e in probes)


def random_positive(n: int, L: int, rng: np.random.Generator, amplitude: float = 0.1) -> SpectralFunction:
    """1 + band-limited noise with coefficients N(0, amplitude^2 / l^2)."""
    zonal = _zonal(n)
    u = SpectralFunction.zeros(n, L, zonal=zonal)
    deg = np.maximum(u.degrees, 1)
    c = rng.standard_normal(u.coeffs.size) * amplitude / deg
    c[0] = 0.0
    return SpectralFunction(n, L, c, zonal) + 1.0


def random_ball_point(n: int, rmax: float, rng: np.random.Generator, zonal: bool) -> np.ndarray:
    xi = np.zeros(n + 1)
    r = rmax * rng.uniform(0.2, 1.0)
    if zonal:
        xi[-1] = r if rng.uniform() < 0.5 else -r
        return xi
    v = rng.standard_normal(n + 1)
    return r * v / np.linalg.norm(v)


def cmd_invariance(cfg):
    n, L = cfg["n"], cfg["L"]
    rng = np.random.default_rng(cfg["seed"])
    zonal = _zonal(n)
    grid = SphereGrid.for_band_limit(n, 64, 2, zonal=zonal)
    rows = []
    ok = True
    for k in range(cfg["samples"]):
        u = random_positive(n, L, rng)
        xi = random_ball_point(n, 0.5, rng, zonal)
        pu = pullback(u, xi, grid)
        ls0, ls1 = ls_deficit(u, oversample=cfg["oversample"]).deficit, ls_deficit(pu).deficit
        mo0, mo1 = mo_deficit(u, f_band=64).deficit, mo_deficit(pu).deficit
        e_ls = abs(ls1 - ls0) / (1 + abs(ls0))
        e_mo = abs(mo1 - mo0) / (1 + abs(mo0))
        ok &= e_ls < 1e-7 and e_mo < 1e-7
        rows.append({
            "sample": k, "xi": [float(x) for x in xi], "ls": ls0, "ls_pullback": ls1, "ls_rel_err": e_ls,
            "mo": mo0, "mo_pullback": mo1, "mo_rel_err": e_mo,
        })
    return rows, bool(ok)


def cmd_distance(cfg):
    n, L = cfg["n"], cfg["L"]
    starts = cfg.get("starts") or ()
    rows = []
    if cfg.get("input"):
        with open(cfg["input"]) as fh:
            u = SpectralFunction.from_json(fh.read())
        res = l2_distance_to_M(u, starts=starts)
        return [res.to_dict()], res.converged
    ok = True
    y = _y2(n, L)
    for e in cfg["eps"]:
        res = l2_distance_to_M(1.0 + e * y, starts=starts)
        rec = dict(res.to_dict(), eps=e, rel_err=abs(res.d / e - 1))
        if e <= 0.01:
            ok &= rec["rel_err"] < 1e-6
        rows.append(rec)
    return rows, bool(ok)


HANDLERS = {
    "eigen-table": cmd_eigen_table,
    "ls-local": lambda c: cmd_local(c, "LS"),
    "mo-local": lambda c: cmd_local(c, "MO"),
    "ls-gap": cmd_ls_gap,
    "ls-d0-counterexample": cmd_d0,
    "mo-scaling": cmd_mo_scaling,
    "homogeneity": cmd_homogeneity,
    "invariance-check": cmd_invariance,
    "distance": cmd_distance,
}


# --------------------------------------------------------------------------
# output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def render(records: list, fmt: str, digest: str, command: str) -> str:
    records = [_jsonable(dict(r, config_hash=digest)) for r in records]
    if fmt == "json":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    buf = io.StringIO()
    rows = [r for r in records if "summary" not in r]
    if rows and all(k in rows[0] for k in SWEEP_COLUMNS):
        columns = list(SWEEP_COLUMNS) + ["config_hash"]
    else:
        columns = sorted({k for r in rows for k in r})
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        cfg = resolve(args)
        records, passed = HANDLERS[args.command](cfg)
    except (ConfigError, DomainError, MembershipError) as exc:
        print(f"spherestab: configuration error: {exc}", file=sys.stderr)
        return 2
    except (ResolutionError, QuadratureFailure) as exc:
        print(f"spherestab: numerical failure: {exc}", file=sys.stderr)
        return 3
    text = render(records, cfg["output"], config_hash(cfg), args.command)
    if args.output_path:
        with open(args.output_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg["check"] and not passed:
        print(f"spherestab: {args.command} check failed", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
