"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 failed property or audit check.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
from pathlib import Path
import sys
from typing import List, Optional
import warnings

import numpy as np

from .analysis import (NonPeriodicWarning, NoiseModel, lemma_a3_check, linear_combo_moment,
                       oracle_audit, orthonormality_error, sobolev_radius, tail_energy_check)
from .errors import UsageError
from .estimator import FitConfig, config_digest, fit
from .fourier import basis_eval, design_points
from .simulate import benchmark_s, benchmark_s_prime, monte_carlo_risk, paper_model

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PROPERTY = 3

TABLE1_SIZES = (21, 41, 101, 201, 401)
PAPER_REPLICATIONS = 50


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def _rho_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        rho = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"rho must be a number or 'auto', got {text!r}")
    if not 0.0 < rho < 1.0 / 3.0:
        raise argparse.ArgumentTypeError(f"rho must lie in (0, 1/3), got {rho}")
    return rho


def _odd_arg(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if n < 3 or n % 2 == 0:
        raise argparse.ArgumentTypeError(f"n must be odd and >= 3, got {n}")
    return n


def _int_or(default: str):
    def parse(text: str):
        return default if text == default else int(text)
    return parse


def _float_or(default: str):
    def parse(text: str):
        return default if text == default else float(text)
    return parse


def read_observations(path: Path):
    """Return ``(x or None, y)`` from a CSV with header ``x,y`` or ``y``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header == ["x", "y"]:
        width = 2
    elif header == ["y"]:
        width = 1
    else:
        raise UsageError(f"{path}:1: header must be 'x,y' or 'y', got {','.join(header)!r}")
    xs, ys = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise UsageError(f"{path}:{lineno}: expected {width} field(s), got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise UsageError(f"{path}:{lineno}: non-numeric value in {row!r}")
        if not all(math.isfinite(v) for v in vals):
            raise UsageError(f"{path}:{lineno}: non-finite value in {row!r}")
        if width == 2:
            xs.append(vals[0])
        ys.append(vals[-1])
    if len(ys) < 3 or len(ys) % 2 == 0:
        raise UsageError(f"{path}: {len(ys)} observations; the estimator requires an odd "
                         f"number of equidistant observations (n odd, n >= 3)")
    return (np.array(xs) if width == 2 else None), np.array(ys)


def _config_from(args) -> FitConfig:
    return FitConfig(rho=args.rho, k_star=args.k_star, eps=args.eps, omega_bar=args.omega_bar,
                     d_n=args.d_n, seed=args.seed)


def cmd_fit(args) -> int:
    path = Path(args.input)
    x, y = read_observations(path)
    config = _config_from(args)
    result = fit(y, config)
    n = y.size
    x = design_points(n) if x is None else x
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{path.stem}_fit.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "s_hat"])
        for xi, yi, si in zip(x, y, result.fitted_grid):
            writer.writerow([fmt(xi), fmt(yi), fmt(si)])
    lam = result.lambda_hat
    sidecar = {
        "n": n,
        "alpha": {"beta": lam.beta, "t": lam.t},
        "grid_index": result.index,
        "omega": lam.omega,
        "j0": lam.j0,
        "variance_estimate": result.variance.value,
        "d_n": result.variance.d_n,
        "cost_value": result.cost_value,
        "rho": result.rho,
        "config": config.resolve(n),
        "config_digest": config.digest(n),
    }
    (out_dir / f"{path.stem}_fit.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_table1(args) -> int:
    reps = PAPER_REPLICATIONS if args.paper else args.reps
    if reps < 2:
        raise UsageError("--reps must be >= 2")
    report = monte_carlo_risk(paper_model(), TABLE1_SIZES, reps, args.seed,
                              FitConfig(seed=args.seed), workers=args.workers)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "risk", "std_error"])
        for n, risk, se in zip(report.n_values, report.risks, report.std_errors):
            writer.writerow([n, fmt(risk), fmt(se)])
    meta = {"replications": reps, "seed": args.seed, "n_values": list(report.n_values),
            "config_digest": report.config_digest}
    out.with_suffix(out.suffix + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    for n, risk, se in zip(report.n_values, report.risks, report.std_errors):
        print(f"n={n:4d}  risk={risk:.4f}  se={se:.4f}")
    return EXIT_OK


def cmd_audit(args) -> int:
    rho = None if args.rho == "auto" else args.rho
    r = sobolev_radius(benchmark_s, 1, derivatives=[benchmark_s_prime])
    report = oracle_audit(paper_model(), args.n, rho, args.reps, args.seed,
                          known_variance=args.known_variance, radius=r, workers=args.workers)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK if report.holds_within_mc_error else EXIT_PROPERTY


def property_checks(basis=basis_eval, seed: int = 0) -> List[dict]:
    """Orthonormality and the appendix inequalities on the benchmark model."""
    verdicts = []
    for n in (3, 5, 21, 101, 401):
        err = orthonormality_error(n, basis)
        verdicts.append({"check": f"orthonormality n={n}", "value": err, "limit": 1e-9,
                         "passed": err <= 1e-9})
    for k, res in lemma_a3_check(basis=basis).items():
        verdicts.append({"check": f"trig partial sums k={k}", "value": res["worst"],
                         "limit": res["bound"], "violations": res["violations"],
                         "passed": res["violations"] == 0})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonPeriodicWarning)
        r = sobolev_radius(benchmark_s, 1, derivatives=[benchmark_s_prime])
    ok = tail_energy_check(benchmark_s, r, 1, 401)
    verdicts.append({"check": "coefficient tail energy k=1 n=401", "value": r, "passed": ok,
                     "warnings": [str(w.message) for w in caught]})
    model = paper_model()
    noise = NoiseModel.from_model(model, 101)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 101, 5])))
    fails = 0
    for i in range(20):
        f = rng.standard_normal(101)
        mean, se, bound = linear_combo_moment(noise, f, 1000, seed + i)
        fails += mean > bound + 3 * se
    verdicts.append({"check": "linear combination second moment (20 vectors)",
                     "value": int(fails), "passed": fails == 0})
    for v in verdicts:
        v["passed"] = bool(v["passed"])
    return verdicts


def _corrupted_basis(j, x):
    return 1.01 * np.asarray(basis_eval(j, x))


def cmd_properties(args) -> int:
    basis = _corrupted_basis if args.corrupt_basis else basis_eval
    verdicts = property_checks(basis)
    all_ok = all(v["passed"] for v in verdicts)
    if args.json:
        print(json.dumps({"passed": all_ok, "checks": verdicts,
                          "config_digest": config_digest({"checks": [v["check"] for v in verdicts]})},
                         indent=2))
    else:
        for v in verdicts:
            print(f"{'PASS' if v['passed'] else 'FAIL'}  {v['check']}  ({v['value']:.6g})")
    return EXIT_OK if all_ok else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetwls",
                                     description="Adaptive weighted least squares for heteroscedastic regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the adaptive estimator to a CSV of observations")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--rho", type=_rho_arg, default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-star", type=_int_or("paper"), default="paper")
    p.add_argument("--eps", type=_float_or("paper"), default="paper")
    p.add_argument("--omega-bar", type=float, default=10.0)
    p.add_argument("--d-n", type=_int_or("cuberoot"), default="cuberoot")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("table1", help="Monte Carlo risk on the benchmark model")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paper", action="store_true", help="use 50 replications")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("audit", help="empirical check of the oracle inequality")
    p.add_argument("--n", type=_odd_arg, required=True)
    p.add_argument("--rho", type=_rho_arg, default="auto")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--known-variance", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("properties", help="numerical checks of basis identities and inequalities")
    p.add_argument("--json", action="store_true")
    p.add_argument("--corrupt-basis", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_properties)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
