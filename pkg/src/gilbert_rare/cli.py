"""Command-line driver: run estimators from flags or a JSON experiment file.

Exit codes: 0 success, 2 invalid experiment description, 3 failure while running.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import subprocess
import sys
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

from . import __version__
from .analytic import prob_at_most_one_missing_edge, prob_no_missing_edges
from .estimators_1d import cond_mc_at_most_one_edge, cond_mc_no_edges, crude_mc_few_edges
from .estimators_nd import (cond_mc_lower_tail, cond_mc_upper_tail, crude_mc_tail,
                            edge_count_quantiles, mu_estimate)
from .geometry import Window
from .importance import is_lower_tail, is_upper_tail, pilot_tune_gamma

ESTIMATORS = (
    "crude1d", "cond_p0", "cond_p1", "analytic_m0", "analytic_m1", "crude_nd", "cond_lower",
    "cond_upper", "is_lower", "is_upper", "quantiles", "mu_estimate", "pilot_gamma",
)
ONE_D = {"crude1d", "cond_p0", "cond_p1", "analytic_m0", "analytic_m1"}
NEEDS = {
    "crude1d": ("k", "n"),
    "cond_p0": ("n",),
    "cond_p1": ("n",),
    "analytic_m0": (),
    "analytic_m1": (),
    "crude_nd": ("a", "mu", "n"),
    "cond_lower": ("a", "mu", "n"),
    "cond_upper": ("a", "mu", "n"),
    "is_lower": ("a", "mu", "gamma", "n"),
    "is_upper": ("a", "mu", "gamma", "n"),
    "quantiles": ("n",),
    "mu_estimate": ("n",),
    "pilot_gamma": ("a", "mu", "n", "gammas"),
}
RECORD_FIELDS = ("estimator", "lambda", "window", "param", "n", "seed", "estimate", "std_error",
                 "variance", "improvement_vs_crude", "seconds", "version")
MU_AUTO_SAMPLES = 20_000


class SpecError(ValueError):
    """Invalid experiment description; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentSpec:
    estimator: str = ""
    lam: float | None = None
    window: str | None = None
    k: int | None = None
    a: float | None = None
    n: int | None = None
    seed: int = 0
    gamma: float | None = None
    mu: float | str | None = None
    tail: str = "lower"
    alphas: list = field(default_factory=lambda: [1e-2, 1e-3, 1e-4])
    gammas: list | None = None
    bin_side: float = 1.0
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise SpecError(sorted(extra)[0], "unknown field")
        return cls(**d)

    def parsed_window(self) -> Window:
        try:
            return Window.parse(str(self.window))
        except ValueError as e:
            raise SpecError("window", str(e)) from None

    def validate(self) -> "ExperimentSpec":
        """Check presence and ranges of everything the estimator needs; no sampling."""
        if self.estimator not in ESTIMATORS:
            raise SpecError("estimator", f"must be one of {', '.join(ESTIMATORS)}")
        if self.lam is None:
            raise SpecError("lambda", "required")
        if self.window is None:
            raise SpecError("window", "required")
        for name in NEEDS[self.estimator]:
            if getattr(self, name) is None:
                raise SpecError(name, f"required for estimator {self.estimator}")
        if not float(self.lam) > 0:
            raise SpecError("lambda", "must be positive")
        win = self.parsed_window()
        if self.estimator in ONE_D:
            if win.dim != 1:
                raise SpecError("window", "one-dimensional estimators need an interval")
            w = win.lengths[0]
            if self.estimator in ("cond_p0", "cond_p1", "analytic_m0") and w < 1:
                raise SpecError("window", "requires length at least 1")
            if self.estimator == "analytic_m1" and w < 2:
                raise SpecError("window", "requires length at least 2")
        elif win.dim > 3:
            raise SpecError("window", "dimension at most 3 supported")
        if self.n is not None and int(self.n) < 1:
            raise SpecError("n", "must be a positive integer")
        if self.k is not None and int(self.k) < 0:
            raise SpecError("k", "must be non-negative")
        if self.a is not None and not 0.0 <= float(self.a) < 1.0:
            raise SpecError("a", "must lie in [0, 1)")
        if self.mu is not None and self.mu != "auto":
            try:
                ok = float(self.mu) > 0
            except (TypeError, ValueError):
                ok = False
            if not ok:
                raise SpecError("mu", "must be a positive number or 'auto'")
        if self.gamma is not None and not float(self.gamma) >= 1.0:
            raise SpecError("gamma", "must be at least 1")
        if self.estimator in ("crude_nd", "pilot_gamma") and self.tail not in ("lower", "upper"):
            raise SpecError("tail", "must be 'lower' or 'upper'")
        if self.estimator == "pilot_gamma":
            if not self.gammas or any(float(g) < 1 for g in self.gammas):
                raise SpecError("gammas", "need a non-empty list of values >= 1")
            if int(self.n) < 1000:
                raise SpecError("n", "pilot runs need at least 1000 samples")
        if self.estimator == "quantiles" and any(not 0 < float(x) < 1 for x in self.alphas):
            raise SpecError("alphas", "must lie in (0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise SpecError("seed", "must be a 64-bit unsigned integer")
        if int(self.workers) < 1:
            raise SpecError("workers", "must be at least 1")
        return self


@lru_cache(maxsize=None)
def _auto_mu(lam: float, window: str, seed: int) -> float:
    return mu_estimate(lam, Window.parse(window), MU_AUTO_SAMPLES, seed=seed).mean


def version_string() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, cwd=Path(__file__).parent, timeout=5)
        rev = out.stdout.strip() if out.returncode == 0 else ""
    except (OSError, subprocess.SubprocessError):
        rev = ""
    return f"{__version__}+{rev}" if rev else __version__


def _param(spec: ExperimentSpec) -> str:
    parts = []
    for name in ("k", "a", "gamma", "mu"):
        v = getattr(spec, name)
        if v is not None and (name in NEEDS[spec.estimator]):
            parts.append(f"{name}={v:g}" if isinstance(v, float) else f"{name}={v}")
    if spec.estimator in ("crude_nd", "pilot_gamma"):
        parts.append(f"tail={spec.tail}")
    if spec.estimator == "cond_p0":
        parts.append("k=0")
    if spec.estimator == "cond_p1":
        parts.append("k=1")
    return ",".join(parts)


def _record(spec, estimate, std_error, variance, gain, seconds, n, extra=None):
    rec = {
        "estimator": spec.estimator, "lambda": float(spec.lam), "window": spec.parsed_window().spec(),
        "param": _param(spec), "n": int(n), "seed": int(spec.seed), "estimate": estimate,
        "std_error": std_error, "variance": variance, "improvement_vs_crude": gain,
        "seconds": seconds, "version": version_string(),
    }
    if extra:
        rec["extra"] = extra
    return rec


def _from_result(spec, res, extra=None):
    return _record(spec, res.estimate, res.std_error, res.sample_variance,
                   res.improvement_vs_crude(), res.seconds, res.n_samples, extra)


def run(spec: ExperimentSpec) -> dict:
    """Validate ``spec``, run the named estimator and return one output record."""
    spec.validate()
    lam = float(spec.lam)
    win = spec.parsed_window()
    n = None if spec.n is None else int(spec.n)
    kw = dict(seed=int(spec.seed), workers=int(spec.workers))
    mu = spec.mu
    if mu == "auto":
        mu = _auto_mu(lam, win.spec(), int(spec.seed))
        spec = replace(spec, mu=mu)
    mu = None if mu is None else float(mu)
    est = spec.estimator
    if est in ONE_D:
        w = float(win.lengths[0])
        if est == "crude1d":
            return _from_result(spec, crude_mc_few_edges(lam, w, int(spec.k), n, **kw))
        if est == "cond_p0":
            return _from_result(spec, cond_mc_no_edges(lam, w, n, **kw))
        if est == "cond_p1":
            return _from_result(spec, cond_mc_at_most_one_edge(lam, w, n, **kw))
        p = prob_no_missing_edges(lam, w) if est == "analytic_m0" else \
            prob_at_most_one_missing_edge(lam, w)
        return _record(spec, p, 0.0, 0.0, None, 0.0, 0)
    a = None if spec.a is None else float(spec.a)
    if est == "crude_nd":
        return _from_result(spec, crude_mc_tail(lam, win, a, mu, spec.tail, n, **kw))
    if est == "cond_lower":
        return _from_result(spec, cond_mc_lower_tail(lam, win, a, mu, n, **kw))
    if est == "cond_upper":
        return _from_result(spec, cond_mc_upper_tail(lam, win, a, mu, n, **kw))
    if est == "is_lower":
        return _from_result(spec, is_lower_tail(lam, win, a, mu, float(spec.gamma), n, **kw))
    if est == "is_upper":
        return _from_result(spec, is_upper_tail(lam, win, a, mu, float(spec.gamma), n,
                                                bin_side=float(spec.bin_side), **kw))
    if est == "mu_estimate":
        m = mu_estimate(lam, win, n, **kw)
        return _record(spec, m.mean, m.std_error, m.std_error**2 * m.n_samples, None,
                       m.seconds, m.n_samples,
                       {"intensity": m.intensity, "intensity_se": m.intensity_se})
    if est == "quantiles":
        rows = edge_count_quantiles(lam, win, spec.alphas, n, mu=mu, **kw)
        extra = {"rows": [{"alpha": r.alpha, "q_low": r.q_low, "q_high": r.q_high,
                           "rel_low": r.rel_low, "rel_high": r.rel_high,
                           "low_count_warning": r.low_count_warning} for r in rows]}
        return _record(spec, None, None, None, None, None, n, extra)
    best, table = pilot_tune_gamma(lam, win, a, mu, spec.tail, spec.gammas, n, **kw)
    row = next(r for r in table if r.gamma == best)
    p = row.estimate
    gain = p * (1 - p) / row.variance if row.variance > 0 else math.inf
    extra = {"best_gamma": best,
             "table": [{"gamma": r.gamma, "estimate": r.estimate, "variance": r.variance}
                       for r in table]}
    return _record(spec, p, math.sqrt(row.variance / n), row.variance, gain, None, n, extra)


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_clean(x) for x in v]
    return v


def to_json(rec: dict) -> str:
    return json.dumps(_clean(rec), separators=(", ", ": "))


def format_table(records) -> str:
    cols = ("estimator", "lambda", "window", "param", "n", "seed", "estimate", "std_error",
            "improvement_vs_crude", "seconds")

    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)

    body = [[cell(r.get(c)) for c in cols] for r in records]
    widths = [max(len(c), *(len(row[i]) for row in body)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in body]
    return "\n".join(line.rstrip() for line in lines)


def write_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for r in records:
            r = _clean(r)
            w.writerow(["" if r.get(c) is None else r.get(c) for c in RECORD_FIELDS])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gilbert-rare",
        description="Rare-event estimators for Gilbert graph edge counts.")
    p.add_argument("--spec", help="JSON file: one experiment object, a list, or "
                                  "{'experiments': [...]}; flags override its fields")
    p.add_argument("--estimator", choices=ESTIMATORS)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--window", help="'w' for [0, w] or 'a,b[,c,d...]' bound pairs")
    p.add_argument("--k", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--gammas", help="comma-separated candidate gammas for pilot_gamma")
    p.add_argument("--mu", help="target mean edge count, or 'auto' to simulate it")
    p.add_argument("--tail", choices=("lower", "upper"))
    p.add_argument("--alphas", help="comma-separated quantile levels")
    p.add_argument("--bin-side", dest="bin_side", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="JSON-lines output file (directory for --reproduce-tables)")
    p.add_argument("--csv", help="also write the records as CSV")
    p.add_argument("--json", action="store_true", help="print JSON lines instead of a table")
    p.add_argument("--omit-timing", action="store_true",
                   help="drop wall times so repeated runs give identical files")
    p.add_argument("--reproduce-tables", dest="reproduce", type=float, metavar="SCALE",
                   help="rerun all reference tables at N = SCALE * N_ref")
    p.add_argument("--tables", default="1,2,3,4,5", help="subset for --reproduce-tables")
    return p


def _overrides(args) -> dict:
    out = {}
    for name in ("estimator", "lam", "window", "k", "a", "n", "seed", "gamma", "tail",
                 "bin_side", "workers"):
        v = getattr(args, name)
        if v is not None:
            out[name] = v
    if args.mu is not None:
        out["mu"] = args.mu if args.mu == "auto" else _number(args.mu, "mu")
    if args.gammas is not None:
        out["gammas"] = [_number(x, "gammas") for x in args.gammas.split(",") if x]
    if args.alphas is not None:
        out["alphas"] = [_number(x, "alphas") for x in args.alphas.split(",") if x]
    return out


def _number(text, name):
    try:
        return float(text)
    except ValueError:
        raise SpecError(name, f"not a number: {text!r}") from None


def load_specs(args) -> list[ExperimentSpec]:
    docs = [{}]
    if args.spec:
        try:
            data = json.loads(Path(args.spec).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise SpecError("spec", str(e)) from None
        if isinstance(data, dict) and "experiments" in data:
            data = data["experiments"]
        docs = data if isinstance(data, list) else [data]
    over = _overrides(args)
    specs = []
    for d in docs:
        if not isinstance(d, dict):
            raise SpecError("spec", "each experiment must be a JSON object")
        specs.append(ExperimentSpec.from_dict({**d, **over}).validate())
    return specs


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.reproduce is not None:
        from .benchmarks import check_scale, reproduce_tables
        try:
            tables = tuple(int(t) for t in args.tables.split(",") if t)
            check_scale(args.reproduce, tables)
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return 2
        out_dir = args.out or "reproduced"
        try:
            reproduce_tables(args.reproduce, out_dir, seed=args.seed or 1,
                             workers=args.workers or 1, tables=tables)
        except Exception as e:  # noqa: BLE001
            print(f"error: {e}", file=sys.stderr)
            return 3
        print(Path(out_dir, "summary.txt").read_text(), end="")
        return 0
    try:
        specs = load_specs(args)
    except (SpecError, TypeError) as e:
        print(f"invalid experiment: {e}", file=sys.stderr)
        return 2
    records = []
    for spec in specs:
        try:
            rec = run(spec)
        except Exception as e:  # noqa: BLE001
            print(f"error running {spec.estimator}: {e}", file=sys.stderr)
            return 3
        if args.omit_timing:
            rec["seconds"] = None
        records.append(rec)
    lines = [to_json(r) for r in records]
    if args.out:
        Path(args.out).write_text("".join(line + "\n" for line in lines))
    if args.csv:
        write_csv(args.csv, records)
    print("\n".join(lines) if args.json else format_table(records))
    return 0


if __name__ == "__main__":
    sys.exit(main())
