"""Command-line front end.

Examples::

    gnorm norm --family ones:2,3 --p 1.5 --q 3 --method alt --seed 7
    gnorm envelope --family ones:4,4 --p 2 --q 2
    gnorm compare --family powerlaw:16,16,1 --p 2 --q 3 --samples 200 --seed 1
    gnorm boundedness --kernel powerlaw:1 --sizes 8,16,32 --format csv

Exit codes: 0 success, 2 invalid input, 3 resource budget exceeded,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    ConfigurationError,
    DomainError,
    ExponentPair,
    GnormError,
    NumericError,
    ResourceError,
    VarianceProfile,
    parse_exponent,
)
from .ensembles import parse_dist, sample_matrix
from .envelope import (
    boundedness_diagnostic,
    envelope_report,
    gaussian_moment_envelope,
    gaussian_tail_bound,
    rowcol_comparison_check,
)
from .montecarlo import comparability_report, default_workers, simulate, stats_from_values
from .pqnorm import METHODS, AscentConfig, operator_norm
from .structure import check_subset_count_bound, degrees, greedy_band_decomposition

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE, EXIT_NUMERIC = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# matrix ingestion


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def family_matrix(text: str) -> np.ndarray:
    """Build a builtin profile: ``ones:m,n``, ``diag:v1,..``, ``powerlaw:m,n,alpha``,
    ``block:s1,s2,..`` (all-ones diagonal blocks) or ``sparse:m,n,density,seed`` (0/1 pattern)."""
    name, _, args = text.partition(":")
    name = name.strip().lower()
    try:
        if name == "ones":
            m, n = _ints(args)
            return np.ones((m, n))
        if name == "diag":
            return np.diag([float(x) for x in args.split(",")])
        if name == "powerlaw":
            m, n, alpha = args.split(",")
            i = np.arange(1, int(m) + 1)[:, None]
            j = np.arange(1, int(n) + 1)[None, :]
            return (i + j) ** (-float(alpha))
        if name == "block":
            sizes = _ints(args)
            if not sizes or min(sizes) < 1:
                raise ValueError
            out = np.zeros((sum(sizes), sum(sizes)))
            o = 0
            for s in sizes:
                out[o : o + s, o : o + s] = 1.0
                o += s
            return out
        if name == "sparse":
            m, n, density, seed = args.split(",")
            density = float(density)
            if not 0 <= density <= 1:
                raise ValueError
            rng = np.random.Generator(np.random.Philox(int(seed)))
            return (rng.random((int(m), int(n))) < density).astype(float)
    except ValueError as exc:
        raise ConfigurationError(f"bad parameters for family {text!r}") from exc
    raise ConfigurationError(f"unknown family {name!r}")


def matrix_from_json(obj) -> np.ndarray:
    try:
        m, n = int(obj["rows"]), int(obj["cols"])
        data = np.asarray(obj["data"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError("matrix JSON needs rows, cols and row-major data") from exc
    if data.size != m * n:
        raise ConfigurationError(f"matrix JSON has {data.size} values for a {m}x{n} shape")
    return data.reshape(m, n)


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=float)
    return {"rows": a.shape[0], "cols": a.shape[1], "data": a.ravel().tolist()}


def read_matrix_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    try:
        data = [[float(c) for c in r] for r in rows]
    except ValueError as exc:
        raise ConfigurationError("CSV matrix has a non-numeric cell") from exc
    if not data or len({len(r) for r in data}) != 1:
        raise ConfigurationError("CSV matrix must be nonempty and rectangular")
    return np.array(data)


def write_matrix_csv(a) -> str:
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in np.asarray(a, dtype=float))


def load_matrix(args) -> tuple[np.ndarray, dict]:
    if (args.matrix is None) == (args.family is None):
        raise ConfigurationError("give exactly one of --matrix or --family")
    if args.family is not None:
        return family_matrix(args.family), {"source": "family", "family": args.family}
    src = args.matrix.strip()
    if src.startswith("{"):
        try:
            return matrix_from_json(json.loads(src)), {"source": "inline_json"}
        except json.JSONDecodeError as exc:
            raise ConfigurationError("inline matrix is not valid JSON") from exc
    path = Path(src)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read matrix file {src!r}") from exc
    if path.suffix.lower() == ".json":
        try:
            return matrix_from_json(json.loads(text)), {"source": "json", "path": src}
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{src!r} is not valid JSON") from exc
    return read_matrix_csv(text), {"source": "csv", "path": src}


# ---------------------------------------------------------------------------
# output


def jsonable(x):
    """Recursively convert numpy scalars and non-finite floats into JSON-safe values."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def _flatten(prefix: str, x, out: list):
    if isinstance(x, dict):
        for k in sorted(x):
            _flatten(f"{prefix}.{k}" if prefix else str(k), x[k], out)
    elif isinstance(x, list):
        for i, v in enumerate(x):
            _flatten(f"{prefix}.{i}", v, out)
    else:
        out.append((prefix, repr(x) if isinstance(x, float) else ("" if x is None else str(x))))


def report_csv(report: dict) -> str:
    """``key,value`` lines; a ``series`` table in the results is written as a headed table instead."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    series = report["results"].get("series") if isinstance(report["results"], dict) else None
    if series:
        cols = list(series)
        w.writerow(cols)
        for row in zip(*(series[c] for c in cols)):
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()
    rows: list = []
    _flatten("", report, rows)
    for k, v in rows:
        w.writerow([k, v])
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    report = jsonable(report)
    if fmt == "csv":
        return report_csv(report)
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _pq(args) -> ExponentPair:
    return ExponentPair(parse_exponent(args.p), parse_exponent(args.q))


def _cfg(args) -> AscentConfig:
    return AscentConfig(restarts=args.restarts, seed=args.seed)


def _spec(args):
    return parse_dist(args.dist, seed=args.seed)


def cmd_norm(args, A, pq):
    return operator_norm(A, pq, args.method, _cfg(args)).to_dict()


def cmd_envelope(args, A, pq):
    out = {"envelope": envelope_report(A, pq).to_dict(), "rowcol_comparison": rowcol_comparison_check(A, pq)}
    if args.rho:
        out["moment_envelope"] = {str(r): gaussian_moment_envelope(A, pq, r) for r in args.rho}
    if args.t:
        out["tail_bound"] = {str(t): gaussian_tail_bound(A, t) for t in args.t}
    return out


def cmd_estimate(args, A, pq):
    spec = _spec(args)
    d = simulate(A, pq, spec, args.samples, AscentConfig(restarts=args.restarts), workers=default_workers())
    return {
        "ensemble": spec.to_dict(),
        "norm": stats_from_values(d.norm, spec.seed, args.rho or (), args.t or ()).to_dict(),
        "max_entry": stats_from_values(d.max_abs, spec.seed, method="max_entry").to_dict(),
    }


def cmd_compare(args, A, pq):
    spec = _spec(args)
    return comparability_report(A, pq, spec, args.samples, AscentConfig(restarts=args.restarts),
                                workers=default_workers())


def cmd_tail(args, A, pq):
    spec = _spec(args)
    d = simulate(A, pq, spec, args.samples, AscentConfig(restarts=args.restarts), workers=default_workers())
    stats = stats_from_values(d.norm, spec.seed)
    ts = args.t or [1.0, 2.0, 3.0]
    gauss = spec.kind == "gaussian"
    return {
        "ensemble": spec.to_dict(),
        "mean": stats.mean,
        "stderr": stats.stderr,
        "offsets": [
            {
                "t": t,
                "frequency": float(np.mean(d.norm >= stats.mean + t)),
                "gaussian_bound": gaussian_tail_bound(A, t) if gauss else None,
            }
            for t in ts
        ],
    }


def cmd_structure(args, A, pq):
    d1, d2, d = degrees(A)
    out = {"d1": d1, "d2": d2, "d": d, "nnz": int(np.count_nonzero(A))}
    if args.r is not None and args.k is not None:
        out["count_bound"] = check_subset_count_bound(A, args.r, args.k, args.budget)
    return out


def cmd_decompose(args, A, pq):
    dec = greedy_band_decomposition(A, pq)
    return {"decomposition": dec.to_dict(), "checks": dec.verify()}


def kernel(text: str):
    """``ones``, ``powerlaw:alpha`` (``(i+j)^-alpha``) or ``product:alpha`` (``(i j)^-alpha``)."""
    name, _, arg = text.partition(":")
    try:
        if name == "ones":
            return lambda i, j: 1.0
        alpha = float(arg)
    except ValueError as exc:
        raise ConfigurationError(f"bad kernel {text!r}") from exc
    if name == "powerlaw":
        return lambda i, j: (i + j) ** (-alpha)
    if name == "product":
        return lambda i, j: (i * j) ** (-alpha)
    raise ConfigurationError(f"unknown kernel {name!r}")


def cmd_boundedness(args, pq):
    sizes = _ints(args.sizes)
    rep = boundedness_diagnostic(kernel(args.kernel), sizes, pq)
    rep["series"] = {"size": rep["sizes"], "d1": rep["d1"], "d2": rep["d2"], "d_inf": rep["d_inf"]}
    return rep


COMMANDS = {
    "norm": cmd_norm,
    "envelope": cmd_envelope,
    "estimate": cmd_estimate,
    "compare": cmd_compare,
    "tail": cmd_tail,
    "structure": cmd_structure,
    "decompose": cmd_decompose,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gnorm", description="p->q norms of structured random matrices")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, matrix=True):
        if matrix:
            sp.add_argument("--matrix", help="CSV path, JSON path or inline JSON {rows, cols, data}")
            sp.add_argument("--family", help="ones:m,n | diag:v,.. | powerlaw:m,n,a | block:s,.. | sparse:m,n,d,seed")
        sp.add_argument("--p", default="2", help="domain exponent in [1, 2]")
        sp.add_argument("--q", default="2", help="target exponent in [2, inf]")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--restarts", type=int, default=8)
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    def sampling(sp):
        sp.add_argument("--samples", type=int, default=200)
        sp.add_argument("--dist", default="gauss", help="gauss | weibull:r | mixture:law:args | bernoulli")

    sp = sub.add_parser("norm", help="operator norm of a fixed matrix")
    common(sp)
    sp.add_argument("--method", choices=METHODS, default="interval")
    sp = sub.add_parser("envelope", help="deterministic envelope quantities")
    common(sp)
    sp.add_argument("--rho", type=float, action="append")
    sp.add_argument("--t", type=float, action="append")
    for name, helptext in (("estimate", "Monte Carlo expected norm"), ("compare", "envelope comparability report"),
                           ("tail", "empirical concentration tail")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sampling(sp)
        if name != "compare":
            sp.add_argument("--t", type=float, action="append")
        if name == "estimate":
            sp.add_argument("--rho", type=float, action="append")
    sp = sub.add_parser("structure", help="support-graph diagnostics")
    common(sp)
    sp.add_argument("--r", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--budget", type=int, default=1_000_000)
    sp = sub.add_parser("decompose", help="greedy band decomposition")
    common(sp)
    sp = sub.add_parser("boundedness", help="D1, D2, D_inf along growing truncations")
    common(sp, matrix=False)
    sp.add_argument("--kernel", default="powerlaw:1", help="ones | powerlaw:a | product:a")
    sp.add_argument("--sizes", default="8,16,32,64")
    return ap


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        pq = _pq(args)
        if args.command == "boundedness":
            inp = {"source": "kernel", "kernel": args.kernel, "sizes": args.sizes}
            results = cmd_boundedness(args, pq)
        else:
            A, inp = load_matrix(args)
            inp["shape"] = list(A.shape)
            results = COMMANDS[args.command](args, VarianceProfile(A), pq)
    except ResourceError as exc:
        print(f"gnorm: resource budget exceeded: {exc}", file=stderr)
        return EXIT_RESOURCE
    except NumericError as exc:
        print(f"gnorm: numeric failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    except (DomainError, ConfigurationError, GnormError, ValueError) as exc:
        print(f"gnorm: invalid input: {exc}", file=stderr)
        return EXIT_INPUT
    report = {"input": inp, "pq": pq.to_dict(), "results": results, "seed": args.seed, "version": __version__}
    text = render(report, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    return EXIT_OK


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
