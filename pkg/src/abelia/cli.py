"""Command-line harness: ``abelia <subcommand> [options]``.

Settings resolve as: explicit flag, then ``ABELIA_SEED`` (seed only), then the
``--config`` file (an INI file with a ``[common]`` section and one section
per subcommand), then built-in defaults.  Every run writes one JSON report;
``--csv`` additionally writes the CSV aggregation.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import dp_test as dp
from . import extremal as ex
from . import fixtures as fx
from . import fourier as fo
from . import inverse_kit as ik
from . import suite
from .abelian import AbelianGroup, GroupMap, build_master_embedding, solve_integer_embeddings
from .dist_core import is_pairwise_connected, load_distribution
from .errors import (AbeliaError, ArgumentError, DomainError, FileError, ParseError, ResourceError,
                     SearchFailure)
from .path_trick import path_correlation_bound, saturate_master
from .rng import generator

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2
EXIT_CODES = (
    (ParseError, 3),
    (FileError, 4),
    (ResourceError, 5),
    (SearchFailure, 6),
    (DomainError, 7),
    (ArgumentError, 8),
    (AbeliaError, 9),
)

FIXTURES = {
    "cyclic_equation": lambda a: fx.cyclic_equation(int(a or 3)),
    "three_atom": lambda a: fx.three_atom(),
    "full_support": lambda a: fx.full_support(int(a or 2)),
    "diagonal_pair": lambda a: fx.diagonal_pair(),
    "partial_image": lambda a: fx.partial_image(),
    "two_to_one": lambda a: fx.two_to_one(tuple(Fraction(v) for v in a.split(",")) if a else (1, 1, 1, 1)),
    "skewed_two_to_one": lambda a: fx.skewed_two_to_one(),
    "very_base": lambda a: fx.very_base(int(a or 3)),
    "random": lambda a: fx.random_distribution(int(a or 0)),
}


# ---------------------------------------------------------------------------
# reports and CSV
# ---------------------------------------------------------------------------

@dataclass
class Report:
    kind: str
    inputs: dict
    results: dict
    wall_clock: float = 0.0
    checks: dict = field(default_factory=dict)
    rows: list | None = None          # several CSV rows (suite); otherwise one derived row

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    def to_json(self, timing: bool = True) -> dict:
        doc = {"kind": self.kind, "inputs": self.inputs, "results": self.results,
               "checks": self.checks, "passed": self.passed}
        if timing:
            doc["wall_clock"] = self.wall_clock
        return _jsonable(doc)

    def csv_rows(self) -> list:
        if self.rows is not None:
            return [dict(r) for r in self.rows]
        row = {"kind": self.kind}
        row.update(_flatten(self.inputs, "in"))
        row.update(_flatten(self.results, "out"))
        row.update(_flatten(self.checks, "check"))
        row["passed"] = self.passed
        return [row]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating, Fraction)):
        return float(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _flatten(d: dict, prefix: str) -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}.{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key))
        elif v is None or isinstance(v, (bool, int, float, str, Fraction, np.integer, np.floating, np.bool_)):
            out[key] = v
    return out


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating, Fraction)):
        return format(float(v), ".12g")
    return str(v)


def emit_csv(reports) -> str:
    """Header plus one row per report (per criterion for ``suite``)."""
    reports = list(reports)
    kinds = {r.kind for r in reports}
    if len(kinds) > 1:
        raise ArgumentError(f"cannot aggregate mixed report kinds: {sorted(kinds)}")
    rows = [row for r in reports for row in r.csv_rows()]
    cols = ["kind"]
    for row in rows:
        cols += [k for k in row if k not in cols]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _dist(a):
    if a.dist and a.fixture:
        raise ArgumentError("give either --dist or --fixture, not both")
    if a.dist:
        return load_distribution(a.dist), {"dist": str(a.dist)}
    name = a.fixture or "cyclic_equation"
    base, _, arg = name.partition(":")
    if base not in FIXTURES:
        raise ArgumentError(f"unknown fixture {base!r}; choose from {', '.join(FIXTURES)}")
    try:
        d = FIXTURES[base](arg)
    except (ValueError, ZeroDivisionError) as exc:
        raise ArgumentError(f"bad fixture argument {arg!r}: {exc}") from None
    return d, {"fixture": name}


def _analyze(a):
    d, src = _dist(a)
    m = build_master_embedding(d, a.max_order)
    z = solve_integer_embeddings(d)
    conn = is_pairwise_connected(d)
    res = m.to_json()
    res.update(components_count=len(m.components), pairwise_connected=bool(conn),
               integer_trivial_only=z.trivial_only)
    return src | {"max_order": a.max_order}, res, {"verify_master": m.verify_master}


def _saturate(a):
    d, src = _dist(a)
    m = build_master_embedding(d, a.max_order)
    try:
        out, final, tr = saturate_master(d, m, a.length_cap, uniformize=a.uniformize)
    except ResourceError as exc:
        if exc.partial is None:
            raise
        doc = exc.partial.to_json()
        return src, doc, {"saturated": False}
    doc = tr.to_json()
    doc["atoms"] = len(out.atoms)
    checks = {k: bool(v) for k, v in tr.postcondition_checks.items() if k != "x_power"}
    return src | {"max_order": a.max_order, "length_cap": a.length_cap}, doc, checks


def _bounded(rng, shape):
    return np.exp(2j * np.pi * rng.random(shape)) * rng.random(shape)


def _path_bound(a):
    d, src = _dist(a)
    rng = generator(a.seed, "path-bound")
    ks = [len(al) for al in d.alphabets]
    worst, bad = -math.inf, 0
    for _ in range(a.triples):
        f, g, h = (_bounded(rng, (k,) * a.n) for k in ks)
        b = path_correlation_bound(d, f, g, h, a.t)
        worst = max(worst, b.lhs - b.rhs)
        bad += not b.holds
    return (src | {"n": a.n, "t": a.t, "triples": a.triples, "seed": a.seed},
            {"max_gap": worst, "violations": bad}, {"chain_holds": bad == 0})


def _fourier_check(a):
    d, src = _dist(a)
    m = build_master_embedding(d, a.max_order)
    b = fo.split_basis_for(d, m.sigma, modest=None)
    rng = generator(a.seed, "fourier-check")
    parseval = influence = monotone = 0.0
    for _ in range(a.functions):
        f = fo.TensorFunction.random(b.symbols, b.weights, a.n, rng)
        n2 = fo.norm2(f) ** 2
        parseval = max(parseval, abs(float(np.sum(np.abs(fo.coefficients(f, b)) ** 2)) - n2),
                       abs(float(np.sum(fo.level_weights(f))) - n2))
        for j in range(a.n):
            influence = max(influence, abs(fo.influence(f, j, b) - fo.influence_by_definition(f, j, b)))
        st = [fo.nestab(f, r, b) for r in np.linspace(0, 1, 11)]
        monotone = max([monotone] + [x - y for x, y in zip(st, st[1:])])
    eig = 0.0
    for spec in (fo.NoiseOperatorSpec.standard(b.symbols, b.weights, 0.6), fo.NoiseOperatorSpec.nonembed(b, 0.6)):
        lam = fo.eigenvalue_grid(spec, b, a.n)
        for idx in itertools.product(range(len(b.symbols)), repeat=a.n):
            mono = fo.monomial_function(b, idx)
            eig = max(eig, float(np.max(np.abs(fo.noise_apply(spec, mono).values - lam[idx] * mono.values))))
    res = {"parseval": parseval, "influence": influence, "nestab_decrease": monotone, "eigen": eig,
           "basis_counts": dict(b.counts())}
    checks = {"parseval": parseval <= fo.TOL_EQ, "influence": influence <= fo.TOL_EQ,
              "nestab_monotone": monotone <= fo.TOL_EQ, "eigen": eig <= 1e-12}
    return src | {"n": a.n, "functions": a.functions, "seed": a.seed}, res, checks


def _extremal(a):
    d, src = _dist(a)
    kw = dict(restarts=a.restarts, seed=a.seed, rounds=a.rounds, workers=a.workers)
    if a.quantity == "beta":
        r = ex.estimate_beta(d, a.n, a.d, a.d_prime, **kw)
    else:
        r = ex.estimate_delta(d, a.n, a.d_prime, **kw)
    doc = r.to_json()
    doc.pop("per_restart", None)
    if not a.witnesses:
        doc.pop("witnesses", None)
    inputs = src | {"quantity": a.quantity, "n": a.n, "d": a.d, "d_prime": a.d_prime,
                    "restarts": a.restarts, "rounds": a.rounds, "seed": a.seed}
    checks = {"membership": r.membership, "recomputed": abs(r.recomputed - r.value) <= 1e-9,
              "bounded": r.value <= 1 + 1e-9}
    return inputs, doc, checks


def _base_case(a):
    d, src = _dist(a)
    add = ex.additive_base_constant(d)
    res = {"additive": add.to_json()}
    checks = {"additive_bounded": add.value <= 1 + 1e-9}
    if a.modest:
        taus = [float(t) for t in a.taus.split(",")]
        pts = ex.relaxed_base_profile(d, a.modest.split(","), taus, restarts=a.restarts, seed=a.seed)
        res["profile"] = [p.to_json() for p in pts]
        vals = [p.value for p in sorted(pts, key=lambda p: p.tau) if p.feasible]
        checks["profile_monotone"] = all(x >= y - 1e-9 for x, y in zip(vals, vals[1:]))
    return src | {"modest": a.modest, "taus": a.taus, "seed": a.seed}, res, checks


def _shortlist(a):
    H = AbelianGroup.from_orders([a.q])
    cls = ik.ProductClass.from_sigma(GroupMap(H, {i: H.cyclic_element(i) for i in range(a.q)}),
                                     tuple(range(a.q)), [1 / a.q] * a.q)
    rng = generator(a.seed, "shortlist")
    f = fo.TensorFunction.random(cls.symbols, cls.weights, a.n, rng)
    f = f * (1 / fo.norm2(f))
    sl = ik.short_list(f, a.eps, a.delta, cls)
    doc = sl.to_json()
    doc["separation"] = cls.separation
    return ({"q": a.q, "n": a.n, "eps": a.eps, "delta": a.delta, "seed": a.seed}, doc,
            {"size_bound": len(sl.entries) < sl.bound, "coverage": ik.coverage_ok(sl, cls)})


def _variant(a):
    v = a.variant
    if v == "dp":
        return dp.DP(a.rho, a.alpha, a.beta, mode=a.mode)
    if v == "uniform":
        return dp.Uniform(a.q, a.qprime, a.t)
    if v == "modified":
        return dp.Modified(a.q, a.qprime, a.c, a.t)
    return dp.SubsetAgreement(a.q, a.alpha, a.beta)


def _dp_sim(a):
    law, _, params = a.strategy.partition(":")
    radius, eps = 0, 0.0
    try:
        if law == "perturbed":
            radius = int(params)
        elif law == "mixture":
            e, r = params.split(",")
            eps, radius = float(e), int(r)
    except ValueError:
        raise ArgumentError(f"malformed strategy {a.strategy!r}") from None
    st = dp.DPStrategy(a.n, a.R, law, a.seed, radius=radius, eps=eps)
    spec = _variant(a)
    acc = dp.run_agreement_test(st, spec, a.trials, a.seed, a.workers)
    q = a.rho if a.variant == "dp" else a.q
    gd = dp.global_decode(st, a.decode_budget, max(radius, 1), a.seed, q=q)
    res = acc.to_json() | {"decode_agreement": gd.agreement,
                           "decode_match": float(np.mean(gd.g == st.g))}
    checks = {"completeness": acc.estimate == 1.0} if law == "exact" else {}
    inputs = {"variant": a.variant, "n": a.n, "R": a.R, "strategy": a.strategy, "trials": a.trials,
              "seed": a.seed, "workers": a.workers}
    if a.variant == "dp":
        inputs |= {"rho": a.rho, "alpha": a.alpha, "beta": a.beta, "mode": a.mode}
    elif a.variant == "subset":
        inputs |= {"q": a.q, "alpha": a.alpha, "beta": a.beta}
    else:
        inputs |= {"q": a.q, "qprime": a.qprime, "t": a.t} | ({"c": a.c} if a.variant == "modified" else {})
    return inputs, res, checks


def _sse(a):
    G = dp.MultiSliceGraph.from_params(a.n, a.q, a.qprime, a.c)
    sp = dp.multislice_spectrum(G)
    measures = [float(m) for m in a.measures.split(",")]
    rng = generator(a.seed, "sse-sets")
    sets = [dp.random_vertex_set(G, m, rng) for m in measures]
    pr = dp.expansion_probe(G, sets, a.trials, a.seed)
    res = {"vertices": G.size, "counts": list(G.counts), "overlap": G.overlap} | sp.to_json() | pr.to_json()
    order = np.argsort(measures)
    ests = [pr.estimates[i] for i in order]
    checks = {"stationary_uniform": sp.row_sum_error <= 1e-12 and sp.symmetry_error <= 1e-10,
              "expansion_monotone": all(x >= y for x, y in zip(ests, ests[1:]))}
    if sp.components == 1:
        checks["spectral_gap"] = sp.lambda2 < 1
    return ({"n": a.n, "q": a.q, "qprime": a.qprime, "c": a.c, "measures": a.measures,
             "trials": a.trials, "seed": a.seed}, res, checks)


def _suite(a):
    rows = suite.run_battery(a.seed, a.scale, a.workers)
    res = {"rows": [r.to_json() for r in rows]}
    checks = {f"c{r.criterion:02d}_{r.name}": r.passed for r in rows}
    return {"scale": a.scale, "seed": a.seed, "workers": a.workers}, res, checks, \
        [{"kind": "suite", **r.to_json()} for r in rows]


COMMANDS = {
    "analyze": _analyze, "saturate": _saturate, "path-bound": _path_bound, "fourier-check": _fourier_check,
    "extremal": _extremal, "base-case": _base_case, "shortlist": _shortlist, "dp-sim": _dp_sim,
    "sse": _sse, "suite": _suite,
}


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", type=Path, help="INI file with [common] and per-subcommand sections")
    p.add_argument("--seed", type=int, help="64-bit master seed (ABELIA_SEED overrides the config)")
    p.add_argument("--workers", type=int, help="worker count; results depend on it only through speed")
    p.add_argument("--out", type=Path, help="write the JSON report here (default: stdout)")
    p.add_argument("--csv", type=Path, help="also write the CSV aggregation here")
    p.add_argument("--no-timing", action="store_true", default=None, help="omit wall-clock from JSON")


def _with_dist(p):
    p.add_argument("--dist", type=Path, help="distribution JSON file")
    p.add_argument("--fixture", help=f"built-in distribution NAME[:ARG]; one of {', '.join(FIXTURES)}")
    p.add_argument("--max-order", type=int, help="largest group order searched for embeddings")


DEFAULTS = {
    "seed": 0, "workers": 1, "no_timing": False, "max_order": 12, "length_cap": 15, "uniformize": False,
    "n": None, "t": None, "triples": 100, "functions": 50, "quantity": "beta", "d": 1, "d_prime": 0,
    "restarts": ex.DEFAULT_RESTARTS, "rounds": ex.DEFAULT_ROUNDS, "witnesses": False, "modest": None,
    "taus": "0,0.5,1", "q": None, "eps": 0.3, "delta": 0.05, "variant": "dp", "R": 4,
    "rho": 0.3, "alpha": 0.5, "beta": 0.5, "mode": "biased", "qprime": 0.25, "c": 0.5,
    "strategy": "exact", "trials": None, "decode_budget": 200, "measures": "0.01,0.1", "scale": "full",
}

# per-subcommand overrides of the shared defaults
COMMAND_DEFAULTS = {
    "path-bound": {"n": 1, "t": 1},
    "fourier-check": {"n": 2},
    "extremal": {"n": 1},
    "shortlist": {"n": 3, "q": 3},
    "dp-sim": {"n": 200, "q": 0.5, "t": 0, "trials": 100_000},
    "sse": {"n": 6, "q": 0.5, "trials": 2000},
}


def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(prog="abelia", description=__doc__.splitlines()[0])
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="master embedding and structure report")
    _common(p); _with_dist(p)

    p = sub.add_parser("saturate", help="path-trick saturation transcript")
    _common(p); _with_dist(p)
    p.add_argument("--length-cap", type=int)
    p.add_argument("--uniformize", action="store_true", default=None)

    p = sub.add_parser("path-bound", help="Cauchy–Schwarz chain on random bounded triples")
    _common(p); _with_dist(p)
    p.add_argument("--n", type=int); p.add_argument("--t", type=int); p.add_argument("--triples", type=int)

    p = sub.add_parser("fourier-check", help="Parseval, influence and noise identities")
    _common(p); _with_dist(p)
    p.add_argument("--n", type=int); p.add_argument("--functions", type=int)

    p = sub.add_parser("extremal", help="search for extremal 3-wise correlations")
    _common(p); _with_dist(p)
    p.add_argument("--quantity", choices=("beta", "delta"))
    p.add_argument("--n", type=int); p.add_argument("--d", type=int); p.add_argument("--d-prime", type=int)
    p.add_argument("--restarts", type=int); p.add_argument("--rounds", type=int)
    p.add_argument("--witnesses", action="store_true", default=None, help="include witness tensors")

    p = sub.add_parser("base-case", help="additive base-case constant and relaxed profile")
    _common(p); _with_dist(p)
    p.add_argument("--modest", help="comma-separated modest x-symbols; enables the profile")
    p.add_argument("--taus", help="comma-separated variance thresholds")
    p.add_argument("--restarts", type=int)

    p = sub.add_parser("shortlist", help="greedy short list over characters of Z_q")
    _common(p)
    p.add_argument("--q", type=int); p.add_argument("--n", type=int)
    p.add_argument("--eps", type=float); p.add_argument("--delta", type=float)

    p = sub.add_parser("dp-sim", help="simulate a direct-product agreement test")
    _common(p)
    p.add_argument("--variant", choices=tuple(dp.VARIANTS))
    p.add_argument("--n", type=int); p.add_argument("--R", type=int)
    p.add_argument("--rho", type=float); p.add_argument("--alpha", type=float); p.add_argument("--beta", type=float)
    p.add_argument("--mode", choices=("biased", "fixed"))
    p.add_argument("--q", type=float); p.add_argument("--qprime", type=float)
    p.add_argument("--t", type=int); p.add_argument("--c", type=float)
    p.add_argument("--strategy", help="exact | random | perturbed:r | mixture:eps,r")
    p.add_argument("--trials", type=int); p.add_argument("--decode-budget", type=int)

    p = sub.add_parser("sse", help="multi-slice spectrum and expansion probes")
    _common(p)
    p.add_argument("--n", type=int); p.add_argument("--q", type=float); p.add_argument("--qprime", type=float)
    p.add_argument("--c", type=float); p.add_argument("--measures"); p.add_argument("--trials", type=int)

    p = sub.add_parser("suite", help="run the seeded acceptance battery")
    _common(p)
    p.add_argument("--scale", choices=tuple(suite.SCALES))
    return root


def _convert(parser, dest, raw):
    for act in parser._actions:
        if act.dest == dest:
            if act.const is True or isinstance(act, argparse._StoreTrueAction):
                low = raw.strip().lower()
                if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                    raise ParseError(f"config key {dest!r}: expected a boolean, got {raw!r}")
                return low in ("1", "true", "yes", "on")
            try:
                val = act.type(raw) if act.type else raw
            except (TypeError, ValueError):
                raise ParseError(f"config key {dest!r}: cannot parse {raw!r}") from None
            if act.choices and val not in act.choices:
                raise ParseError(f"config key {dest!r}: {val!r} not in {list(act.choices)}")
            return val
    raise ParseError(f"unknown config key {dest!r}")


def read_config(path: Path, command: str) -> dict:
    if not path.is_file():
        raise FileError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ParseError(f"malformed config {path}: {exc}") from None
    out = {}
    for section in ("common", command):
        if cp.has_section(section):
            out.update({k.replace("-", "_"): v for k, v in cp.items(section, raw=True)})
    return out


def resolve(argv=None) -> argparse.Namespace:
    parser = build_parser()
    a = parser.parse_args(argv)
    sub = next(act for act in parser._actions if isinstance(act, argparse._SubParsersAction)).choices[a.command]
    cfg = read_config(a.config, a.command) if a.config else {}
    env_seed = os.environ.get("ABELIA_SEED")
    for key, raw in cfg.items():
        if key == "config":
            continue
        if not hasattr(a, key):
            raise ParseError(f"config key {key!r} does not apply to {a.command}")
        if getattr(a, key) is None and not (key == "seed" and env_seed is not None):
            setattr(a, key, _convert(sub, key, raw))
    if a.seed is None and env_seed is not None:
        try:
            a.seed = int(env_seed)
        except ValueError:
            raise ParseError(f"ABELIA_SEED must be an integer, got {env_seed!r}") from None
    defaults = DEFAULTS | COMMAND_DEFAULTS.get(a.command, {})
    for key, val in defaults.items():
        if hasattr(a, key) and getattr(a, key) is None:
            setattr(a, key, val)
    if getattr(a, "workers", 1) < 1:
        raise ArgumentError("--workers must be at least 1")
    return a


def run(a: argparse.Namespace) -> Report:
    t0 = time.perf_counter()
    out = COMMANDS[a.command](a)
    inputs, results, checks = out[:3]
    rows = out[3] if len(out) > 3 else None
    return Report(a.command, inputs, results, time.perf_counter() - t0, checks, rows)


def main(argv=None) -> int:
    try:
        a = resolve(argv)
        report = run(a)
        text = json.dumps(report.to_json(timing=not a.no_timing), indent=2, sort_keys=True) + "\n"
        if a.out:
            a.out.write_text(text)
        else:
            sys.stdout.write(text)
        if a.csv:
            a.csv.write_text(emit_csv([report]))
    except AbeliaError as exc:
        for cls, code in EXIT_CODES:
            if isinstance(exc, cls):
                print(f"abelia: {type(exc).__name__}: {exc}", file=sys.stderr)
                return code
        raise
    except OSError as exc:
        print(f"abelia: FileError: {exc}", file=sys.stderr)
        return dict(EXIT_CODES)[FileError]
    return EXIT_OK if report.passed else EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
