"""Seeded acceptance battery behind the ``suite`` subcommand.

Each check returns a metric and a pass flag.  ``scale`` trades coverage for
time: ``full`` uses the published sizes, ``quick`` shrinks corpora and trial
counts but exercises the same code paths.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import dp_test as dp
from . import extremal as ex
from . import fixtures as fx
from . import fourier as fo
from . import inverse_kit as ik
from .abelian import (AbelianGroup, GroupMap, brute_force_embeddings, build_master_embedding,
                      enumerate_group_embeddings, groups_up_to, solve_integer_embeddings,
                      verify_master_property)
from .errors import ArgumentError, ResourceError
from .path_trick import lifted_embedding, path_correlation_bound, path_trick_inductive, path_trick_walk
from .rng import generator

SCALES = {
    "full": {"corpus": 200, "functions": 50, "triples": 100, "trials": 100_000, "seeds": 20},
    "quick": {"corpus": 20, "functions": 5, "triples": 10, "trials": 4_000, "seeds": 3},
}


@dataclass(frozen=True)
class SuiteRow:
    criterion: int
    name: str
    passed: bool
    metric: float

    def to_json(self) -> dict:
        return {"criterion": self.criterion, "name": self.name, "passed": self.passed, "metric": self.metric}


def _embeddings_match(cfg, seed) -> SuiteRow:
    bad = 0
    for d in fx.corpus(cfg["corpus"], seed):
        for G in groups_up_to(4):
            fast = {e.key() for e in enumerate_group_embeddings(d, G)}
            slow = {e.key() for e in brute_force_embeddings(d, G)}
            bad += fast != slow
    return SuiteRow(1, "embedding_enumeration", bad == 0, float(bad))


def _integer_truths(cfg, seed) -> SuiteRow:
    a = solve_integer_embeddings(fx.cyclic_equation(3)).trivial_only
    rep = solve_integer_embeddings(fx.three_atom())
    ok = a and not rep.trivial_only
    return SuiteRow(2, "integer_embeddings", ok, float(len(rep.basis)))


def _master(cfg, seed) -> SuiteRow:
    fails = 0
    for d in fx.corpus(cfg["corpus"], seed):
        m = build_master_embedding(d)
        fails += len(verify_master_property(d, m.components, 6))
    return SuiteRow(3, "master_property", fails == 0, float(fails))


def _path_defs(cfg, seed) -> SuiteRow:
    bad = 0
    for d in fx.corpus(cfg["corpus"], seed):
        for t in (1, 2):
            ell = 2 * t - 1
            try:
                w = path_trick_walk(d, "x", ell).result
                i = path_trick_inductive(d, t, "x").result
            except ResourceError:
                continue
            bad += w != i
    return SuiteRow(4, "path_trick_equivalence", bad == 0, float(bad))


def _lift(cfg, seed) -> SuiteRow:
    bad = 0
    for d in fx.corpus(cfg["corpus"], seed):
        m = build_master_embedding(d)
        for comp in m.components:
            for ell in (1, 3):
                pd = path_trick_walk(d, "x", ell)
                bad += not lifted_embedding(comp, pd).is_valid(pd.result)
    return SuiteRow(5, "lift_validity", bad == 0, float(bad))


def _cs_chain(cfg, seed) -> SuiteRow:
    worst = -np.inf
    for i, d in enumerate(fx.corpus(max(cfg["corpus"] // 10, 2), seed)):
        rng = generator(seed, "cs", i)
        shp = [len(a) for a in d.alphabets]
        for n in (1, 2):
            for t in (1, 2):
                for _ in range(max(cfg["triples"] // 10, 1)):
                    f, g, h = (np.exp(2j * np.pi * rng.random((k,) * n)) * rng.random((k,) * n) for k in shp)
                    b = path_correlation_bound(d, f, g, h, t)
                    worst = max(worst, b.lhs - b.rhs)
    return SuiteRow(6, "cauchy_schwarz_chain", worst <= 1e-9, float(worst))


def _fourier(cfg, seed) -> SuiteRow:
    d = fx.two_to_one((1, 2, 3, 4))
    m = build_master_embedding(d)
    b = fo.split_basis_for(d, m.sigma, modest=None)
    rng = generator(seed, "fourier")
    worst = 0.0
    for _ in range(cfg["functions"]):
        f = fo.TensorFunction.random(b.symbols, b.weights, 2, rng)
        c = fo.coefficients(f, b)
        worst = max(worst, abs(float(np.sum(np.abs(c) ** 2)) - fo.norm2(f) ** 2))
        worst = max(worst, abs(float(np.sum(fo.level_weights(f))) - fo.norm2(f) ** 2))
        for j in range(2):
            worst = max(worst, abs(fo.influence(f, j, b) - fo.influence_by_definition(f, j, b)))
        stabs = [fo.nestab(f, r, b) for r in np.linspace(0, 1, 11)]
        worst = max([worst] + [a - c for a, c in zip(stabs, stabs[1:])])
    eig = 0.0
    for spec in (fo.NoiseOperatorSpec.standard(b.symbols, b.weights, 0.6), fo.NoiseOperatorSpec.nonembed(b, 0.6)):
        lam = fo.eigenvalue_grid(spec, b, 2)
        for idx in itertools.product(range(len(b.symbols)), repeat=2):
            m = fo.monomial_function(b, idx)
            eig = max(eig, float(np.max(np.abs(fo.noise_apply(spec, m).values - lam[idx] * m.values))))
    ok = worst <= 1e-10 and eig <= 1e-12
    return SuiteRow(7, "fourier_core", ok, max(worst, eig))


def _svd(cfg, seed) -> SuiteRow:
    d = fx.two_to_one((1, 2, 3, 4))
    law = ex.TripleLaw.of(d.pruned())
    b = ex._coordinate_basis(law, build_master_embedding(d), 0)
    rng = generator(seed, "svd")
    ids = ex.class_ids(b, 3)
    worst = 0.0
    for _ in range(cfg["functions"]):
        c = rng.standard_normal(ids.shape) + 1j * rng.standard_normal(ids.shape)
        c[ids != ids[tuple(rng.integers(len(b.tags), size=3))]] = 0
        f = fo.synthesize(c, b)
        f = f * (1 / fo.norm2(f))
        ch = ex.svd_split(f, int(rng.integers(3)), b).checks()
        worst = max([worst, ch["reconstruction"], ch["outer_orthonormal"], ch["inner_orthonormal"],
                     ch["coefficient_sum"], ch["coefs_identity"]] + [0.0 if ch["tags_ok"] else 1.0])
    return SuiteRow(8, "svd_claims", worst <= 1e-9, worst)


def _additive(cfg, seed) -> SuiteRow:
    v = ex.additive_base_constant(fx.skewed_two_to_one()).value
    z = ex.additive_base_constant(fx.two_to_one()).value
    return SuiteRow(9, "additive_base_case", v < 1 - 1e-6 and z == 0.0, v)


def _linearity(cfg, seed) -> SuiteRow:
    worst = 0.0
    rng = generator(seed, "linearity")
    for orders in ((2, 2), (3, 3)):
        H = AbelianGroup.from_orders(orders)
        for n in (1, 2):
            for _ in range(max(cfg["triples"] // 4, 1)):
                shp = (H.order,) * n
                f, g, h = (rng.standard_normal(shp) + 1j * rng.standard_normal(shp) for _ in range(3))
                lhs, rhs = ex.group_linearity_correlation(H, f, g, h)
                worst = max(worst, abs(lhs - rhs))
    return SuiteRow(10, "linearity_identity", worst <= 1e-10, worst)


def _shortlist(cfg, seed) -> SuiteRow:
    H = AbelianGroup.from_orders([3])
    cls = ik.ProductClass.from_sigma(GroupMap(H, {str(i): (i,) for i in range(3)}), ("0", "1", "2"), [1 / 3] * 3)
    rng = generator(seed, "shortlist")
    ok = True
    for n in (2, 3, 4):
        f = fo.TensorFunction.random(cls.symbols, cls.weights, n, rng)
        f = f * (1 / fo.norm2(f))
        sl = ik.short_list(f, 0.3, 0.05, cls)
        ok &= len(sl.entries) < sl.bound and ik.coverage_ok(sl, cls)
        for a, b in itertools.islice(itertools.combinations(list(cls.members(n)), 2), 200):
            ok &= ik.correlation_bound_check(cls.function(a), cls.function(b))
    return SuiteRow(11, "shortlist", bool(ok), 0.0)


def _dp_complete(cfg, seed, workers) -> SuiteRow:
    s = dp.DPStrategy(200, 4, "exact", seed)
    worst = 1.0
    for spec in (dp.DP(0.3, 0.5, 0.5), dp.Uniform(0.5, 0.25, 0), dp.Modified(0.5, 0.25, 0.5, 0),
                 dp.SubsetAgreement(0.3, 0.5, 0.5)):
        worst = min(worst, dp.run_agreement_test(s, spec, cfg["trials"], seed, workers).estimate)
    return SuiteRow(12, "dp_completeness", worst == 1.0, worst)


def _dp_floor(cfg, seed, workers) -> SuiteRow:
    s = dp.DPStrategy(200, 4, "mixture", seed, radius=3, eps=0.3)
    r = dp.run_agreement_test(s, dp.DP(0.3, 0.5, 0.5), cfg["trials"], seed, workers)
    floor = 0.5 * dp.perturbation_floor(0.3, 0.5, 3)
    return SuiteRow(13, "dp_perturbation_floor", r.ci_low >= floor, r.estimate)


def _dp_decode(cfg, seed) -> SuiteRow:
    worst = 1.0
    ok = True
    for s in range(cfg["seeds"]):
        st = dp.DPStrategy(200, 4, "mixture", seed * 1000 + s, radius=3, eps=0.3)
        gd = dp.global_decode(st, 400, 3, seed * 1000 + s, q=0.3)
        frac = float(np.mean(gd.g == st.g))
        worst = min(worst, frac)
        ok &= frac >= 0.95 and gd.agreement >= 0.15
    return SuiteRow(14, "dp_decoding", bool(ok), worst)


def _bridge(cfg, seed) -> SuiteRow:
    ds = [dp.biased_uniform_distance(6, N, 0.3) for N in (3000, 10000, 20000)]
    ok = ds[0] > ds[1] > ds[2] and ds[2] < 0.01
    return SuiteRow(15, "biased_uniform_bridge", ok, float(ds[2]))


def _slice(cfg, seed) -> SuiteRow:
    G = dp.MultiSliceGraph.from_params(6, 0.5, 0.25, 0.5)
    sp = dp.multislice_spectrum(G)
    ok = sp.row_sum_error <= 1e-12 and sp.symmetry_error <= 1e-10 and sp.lambda2 < 1
    for s in range(cfg["seeds"]):
        rng = generator(seed, "slice", s)
        probe = dp.expansion_probe(G, [dp.random_vertex_set(G, 0.01, rng), dp.random_vertex_set(G, 0.1, rng)],
                                   2000, seed * 1000 + s)
        ok &= probe.estimates[0] > probe.estimates[1]
    return SuiteRow(16, "multislice", bool(ok), sp.lambda2)


def run_battery(seed: int = 0, scale: str = "full", workers: int = 1) -> list:
    if scale not in SCALES:
        raise ArgumentError(f"unknown scale {scale!r}")
    cfg = SCALES[scale]
    rows = [f(cfg, seed) for f in (_embeddings_match, _integer_truths, _master, _path_defs, _lift, _cs_chain,
                                   _fourier, _svd, _additive, _linearity, _shortlist)]
    rows += [_dp_complete(cfg, seed, workers), _dp_floor(cfg, seed, workers)]
    rows += [f(cfg, seed) for f in (_dp_decode, _bridge, _slice)]
    return rows
