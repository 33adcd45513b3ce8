import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import binom

from abelia import dp_test as dp
from abelia.errors import ArgumentError, ResourceError
from abelia.rng import generator

ALL_SPECS = [dp.DP(0.3, 0.5, 0.5), dp.DP(0.3, 0.5, 0.5, mode="fixed"), dp.Uniform(0.5, 0.25, 0),
             dp.Modified(0.5, 0.25, 0.5, 0), dp.SubsetAgreement(0.3, 0.5, 0.5)]


# -- strategies --------------------------------------------------------------

def test_exact_strategy_restricts_g():
    s = dp.DPStrategy(10, 3, "exact", 1)
    A = np.array([1, 4, 7])
    assert np.array_equal(s(A), s.g[A])


def test_strategy_values_reproducible():
    A = np.array([0, 2, 5, 9])
    a = dp.DPStrategy(12, 4, "mixture", 3, radius=1, eps=0.5)
    b = dp.DPStrategy(12, 4, "mixture", 3, radius=1, eps=0.5)
    assert np.array_equal(a(A), b(A))
    assert np.array_equal(a(A), a(A))


@given(st.integers(0, 2**32), st.integers(0, 5))
def test_perturbed_differs_in_exactly_r_places(seed, r):
    s = dp.DPStrategy(30, 4, "perturbed", seed, radius=r)
    A = np.sort(generator(seed, "A").choice(30, size=12, replace=False))
    assert np.count_nonzero(s(A) != s.g[A]) == r


def test_strategy_parse():
    assert dp.DPStrategy.parse("mixture:0.3,2", 20, 4).eps == 0.3
    assert dp.DPStrategy.parse("perturbed:3", 20, 4).radius == 3
    assert dp.DPStrategy.parse("random", 20, 4).law == "random"
    for bad in ("mixture:0.3", "perturbed:x", "nope", "exact:1"):
        with pytest.raises(ArgumentError):
            dp.DPStrategy.parse(bad, 20, 4)


def test_strategy_validation():
    with pytest.raises(ArgumentError):
        dp.DPStrategy(10, 1, "exact")
    with pytest.raises(ArgumentError):
        dp.DPStrategy(3, 2, "exact", g=np.array([0, 1, 2]))


# -- samplers ----------------------------------------------------------------

@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: f"{s.name}-{getattr(s, 'mode', '')}")
def test_checked_set_inside_both_sets(spec):
    rng = generator(0, "shape")
    for _ in range(50):
        S1, S2, check, _ = spec.sample(rng, 200)
        assert np.all(np.isin(check, S1)) and np.all(np.isin(check, S2))


def test_uniform_sizes_exact():
    rng = generator(1, "sizes")
    S1, S2, A0, thr = dp.Uniform(0.5, 0.25, 2).sample(rng, 40)
    assert len(S1) == len(S2) == 20 and len(A0) == 10 and thr == 2


def test_modified_overlap_law():
    rng = generator(2, "mod")
    S1, S2, D, thr = dp.Modified(0.5, 0.25, 0.5, 1).sample(rng, 40)
    assert len(S1) == len(S2) == 20 and len(D) == 5 and thr == 2
    assert np.all(np.isin(D, np.intersect1d(S1, S2)))


def test_fixed_dp_sizes_rounded():
    rng = generator(3, "fixed")
    S1, S2, check, _ = dp.DP(0.3, 0.5, 0.5, mode="fixed").sample(rng, 25)
    # ρn = 7.5 rounds half up to 8
    assert len(S1) == len(S2) == 8


def test_divisibility_required():
    with pytest.raises(ArgumentError):
        dp.Uniform(0.5, 0.25).validate(30)
    with pytest.raises(ArgumentError):
        dp.Modified(0.5, 0.25, 0.25).validate(40)


def test_parameter_ranges():
    for spec in (dp.DP(0, 0.5, 0.5), dp.DP(0.3, 1.0, 0.5), dp.Uniform(0.25, 0.5), dp.Uniform(0.5, 0.25, -1),
                 dp.SubsetAgreement(0.7, 0.2, 0.5)):
        with pytest.raises(ArgumentError):
            spec.validate(40)


def test_biased_marginals():
    spec = dp.DP(0.4, 0.5, 0.5)
    rng = generator(4, "marg")
    n = 4000
    S1, S2, check, _ = spec.sample(rng, n)
    sd = lambda p: 4 * math.sqrt(p * (1 - p) / n)  # noqa: E731
    assert abs(len(S1) / n - 0.4) < sd(0.4)
    both = len(np.intersect1d(S1, S2)) / n
    extra = (0.4 - 0.2) / (1 - 0.2)
    p_both = 0.2 + 0.8 * extra ** 2
    assert abs(both - p_both) < sd(p_both)


# -- acceptance --------------------------------------------------------------

@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: f"{s.name}-{getattr(s, 'mode', '')}")
def test_exact_strategy_always_accepts(spec):
    r = dp.run_agreement_test(dp.DPStrategy(200, 4, "exact", 0), spec, 3000, seed=1)
    assert r.accepted == r.trials


def test_random_strategy_matches_closed_form():
    spec = dp.DP(0.3, 0.5, 0.5)
    r = dp.run_agreement_test(dp.DPStrategy(200, 4, "random", 0), spec, 20000, seed=2)
    # E[R^{−|C∩T|}] with |C∩T| ∼ Binomial(n, ραβ)
    p = 0.3 * 0.5 * 0.5
    k = np.arange(201)
    expect = float(np.sum(binom(200, p).pmf(k) * 4.0 ** (-k)))
    assert dp.random_acceptance(200, 4, spec) == pytest.approx(expect, rel=1e-12)
    sigma = math.sqrt(expect * (1 - expect) / r.trials)
    assert abs(r.estimate - expect) <= 3 * sigma
    assert r.ci_low <= expect <= r.ci_high


def test_random_closed_form_uniform_variant():
    spec = dp.Uniform(0.5, 0.25, 10)
    r = dp.run_agreement_test(dp.DPStrategy(40, 2, "random", 0), spec, 20000, seed=3)
    expect = dp.random_acceptance(40, 2, spec)
    assert abs(r.estimate - expect) <= 4 * math.sqrt(expect * (1 - expect) / r.trials)


def test_mixture_meets_floor():
    s = dp.DPStrategy(200, 4, "mixture", 0, radius=3, eps=0.3)
    r = dp.run_agreement_test(s, dp.DP(0.3, 0.5, 0.5), 20000, seed=4)
    assert r.ci_low >= 0.5 * dp.perturbation_floor(0.3, 0.5, 3)


def test_workers_do_not_change_counts():
    s = dp.DPStrategy(100, 3, "mixture", 5, radius=2, eps=0.4)
    spec = dp.SubsetAgreement(0.3, 0.5, 0.5)
    a = dp.run_agreement_test(s, spec, 5000, seed=6, workers=1)
    b = dp.run_agreement_test(s, spec, 5000, seed=6, workers=3)
    assert a == b


def test_subset_equivalent_matches_dp_sampler():
    spec = dp.DP(0.3, 0.5, 0.5)
    sub = spec.subset_equivalent()
    assert sub.q == 0.3
    for s in (dp.DPStrategy(150, 4, "exact", 0), dp.DPStrategy(150, 4, "mixture", 7, radius=2, eps=0.4)):
        a = dp.run_agreement_test(s, spec, 20000, seed=8)
        b = dp.run_agreement_test(s, sub, 20000, seed=9)
        pooled = (a.accepted + b.accepted) / (2 * a.trials)
        se = math.sqrt(max(pooled * (1 - pooled), 1e-12) * 2 / a.trials)
        assert abs(a.estimate - b.estimate) <= 4 * se


def test_subset_equivalent_preserves_coordinate_law():
    spec = dp.DP(0.4, 0.3, 0.6)
    sub = spec.subset_equivalent()
    extra = (0.4 - 0.12) / (1 - 0.12)
    both = 0.12 + 0.88 * extra ** 2
    assert sub.alpha * sub.q == pytest.approx(both, abs=1e-15)
    assert sub.alpha * sub.q * sub.beta == pytest.approx(0.4 * 0.3 * 0.6, abs=1e-15)


def test_trials_must_be_positive():
    with pytest.raises(ArgumentError):
        dp.run_agreement_test(dp.DPStrategy(10, 2, "exact"), dp.DP(0.3, 0.5, 0.5), 0)


def test_clopper_pearson_edges():
    lo, hi = dp.clopper_pearson(100, 100)
    assert hi == 1.0 and 0.9 < lo < 1.0
    lo, hi = dp.clopper_pearson(0, 100)
    assert lo == 0.0


# -- decoding ----------------------------------------------------------------

def test_local_decode_exact():
    s = dp.DPStrategy(60, 3, "exact", 0)
    loc = dp.cons_and_decode_local(s, range(10), range(10, 25), 0, 200)
    assert loc.cons_probability == 1.0
    assert np.array_equal(loc.g[loc.covered], s.g[loc.covered])


def test_local_decode_constant_zero():
    s = dp.DPStrategy(60, 3, "exact", 0, g=np.zeros(60, dtype=int))
    loc = dp.cons_and_decode_local(s, range(10), range(10, 25), 0, 100)
    assert not loc.g.any()


def test_local_decode_mixture_recovers_planted():
    fracs = []
    for seed in range(5):
        s = dp.DPStrategy(120, 4, "mixture", seed, radius=3, eps=0.5)
        rng = generator(seed, "anchor")
        # pick an anchor whose own table entry is structured
        while True:
            perm = rng.permutation(120)
            A, B = np.sort(perm[:30]), np.sort(perm[30:60])
            if s.structured(np.union1d(A, B)):
                break
        loc = dp.cons_and_decode_local(s, A, B, 6, 400, seed=seed)
        cov = loc.covered
        fracs.append(float(np.mean(loc.g[cov] == s.g[cov])))
    assert min(fracs) >= 0.9


def test_local_decode_needs_samples():
    with pytest.raises(ArgumentError):
        dp.cons_and_decode_local(dp.DPStrategy(10, 2, "exact"), [0], [1], 0, 0)


def test_global_decode_exact():
    s = dp.DPStrategy(100, 4, "exact", 1)
    gd = dp.global_decode(s, 50, 0, seed=1)
    assert np.array_equal(gd.g, s.g) and gd.agreement == 1.0


def test_global_decode_random_matches_tail():
    s = dp.DPStrategy(40, 4, "random", 2)
    gd = dp.global_decode(s, 4000, 5, seed=2, size=12)
    expect = dp.random_agreement(40, 4, 5, size=12)
    assert expect == pytest.approx(float(binom(12, 0.75).cdf(5)), rel=1e-12)
    assert abs(gd.agreement - expect) <= 4 * math.sqrt(expect * (1 - expect) / 4000)


def test_global_decode_mixture():
    s = dp.DPStrategy(200, 4, "mixture", 3, radius=3, eps=0.4)
    gd = dp.global_decode(s, 400, 3, seed=3, q=0.3)
    assert np.array_equal(gd.g, s.g)
    assert gd.agreement >= 0.2


def test_global_decode_budget():
    with pytest.raises(ArgumentError):
        dp.global_decode(dp.DPStrategy(10, 2, "exact"), 0, 0)


def test_plurality_ties_to_smallest():
    assert dp.plurality(np.array([[2, 2, 1], [0, 0, 0], [0, 3, 3]])).tolist() == [0, 0, 1]


# -- bridge ------------------------------------------------------------------

def test_bridge_trivial_case():
    assert dp.biased_uniform_distance(1, 2, Fraction(1, 2)) == 0


def test_bridge_decreases_in_N():
    d = [dp.biased_uniform_distance(6, N, 0.3) for N in (3000, 10000, 20000)]
    assert d[0] > d[1] > d[2]
    assert d[2] < 0.01


def test_bridge_exact_against_subset_enumeration():
    n, N, q = 3, 10, Fraction(2, 5)
    m = 4
    total = math.comb(N, m)
    tv = Fraction(0)
    for mask in range(2 ** n):
        t = bin(mask).count("1")
        p1 = q ** t * (1 - q) ** (n - t)
        p2 = Fraction(math.comb(N - n, m - t), total)
        tv += abs(p1 - p2)
    assert dp.biased_uniform_distance(n, N, q) == tv / 2


def test_bridge_errors():
    with pytest.raises(ResourceError):
        dp.biased_uniform_distance(21, 100, 0.5)
    with pytest.raises(ArgumentError):
        dp.biased_uniform_distance(3, 7, 0.5)


# -- multi-slice -------------------------------------------------------------

def test_forced_overlap_components():
    G = dp.MultiSliceGraph(4, (1, 1, 2), 1)
    sp = dp.multislice_spectrum(G)
    assert sp.components == 4
    assert int(np.sum(np.abs(sp.eigenvalues - 1) < 1e-10)) == sp.components
    # B-resampling inside each component is rank one
    assert np.all(np.abs(sp.eigenvalues[sp.components:]) < 1e-10)


def test_spectrum_connected_case():
    sp = dp.multislice_spectrum(dp.MultiSliceGraph.from_params(6, 0.5, 0.25, 0.5))
    assert sp.row_sum_error <= 1e-12 and sp.symmetry_error <= 1e-10
    assert sp.components == 1 and sp.lambda2 < 1
    assert sp.lambda2 == pytest.approx(0.25, abs=1e-10)


def test_slice_budget():
    with pytest.raises(ResourceError):
        dp.MultiSliceGraph.from_params(12, 0.5, 0.25, 0.5)


def test_expansion_whole_and_singleton():
    G = dp.MultiSliceGraph.from_params(6, 0.5, 0.25, 0.5)
    P = G.transition()
    probe = dp.expansion_probe(G, [np.arange(G.size), np.array([5])], 20000, seed=1)
    assert probe.estimates[0] == 0.0 and probe.exact[0] == pytest.approx(0.0, abs=1e-12)
    expect = 1 - P[5, 5]
    assert probe.exact[1] == pytest.approx(expect, abs=1e-12)
    assert abs(probe.estimates[1] - expect) <= 4 * math.sqrt(expect * (1 - expect) / 20000) + 1e-12


def test_small_sets_expand_more():
    G = dp.MultiSliceGraph.from_params(6, 0.5, 0.25, 0.5)
    for s in range(3):
        rng = generator(s, "sets")
        probe = dp.expansion_probe(G, [dp.random_vertex_set(G, 0.01, rng), dp.random_vertex_set(G, 0.1, rng)],
                                   4000, seed=s)
        assert probe.estimates[0] > probe.estimates[1]


def test_expansion_rejects_empty_set():
    G = dp.MultiSliceGraph.from_params(6, 0.5, 0.25, 0.5)
    with pytest.raises(ArgumentError):
        dp.expansion_probe(G, [np.array([], dtype=int)], 10)


# -- diagnostic probes -------------------------------------------------------

def test_hc_probe_within_envelope():
    G = dp.MultiSliceGraph.from_params(6, 0.5, 0.25, 0.5)
    out = dp.hc_probe(G, (0, 1, 2), samples=10)
    assert out[0]["ratio"] == pytest.approx(1.0)
    assert all(v["holds"] for v in out.values())


def test_sampler_probe_trend():
    out = dp.sampler_probe(10, (2, 3, 4), 0.3, 0.5, repeats=6)
    assert out[2] >= out[3] >= out[4]


def test_goodness_probe_exact_strategy():
    s = dp.DPStrategy(40, 3, "exact", 0)
    out = dp.goodness_probe(s, 0.5, 0.25, 0, 0.5, anchors=3, samples=20)
    assert out["good_fraction"] == 1.0
