"""Direct-product agreement testing at desk scale.

Strategies assign a string F[A] ∈ [R]^A to each set A ⊆ [n] (stored as a
sorted index array, F[A] aligned with it).  Values are a deterministic
function of (seed, A), so tables are never materialized.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.stats import binom, binomtest, hypergeom

from . import kernels
from .errors import ArgumentError, ResourceError
from .rng import generator

CI_LEVEL = 0.99
CHUNK = 2000
CACHE_LIMIT = 1 << 16
SLICE_BUDGET = 3000


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _exact_int(x: float, what: str) -> int:
    k = round_half_up(x)
    if abs(x - k) > 1e-9:
        raise ArgumentError(f"{what} = {x} is not an integer")
    return k


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------

STRATEGY_LAWS = ("exact", "perturbed", "random", "mixture")


@dataclass(eq=False)
class DPStrategy:
    """F[A] for A ⊆ [n] under one of four laws.

    ``exact`` returns g|_A; ``perturbed`` re-randomizes ``radius`` uniformly
    chosen coordinates of g|_A among the other R−1 symbols; ``random`` is
    uniform; ``mixture`` is perturbed with probability ``eps`` per set and
    random otherwise.
    """

    n: int
    R: int
    law: str
    seed: int = 0
    g: np.ndarray | None = None
    radius: int = 0
    eps: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.law not in STRATEGY_LAWS:
            raise ArgumentError(f"unknown strategy law {self.law!r}")
        if self.n < 1 or self.R < 2:
            raise ArgumentError("need n ≥ 1 and R ≥ 2")
        if self.g is None:
            self.g = generator(self.seed, "planted").integers(self.R, size=self.n)
        self.g = np.asarray(self.g, dtype=np.int64)
        if self.g.shape != (self.n,) or self.g.min() < 0 or self.g.max() >= self.R:
            raise ArgumentError("g must be a length-n string over [R]")
        if self.radius < 0 or not 0 <= self.eps <= 1:
            raise ArgumentError("need radius ≥ 0 and ε ∈ [0, 1]")

    @classmethod
    def parse(cls, text: str, n: int, R: int, seed: int = 0) -> "DPStrategy":
        """``exact``, ``random``, ``perturbed:r`` or ``mixture:eps,r``."""
        name, _, args = text.partition(":")
        if name in ("exact", "random") and not args:
            return cls(n, R, name, seed)
        try:
            if name == "perturbed":
                return cls(n, R, name, seed, radius=int(args))
            if name == "mixture":
                e, r = args.split(",")
                return cls(n, R, name, seed, radius=int(r), eps=float(e))
        except ValueError as exc:
            raise ArgumentError(f"bad strategy {text!r}") from exc
        raise ArgumentError(f"bad strategy {text!r}")

    def _rng(self, A: np.ndarray) -> np.random.Generator:
        mask = np.zeros(self.n, dtype=np.uint8)
        mask[A] = 1
        return generator(self.seed, "table", np.packbits(mask).tobytes())

    def structured(self, A: np.ndarray) -> bool:
        if self.law in ("exact", "perturbed"):
            return True
        if self.law == "random":
            return False
        return bool(self._rng(A).random() < self.eps)

    def __call__(self, A: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64)
        if self.law == "exact":
            return self.g[A]
        key = A.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        rng = self._rng(A)
        law = self.law
        if law == "mixture":
            law = "perturbed" if rng.random() < self.eps else "random"
        if law == "random":
            out = rng.integers(self.R, size=A.size)
        else:
            out = self.g[A].copy()
            r = min(self.radius, A.size)
            if r:
                pos = rng.choice(A.size, size=r, replace=False)
                out[pos] = (out[pos] + 1 + rng.integers(self.R - 1, size=r)) % self.R
        if len(self._cache) >= CACHE_LIMIT:
            self._cache.clear()
        self._cache[key] = out
        return out

    def on(self, S: np.ndarray, sub: np.ndarray) -> np.ndarray:
        """F[S]|_sub for sub ⊆ S (both sorted)."""
        return self(S)[np.searchsorted(S, sub)]

    def to_json(self) -> dict:
        return {"law": self.law, "n": self.n, "R": self.R, "seed": self.seed,
                "radius": self.radius, "eps": self.eps}


# ---------------------------------------------------------------------------
# test variants
# ---------------------------------------------------------------------------

def _choose(rng, pool: np.ndarray, k: int) -> np.ndarray:
    return np.sort(rng.choice(pool, size=k, replace=False))


@dataclass(frozen=True)
class DP:
    """DP(ρ,α,β): C ⊆ A ∩ B, checked on C ∩ T.

    ``biased`` draws C ∼ μ_{ρα}, A, B ∼ μ_ρ conditioned on containing C and
    T ⊆_β [n]; ``fixed`` uses |A| = |B| = ρn, |C| = α|A|, |T| = βn rounded.
    """

    rho: float
    alpha: float
    beta: float
    mode: str = "biased"
    name = "dp"

    def validate(self, n: int) -> None:
        if not all(0 < v < 1 for v in (self.rho, self.alpha, self.beta)):
            raise ArgumentError("DP parameters must lie in (0, 1)")
        if self.mode not in ("biased", "fixed"):
            raise ArgumentError("mode must be 'biased' or 'fixed'")

    def sample(self, rng, n: int):
        if self.mode == "biased":
            C = rng.random(n) < self.rho * self.alpha
            extra = (self.rho - self.rho * self.alpha) / (1 - self.rho * self.alpha)
            A = C | (rng.random(n) < extra)
            B = C | (rng.random(n) < extra)
            T = rng.random(n) < self.beta
            return np.flatnonzero(A), np.flatnonzero(B), np.flatnonzero(C & T), 0
        k = round_half_up(self.rho * n)
        c = round_half_up(self.alpha * k)
        idx = np.arange(n)
        C = _choose(rng, idx, c)
        rest = np.setdiff1d(idx, C)
        A = np.union1d(C, rng.choice(rest, size=k - c, replace=False))
        B = np.union1d(C, rng.choice(rest, size=k - c, replace=False))
        T = _choose(rng, idx, round_half_up(self.beta * n))
        return A, B, np.intersect1d(C, T), 0

    def subset_equivalent(self) -> "SubsetAgreement":
        """Per-coordinate law-preserving parameters (q, α̃, β̃) for the subset test."""
        q = self.rho
        extra = (self.rho - self.rho * self.alpha) / (1 - self.rho * self.alpha)
        both = self.rho * self.alpha + (1 - self.rho * self.alpha) * extra ** 2
        return SubsetAgreement(q, both / q, self.beta * self.alpha * self.rho / both)


@dataclass(frozen=True)
class Uniform:
    """|A₀| = q′n, B₀, B₁ ⊆ [n]∖A₀ of size (q−q′)n; ≤ t disagreements on A₀."""

    q: float
    q_prime: float
    t: int = 0
    name = "uniform"

    def validate(self, n: int) -> None:
        if not 0 < self.q_prime < self.q < 1 or self.t < 0:
            raise ArgumentError("need 0 < q′ < q < 1 and t ≥ 0")
        _exact_int(self.q * n, "qn")
        _exact_int(self.q_prime * n, "q′n")

    def sample(self, rng, n: int):
        a = _exact_int(self.q_prime * n, "q′n")
        b = _exact_int(self.q * n, "qn") - a
        perm = rng.permutation(n)
        A0 = np.sort(perm[:a])
        B0 = perm[a:a + b]
        B1 = rng.choice(perm[a:], size=b, replace=False)
        return np.union1d(A0, B0), np.union1d(A0, B1), A0, self.t


@dataclass(frozen=True)
class Modified:
    """|D| = cq′n, |E| = (1−c)q′n, |B| = (q−q′)n; E′, B′ resampled; ≤ 2t disagreements on D."""

    q: float
    q_prime: float
    c: float
    t: int = 0
    name = "modified"

    def validate(self, n: int) -> None:
        if not 0 < self.q_prime < self.q < 1 or not 0 < self.c < 1 or self.t < 0:
            raise ArgumentError("need 0 < q′ < q < 1, 0 < c < 1 and t ≥ 0")
        _exact_int(self.q * n, "qn")
        _exact_int(self.c * _exact_int(self.q_prime * n, "q′n"), "cq′n")

    def sample(self, rng, n: int):
        a = _exact_int(self.q_prime * n, "q′n")
        b = _exact_int(self.q * n, "qn") - a
        d = _exact_int(self.c * a, "cq′n")
        perm = rng.permutation(n)
        D, E, B = perm[:d], perm[d:a], perm[a:a + b]
        E2 = rng.choice(perm[a:], size=a - d, replace=False)
        pool = np.setdiff1d(np.arange(n), np.concatenate([D, E2]))
        B2 = rng.choice(pool, size=b, replace=False)
        S1 = np.sort(np.concatenate([D, E, B]))
        S2 = np.sort(np.concatenate([D, E2, B2]))
        return S1, S2, np.sort(D), 2 * self.t


@dataclass(frozen=True)
class SubsetAgreement:
    """(A, A′) ∼ D_{q,α}; each shared coordinate is checked with probability β."""

    q: float
    alpha: float
    beta: float
    name = "subset"

    def validate(self, n: int) -> None:
        if not (0 < self.q < 1 and 0 < self.alpha <= 1 and 0 < self.beta <= 1):
            raise ArgumentError("need 0 < q < 1 and α, β ∈ (0, 1]")
        if (2 - self.alpha) * self.q > 1 + 1e-12:
            raise ArgumentError("need (2 − α)q ≤ 1")

    def sample(self, rng, n: int):
        u = rng.random(n)
        both = u < self.alpha * self.q
        only_a = (u >= self.alpha * self.q) & (u < self.q)
        only_b = (u >= self.q) & (u < (2 - self.alpha) * self.q)
        check = both & (rng.random(n) < self.beta)
        return np.flatnonzero(both | only_a), np.flatnonzero(both | only_b), np.flatnonzero(check), 0


VARIANTS = {"dp": DP, "uniform": Uniform, "modified": Modified, "subset": SubsetAgreement}


# ---------------------------------------------------------------------------
# acceptance estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AcceptanceResult:
    accepted: int
    trials: int
    ci_low: float
    ci_high: float

    @property
    def estimate(self) -> float:
        return self.accepted / self.trials

    def to_json(self) -> dict:
        return {"accepted": self.accepted, "trials": self.trials, "acceptance": self.estimate,
                "ci_low": self.ci_low, "ci_high": self.ci_high}


def clopper_pearson(k: int, n: int, level: float = CI_LEVEL) -> tuple:
    ci = binomtest(k, n).proportion_ci(confidence_level=level, method="exact")
    return float(ci.low), float(ci.high)


def _one_trial(strategy: DPStrategy, spec, rng) -> bool:
    S1, S2, check, thr = spec.sample(rng, strategy.n)
    if check.size == 0:
        return True
    dis = kernels.count_mismatches(strategy(S1), strategy(S2), np.searchsorted(S1, check),
                                   np.searchsorted(S2, check))
    return dis <= thr


def run_agreement_test(strategy: DPStrategy, spec, trials: int, seed: int = 0,
                       workers: int = 1) -> AcceptanceResult:
    """Monte-Carlo acceptance with an exact 99% Clopper–Pearson interval.

    Trials run in fixed chunks of CHUNK, each with its own substream, so the
    count does not depend on ``workers``.
    """
    if trials < 1:
        raise ArgumentError("trials must be ≥ 1")
    spec.validate(strategy.n)
    chunks = [(i, min(CHUNK, trials - i * CHUNK)) for i in range(-(-trials // CHUNK))]

    def run(chunk):
        i, m = chunk
        rng = generator(seed, "trials", spec.name, i)
        return sum(_one_trial(strategy, spec, rng) for _ in range(m))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            acc = sum(ex.map(run, chunks))
    else:
        acc = sum(map(run, chunks))
    lo, hi = clopper_pearson(acc, trials)
    return AcceptanceResult(acc, trials, lo, hi)


def random_acceptance(n: int, R: int, spec) -> float:
    """Acceptance of the uniformly random strategy, E[Pr[≤ thr disagreements on the checked set]]."""
    spec.validate(n)
    if isinstance(spec, DP) and spec.mode == "fixed":
        k = round_half_up(spec.rho * n)
        c = round_half_up(spec.alpha * k)
        tsz = round_half_up(spec.beta * n)
        m = np.arange(0, min(c, tsz) + 1)
        return float(np.sum(hypergeom(n, tsz, c).pmf(m) * float(R) ** (-m)))
    if isinstance(spec, (DP, SubsetAgreement)):
        p = spec.rho * spec.alpha * spec.beta if isinstance(spec, DP) else spec.q * spec.alpha * spec.beta
        return (1 - p + p / R) ** n
    if isinstance(spec, Uniform):
        size, thr = _exact_int(spec.q_prime * n, "q′n"), spec.t
    else:
        size = _exact_int(spec.c * _exact_int(spec.q_prime * n, "q′n"), "cq′n")
        thr = 2 * spec.t
    return float(binom(size, 1 - 1 / R).cdf(thr))


def perturbation_floor(eps: float, beta: float, r: int) -> float:
    """ε²(1−β)^{2r}: both sets structured and no corrupted coordinate checked."""
    return eps ** 2 * (1 - beta) ** (2 * r)


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------

def plurality(counts: np.ndarray) -> np.ndarray:
    """Row-wise argmax with ties to the smallest symbol; all-zero rows give 0."""
    return np.argmax(counts, axis=1)


@dataclass
class LocalDecode:
    cons_probability: float
    consistent: int
    samples: int
    g: np.ndarray
    covered: np.ndarray

    def to_json(self) -> dict:
        return {"cons_probability": self.cons_probability, "consistent": self.consistent,
                "samples": self.samples, "covered": int(self.covered.sum()), "g": self.g.tolist()}


def cons_and_decode_local(strategy: DPStrategy, A: Sequence[int], B: Sequence[int], t: int,
                          samples: int, seed: int = 0) -> LocalDecode:
    """Estimate Pr[B′ ∈ Cons_t(A, B)] and the plurality decoding g_{A,B}.

    B′ ⊆ [n]∖A with |B′| = |B|; B′ is consistent when F[A∪B′]|_A differs
    from F[A∪B]|_A in at most t places.  g is F[A∪B] on A, the plurality of
    consistent sets elsewhere, and 0 where no consistent set reaches.
    """
    if samples < 1:
        raise ArgumentError("need at least one sample")
    n, R = strategy.n, strategy.R
    A = np.unique(np.asarray(A, dtype=np.int64))
    B = np.unique(np.asarray(B, dtype=np.int64))
    if np.intersect1d(A, B).size:
        raise ArgumentError("A and B must be disjoint")
    anchor = np.union1d(A, B)
    ref = strategy.on(anchor, A)
    rest = np.setdiff1d(np.arange(n), A)
    counts = np.zeros((n, R), dtype=np.int64)
    rng = generator(seed, "cons", A.tobytes(), B.tobytes())
    good = 0
    for _ in range(samples):
        S = np.union1d(A, rng.choice(rest, size=B.size, replace=False))
        vals = strategy(S)
        onA = vals[np.searchsorted(S, A)]
        if np.count_nonzero(onA != ref) <= t:
            good += 1
            counts[S, vals] += 1
    g = plurality(counts)
    g[A] = ref
    covered = counts.sum(axis=1) > 0
    covered[A] = True
    return LocalDecode(good / samples, good, samples, g, covered)


@dataclass
class GlobalDecode:
    g: np.ndarray
    agreement: float
    covered: np.ndarray
    radius: int
    budget: int

    def to_json(self) -> dict:
        return {"agreement": self.agreement, "radius": self.radius, "budget": self.budget,
                "covered": int(self.covered.sum()), "g": self.g.tolist()}


def _sample_set(rng, n: int, q: float, size: int | None) -> np.ndarray:
    if size is not None:
        return _choose(rng, np.arange(n), size)
    return np.flatnonzero(rng.random(n) < q)


def global_decode(strategy: DPStrategy, budget: int, radius: int, seed: int = 0,
                  q: float = 0.5, size: int | None = None) -> GlobalDecode:
    """Per-coordinate plurality over ``budget`` sampled sets, then Pr[Δ(F[A], g|_A) ≤ r] on fresh sets.

    Sets are q-biased unless ``size`` fixes |A|.
    """
    if budget < 1:
        raise ArgumentError("budget must be ≥ 1")
    n, R = strategy.n, strategy.R
    rng = generator(seed, "decode")
    counts = np.zeros((n, R), dtype=np.int64)
    for _ in range(budget):
        S = _sample_set(rng, n, q, size)
        counts[S, strategy(S)] += 1
    g = plurality(counts)
    rng2 = generator(seed, "decode-check")
    ok = 0
    for _ in range(budget):
        S = _sample_set(rng2, n, q, size)
        ok += int(np.count_nonzero(strategy(S) != g[S]) <= radius)
    return GlobalDecode(g, ok / budget, counts.sum(axis=1) > 0, radius, budget)


def random_agreement(n: int, R: int, radius: int, q: float = 0.5, size: int | None = None) -> float:
    """Pr[Δ ≤ r] for a random strategy against any fixed g: a Binomial(|A|, 1−1/R) tail."""
    if size is not None:
        return float(binom(size, 1 - 1 / R).cdf(radius))
    k = np.arange(n + 1)
    return float(np.sum(binom(n, q).pmf(k) * binom(k, 1 - 1 / R).cdf(radius)))


# ---------------------------------------------------------------------------
# biased ↔ uniform bridge
# ---------------------------------------------------------------------------

def biased_uniform_distance(n: int, N: int, q) -> Fraction:
    """Exact TV distance between the q-biased subset of [n] and [n] ∩ (uniform qN-subset of [N])."""
    if n > 20:
        raise ResourceError("n > 20 is outside the exact budget")
    q = Fraction(str(q)) if isinstance(q, float) else Fraction(q)
    if not 0 < q < 1 or N < n or n < 0:
        raise ArgumentError("need 0 < q < 1 and N ≥ n ≥ 0")
    m = q * N
    if m.denominator != 1:
        raise ArgumentError("qN must be an integer")
    m = int(m)
    total = math.comb(N, m)
    dist = Fraction(0)
    for t in range(n + 1):
        p1 = q ** t * (1 - q) ** (n - t)
        p2 = Fraction(math.comb(N - n, m - t), total) if 0 <= m - t <= N - n else Fraction(0)
        dist += math.comb(n, t) * abs(p1 - p2)
    return dist / 2


# ---------------------------------------------------------------------------
# multi-slice graph
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class MultiSliceGraph:
    """Vertices x ∈ {0,1,2}ⁿ with counts (#1, #2, #0) = (a, b, rest); x_i = 1 on A, 2 on B.

    A step keeps ``overlap`` elements of A, draws the rest of A′ outside A,
    and draws B′ uniformly from [n]∖A′.
    """

    n: int
    counts: tuple
    overlap: int
    budget: int = SLICE_BUDGET

    def __post_init__(self):
        a, b, rest = self.counts
        if min(a, b, rest) < 0 or a + b + rest != self.n:
            raise ArgumentError("counts must be nonnegative and sum to n")
        if not 0 <= self.overlap <= a or a - self.overlap > self.n - a:
            raise ArgumentError("overlap incompatible with the counts")
        if self.size > self.budget:
            raise ResourceError(f"{self.size} vertices exceed the budget of {self.budget}")

    @classmethod
    def from_params(cls, n: int, q: float, q_prime: float, c: float, **kw) -> "MultiSliceGraph":
        a = round_half_up(q_prime * n)
        b = round_half_up((q - q_prime) * n)
        return cls(n, (a, b, n - a - b), round_half_up(c * a), **kw)

    @property
    def size(self) -> int:
        a, b, _ = self.counts
        return math.comb(self.n, a) * math.comb(self.n - a, b)

    def vertices(self) -> np.ndarray:
        a, b, _ = self.counts
        out = []
        for A in itertools.combinations(range(self.n), a):
            others = [i for i in range(self.n) if i not in A]
            for B in itertools.combinations(others, b):
                x = np.zeros(self.n, dtype=np.int8)
                x[list(A)] = 1
                x[list(B)] = 2
                out.append(x)
        return np.array(out).reshape(-1, self.n)

    def transition(self) -> np.ndarray:
        a, b, _ = self.counts
        V = self.vertices()
        IA = (V == 1).astype(np.int64)
        inter = IA @ IA.T
        per = math.comb(a, self.overlap) * math.comb(self.n - a, a - self.overlap) * math.comb(self.n - a, b)
        return (inter == self.overlap) / per


@dataclass
class SliceSpectrum:
    eigenvalues: np.ndarray
    lambda2: float
    components: int
    row_sum_error: float
    symmetry_error: float

    def to_json(self) -> dict:
        return {"lambda2": self.lambda2, "components": self.components,
                "row_sum_error": self.row_sum_error, "symmetry_error": self.symmetry_error,
                "eigenvalues": [float(v) for v in self.eigenvalues]}


def multislice_spectrum(graph: MultiSliceGraph) -> SliceSpectrum:
    P = graph.transition()
    rs = float(np.max(np.abs(P.sum(axis=1) - 1)))
    # uniform stationary law makes P self-adjoint exactly when it is symmetric
    sym = float(np.max(np.abs(P - P.T)))
    ev = np.sort(np.linalg.eigvalsh((P + P.T) / 2))[::-1]
    ncomp, _ = connected_components(sparse.csr_matrix(P > 0), directed=False)
    lam2 = float(ev[1]) if ev.size > 1 else 0.0
    return SliceSpectrum(ev, lam2, int(ncomp), rs, sym)


def random_vertex_set(graph: MultiSliceGraph, measure: float, rng) -> np.ndarray:
    k = max(1, round_half_up(measure * graph.size))
    return np.sort(rng.choice(graph.size, size=k, replace=False))


@dataclass
class ExpansionProbe:
    estimates: list
    exact: list
    minimum: float

    def to_json(self) -> dict:
        return {"estimates": self.estimates, "exact": self.exact, "minimum": self.minimum}


def expansion_probe(graph: MultiSliceGraph, sets: Sequence | Callable, trials: int, seed: int = 0,
                    count: int | None = None) -> ExpansionProbe:
    """Monte-Carlo Pr[v ∉ S | u ∈ S] per set (u uniform in S, v a random neighbor).

    ``sets`` is a list of vertex-index arrays or a sampler ``rng -> array``
    called ``count`` times.  The exact value is reported alongside.
    """
    rng = generator(seed, "expansion")
    if callable(sets):
        sets = [sets(rng) for _ in range(count or 1)]
    P = graph.transition()
    cum = np.cumsum(P, axis=1)
    est, exact = [], []
    for S in sets:
        S = np.asarray(S, dtype=np.int64)
        if S.size == 0:
            raise ArgumentError("sets must be nonempty")
        inS = np.zeros(graph.size, dtype=bool)
        inS[S] = True
        u = rng.choice(S, size=trials)
        v = np.minimum((cum[u] < rng.random(trials)[:, None]).sum(axis=1), graph.size - 1)
        est.append(float(np.mean(~inS[v])))
        exact.append(float(1 - P[np.ix_(S, S)].sum() / S.size))
    return ExpansionProbe(est, exact, min(est))


# ---------------------------------------------------------------------------
# diagnostic probes
# ---------------------------------------------------------------------------

def hc_probe(graph: MultiSliceGraph, degrees: Sequence[int] = (0, 1, 2), samples: int = 50,
             seed: int = 0) -> dict:
    """Largest observed ‖f‖₄/‖f‖₂ for random degree-≤d functions on the slice.

    Degree-≤d functions are combinations of products of at most d
    coordinate indicators 1[x_i = s].  The envelope (1/(cq′))^d is reported
    next to each ratio, with q′ = a/n and c = overlap/a.
    """
    V = graph.vertices()
    a = graph.counts[0]
    base = 1.0 / ((graph.overlap / a) * (a / graph.n)) if graph.overlap else float("inf")
    ind = [(V[:, i] == s).astype(float) for i in range(graph.n) for s in range(3)]
    rng = generator(seed, "hc")
    out = {}
    for d in degrees:
        feats = [np.ones(len(V))]
        for k in range(1, d + 1):
            feats += [np.prod([ind[j] for j in c], axis=0) for c in itertools.combinations(range(len(ind)), k)]
        M = np.array(feats)
        worst = 0.0
        for _ in range(samples):
            f = rng.standard_normal(len(M)) @ M
            n2 = math.sqrt(np.mean(f ** 2))
            if n2 > 0:
                worst = max(worst, float(np.mean(f ** 4) ** 0.25 / n2))
        out[d] = {"ratio": worst, "envelope": base ** d, "holds": worst <= base ** d + 1e-12}
    return out


def sampler_probe(n: int, ells: Sequence[int], rho: float, nu: float, repeats: int = 5,
                  seed: int = 0) -> dict:
    """Fraction of x ∈ [n] with |Pr_{y∋x}[y ∈ Y′] − ρ| > νρ, Y′ ⊆ C([n], ℓ) random of measure ρ."""
    out = {}
    for ell in ells:
        subsets = np.array(list(itertools.combinations(range(n), ell)))
        inc = np.zeros((len(subsets), n), dtype=bool)
        inc[np.repeat(np.arange(len(subsets)), ell), subsets.reshape(-1)] = True
        fr = []
        for r in range(repeats):
            rng = generator(seed, "sampler", ell, r)
            k = max(1, round_half_up(rho * len(subsets)))
            Y = np.zeros(len(subsets), dtype=bool)
            Y[rng.choice(len(subsets), size=k, replace=False)] = True
            dens = (inc & Y[:, None]).sum(axis=0) / inc.sum(axis=0)
            fr.append(float(np.mean(np.abs(dens - k / len(subsets)) > nu * k / len(subsets))))
        out[ell] = float(np.mean(fr))
    return out


def goodness_probe(strategy: DPStrategy, q: float, q_prime: float, t: int, eps: float,
                   anchors: int, samples: int, seed: int = 0) -> dict:
    """Fraction of anchors (A, B) that are (ε/2, t)-good: Pr[B′ ∈ Cons_t(A, B)] ≥ ε/2."""
    n = strategy.n
    a = _exact_int(q_prime * n, "q′n")
    b = _exact_int(q * n, "qn") - a
    rng = generator(seed, "goodness")
    probs = []
    for i in range(anchors):
        perm = rng.permutation(n)
        loc = cons_and_decode_local(strategy, perm[:a], perm[a:a + b], t, samples, seed=seed + i)
        probs.append(loc.cons_probability)
    good = float(np.mean(np.array(probs) >= eps / 2))
    return {"good_fraction": good, "cons_probabilities": probs}
