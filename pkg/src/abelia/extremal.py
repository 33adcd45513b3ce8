"""Three-wise correlations, structured SVDs and extremal-correlation estimates.

Every estimate of a supremum here is a certified *lower* bound: it comes with
witness functions whose correlation is recomputed independently.  Function
classes are described through the monomial degrees of a :class:`SplitBasis`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .abelian import (AbelianGroup, GroupMap, MasterEmbedding, all_characters,
                      build_master_embedding)
from .dist_core import TripleDistribution, implies_third, univariate
from .errors import ArgumentError, PreconditionError, ResourceError
from .fourier import (EMBED, MODEST, NONEMBED, TOL_EQ, TOL_RANK, TOL_SLACK, NoiseOperatorSpec,
                      SplitBasis, TensorFunction, build_split_basis, coefficients, count_grid,
                      degree_grids, influence, inner_product, nestab, norm2, pair_grid,
                      product_weights, synthesize, wrap_W, unwrap_W)
from .rng import generator

DEFAULT_RESTARTS = 32
DEFAULT_ROUNDS = 500
DEFAULT_RESIDUAL = 1e-9
N_BUDGET = 5


# ---------------------------------------------------------------------------
# correlations and conditional expectations
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TripleLaw:
    """Float view of a distribution: atom coordinates as alphabet indices plus masses."""

    dist: TripleDistribution
    idx: tuple            # three int arrays of length |supp|
    p: np.ndarray
    marginals: tuple      # three float vectors over the full alphabets

    @classmethod
    def of(cls, dist: TripleDistribution) -> "TripleLaw":
        atoms = dist.support
        idx = tuple(np.array([dist.alphabets[c].index(t[c]) for t in atoms], dtype=np.int64)
                    for c in range(3))
        p = np.array([float(dist.atoms[t]) for t in atoms])
        margs = tuple(np.bincount(idx[c], weights=p, minlength=len(dist.alphabets[c])) for c in range(3))
        return cls(dist, idx, p, margs)

    def symbols(self, c: int) -> tuple:
        return tuple(self.dist.alphabets[c])

    def _lift(self, c: int, values: np.ndarray) -> np.ndarray:
        n = values.ndim
        return values[np.ix_(*([self.idx[c]] * n))] if n else values

    def correlation(self, f: np.ndarray, g: np.ndarray, h: np.ndarray) -> complex:
        """E_{μ^{⊗n}}[f(x)g(y)h(z)] summed over support-atom tuples."""
        n = f.ndim
        A = self._lift(0, f) * self._lift(1, g) * self._lift(2, h)
        return complex(np.sum(product_weights(self.p, n) * A))

    def conditional(self, c: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """E[a·b | coordinate c] for the two other coordinates' functions (in x<y<z order)."""
        others = [o for o in range(3) if o != c]
        n = a.ndim
        A = self._lift(others[0], a) * self._lift(others[1], b) * product_weights(self.p, n)
        k = len(self.dist.alphabets[c])
        sel = np.zeros((k, self.p.size))
        sel[self.idx[c], np.arange(self.p.size)] = 1.0
        out = kernels.apply_axes(A, [sel] * n)
        m = product_weights(self.marginals[c], n)
        return np.divide(out, m, out=np.zeros_like(out), where=m > 0)


def _check_fn(f: TensorFunction, law: TripleLaw, c: int) -> None:
    if f.symbols != law.symbols(c):
        raise ArgumentError(f"function symbols do not match the {'xyz'[c]} alphabet")


def three_wise_correlation(dist: TripleDistribution, f: TensorFunction, g: TensorFunction,
                           h: TensorFunction) -> complex:
    """E_{(x,y,z)∼μ^{⊗n}}[f(x)g(y)h(z)], exactly summed over the support."""
    if not f.n == g.n == h.n:
        raise ArgumentError("f, g, h must share n")
    law = TripleLaw.of(dist)
    for c, u in enumerate((f, g, h)):
        _check_fn(u, law, c)
    return law.correlation(f.values, g.values, h.values)


def pair_correlation(dist: TripleDistribution, F: TensorFunction, g: TensorFunction,
                     h: TensorFunction) -> complex:
    """E[F(y,z)g(y)h(z)] for F on the (y, z) pair grid."""
    grid = pair_grid(dist)
    if F.symbols != grid.pairs:
        raise ArgumentError("F must live on the pair grid")
    law = TripleLaw.of(dist)
    _check_fn(g, law, 1)
    _check_fn(h, law, 2)
    kz = len(dist.alphabets[2])
    pidx = law.idx[1] * kz + law.idx[2]
    n = F.n
    A = (F.values[np.ix_(*([pidx] * n))] if n else F.values) * law._lift(1, g.values) * law._lift(2, h.values)
    return complex(np.sum(product_weights(law.p, n) * A))


# ---------------------------------------------------------------------------
# monomial classes
# ---------------------------------------------------------------------------

def class_ids(basis: SplitBasis, n: int) -> np.ndarray:
    """Integer id per monomial encoding (embeddeg_a for each embed element, nedeg)."""
    tags = basis.tags
    emb = basis.indices(EMBED)
    ids = np.zeros((len(tags),) * n, dtype=np.int64)
    radix = 1
    for e in emb:
        ids += radix * count_grid([i == e for i in range(len(tags))], n)
        radix *= n + 1
    ids += radix * count_grid([t != EMBED for t in tags], n)
    return ids


@dataclass(frozen=True)
class ClassProfile:
    """Degree labels carried by the monomials of a function."""

    classes: frozenset          # {(embeddeg per embed element, nedeg)}
    effnon_min: int | None

    @property
    def completely_embedding_homogenous(self) -> bool:
        return len({c[0] for c in self.classes}) <= 1

    @property
    def nonembedding_homogenous(self) -> bool:
        return len({c[1] for c in self.classes}) <= 1

    @property
    def nedeg(self):
        vals = {c[1] for c in self.classes}
        return next(iter(vals)) if len(vals) == 1 else None


def class_profile(f: TensorFunction, basis: SplitBasis, tol: float = 1e-9) -> ClassProfile:
    c = coefficients(f, basis)
    live = np.abs(c) > tol * max(norm2(f), 1e-300)
    emb = basis.indices(EMBED)
    L = len(basis.tags)
    grids = [count_grid([i == e for i in range(L)], f.n) for e in emb]
    g = degree_grids(basis, f.n)
    classes = set()
    for pos in zip(*np.nonzero(live)):
        classes.add((tuple(int(G[pos]) for G in grids), int(g["nedeg"][pos])))
    eff = g["effnon"][live]
    return ClassProfile(frozenset(classes), int(eff.min()) if eff.size else None)


class _Projector:
    """Best projection of a vector onto a union of monomial classes.

    Classes are the orthogonal spans of monomials sharing a class id; the
    allowed monomials are restricted by ``mask``.  Picking the class with
    the largest projected norm gives the exact best unit vector in the union.
    """

    def __init__(self, basis: SplitBasis, n: int, mask=None, homogenous: bool = True):
        self.basis = basis
        self.n = n
        self.ids = class_ids(basis, n) if homogenous else np.zeros((len(basis.tags),) * n, np.int64)
        self.mask = np.ones_like(self.ids, dtype=bool) if mask is None else mask
        if not self.mask.any():
            raise ArgumentError("the function class is empty")

    def __call__(self, values: np.ndarray) -> np.ndarray:
        f = TensorFunction(self.basis.symbols, self.basis.weights, values)
        c = coefficients(f, self.basis)
        mass = np.abs(c) ** 2 * self.mask
        tot = np.bincount(self.ids.reshape(-1), weights=mass.reshape(-1))
        best = int(np.argmax(tot))
        keep = (self.ids == best) & self.mask
        out = synthesize(np.where(keep, c, 0), self.basis).values
        if tot[best] <= 0:
            # degenerate input: fall back to the first allowed monomial
            first = np.zeros_like(c)
            first[tuple(np.argwhere(self.mask)[0])] = 1.0
            out = synthesize(first, self.basis).values
        return out

    def random(self, rng: np.random.Generator) -> np.ndarray:
        shape = self.ids.shape
        return self(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _normalize(values: np.ndarray, w: np.ndarray) -> np.ndarray:
    nrm = math.sqrt(float(np.sum(product_weights(w, values.ndim) * np.abs(values) ** 2)))
    return values / nrm if nrm > 0 else values


# ---------------------------------------------------------------------------
# alternating maximization
# ---------------------------------------------------------------------------

@dataclass
class ExtremalReport:
    kind: str
    value: float
    witnesses: tuple                  # (f, g, h) TensorFunctions
    descriptor: Mapping
    restarts: int
    iterations: int
    residual: float
    recomputed: float = float("nan")
    membership: bool = True
    per_restart: list = field(default_factory=list)
    pair_witness: TensorFunction | None = None   # W f when (y, z) determines x

    def to_json(self) -> dict:
        return {
            "kind": self.kind, "value": self.value, "recomputed": self.recomputed,
            "descriptor": dict(self.descriptor), "restarts": self.restarts,
            "iterations": self.iterations, "residual": self.residual,
            "membership": self.membership, "per_restart": list(self.per_restart),
            "witnesses": [w.to_json() for w in self.witnesses],
        }

    def csv_row(self) -> dict:
        d = self.descriptor
        return {"kind": self.kind, "n": d.get("n"), "d": d.get("d"), "d_prime": d.get("d_prime"),
                "value": self.value, "residual": self.residual, "restarts": self.restarts}


def _alternate(law: TripleLaw, projectors, rng, rounds: int, tol: float, start=None):
    ws = [law.marginals[c] for c in range(3)]
    if start is None:
        fs = [_normalize(projectors[c].random(rng), ws[c]) for c in range(3)]
    else:
        fs = [_normalize(projectors[c](s), ws[c]) for c, s in enumerate(start)]
    prev = abs(law.correlation(*fs))
    it = 0
    residual = float("inf")
    for it in range(1, rounds + 1):
        for c in range(3):
            others = [fs[o] for o in range(3) if o != c]
            v = np.conj(law.conditional(c, *others))
            fs[c] = _normalize(projectors[c](v), ws[c])
        val = abs(law.correlation(*fs))
        residual = abs(val - prev)
        prev = val
        if residual < tol:
            break
    return prev, fs, it, residual


def _run_restarts(law, projectors, restarts, seed, label, rounds, tol, workers):
    def one(r):
        return _alternate(law, projectors, generator(seed, label, r), rounds, tol)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, range(restarts)))
    else:
        results = [one(r) for r in range(restarts)]
    # (value, restart index) lexicographic: highest value, then lowest index
    best = min(range(restarts), key=lambda r: (-results[r][0], r))
    return best, results


def _prepared(dist: TripleDistribution, master: MasterEmbedding | None, n: int):
    if n > N_BUDGET:
        raise ResourceError(f"n={n} exceeds the dense budget of {N_BUDGET}")
    if n < 0:
        raise ArgumentError("n must be nonnegative")
    d = dist.pruned()
    m = master if master is not None else build_master_embedding(d)
    return d, m, TripleLaw.of(d)


def _coordinate_basis(law: TripleLaw, m: MasterEmbedding, c: int, modest=None) -> SplitBasis:
    gm = m.maps[c]
    syms = law.symbols(c)
    mu = univariate(law.dist, c)
    measure = {s: mu[s] for s in syms}
    return build_split_basis(measure, GroupMap(gm.group, {s: gm(s) for s in syms}),
                             modest if c == 0 else None)


def _finish(kind, law, bases, best, results, descriptor, restarts, dist) -> ExtremalReport:
    val, fs, it, res = results[best]
    wit = tuple(TensorFunction(bases[c].symbols, bases[c].weights, fs[c]) for c in range(3))
    norms = [norm2(w) for w in wit]
    rec = abs(three_wise_correlation(law.dist, *wit)) / float(np.prod(norms))
    report = ExtremalReport(kind, float(val), wit, descriptor, restarts, it, float(res),
                            recomputed=float(rec), per_restart=[float(r[0]) for r in results])
    if implies_third(law.dist, "yz"):
        report.pair_witness = wrap_W(wit[0], law.dist)
    return report


def estimate_beta(dist: TripleDistribution, n: int, d: int, d_prime: int, restarts: int = DEFAULT_RESTARTS,
                  seed: int = 0, master: MasterEmbedding | None = None, modest=None,
                  rounds: int = DEFAULT_ROUNDS, tol: float = DEFAULT_RESIDUAL, workers: int = 1) -> ExtremalReport:
    """Lower bound on β_{n,d,d′}: f completely embedding homogenous with nedeg = d and
    effnon ≥ d′; g, h completely embedding and non-embedding homogenous.

    Works with x-functions f; when (y,z) determines x the pair-grid form
    F = W f has the same correlation and norm.
    """
    if not 0 <= d_prime <= d <= n:
        raise ArgumentError("need 0 ≤ d′ ≤ d ≤ n")
    dist, m, law = _prepared(dist, master, n)
    bases = [_coordinate_basis(law, m, c, modest) for c in range(3)]
    g = degree_grids(bases[0], n)
    fmask = (g["nedeg"] == d) & (g["effnon"] >= d_prime)
    if not fmask.any():
        raise ArgumentError(f"no monomials with nedeg={d} and effnon≥{d_prime}")
    projectors = [_Projector(bases[0], n, fmask), _Projector(bases[1], n), _Projector(bases[2], n)]
    best, results = _run_restarts(law, projectors, restarts, seed, "beta", rounds, tol, workers)
    report = _finish("beta", law, bases, best, results,
                     {"n": n, "d": d, "d_prime": d_prime,
                      "modest": None if modest is None else list(modest)}, restarts, dist)
    report.membership = _beta_membership(report.witnesses, bases, d, d_prime)
    return report


def _beta_membership(wit, bases, d, d_prime) -> bool:
    pf = class_profile(wit[0], bases[0])
    ok = (pf.completely_embedding_homogenous and pf.nedeg in (d, None)
          and (pf.effnon_min is None or pf.effnon_min >= d_prime))
    for c in (1, 2):
        p = class_profile(wit[c], bases[c])
        ok = ok and p.completely_embedding_homogenous and p.nonembedding_homogenous
    return bool(ok)


def estimate_delta(dist: TripleDistribution, n: int, d_prime: int, restarts: int = DEFAULT_RESTARTS,
                   seed: int = 0, master: MasterEmbedding | None = None, modest=None,
                   rounds: int = DEFAULT_ROUNDS, tol: float = DEFAULT_RESIDUAL, workers: int = 1) -> ExtremalReport:
    """Lower bound on δ_{n,d′}: f with effnon ≥ d′, g and h arbitrary."""
    if not 0 <= d_prime <= n:
        raise ArgumentError("need 0 ≤ d′ ≤ n")
    dist, m, law = _prepared(dist, master, n)
    bases = [_coordinate_basis(law, m, c, modest) for c in range(3)]
    fmask = degree_grids(bases[0], n)["effnon"] >= d_prime
    if not fmask.any():
        raise ArgumentError(f"no monomials with effnon≥{d_prime}")
    projectors = [_Projector(bases[0], n, fmask, homogenous=False),
                  _Projector(bases[1], n, homogenous=False), _Projector(bases[2], n, homogenous=False)]
    best, results = _run_restarts(law, projectors, restarts, seed, "delta", rounds, tol, workers)
    report = _finish("delta", law, bases, best, results,
                     {"n": n, "d_prime": d_prime, "modest": None if modest is None else list(modest)},
                     restarts, dist)
    pf = class_profile(report.witnesses[0], bases[0])
    report.membership = pf.effnon_min is None or pf.effnon_min >= d_prime
    return report


# ---------------------------------------------------------------------------
# SVD along one coordinate
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SvdPart:
    coefficient: float
    inner: TensorFunction           # on the I block (n−1 coordinates)
    outer: np.ndarray               # univariate factor on the J coordinate
    tag: str                        # "embed(e)", "nonembed" or "mixed"


@dataclass(frozen=True, eq=False)
class SvdSplit:
    parts: tuple
    j: int
    n: int
    basis: SplitBasis
    source: TensorFunction          # the x-level (or y/z-level) function that was split

    def reconstruct(self) -> np.ndarray:
        acc = np.zeros(self.source.values.shape, dtype=complex)
        for p in self.parts:
            t = np.multiply.outer(p.inner.values, p.outer) * p.coefficient
            acc = acc + np.moveaxis(t, -1, self.j)
        return acc

    def nonembed_mass(self) -> float:
        return float(sum(p.coefficient ** 2 for p in self.parts if p.tag == NONEMBED))

    def checks(self) -> dict:
        b = self.basis
        w = b.weights
        src = self.source
        out = {}
        out["reconstruction"] = float(np.max(np.abs(self.reconstruct() - src.values), initial=0.0))
        outs = np.array([p.outer for p in self.parts]).reshape(len(self.parts), -1)
        G = (outs * w) @ outs.conj().T
        out["outer_orthonormal"] = float(np.max(np.abs(G - np.eye(len(self.parts))), initial=0.0))
        if self.parts:
            inn = np.array([p.inner.values.reshape(-1) for p in self.parts])
            wi = product_weights(w, self.n - 1).reshape(-1)
            Gi = (inn * wi) @ inn.conj().T
            out["inner_orthonormal"] = float(np.max(np.abs(Gi - np.eye(len(self.parts)))))
        else:
            out["inner_orthonormal"] = 0.0
        out["coefficient_sum"] = abs(float(sum(p.coefficient ** 2 for p in self.parts)) - norm2(src) ** 2)
        out["tags_ok"] = self._tags_ok()
        if all(p.tag != "mixed" for p in self.parts):
            half = 0.5 * influence(src, self.j, b, NONEMBED)
            out["coefs_identity"] = abs(self.nonembed_mass() - half)
        return out

    def _tags_ok(self) -> bool:
        b = self.basis
        E = b.matrix[b.indices(EMBED)]
        src_prof = class_profile(self.source, b)
        d = src_prof.nedeg
        for p in self.parts:
            if p.tag == "mixed":
                continue
            proj = (E.conj() * b.weights) @ p.outer  # coefficients on embed elements
            prof = class_profile(p.inner, b) if self.n > 1 else None
            if p.tag == NONEMBED:
                if np.max(np.abs(proj), initial=0.0) > 1e-8:
                    return False
                if prof is not None and d is not None and prof.nedeg not in (d - 1, None):
                    return False
            else:
                pos = int(p.tag[len("embed("):-1])
                pivot = b.matrix[pos]
                res = p.outer - np.sum(b.weights * p.outer * np.conj(pivot)) * pivot
                if math.sqrt(float(np.sum(b.weights * np.abs(res) ** 2))) > 1e-8:
                    return False
                if prof is not None and d is not None and prof.nedeg not in (d, None):
                    return False
            if prof is not None and not prof.completely_embedding_homogenous:
                return False
        return True


def _profile_blocks(basis: SplitBasis) -> list:
    """Invariant blocks: one per embed element and one for nonembed ∪ modest."""
    blocks = [([i], f"embed({i})") for i in basis.indices(EMBED)]
    rest = basis.indices(NONEMBED) + basis.indices(MODEST)
    if rest:
        blocks.append((rest, NONEMBED))
    return blocks


def svd_split(func: TensorFunction, j: int, basis: SplitBasis, effective: bool = False,
              dist: TripleDistribution | None = None) -> SvdSplit:
    """SVD of ``func`` across (I, {j}) with outer factors inside the invariant spans.

    ``func`` lives on the basis alphabet, or on the (y, z) pair grid when
    ``dist`` is given (it is unwrapped to x first).  Non-homogenous input is
    rejected unless ``effective``; then, if the spans are not invariant, a
    plain SVD is used and parts are tagged ``mixed``.
    """
    f = unwrap_W(func, dist) if dist is not None else func
    n = f.n
    if n < 1 or not 0 <= j < n:
        raise ArgumentError("need n ≥ 1 and a coordinate j in range")
    prof = class_profile(f, basis)
    homogenous = prof.completely_embedding_homogenous and prof.nonembedding_homogenous
    if not effective and not homogenous:
        raise ArgumentError("input must be completely embedding and non-embedding homogenous")
    w = basis.weights
    wI = product_weights(w, n - 1).reshape(-1)
    M = np.moveaxis(f.values, j, 0).reshape(f.k, -1)
    Ms = np.sqrt(w)[:, None] * M * np.sqrt(wI)[None, :]
    S = Ms @ Ms.conj().T
    U = (basis.matrix * np.sqrt(w)).T          # columns: scaled orthonormal basis
    pieces = []
    invariant = True
    for cols, tag in _profile_blocks(basis):
        Ub = U[:, cols]
        leak = S @ Ub - Ub @ (Ub.conj().T @ S @ Ub)
        if np.max(np.abs(leak), initial=0.0) > 1e-9 * max(1.0, np.abs(S).max()):
            invariant = False
            break
        # SVD of the projected block keeps tiny singular values accurate
        V, sv, _ = np.linalg.svd(Ub.conj().T @ Ms, full_matrices=False)
        tag_k = tag if tag == NONEMBED else f"embed({cols[0]})"
        pieces += [(float(sv[k]), Ub @ V[:, k], tag_k) for k in range(len(sv))]
    if not invariant:
        V, sv, _ = np.linalg.svd(Ms, full_matrices=False)
        pieces = [(float(sv[k]), V[:, k], "mixed") for k in range(len(sv))]
    parts = []
    scale = math.sqrt(max(float(np.trace(S).real), 1e-300))
    for kappa, u, tag in pieces:
        if kappa <= 1e-13 * scale:
            continue
        v = Ms.conj().T @ u / kappa
        outer = u / np.sqrt(w)
        inner_vals = (np.conj(v) / np.sqrt(wI)).reshape((f.k,) * (n - 1))
        parts.append(SvdPart(kappa, TensorFunction(basis.symbols, w, inner_vals), outer, tag))
    parts.sort(key=lambda p: -p.coefficient)
    return SvdSplit(tuple(parts), j, n, basis, f)


# ---------------------------------------------------------------------------
# base-case constants
# ---------------------------------------------------------------------------

def fiber_uniform(dist: TripleDistribution, sigma: GroupMap) -> bool:
    """Exact test: the laws of y | x and of z | x depend on x only through σ(x)."""
    mu_x = univariate(dist, "x")
    for c in (1, 2):
        cond: dict = {}
        for t, p in dist.atoms.items():
            cond.setdefault(t[0], {}).setdefault(t[c], Fraction(0))
            cond[t[0]][t[c]] += p / mu_x[t[0]]
        by_fiber: dict = {}
        for x, law in cond.items():
            key = sigma(x)
            if by_fiber.setdefault(key, law) != law:
                return False
    return True


@dataclass
class AdditiveBaseResult:
    value: float
    raw_value: float
    fiber_uniform: bool
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray

    def to_json(self) -> dict:
        enc = lambda v: [[float(a.real), float(a.imag)] for a in v]  # noqa: E731
        return {"value": self.value, "raw_value": self.raw_value, "fiber_uniform": self.fiber_uniform,
                "f": enc(self.f), "g": enc(self.g), "h": enc(self.h)}


def additive_base_constant(dist: TripleDistribution, master: MasterEmbedding | None = None) -> AdditiveBaseResult:
    """max |E[f(x)(g(y)+h(z))]| over unit f ⟂ Embed_σ and unit g+h.

    Largest singular value of u ↦ E[u | x] from span{g(y)+h(z)} to
    Embed_σ^⊥.  On fiber-uniform laws the operator vanishes identically and
    the value is reported as exactly 0.
    """
    dist = dist.pruned()
    m = master if master is not None else build_master_embedding(dist)
    law = TripleLaw.of(dist)
    kx, ky, kz = (len(a) for a in dist.alphabets)
    wx = law.marginals[0]
    sigma = GroupMap(m.sigma.group, {s: m.sigma(s) for s in dist.alphabets[0]})
    basis = build_split_basis(dict(zip(dist.alphabets[0], univariate(dist, "x").values())), sigma)
    # spanning set of g(y)+h(z) on support atoms, orthonormalized under μ
    span = np.zeros((law.p.size, ky + kz))
    span[np.arange(law.p.size), law.idx[1]] = 1.0
    span[np.arange(law.p.size), ky + law.idx[2]] = 1.0
    sq = np.sqrt(law.p)[:, None]
    Uu, s, Vh = np.linalg.svd(sq * span, full_matrices=False)
    rank = int(np.sum(s > TOL_RANK * s[0]))
    Q = Uu[:, :rank]                                  # scaled orthonormal basis of the span
    # E[u | x] in scaled coordinates: √μ_x(x) · Σ_atoms∈x √p·Q / μ_x(x)
    sel = np.zeros((kx, law.p.size))
    sel[law.idx[0], np.arange(law.p.size)] = 1.0
    cond = (sel * np.sqrt(law.p)[None, :]) @ Q / np.sqrt(wx)[:, None]
    Eb = (basis.matrix[basis.indices(EMBED)] * np.sqrt(wx)).T
    P = np.eye(kx) - Eb @ Eb.conj().T
    A = P @ cond
    Ua, sa, Va = np.linalg.svd(A)
    raw = float(sa[0]) if sa.size else 0.0
    uni = fiber_uniform(dist, sigma)
    f = Ua[:, 0] / np.sqrt(wx) if sa.size else np.zeros(kx)
    coeff = Va[0].conj() if sa.size else np.zeros(rank)
    gh = np.linalg.lstsq(sq * span, Q @ coeff, rcond=None)[0]
    return AdditiveBaseResult(0.0 if uni else raw, raw, uni, np.conj(f), gh[:ky], gh[ky:])


def var_modest(f: np.ndarray, symbols: Sequence, modest: Sequence) -> float:
    """E_{a,b uniform in Σ_modest}|f(a) − f(b)|²."""
    vals = np.array([f[list(symbols).index(s)] for s in modest])
    return float(2 * (np.mean(np.abs(vals) ** 2) - abs(np.mean(vals)) ** 2))


@dataclass
class ProfilePoint:
    tau: float
    value: float | None
    feasible: bool
    f: np.ndarray | None = None

    def to_json(self) -> dict:
        return {"tau": self.tau, "value": self.value, "feasible": self.feasible}


def _top_singular(B: np.ndarray):
    U, s, Vh = np.linalg.svd(B)
    return float(s[0]), U[:, 0], Vh[0]


def relaxed_base_profile(dist: TripleDistribution, modest: Sequence, taus: Sequence[float],
                         restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                         master: MasterEmbedding | None = None, rounds: int = DEFAULT_ROUNDS,
                         tol: float = DEFAULT_RESIDUAL) -> list:
    """Estimated max |E fgh| over unit f, g, h with var_modest(f) ≥ τ, per τ.

    The f-step takes the unconstrained optimum and, if it violates the
    constraint, rescales its modest-deviation component (or substitutes the
    most-varying direction) until the constraint binds; g and h are the top
    singular pair given f.  τ values are processed in decreasing order and
    warm-started from the previous witness, so the profile is nonincreasing.
    """
    dist = dist.pruned()
    m = master if master is not None else build_master_embedding(dist)
    syms = tuple(dist.alphabets[0])
    mset = [s for s in syms if s in set(modest)]
    if len(mset) != len(set(modest)) or len(mset) < 2:
        raise ArgumentError("Σ_modest must be a subset of Σ with at least two symbols")
    if len({m.sigma(s) for s in mset}) != 1:
        raise ArgumentError("Σ_modest spans several σ-values")
    law = TripleLaw.of(dist)
    wx, wy, wz = law.marginals
    kx, ky, kz = (len(a) for a in dist.alphabets)
    T = np.zeros((kx, ky, kz))
    T[law.idx[0], law.idx[1], law.idx[2]] = law.p
    T = T / np.sqrt(wy)[None, :, None] / np.sqrt(wz)[None, None, :]
    midx = [syms.index(s) for s in mset]
    mm = len(midx)
    Qm = np.zeros((kx, kx))
    Qm[np.ix_(midx, midx)] = (2.0 / mm) * (np.eye(mm) - np.ones((mm, mm)) / mm)
    Dm = np.diag(1 / np.sqrt(wx))
    ev, evec = np.linalg.eigh(Dm @ Qm @ Dm)
    tau_max = float(ev[-1])
    top = (Dm @ evec[:, -1]).astype(complex)

    def value(f):
        B = np.tensordot(f, T, axes=(0, 0))
        return _top_singular(B)

    def feasible_f(f, tau):
        f = _normalize(f, wx)
        if var_modest(f, syms, mset) >= tau - 1e-15:
            return f
        r = np.zeros_like(f)
        r[midx] = f[midx] - np.mean(f[midx])
        c = f - r
        if np.max(np.abs(r)) < 1e-12:
            r = top.copy()
        V = var_modest(r, syms, mset)
        nr = float(np.sum(wx * np.abs(r) ** 2))
        nc = float(np.sum(wx * np.abs(c) ** 2))
        cr = float(np.real(np.sum(wx * c * np.conj(r))))
        a, b, cc = V - tau * nr, -2 * tau * cr, -tau * nc
        if a <= 1e-15:
            return _normalize(top, wx)
        s = (-b + math.sqrt(max(b * b - 4 * a * cc, 0.0))) / (2 * a)
        return _normalize(c + s * r, wx)

    out = {}
    warm = None
    for tau in sorted(set(float(t) for t in taus), reverse=True):
        if tau > tau_max + 1e-12:
            out[tau] = ProfilePoint(tau, None, False)
            continue
        best_val, best_f = -1.0, None
        starts = [] if warm is None else [warm]
        for r in range(restarts):
            rng = generator(seed, "relaxed", r)
            starts.append(rng.standard_normal(kx) + 1j * rng.standard_normal(kx))
        for f0 in starts:
            f = feasible_f(f0, tau)
            val, _, _ = value(f)
            if val > best_val + 1e-15:
                best_val, best_f = val, f
            for _ in range(rounds):
                _, gy, hz = value(f)
                v = np.conj(np.einsum("xyz,y,z->x", T, gy, hz)) / wx
                f = feasible_f(v, tau)
                nv, _, _ = value(f)
                if nv > best_val + 1e-15:
                    best_val, best_f = nv, f
                done = abs(nv - val) < tol
                val = nv
                if done:
                    break
        out[tau] = ProfilePoint(tau, best_val, True, best_f)
        warm = best_f
    return [out[float(t)] for t in taus]


# ---------------------------------------------------------------------------
# group linearity identity and structural checks
# ---------------------------------------------------------------------------

def group_linearity_correlation(group: AbelianGroup, f: np.ndarray, g: np.ndarray, h: np.ndarray) -> tuple:
    """(E_U[f g h], Σ_χ f̂(χ)ĝ(χ)ĥ(χ)) for U uniform on {a+b+c=0} in Hⁿ.

    Tensors are indexed by group-element positions (``group.elements()``).
    """
    f, g, h = (np.asarray(a, dtype=complex) for a in (f, g, h))
    if not f.shape == g.shape == h.shape:
        raise ArgumentError("f, g, h must share a shape")
    n = f.ndim
    els = group.elements()
    N = len(els)
    if any(s != N for s in f.shape):
        raise ArgumentError("tensor axes must have length |H|")
    neg_sum = np.array([[group.index(group.neg(group.add(a, b))) for b in els] for a in els])
    # lhs: average over (a, b) ∈ (Hⁿ)² of f(a) g(b) h(−a−b)
    A = np.arange(N ** n).reshape((N,) * n)
    a_idx = np.array(np.unravel_index(np.arange(N ** n), (N,) * n)).T
    fl, gl, hl = f.reshape(-1), g.reshape(-1), h.reshape(-1)
    lhs = 0j
    for ia, a in enumerate(a_idx):
        c_idx = np.array([neg_sum[a[i]][a_idx[:, i]] for i in range(n)])
        cflat = A[tuple(c_idx)] if n else np.zeros(1, int)
        lhs += fl[ia] * np.sum(gl * hl[cflat])
    lhs /= N ** (2 * n)
    # rhs: Fourier transform f̂(χ) = E_a f(a) conj χ(a) along each axis
    chars = all_characters(group)
    X = np.array([[c(a) for a in els] for c in chars])      # χ × a
    Fm = np.conj(X) / N
    fh, gh, hh = (kernels.apply_axes(t, [Fm] * n) for t in (f, g, h))
    rhs = complex(np.sum(fh * gh * hh))
    return complex(lhs), rhs


def _embed_random(basis: SplitBasis, rng, n: int = 1) -> np.ndarray:
    idx = basis.indices(EMBED)
    coeff = np.zeros((len(basis.tags),) * n, dtype=complex)
    sub = rng.standard_normal((len(idx),) * n) + 1j * rng.standard_normal((len(idx),) * n)
    coeff[np.ix_(*([idx] * n))] = sub
    return synthesize(coeff, basis).values


def _offembed_random(basis: SplitBasis, rng, n: int = 1) -> np.ndarray:
    """Random function whose every coordinate factor lies off Embed (needs n=1 semantics per axis)."""
    idx = [i for i, t in enumerate(basis.tags) if t != EMBED]
    coeff = np.zeros((len(basis.tags),) * n, dtype=complex)
    if idx:
        coeff[np.ix_(*([idx] * n))] = (rng.standard_normal((len(idx),) * n)
                                       + 1j * rng.standard_normal((len(idx),) * n))
    return synthesize(coeff, basis).values


def _uniform_pairs(dist: TripleDistribution) -> bool:
    pyz: dict = {}
    for (x, y, z), p in dist.atoms.items():
        pyz[(y, z)] = pyz.get((y, z), Fraction(0)) + p
    k = len(dist.support_symbols(1)) * len(dist.support_symbols(2))
    return len(pyz) == k and all(v == Fraction(1, k) for v in pyz.values())


def ortho_embed_nonembed_check(dist: TripleDistribution, samples: int = 20, seed: int = 0,
                               master: MasterEmbedding | None = None) -> dict:
    """max |E f g h| with f ∈ Embed_σ and g ⟂ Embed_γ (resp. h ⟂ Embed_φ), h (resp. g) arbitrary."""
    dist = dist.pruned()
    if not _uniform_pairs(dist):
        raise PreconditionError("the (y, z) marginal must be uniform")
    m = master if master is not None else build_master_embedding(dist)
    law = TripleLaw.of(dist)
    bases = [_coordinate_basis(law, m, c) for c in range(3)]
    rng = generator(seed, "ortho_embed_nonembed")
    worst = 0.0
    for _ in range(samples):
        f = _embed_random(bases[0], rng)
        for c in (1, 2):
            off = _offembed_random(bases[c], rng)
            other = rng.standard_normal(len(bases[3 - c].symbols)) + 0j
            g, h = (off, other) if c == 1 else (other, off)
            worst = max(worst, abs(law.correlation(f, g, h)))
    return {"max_abs": worst, "holds": worst <= TOL_EQ}


def very_base_case_check(dist: TripleDistribution, n: int, delta: float, samples: int = 20,
                         seed: int = 0, master: MasterEmbedding | None = None) -> dict:
    """|E f g h| ≤ √NEStab_{1−δ}(g) for 1-bounded f, h when |Σ| = |Φ| = |H| and μ_{y,z} is uniform."""
    dist = dist.pruned()
    m = master if master is not None else build_master_embedding(dist)
    H = m.group
    if not (len(dist.alphabets[0]) == len(dist.alphabets[2]) == H.order):
        raise PreconditionError("need |Σ| = |Φ| = |H|")
    if not _uniform_pairs(dist):
        raise PreconditionError("the (y, z) marginal must be uniform")
    law = TripleLaw.of(dist)
    gb = _coordinate_basis(law, m, 1)
    rng = generator(seed, "very_base_case", n)
    worst = -float("inf")
    for _ in range(samples):
        shp = [(len(dist.alphabets[c]),) * n for c in range(3)]
        f = rng.random(shp[0]) * np.exp(2j * np.pi * rng.random(shp[0]))
        h = rng.random(shp[2]) * np.exp(2j * np.pi * rng.random(shp[2]))
        g = rng.standard_normal(shp[1]) + 1j * rng.standard_normal(shp[1])
        g = _normalize(g, law.marginals[1])
        lhs = abs(law.correlation(f, g, h))
        G = TensorFunction(gb.symbols, gb.weights, g)
        rhs = math.sqrt(max(nestab(G, 1 - delta, gb), 0.0))
        worst = max(worst, lhs - rhs)
    return {"max_violation": worst, "holds": worst <= TOL_SLACK}
