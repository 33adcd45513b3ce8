"""Path-trick distributions, lifted embeddings, and master-embedding saturation.

The path trick on coordinate ``x`` walks the bipartite Γ–Φ support graph:
start at y ~ μ_y, alternately step y→z and z→y along support atoms, and
record the x-labels of the traversed edges.  For odd length ℓ the walk ends
in Φ, and the output is ``(labels, start, end)``.  For ``y`` the walk runs
between Σ (start) and Φ (end); for ``z`` between Σ (start) and Γ (end).
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .abelian import (AbelianGroup, EmbeddingTriple, GroupMap, MasterEmbedding,
                      isomorphism_onto)
from .dist_core import (COORDS, Alphabet, TripleDistribution, coord_index,
                        is_pairwise_connected, univariate)
from .errors import ArgumentError, PreconditionError, ResourceError

DEFAULT_ATOM_BUDGET = 10**5
DEFAULT_LENGTH_CAP = 15


def _roles(coordinate) -> tuple[int, int, int]:
    k = coord_index(coordinate)
    i, j = [c for c in range(3) if c != k]
    return k, i, j


def _conditionals(dist: TripleDistribution, c: int) -> dict:
    """For each symbol v of coordinate c: list of (atom, P(atom | coord c = v))."""
    marg = univariate(dist, c)
    out = defaultdict(list)
    for t, p in dist.atoms.items():
        out[t[c]].append((t, p / marg[t[c]]))
    return out


def _assemble(dist: TripleDistribution, k: int, i: int, j: int, law: dict) -> TripleDistribution:
    """Build the moved-coordinate distribution from ``{(labels, start, end): p}``."""
    base = dist.alphabets[k]
    tuples = sorted({lab for lab, _, _ in law}, key=lambda tup: tuple(base.index(s) for s in tup))
    alphs = list(dist.alphabets)
    alphs[k] = Alphabet(tuple(tuples))
    atoms = {}
    for (lab, s, e), p in law.items():
        atom = [None, None, None]
        atom[k], atom[i], atom[j] = lab, s, e
        atoms[tuple(atom)] = p
    return TripleDistribution(tuple(alphs), atoms)


@dataclass(frozen=True)
class PathDistribution:
    base: TripleDistribution
    coordinate: str
    length: int
    result: TripleDistribution
    doubling_exponent: int | None = None


def path_trick_walk(dist: TripleDistribution, coordinate, length: int,
                    budget: int = DEFAULT_ATOM_BUDGET) -> PathDistribution:
    """Exact law of the labeled walk of odd ``length`` (dynamic programming)."""
    if length < 1 or length % 2 == 0:
        raise ArgumentError("path length must be a positive odd integer")
    k, i, j = _roles(coordinate)
    from_i, from_j = _conditionals(dist, i), _conditionals(dist, j)
    # state: (labels, start, current vertex) ; current alternates i/j
    states = {((), s, s): p for s, p in univariate(dist, i).items() if p > 0}
    for step in range(length):
        src, dst, table = (i, j, from_i) if step % 2 == 0 else (j, i, from_j)
        nxt: dict = defaultdict(Fraction)
        for (lab, start, cur), p in states.items():
            for atom, q in table[cur]:
                nxt[(lab + (atom[k],), start, atom[dst])] += p * q
        if len(nxt) > budget:
            raise ResourceError(f"path trick exceeds atom budget {budget} at step {step + 1}")
        states = nxt
    return PathDistribution(dist, COORDS[k], length, _assemble(dist, k, i, j, states))


def path_trick_inductive(dist: TripleDistribution, t: int, coordinate="x",
                         budget: int = DEFAULT_ATOM_BUDGET) -> PathDistribution:
    """The doubling construction ν_{2^t}, truncated to its first 2^t − 1 edges.

    A path is stored as ``(v0, l1, v1, l2, v2, …)`` with v0 in the start
    coordinate.  ν₂ glues two atoms through a shared end-side vertex; ν_{2L}
    glues the reversal of one ν_L path to an independent ν_L path sharing the
    start vertex.
    """
    if t < 1:
        raise ArgumentError("doubling exponent must be at least 1")
    k, i, j = _roles(coordinate)
    from_j = _conditionals(dist, j)
    paths: dict = defaultdict(Fraction)
    for zsym, pz in univariate(dist, j).items():
        if pz == 0:
            continue
        for a1, q1 in from_j[zsym]:
            for a2, q2 in from_j[zsym]:
                paths[(a1[i], a1[k], zsym, a2[k], a2[i])] += pz * q1 * q2
    for _ in range(t - 1):
        first = defaultdict(Fraction)
        by_first = defaultdict(list)
        for path, p in paths.items():
            first[path[0]] += p
            by_first[path[0]].append((path, p))
        mu_i = univariate(dist, i)
        new: dict = defaultdict(Fraction)
        for v, pv in mu_i.items():
            if pv == 0:
                continue
            for p1, q1 in by_first[v]:
                for p2, q2 in by_first[v]:
                    new[p1[::-1] + p2[1:]] += pv * (q1 / first[v]) * (q2 / first[v])
        if len(new) > budget:
            raise ResourceError(f"inductive path law exceeds atom budget {budget}")
        paths = new
    length = 2**t - 1
    law: dict = defaultdict(Fraction)
    for path, p in paths.items():
        labels = path[1:2 * length:2]
        law[(labels, path[0], path[2 * length])] += p
    res = _assemble(dist, k, i, j, law)
    return PathDistribution(dist, COORDS[k], length, res, doubling_exponent=t)


# ---------------------------------------------------------------------------
# lifted maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LiftedMap:
    base: GroupMap
    length: int
    map: GroupMap

    def __call__(self, tup):
        return self.map(tup)


def alternating_sum(sigma: GroupMap, tup) -> tuple:
    H = sigma.group
    out = H.zero
    for idx, s in enumerate(tup):
        v = sigma(s)
        out = H.add(out, v) if idx % 2 == 0 else H.sub(out, v)
    return out


def lift_sigma_sharp(sigma: GroupMap, length: int, tuple_alphabet: Sequence) -> LiftedMap:
    """σ^♯ℓ(x₁,…,x_ℓ) = Σ_j (−1)^{j+1} σ(x_j) on the given tuples."""
    vals = {}
    for tup in tuple_alphabet:
        if len(tup) != length:
            raise ArgumentError(f"tuple {tup!r} does not have length {length}")
        vals[tup] = alternating_sum(sigma, tup)
    return LiftedMap(sigma, length, GroupMap(sigma.group, vals))


def lifted_embedding(e: EmbeddingTriple, pd: PathDistribution) -> EmbeddingTriple:
    """Lift the moved coordinate's map along a path-trick result."""
    k = coord_index(pd.coordinate)
    maps = list(e.maps)
    maps[k] = lift_sigma_sharp(maps[k], pd.length, pd.result.alphabets[k].symbols).map
    return EmbeddingTriple(*maps)


# ---------------------------------------------------------------------------
# saturation
# ---------------------------------------------------------------------------

def _pair_full(dist: TripleDistribution, a: int, b: int) -> bool:
    sa, sb = dist.support_symbols(a), dist.support_symbols(b)
    return len({(t[a], t[b]) for t in dist.atoms}) == len(sa) * len(sb)


def smallest_full_length(dist: TripleDistribution, coordinate, cap: int = DEFAULT_LENGTH_CAP):
    """Smallest odd ℓ ≤ cap for which the ``coordinate``-trick has full start×end support.

    Computed from boolean walk reachability without building the law.
    Returns None when no such ℓ exists up to ``cap``.
    """
    k, i, j = _roles(coordinate)
    si, sj = dist.support_symbols(i), dist.support_symbols(j)
    ii = {s: n for n, s in enumerate(si)}
    jj = {s: n for n, s in enumerate(sj)}
    A = np.zeros((len(si), len(sj)), dtype=np.int64)
    for t in dist.atoms:
        A[ii[t[i]], jj[t[j]]] = 1
    R = A.copy()
    back = (A.T @ A > 0).astype(np.int64)
    for ell in range(1, cap + 1, 2):
        if R.all():
            return ell
        R = ((R @ back) > 0).astype(np.int64)
    return None


@dataclass
class SaturationTranscript:
    steps: list = field(default_factory=list)     # (coordinate, length)
    final_group: AbelianGroup | None = None
    postcondition_checks: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "steps": [[c, l] for c, l in self.steps],
            "final_group": None if self.final_group is None else list(self.final_group.factors),
            "postcondition_checks": dict(self.postcondition_checks),
        }


def replay(dist: TripleDistribution, steps) -> TripleDistribution:
    for coord, ell in steps:
        dist = path_trick_walk(dist, coord, ell).result
    return dist


class _State:
    def __init__(self, dist, maps, budget, transcript):
        self.dist = dist
        self.maps = list(maps)
        self.budget = budget
        self.transcript = transcript
        self.x_power = 1

    def trick(self, coord, ell):
        if ell == 1:
            return
        pd = path_trick_walk(self.dist, coord, ell, self.budget)
        k = coord_index(coord)
        e = lifted_embedding(EmbeddingTriple(*self.maps), pd)
        self.dist, self.maps = pd.result, list(e.maps)
        if k == 0:
            self.x_power *= ell
        self.transcript.steps.append((COORDS[k], ell))

    def images(self):
        return [m.image_on(self.dist.support_symbols(c)) for c, m in enumerate(self.maps)]

    def full_length(self, coord, cap):
        ell = smallest_full_length(self.dist, coord, cap)
        if ell is None:
            raise ResourceError(f"no odd length ≤ {cap} fills the support for a {coord}-trick",
                                partial=self.transcript)
        return ell


def saturate_master(dist: TripleDistribution, master, length_cap: int = DEFAULT_LENGTH_CAP,
                    atom_budget: int = DEFAULT_ATOM_BUDGET, uniformize: bool = False):
    """Apply path tricks until the master embedding's images are one common group.

    Each round targets one unsaturated image.  For σ: a z-trick filling the
    (x,y) support, a y-trick filling (x,z), then an x-trick of length 3; the
    γ and φ rounds are the mirror images that only use length-3 tricks on the
    lagging coordinate, so the x-alphabet stays a full power of Σ.  Once all
    images are subgroups a final z-trick fills (x,y); pairwise connectivity
    then forces the three images to coincide.

    Returns ``(distribution, master, transcript)``; the master is re-declared
    on the common image subgroup.
    """
    if not is_pairwise_connected(dist):
        raise PreconditionError("saturation requires a pairwise connected distribution")
    maps = master.maps if isinstance(master, MasterEmbedding) else EmbeddingTriple(*master.maps).maps
    H = maps[0].group
    transcript = SaturationTranscript()
    st = _State(dist, maps, atom_budget, transcript)
    base_x = len(dist.support_symbols(0))
    rounds = 0
    cap = max(H.order, 1)
    while True:
        subs = [H.is_subgroup(im) for im in st.images()]
        if all(subs):
            break
        if rounds >= cap:
            raise ResourceError("round cap reached before saturation", partial=transcript)
        if not subs[0]:
            st.trick("z", st.full_length("z", length_cap))
            st.trick("y", st.full_length("y", length_cap))
            st.trick("x", 3)
        elif not subs[2]:
            st.trick("y", st.full_length("y", length_cap))
            st.trick("z", 3)
        else:
            st.trick("z", st.full_length("z", length_cap))
            st.trick("y", 3)
        rounds += 1
    if not _pair_full(st.dist, 0, 1):
        st.trick("z", st.full_length("z", length_cap))

    imgs = st.images()
    common = imgs[0] == imgs[1] == imgs[2]
    checks = {"images_are_subgroups": all(H.is_subgroup(im) for im in imgs),
              "common_image": common}
    if not common:
        transcript.postcondition_checks = checks
        raise ResourceError("images did not converge to a common subgroup", partial=transcript)
    G, gens = isomorphism_onto(H, imgs[0])
    inverse = {}
    for g in G.elements():
        v = H.zero
        for coef, img in zip(g, gens):
            v = H.add(v, H.scale(coef, img))
        inverse[v] = g
    new_maps = [GroupMap(G, {s: inverse.get(m(s), G.zero) if s in set(st.dist.support_symbols(c)) else G.zero
                             for s in m.domain}) for c, m in enumerate(st.maps)]
    triple = EmbeddingTriple(*new_maps)
    triples = {tuple(m(t[c]) for c, m in enumerate(new_maps)) for t in st.dist.atoms}
    full_triples = {(a, b, G.neg(G.add(a, b))) for a in G.elements() for b in G.elements()}
    checks["valid_embedding"] = triple.is_valid(st.dist)
    checks["full_triple_support"] = triples == full_triples
    checks["x_full_power"] = len(st.dist.support_symbols(0)) == base_x ** st.x_power
    checks["x_power"] = st.x_power
    checks["replay_matches"] = replay(dist, transcript.steps) == st.dist
    transcript.final_group = G
    transcript.postcondition_checks = checks
    if not all(v for k, v in checks.items() if k != "x_power"):
        raise ResourceError("saturation postconditions failed", partial=transcript)
    out_dist = st.dist
    if uniformize:
        out_dist, triple = uniformize_fibers(out_dist, triple)
        transcript.postcondition_checks["uniform_yz_marginal"] = True
    verified = getattr(master, "verify_master", True)
    final = MasterEmbedding((triple,), G, *triple.maps, verified,
                            getattr(master, "max_order", 0), getattr(master, "enumerated", 0))
    return out_dist, final, transcript


def uniformize_fibers(dist: TripleDistribution, e: EmbeddingTriple):
    """Duplicate y and z symbols so μ_{y,z} is uniform and (γ,φ) fibers are balanced.

    Samples (b,c) ∈ H² uniformly, then y and z uniformly in the fibers
    γ⁻¹(b), φ⁻¹(c), a copy index for each, and finally x from μ given (y,z).
    Copy counts use the lcm of the fiber sizes.  Requires saturated γ, φ and
    full (y,z) support.
    """
    H = e.group
    ys, zs = dist.support_symbols(1), dist.support_symbols(2)
    fib_y, fib_z = defaultdict(list), defaultdict(list)
    for y in ys:
        fib_y[e.gamma(y)].append(y)
    for z in zs:
        fib_z[e.phi(z)].append(z)
    if len(fib_y) != H.order or len(fib_z) != H.order:
        raise PreconditionError("uniformization needs saturated γ and φ")
    if not _pair_full(dist, 1, 2):
        raise PreconditionError("uniformization needs full (y,z) support")
    Ly = math.lcm(*(len(v) for v in fib_y.values()))
    Lz = math.lcm(*(len(v) for v in fib_z.values()))
    cond = defaultdict(list)
    pyz = defaultdict(Fraction)
    for t, p in dist.atoms.items():
        pyz[(t[1], t[2])] += p
    for t, p in dist.atoms.items():
        cond[(t[1], t[2])].append((t[0], p / pyz[(t[1], t[2])]))
    atoms = {}
    n = H.order
    for y in ys:
        cy = Ly // len(fib_y[e.gamma(y)])
        for z in zs:
            cz = Lz // len(fib_z[e.phi(z)])
            w = Fraction(1, n * n * len(fib_y[e.gamma(y)]) * len(fib_z[e.phi(z)]) * cy * cz)
            for i in range(cy):
                for j in range(cz):
                    for x, q in cond[(y, z)]:
                        atoms[(x, (y, str(i)), (z, str(j)))] = w * q
    ya = tuple((y, str(i)) for y in ys for i in range(Ly // len(fib_y[e.gamma(y)])))
    za = tuple((z, str(j)) for z in zs for j in range(Lz // len(fib_z[e.phi(z)])))
    new = TripleDistribution((dist.alphabets[0], ya, za), atoms)
    gam = GroupMap(H, {s: e.gamma(s[0]) for s in ya})
    ph = GroupMap(H, {s: e.phi(s[0]) for s in za})
    return new, EmbeddingTriple(e.sigma, gam, ph)


# ---------------------------------------------------------------------------
# the Cauchy–Schwarz chain
# ---------------------------------------------------------------------------

def _values(f) -> np.ndarray:
    return np.asarray(getattr(f, "values", f), dtype=complex)


def _check_bounded(name, arr):
    if arr.size and np.max(np.abs(arr)) > 1 + 1e-12:
        raise ArgumentError(f"{name} is not 1-bounded (sup norm {np.max(np.abs(arr)):.6g})")


def conditional_on(P: np.ndarray, a, b, target: int) -> np.ndarray:
    """x ↦ E[a(·)b(·) | coordinate ``target`` = x] over P^{⊗n}.

    ``a`` and ``b`` live on the two other coordinates in increasing order.
    """
    others = [c for c in range(3) if c != target]
    Pt = np.moveaxis(P, target, 0)
    n = a.ndim
    joint = np.multiply.outer(a, b)                       # (o1^n, o2^n)
    order = [ax for pair in zip(range(n), range(n, 2 * n)) for ax in pair]
    joint = joint.transpose(order).reshape((Pt.shape[1] * Pt.shape[2],) * n) if n else joint
    M = Pt.reshape(Pt.shape[0], -1)
    num = kernels.apply_axes(joint.astype(complex), [M] * n)
    marg = M.sum(axis=1)
    den = marg
    for _ in range(n - 1):
        den = np.multiply.outer(den, marg)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1), 0)
    return out


def correlation(P: np.ndarray, f, g, h) -> complex:
    """E_{P^{⊗n}}[f(x) g(y) h(z)] by contracting (y,z) pairs onto x."""
    n = f.ndim
    joint = np.multiply.outer(g, h)
    order = [ax for pair in zip(range(n), range(n, 2 * n)) for ax in pair]
    joint = joint.transpose(order).reshape((P.shape[1] * P.shape[2],) * n) if n else joint
    M = P.reshape(P.shape[0], -1)
    w = kernels.apply_axes(joint.astype(complex), [M] * n)
    return complex(np.sum(f * w))


def _path_function(f: np.ndarray, tuples_idx: np.ndarray, t: int) -> np.ndarray:
    """F(x⃗) = f(x_ℓ) Π_{j<2^{t−1}} f(x_{2j−1}) conj f(x_{2j}) on (Σ^ℓ)^n."""
    n = f.ndim
    m = tuples_idx.shape[0]
    grids = np.meshgrid(*([np.arange(m)] * n), indexing="ij")
    ell = 2**t - 1

    def col(j):
        return f[tuple(tuples_idx[g, j] for g in grids)]

    F = col(ell - 1).copy()
    for j in range(1, 2 ** (t - 1)):
        F = F * col(2 * j - 2) * np.conj(col(2 * j - 1))
    return F


@dataclass(frozen=True)
class PathBound:
    lhs: float
    rhs: float
    F: np.ndarray
    h_prime: np.ndarray

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-9


def path_correlation_bound(dist: TripleDistribution, f, g, h, t: int,
                           budget: int = DEFAULT_ATOM_BUDGET) -> PathBound:
    """Both sides of |E fgh|^{2^t} ≤ |E_{μ_ℓ}[F g h′]| with ℓ = 2^t − 1."""
    f, g, h = _values(f), _values(g), _values(h)
    for name, arr in (("f", f), ("g", g), ("h", h)):
        _check_bounded(name, arr)
    if not (f.ndim == g.ndim == h.ndim):
        raise ArgumentError("f, g, h must share n")
    if t < 1:
        raise ArgumentError("t must be at least 1")
    P = dist.as_float_array()
    lhs = abs(correlation(P, f, g, h)) ** (2**t)
    hp = conditional_on(P, np.conj(f), np.conj(g), 2)
    pd = path_trick_walk(dist, "x", 2**t - 1, budget)
    base = dist.alphabets[0]
    tuples = pd.result.alphabets[0].symbols
    idx = np.array([[base.index(s) for s in tup] for tup in tuples], dtype=np.int64)
    F = _path_function(f, idx, t)
    rhs = abs(correlation(pd.result.as_float_array(), F, g, hp))
    return PathBound(float(lhs), float(rhs), F, hp)
