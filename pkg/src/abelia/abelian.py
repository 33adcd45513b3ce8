"""Finite Abelian groups, characters, and Abelian embeddings of triple laws.

An embedding of μ into (H,+) is a triple of maps with σ(x)+γ(y)+φ(z)=0 on
every support atom.  All arithmetic here is exact modular integer arithmetic.
Maps are defined on full alphabets; symbols outside a coordinate's marginal
support carry no constraint and are pinned to 0.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy
from sympy.matrices.normalforms import smith_normal_decomp
from sympy.utilities.iterables import partitions

from .dist_core import COORDS, Alphabet, TripleDistribution
from .errors import ArgumentError, ResourceError, SearchFailure

DEFAULT_BUDGET = 10**6
DEFAULT_MAX_ORDER = 12


# ---------------------------------------------------------------------------
# groups
# ---------------------------------------------------------------------------

def _is_prime_power(q: int) -> bool:
    return q >= 2 and len(sympy.factorint(q)) == 1


@dataclass(frozen=True)
class AbelianGroup:
    """Π ℤ_{q_i} with prime-power q_i, kept in the given coordinate order.

    Elements are integer tuples reduced modulo the factors.  Use
    :meth:`from_orders` for the canonical sorted form.
    """

    factors: tuple = ()

    def __post_init__(self):
        fs = tuple(int(q) for q in self.factors)
        for q in fs:
            if not _is_prime_power(q):
                raise ArgumentError(f"cyclic factor {q} is not a prime power ≥ 2")
        object.__setattr__(self, "factors", fs)

    @classmethod
    def from_orders(cls, orders: Iterable[int]) -> "AbelianGroup":
        """Canonical group ≅ Π ℤ_{n_i}: prime-power factors in ascending order."""
        fs = []
        for n in orders:
            if n < 1:
                raise ArgumentError(f"cyclic order must be positive, got {n}")
            fs.extend(p**e for p, e in sympy.factorint(n).items())
        return cls(tuple(sorted(fs)))

    @classmethod
    def trivial(cls) -> "AbelianGroup":
        return cls(())

    @property
    def order(self) -> int:
        return math.prod(self.factors)

    @property
    def rank(self) -> int:
        return len(self.factors)

    @property
    def canonical(self) -> tuple:
        return tuple(sorted(self.factors))

    @property
    def zero(self) -> tuple:
        return (0,) * len(self.factors)

    def is_isomorphic(self, other: "AbelianGroup") -> bool:
        return self.canonical == other.canonical

    def reduce(self, a) -> tuple:
        return tuple(int(v) % q for v, q in zip(a, self.factors))

    def add(self, a, b) -> tuple:
        return tuple((u + v) % q for u, v, q in zip(a, b, self.factors))

    def neg(self, a) -> tuple:
        return tuple((-u) % q for u, q in zip(a, self.factors))

    def sub(self, a, b) -> tuple:
        return tuple((u - v) % q for u, v, q in zip(a, b, self.factors))

    def scale(self, k: int, a) -> tuple:
        return tuple((k * u) % q for u, q in zip(a, self.factors))

    def sum(self, elems) -> tuple:
        out = self.zero
        for e in elems:
            out = self.add(out, e)
        return out

    def elements(self) -> list:
        return [tuple(t) for t in itertools.product(*(range(q) for q in self.factors))]

    def index(self, a) -> int:
        i = 0
        for v, q in zip(a, self.factors):
            i = i * q + v
        return i

    def element(self, i: int) -> tuple:
        out = []
        for q in reversed(self.factors):
            out.append(i % q)
            i //= q
        return tuple(reversed(out))

    def cyclic_element(self, k: int) -> tuple:
        """Image of k ∈ ℤ_n under CRT, valid when ``self`` came from ``from_orders([n])``."""
        return tuple(k % q for q in self.factors)

    def subgroup_generated(self, elems) -> frozenset:
        span = {self.zero}
        frontier = list(span)
        gens = list(set(elems))
        while frontier:
            new = []
            for a in frontier:
                for g in gens:
                    b = self.add(a, g)
                    if b not in span:
                        span.add(b)
                        new.append(b)
            frontier = new
        return frozenset(span)

    def is_subgroup(self, elems) -> bool:
        s = set(elems)
        if self.zero not in s:
            return False
        return all(self.add(a, b) in s for a in s for b in s)

    def product(self, other: "AbelianGroup") -> "AbelianGroup":
        return AbelianGroup(self.factors + other.factors)

    def __str__(self):
        return " x ".join(f"Z{q}" for q in self.factors) if self.factors else "trivial"


def groups_of_order(n: int) -> list:
    """All Abelian groups of order ``n`` up to isomorphism (canonical form)."""
    if n < 1:
        raise ArgumentError("group order must be positive")
    per_prime = []
    for p, e in sorted(sympy.factorint(n).items()):
        options = []
        for part in partitions(e):
            fs = []
            for k, mult in part.items():
                fs.extend([p**k] * mult)
            options.append(tuple(sorted(fs)))
        per_prime.append(sorted(options))
    out = [AbelianGroup(tuple(sorted(sum(combo, ())))) for combo in itertools.product(*per_prime)]
    return sorted(out, key=lambda g: g.factors)


def groups_up_to(r: int) -> list:
    if r < 1:
        raise ArgumentError("maximal order must be at least 1")
    return [g for n in range(1, r + 1) for g in groups_of_order(n)]


@lru_cache(maxsize=None)
def _homomorphisms(G: AbelianGroup, H: AbelianGroup) -> tuple:
    """Generator images of every homomorphism G → H."""
    choices = []
    helems = H.elements()
    for q in G.factors:
        choices.append([a for a in helems if H.scale(q, a) == H.zero])
    return tuple(itertools.product(*choices))


def _apply_hom(H: AbelianGroup, images, a) -> tuple:
    out = H.zero
    for k, img in zip(a, images):
        out = H.add(out, H.scale(k, img))
    return out


@lru_cache(maxsize=None)
def injective_homomorphisms(G: AbelianGroup, H: AbelianGroup) -> tuple:
    if G.order > H.order:
        return ()
    nonzero = [a for a in G.elements() if a != G.zero]
    return tuple(
        imgs for imgs in _homomorphisms(G, H)
        if all(_apply_hom(H, imgs, a) != H.zero for a in nonzero)
    )


def isomorphism_onto(H: AbelianGroup, subset) -> tuple:
    """Canonical group G and injective m: G → H with image ``subset``.

    Raises ArgumentError when ``subset`` is not a subgroup.
    """
    subset = frozenset(subset)
    if not H.is_subgroup(subset):
        raise ArgumentError("set is not a subgroup")
    for G in groups_of_order(len(subset)):
        for imgs in injective_homomorphisms(G, H):
            if all(i in subset for i in imgs):
                return G, imgs
    raise SearchFailure("no isomorphism found")  # unreachable for finite abelian H


# ---------------------------------------------------------------------------
# maps, embeddings, characters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupMap:
    """A total map from an alphabet into ``group``; ``values`` keeps alphabet order."""

    group: AbelianGroup
    values: Mapping

    def __post_init__(self):
        object.__setattr__(self, "values", {k: self.group.reduce(v) for k, v in self.values.items()})

    def __call__(self, s) -> tuple:
        return self.values[s]

    @property
    def domain(self) -> list:
        return list(self.values)

    @property
    def image(self) -> frozenset:
        return frozenset(self.values.values())

    def image_on(self, symbols) -> frozenset:
        return frozenset(self.values[s] for s in symbols)

    def is_constant(self) -> bool:
        return len(self.image) <= 1

    def partition(self) -> frozenset:
        return self._partition

    @cached_property
    def _partition(self) -> frozenset:
        blocks: dict = {}
        for s, v in self.values.items():
            blocks.setdefault(v, set()).add(s)
        return frozenset(frozenset(b) for b in blocks.values())

    def shifted(self, c) -> "GroupMap":
        return GroupMap(self.group, {s: self.group.add(v, c) for s, v in self.values.items()})

    def compose(self, group: AbelianGroup, images) -> "GroupMap":
        """Apply the homomorphism with generator images ``images`` after this map."""
        return GroupMap(group, {s: _apply_hom(group, images, v) for s, v in self.values.items()})

    def key(self) -> tuple:
        return self._key

    @cached_property
    def _key(self) -> tuple:
        return tuple(self.values.items())


@dataclass(frozen=True)
class EmbeddingTriple:
    sigma: GroupMap
    gamma: GroupMap
    phi: GroupMap

    def __post_init__(self):
        if not (self.sigma.group == self.gamma.group == self.phi.group):
            raise ArgumentError("embedding maps must share one group")

    @property
    def group(self) -> AbelianGroup:
        return self.sigma.group

    @property
    def maps(self) -> tuple:
        return (self.sigma, self.gamma, self.phi)

    @property
    def is_trivial(self) -> bool:
        return all(m.is_constant() for m in self.maps)

    def residual(self, atom) -> tuple:
        H = self.group
        return H.sum(m(s) for m, s in zip(self.maps, atom))

    def is_valid(self, dist: TripleDistribution) -> bool:
        z = self.group.zero
        return all(self.residual(t) == z for t in dist.atoms)

    def key(self) -> tuple:
        return (self.group.factors,) + tuple(m.key() for m in self.maps)

    def normalized(self, dist: TripleDistribution) -> "EmbeddingTriple":
        """Affine shift sending the canonical anchor atom to (0,0,0)."""
        x, y, z = dist.support[0]
        H = self.group
        a, b = self.sigma(x), self.gamma(y)
        return EmbeddingTriple(
            self.sigma.shifted(H.neg(a)), self.gamma.shifted(H.neg(b)), self.phi.shifted(H.add(a, b))
        )

    def to_json(self) -> dict:
        from .dist_core import _symbol_to_json

        def enc(m):
            return [[_symbol_to_json(s), list(v)] for s, v in m.values.items()]

        return {"group": list(self.group.factors), "sigma": enc(self.sigma),
                "gamma": enc(self.gamma), "phi": enc(self.phi), "trivial": self.is_trivial}


@dataclass(frozen=True)
class Character:
    """χ(a) = exp(2πi Σ e_k a_k / q_k)."""

    group: AbelianGroup
    exponents: tuple

    def __post_init__(self):
        if len(self.exponents) != self.group.rank:
            raise ArgumentError("one exponent per cyclic factor is required")
        object.__setattr__(self, "exponents", self.group.reduce(self.exponents))

    def phase(self, a) -> Fraction:
        return sum((Fraction(e * v, q) for e, v, q in zip(self.exponents, a, self.group.factors)),
                   Fraction(0)) % 1

    def __call__(self, a) -> complex:
        return cmath.exp(2j * math.pi * float(self.phase(a)))

    def __mul__(self, other: "Character") -> "Character":
        if other.group != self.group:
            raise ArgumentError("characters of different groups")
        return Character(self.group, self.group.add(self.exponents, other.exponents))

    def conj(self) -> "Character":
        return Character(self.group, self.group.neg(self.exponents))

    @property
    def is_trivial(self) -> bool:
        return all(e == 0 for e in self.exponents)


def all_characters(group: AbelianGroup) -> list:
    """Ĥ in lexicographic exponent order (the canonical character order)."""
    return [Character(group, e) for e in group.elements()]


def character_function(chi: Character, sigma: GroupMap) -> np.ndarray:
    """Values x ↦ χ(σ(x)) in σ's domain order."""
    if chi.group != sigma.group:
        raise ArgumentError("character and map live in different groups")
    return np.array([chi(sigma(s)) for s in sigma.domain], dtype=complex)


# ---------------------------------------------------------------------------
# the linear system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _System:
    unknowns: tuple           # (coord, symbol) per column
    matrix: tuple             # rows of ints
    anchor: tuple


@lru_cache(maxsize=4096)
def _system(dist: TripleDistribution) -> _System:
    if not dist.atoms:
        raise ArgumentError("empty support")
    anchor = dist.support[0]
    unknowns = []
    for c in range(3):
        for s in dist.support_symbols(c):
            if s != anchor[c]:
                unknowns.append((c, s))
    col = {u: j for j, u in enumerate(unknowns)}
    rows = []
    for t in dist.atoms:
        r = [0] * len(unknowns)
        for c in range(3):
            j = col.get((c, t[c]))
            if j is not None:
                r[j] += 1
        rows.append(tuple(r))
    return _System(tuple(unknowns), tuple(rows), anchor)


@lru_cache(maxsize=4096)
def _smith(dist: TripleDistribution):
    sysm = _system(dist)
    if not sysm.unknowns:
        return (), None
    D, _S, T = smith_normal_decomp(sympy.Matrix(sysm.matrix))
    k = min(D.shape)
    diag = tuple(int(D[i, i]) for i in range(k)) + (0,) * (D.shape[1] - k)
    return diag, tuple(tuple(int(v) for v in T.row(i)) for i in range(T.shape[0]))


@dataclass(frozen=True)
class IntegerEmbedding:
    sigma: Mapping
    gamma: Mapping
    phi: Mapping

    @property
    def maps(self):
        return (self.sigma, self.gamma, self.phi)


@dataclass(frozen=True)
class IntegerEmbeddingReport:
    trivial_only: bool
    basis: list
    invariant_factors: tuple
    torsion_primes: tuple  # primes p for which ℤ_p may carry extra solutions


def solve_integer_embeddings(dist: TripleDistribution) -> IntegerEmbeddingReport:
    """Rational kernel of the anchored support system, scaled to primitive integers."""
    sysm = _system(dist)
    diag, _ = _smith(dist)
    basis = []
    if sysm.unknowns:
        M = sympy.Matrix(sysm.matrix)
        for v in M.nullspace():
            den = math.lcm(*(int(sympy.fraction(e)[1]) for e in v))
            ints = [int(e * den) for e in v]
            g = math.gcd(*ints)
            ints = [i // g for i in ints]
            lead = next(i for i in ints if i != 0)
            if lead < 0:
                ints = [-i for i in ints]
            maps = [{s: 0 for s in a} for a in dist.alphabets]
            for (c, s), val in zip(sysm.unknowns, ints):
                maps[c][s] = val
            basis.append(IntegerEmbedding(*maps))
    primes = sorted({p for d in diag if d > 1 for p in sympy.factorint(d)})
    return IntegerEmbeddingReport(not basis, basis, tuple(diag), tuple(primes))


def _cyclic_kernel(dist: TripleDistribution, q: int, budget: int) -> list:
    """All anchored solutions mod q as value vectors over the unknowns."""
    sysm = _system(dist)
    m = len(sysm.unknowns)
    if m == 0:
        return [()]
    diag, T = _smith(dist)
    ranges = []
    for d in diag:
        g = math.gcd(d, q)  # gcd(0, q) = q: free coordinate
        step = q // g
        ranges.append(range(0, q, step))
    if math.prod(len(r) for r in ranges) > budget:
        raise ResourceError(f"kernel mod {q} exceeds budget {budget}")
    out = []
    for w in itertools.product(*ranges):
        out.append(tuple(sum(T[i][j] * w[j] for j in range(m)) % q for i in range(m)))
    return out


def count_group_embeddings(dist: TripleDistribution, H: AbelianGroup) -> int:
    sysm = _system(dist)
    if not sysm.unknowns:
        return 1
    diag, _ = _smith(dist)
    return math.prod(math.gcd(d, q) for q in H.factors for d in diag)


def _build_triple(dist, H, sysm, values_per_factor) -> EmbeddingTriple:
    maps = [{s: [0] * H.rank for s in a} for a in dist.alphabets]
    for f, vec in enumerate(values_per_factor):
        for (c, s), v in zip(sysm.unknowns, vec):
            maps[c][s][f] = v
    return EmbeddingTriple(*(GroupMap(H, {s: tuple(v) for s, v in mp.items()}) for mp in maps))


def enumerate_group_embeddings(dist: TripleDistribution, H: AbelianGroup,
                               budget: int = DEFAULT_BUDGET) -> list:
    """Every embedding of ``dist`` into ``H``, anchored at the canonical atom.

    The system decouples over the cyclic factors of H, so each factor's
    solution set is read off a Smith decomposition of the support matrix and
    the full set is their Cartesian product.  The trivial embedding is always
    present (``is_trivial`` flags it) and comes first.
    """
    sysm = _system(dist)
    total = count_group_embeddings(dist, H)
    if total > budget:
        raise ResourceError(f"{total} embeddings into {H} exceed budget {budget}")
    per_factor = [_cyclic_kernel(dist, q, budget) for q in H.factors]
    seen = {}
    for combo in itertools.product(*per_factor):
        e = _build_triple(dist, H, sysm, combo)
        seen.setdefault(e.key(), e)
    return sorted(seen.values(), key=lambda e: (not e.is_trivial, e.key()))


def brute_force_embeddings(dist: TripleDistribution, H: AbelianGroup, limit: int = 10**6) -> list:
    """Reference enumeration over all map triples (support symbols only)."""
    syms = [dist.support_symbols(c) for c in range(3)]
    elems = H.elements()
    nvars = sum(len(s) for s in syms)
    if len(elems) ** nvars > limit:
        raise ResourceError("brute force too large")
    out = {}
    for vals in itertools.product(elems, repeat=nvars):
        it = iter(vals)
        maps = [{s: H.zero for s in a} for a in dist.alphabets]
        for c in range(3):
            for s in syms[c]:
                maps[c][s] = next(it)
        if all(H.sum(maps[c][t[c]] for c in range(3)) == H.zero for t in dist.atoms):
            e = EmbeddingTriple(*(GroupMap(H, m) for m in maps)).normalized(dist)
            out.setdefault(e.key(), e)
    return sorted(out.values(), key=lambda e: (not e.is_trivial, e.key()))


def is_linear_reduction(e1: EmbeddingTriple, e2: EmbeddingTriple) -> bool:
    """Do injective homomorphisms m_i carry e1's maps onto e2's maps?"""
    G, H = e1.group, e2.group
    if G.order > H.order:
        return False
    for m1, m2 in zip(e1.maps, e2.maps):
        # injective maps preserve the fiber partition, a cheap necessary condition
        if m1.domain != m2.domain or m1.partition() != m2.partition():
            return False
    return all(_map_reduces(G, m1.key(), H, m2.key()) for m1, m2 in zip(e1.maps, e2.maps))


@lru_cache(maxsize=1 << 18)
def _map_reduces(G: AbelianGroup, k1: tuple, H: AbelianGroup, k2: tuple) -> bool:
    pairs = [(a, b) for (_, a), (_, b) in zip(k1, k2)]
    return any(all(tab[a] == b for a, b in pairs) for tab in _injection_tables(G, H))


@lru_cache(maxsize=None)
def _injection_tables(G: AbelianGroup, H: AbelianGroup) -> tuple:
    """Element-wise lookup table of every injective homomorphism G → H."""
    return tuple({a: _apply_hom(H, imgs, a) for a in G.elements()} for imgs in injective_homomorphisms(G, H))


# ---------------------------------------------------------------------------
# master embedding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MasterEmbedding:
    components: tuple         # EmbeddingTriple per kept coordinate
    group: AbelianGroup       # Π of component groups
    sigma: GroupMap
    gamma: GroupMap
    phi: GroupMap
    verify_master: bool
    max_order: int
    enumerated: int = 0

    @property
    def bundle(self) -> EmbeddingTriple:
        return EmbeddingTriple(self.sigma, self.gamma, self.phi)

    @property
    def maps(self) -> tuple:
        return (self.sigma, self.gamma, self.phi)

    @property
    def is_trivial(self) -> bool:
        return not self.components

    def to_json(self) -> dict:
        sat = is_saturated(self)
        return {
            "group": list(self.group.factors),
            "group_name": str(self.group),
            "max_order": self.max_order,
            "enumerated_embeddings": self.enumerated,
            "components": [dict(c.to_json(), saturated=s) for c, s in zip(self.components, sat.per_component)],
            "saturated": sat.overall,
            "verify_master": self.verify_master,
        }


def bundle_components(dist_alphabets, components: Sequence[EmbeddingTriple]) -> tuple:
    H = AbelianGroup(tuple(f for c in components for f in c.group.factors))
    maps = []
    for k, alph in enumerate(dist_alphabets):
        maps.append(GroupMap(H, {s: tuple(v for c in components for v in c.maps[k](s)) for s in alph}))
    return H, maps


class _ReductionIndex:
    """Kept embeddings indexed per coordinate by (fiber partition, distinct map).

    A linear reduction acts map by map, so e is reduced by some kept
    embedding iff the kept ids whose σ, γ and φ reduce to e's maps intersect.
    Injective maps preserve fibers, which narrows each lookup to one partition.
    """

    def __init__(self):
        self.maps = [{}, {}, {}]

    def add(self, e: EmbeddingTriple, i: int) -> None:
        for c, m in enumerate(e.maps):
            slot = self.maps[c].setdefault(m.partition(), {})
            slot.setdefault((e.group, m.key()), set()).add(i)

    def reduces_to(self, e: EmbeddingTriple) -> bool:
        H = e.group
        common = None
        for c, m in enumerate(e.maps):
            ids: set = set()
            for (G, key), owners in self.maps[c].get(m.partition(), {}).items():
                if G.order <= H.order and _map_reduces(G, key, H, m.key()):
                    ids |= owners
            common = ids if common is None else common & ids
            if not common:
                return False
        return True


def build_master_embedding(dist: TripleDistribution, r: int = DEFAULT_MAX_ORDER,
                           budget: int = DEFAULT_BUDGET) -> MasterEmbedding:
    """Bundle all embeddings into groups of order ≤ r, minus redundant copies.

    Candidates are visited by group order.  A candidate is dropped when a kept
    component already reduces to it linearly: such a coordinate induces the
    same three partitions as its reducer, and anything it would capture is
    captured by the reducer through the composed injection.
    """
    if r < 1:
        raise ArgumentError("r must be at least 1")
    spent = 0
    candidates = []
    for G in groups_up_to(r):
        if G.order == 1:
            continue
        spent += count_group_embeddings(dist, G)
        if spent > budget:
            raise ResourceError(f"master enumeration exceeds budget {budget}")
        candidates.extend(e for e in enumerate_group_embeddings(dist, G, budget) if not e.is_trivial)
    kept: list = []
    index = _ReductionIndex()
    for e in candidates:
        if not index.reduces_to(e):
            index.add(e, len(kept))
            kept.append(e)
    verified = all(index.reduces_to(e) for e in candidates)
    H, (s, g, p) = bundle_components(dist.alphabets, kept)
    return MasterEmbedding(tuple(kept), H, s, g, p, verified, r, len(candidates))


def verify_master_property(dist: TripleDistribution, components: Sequence[EmbeddingTriple],
                           r: int, budget: int = DEFAULT_BUDGET) -> list:
    """Embeddings into groups of order ≤ r that no component reduces to (should be empty)."""
    failures = []
    index = _ReductionIndex()
    for i, c in enumerate(components):
        index.add(c, i)
    for G in groups_up_to(r):
        for e in enumerate_group_embeddings(dist, G, budget):
            if e.is_trivial:
                continue
            if not index.reduces_to(e):
                failures.append(e)
    return failures


@dataclass(frozen=True)
class SaturationStatus:
    per_component: tuple
    overall: bool

    def __bool__(self):
        return self.overall


def is_saturated(m) -> SaturationStatus:
    """Each map's image equals the whole group (per component and for the bundle)."""
    def full(triple_maps, H):
        n = H.order
        return all(len(mp.image) == n for mp in triple_maps)

    comps = tuple(full(c.maps, c.group) for c in m.components)
    return SaturationStatus(comps, full(m.maps, m.group))


# ---------------------------------------------------------------------------
# ℝ/ℤ embeddings
# ---------------------------------------------------------------------------

def finitize_circle_embedding(dist: TripleDistribution, s: Mapping, g: Mapping, p: Mapping,
                              tol: float = 1e-6, max_q: int = 1000) -> EmbeddingTriple:
    """Replace a circle-valued embedding by an equivalent one into ℤ_q.

    Searches q = 1, 2, … for a denominator that rounds every value to a
    multiple of 1/q within ``tol`` while preserving each map's level sets and
    the equation mod q.
    """
    maps = (s, g, p)
    for k, m in enumerate(maps):
        if set(m) != set(dist.alphabets[k]):
            raise ArgumentError(f"map for {COORDS[k]} must cover its alphabet")
    for t in dist.atoms:
        v = sum(maps[k][t[k]] for k in range(3))
        if abs(v - round(v)) > tol:
            raise ArgumentError(f"atom {t!r} violates the mod-1 equation")

    def circ(a, b):
        d = (a - b) % 1.0
        return min(d, 1.0 - d)

    levels = []
    for m in maps:
        syms = list(m)
        levels.append([[circ(m[a], m[b]) <= tol for b in syms] for a in syms])

    for q in range(1, max_q + 1):
        ints = []
        ok = True
        for m in maps:
            row = {}
            for sym, v in m.items():
                x = v * q
                r = round(x)
                if abs(x - r) > tol * q:
                    ok = False
                    break
                row[sym] = int(r) % q
            if not ok:
                break
            ints.append(row)
        if not ok:
            continue
        if any((ints[0][t[0]] + ints[1][t[1]] + ints[2][t[2]]) % q for t in dist.atoms):
            continue
        same = all(
            (ints[k][a] == ints[k][b]) == levels[k][i][j]
            for k in range(3)
            for i, a in enumerate(maps[k])
            for j, b in enumerate(maps[k])
        )
        if not same:
            continue
        H = AbelianGroup.from_orders([q])
        return EmbeddingTriple(*(GroupMap(H, {sym: H.cyclic_element(v) for sym, v in row.items()})
                                 for row in ints))
    raise SearchFailure(f"no denominator q ≤ {max_q} reproduces the embedding")
