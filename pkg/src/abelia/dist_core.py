"""Exact distributions over triple product spaces.

Every probability is a :class:`fractions.Fraction`; structure such as support,
connectivity and merges is therefore tolerance-free.  Symbols are strings, or
tuples of symbols for the tuple alphabets produced by the path trick.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ArgumentError, DomainError, FileError, ParseError
from .rng import generator

Symbol = Hashable
Atom = tuple
COORDS = ("x", "y", "z")
PAIRS = (("x", "y"), ("x", "z"), ("y", "z"))


def coord_index(c) -> int:
    if isinstance(c, int) and 0 <= c < 3:
        return c
    try:
        return COORDS.index(c)
    except ValueError:
        raise ArgumentError(f"unknown coordinate {c!r}") from None


def parse_coords(coords) -> tuple[int, ...]:
    """Normalize ``"yz"``, ``{"y","z"}`` or ``(1, 2)`` to sorted indices."""
    if isinstance(coords, str):
        coords = list(coords)
    idx = sorted({coord_index(c) for c in coords})
    if not idx:
        raise ArgumentError("coordinate set must be nonempty")
    return tuple(idx)


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple

    def __post_init__(self):
        syms = tuple(self.symbols)
        object.__setattr__(self, "symbols", syms)
        if not syms:
            raise ArgumentError("alphabet must be nonempty")
        if len(set(syms)) != len(syms):
            raise ArgumentError(f"duplicate symbols in alphabet {syms!r}")
        object.__setattr__(self, "_pos", {s: i for i, s in enumerate(syms)})

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, s):
        return s in self._pos

    def __getitem__(self, i):
        return self.symbols[i]

    def index(self, s) -> int:
        try:
            return self._pos[s]
        except KeyError:
            raise ArgumentError(f"symbol {s!r} not in alphabet") from None

    def sort(self, syms: Iterable) -> list:
        return sorted(syms, key=self.index)


def _as_alphabet(a) -> Alphabet:
    return a if isinstance(a, Alphabet) else Alphabet(tuple(a))


@dataclass(frozen=True)
class TripleDistribution:
    """A probability law on Σ×Γ×Φ with exact rational atom masses."""

    alphabets: tuple
    atoms: Mapping

    def __post_init__(self):
        alphs = tuple(_as_alphabet(a) for a in self.alphabets)
        if len(alphs) != 3:
            raise ArgumentError("need exactly three alphabets")
        clean: dict = {}
        total = Fraction(0)
        for atom, p in self.atoms.items():
            atom = tuple(atom)
            p = Fraction(p)
            if p < 0:
                raise DomainError(f"negative probability at atom {atom!r}")
            for a, s in zip(alphs, atom):
                if s not in a:
                    raise ArgumentError(f"atom {atom!r} uses symbol {s!r} outside its alphabet")
            if p > 0:
                clean[atom] = clean.get(atom, Fraction(0)) + p
            total += p
        if total != 1:
            raise DomainError(f"probabilities sum to {total}, not 1")
        order = sorted(clean, key=lambda t: tuple(a.index(s) for a, s in zip(alphs, t)))
        object.__setattr__(self, "alphabets", alphs)
        object.__setattr__(self, "atoms", {t: clean[t] for t in order})

    # -- basic views ---------------------------------------------------
    @property
    def support(self) -> list:
        """Support atoms in canonical (alphabet-index lexicographic) order."""
        return list(self.atoms)

    def prob(self, atom) -> Fraction:
        return self.atoms.get(tuple(atom), Fraction(0))

    def atom_key(self, atom) -> tuple:
        return tuple(a.index(s) for a, s in zip(self.alphabets, atom))

    def support_symbols(self, coord) -> list:
        i = coord_index(coord)
        seen = {t[i] for t in self.atoms}
        return self.alphabets[i].sort(seen)

    def pruned(self) -> "TripleDistribution":
        """Same law with every alphabet cut down to its marginal support."""
        return TripleDistribution(
            tuple(Alphabet(tuple(self.support_symbols(i))) for i in range(3)), self.atoms
        )

    def __eq__(self, other):
        if not isinstance(other, TripleDistribution):
            return NotImplemented
        return self.alphabets == other.alphabets and dict(self.atoms) == dict(other.atoms)

    def __hash__(self):
        return hash((self.alphabets, frozenset(self.atoms.items())))

    def as_float_array(self) -> np.ndarray:
        """Dense |Σ|×|Γ|×|Φ| array of probabilities (float64)."""
        arr = np.zeros(tuple(len(a) for a in self.alphabets))
        for t, p in self.atoms.items():
            arr[self.atom_key(t)] = float(p)
        return arr

    # -- constructors --------------------------------------------------
    @classmethod
    def uniform(cls, alphabets, support: Iterable) -> "TripleDistribution":
        support = list(dict.fromkeys(tuple(t) for t in support))
        if not support:
            raise ArgumentError("support must be nonempty")
        p = Fraction(1, len(support))
        return cls(tuple(alphabets), {t: p for t in support})

    @classmethod
    def from_json(cls, doc) -> "TripleDistribution":
        if isinstance(doc, str):
            try:
                doc = json.loads(doc)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid distribution JSON: {exc}") from None
        try:
            alphs = [tuple(_symbol_from_json(s) for s in a) for a in doc["alphabets"]]
            atoms = {}
            for row in doc["atoms"]:
                if len(row) != 4:
                    raise ParseError(f"atom row {row!r} must have 4 entries")
                key = tuple(_symbol_from_json(s) for s in row[:3])
                atoms[key] = atoms.get(key, Fraction(0)) + Fraction(str(row[3]))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed distribution document: {exc}") from None
        return cls(tuple(alphs), atoms)

    def to_json(self) -> dict:
        return {
            "alphabets": [[_symbol_to_json(s) for s in a] for a in self.alphabets],
            "atoms": [[*(_symbol_to_json(s) for s in t), str(p)] for t, p in self.atoms.items()],
        }


def _symbol_from_json(s):
    if isinstance(s, list):
        return tuple(_symbol_from_json(v) for v in s)
    if isinstance(s, (int, float)) and not isinstance(s, bool):
        return str(s)
    if not isinstance(s, str):
        raise ParseError(f"bad symbol {s!r}")
    return s


def _symbol_to_json(s):
    if isinstance(s, tuple):
        return [_symbol_to_json(v) for v in s]
    return s


def load_distribution(path) -> TripleDistribution:
    p = Path(path)
    if not p.is_file():
        raise FileError(f"distribution file not found: {p}")
    return TripleDistribution.from_json(p.read_text())


# ---------------------------------------------------------------------------
# marginals and structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarginalDistribution:
    """Law of a subset of the coordinates; keys are tuples in x<y<z order."""

    coords: tuple
    alphabets: tuple
    probs: Mapping

    def prob(self, key) -> Fraction:
        return self.probs.get(tuple(key), Fraction(0))


def marginal(dist: TripleDistribution, coords):
    """Exact marginal on ``coords``; the full set returns ``dist`` itself."""
    idx = parse_coords(coords)
    if idx == (0, 1, 2):
        return dist
    acc: dict = defaultdict(Fraction)
    for t, p in dist.atoms.items():
        acc[tuple(t[i] for i in idx)] += p
    alphs = tuple(dist.alphabets[i] for i in idx)
    order = sorted(acc, key=lambda k: tuple(a.index(s) for a, s in zip(alphs, k)))
    return MarginalDistribution(
        tuple(COORDS[i] for i in idx), alphs, {k: acc[k] for k in order}
    )


def univariate(dist: TripleDistribution, coord) -> dict:
    """Marginal of one coordinate as ``{symbol: Fraction}`` over the whole alphabet."""
    i = coord_index(coord)
    out = {s: Fraction(0) for s in dist.alphabets[i]}
    for t, p in dist.atoms.items():
        out[t[i]] += p
    return out


@dataclass(frozen=True)
class SupportGraph:
    pair: tuple
    edges: frozenset

    def components(self, left: Sequence, right: Sequence) -> list:
        """Connected components as ``(left_symbols, right_symbols)`` pairs.

        Only symbols incident to an edge are vertices: zero-mass symbols are
        not part of the support and do not count as isolated components.
        """
        lv = [s for s in left if any(e[0] == s for e in self.edges)]
        rv = [s for s in right if any(e[1] == s for e in self.edges)]
        li = {s: k for k, s in enumerate(lv)}
        ri = {s: k + len(lv) for k, s in enumerate(rv)}
        n = len(lv) + len(rv)
        if n == 0:
            return []
        rows = [li[a] for a, _ in self.edges]
        cols = [ri[b] for _, b in self.edges]
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        _, labels = connected_components(adj, directed=False)
        comps: dict = {}
        for s in lv:
            comps.setdefault(labels[li[s]], ([], []))[0].append(s)
        for s in rv:
            comps.setdefault(labels[ri[s]], ([], []))[1].append(s)
        out = [(tuple(a), tuple(b)) for a, b in comps.values()]
        return sorted(out, key=lambda c: (left.index(c[0][0]) if c[0] else len(left)))


def support_graph(dist: TripleDistribution, pair) -> SupportGraph:
    i, j = parse_coords(pair)
    return SupportGraph((COORDS[i], COORDS[j]), frozenset((t[i], t[j]) for t in dist.atoms))


@dataclass(frozen=True)
class ConnectivityReport:
    connected: bool
    components: Mapping  # pair name -> list of (left, right) symbol tuples

    def __bool__(self):
        return self.connected


def is_pairwise_connected(dist: TripleDistribution) -> ConnectivityReport:
    comps = {}
    for pair in PAIRS:
        i, j = parse_coords(pair)
        g = support_graph(dist, pair)
        comps["".join(pair)] = g.components(list(dist.alphabets[i]), list(dist.alphabets[j]))
    return ConnectivityReport(all(len(c) == 1 for c in comps.values()), comps)


def implies_third(dist: TripleDistribution, known) -> bool:
    """True iff the two ``known`` coordinates determine the third on the support."""
    idx = parse_coords(known)
    if len(idx) != 2:
        raise ArgumentError("known must name exactly two coordinates")
    (k,) = set(range(3)) - set(idx)
    seen: dict = {}
    for t in dist.atoms:
        key = (t[idx[0]], t[idx[1]])
        if seen.setdefault(key, t[k]) != t[k]:
            return False
    return True


@dataclass(frozen=True)
class MergeMap:
    coordinate: str
    representative: Mapping

    def __call__(self, s):
        return self.representative[s]

    @property
    def is_identity(self) -> bool:
        return all(k == v for k, v in self.representative.items())


def merge(dist: TripleDistribution, coordinate) -> tuple[TripleDistribution, MergeMap]:
    """Collapse symbols of ``coordinate`` that share a completing pair.

    Two symbols are adjacent when some pair of the other two coordinates
    completes both of them inside the support; each connected component is
    replaced by its first symbol in alphabet order.  One pass reaches the
    fixpoint: afterwards the other two coordinates determine this one.
    """
    k = coord_index(coordinate)
    alph = dist.alphabets[k]
    others = [i for i in range(3) if i != k]
    parent = {s: s for s in alph}

    def find(s):
        while parent[s] != s:
            parent[s] = parent[parent[s]]
            s = parent[s]
        return s

    first: dict = {}
    for t in dist.atoms:
        key = (t[others[0]], t[others[1]])
        if key in first:
            a, b = find(first[key]), find(t[k])
            if a != b:
                lo, hi = sorted((a, b), key=alph.index)
                parent[hi] = lo
        else:
            first[key] = t[k]
    rep = {s: find(s) for s in alph}
    new_alph = Alphabet(tuple(s for s in alph if rep[s] == s))
    atoms: dict = defaultdict(Fraction)
    for t, p in dist.atoms.items():
        u = list(t)
        u[k] = rep[t[k]]
        atoms[tuple(u)] += p
    alphs = list(dist.alphabets)
    alphs[k] = new_alph
    return TripleDistribution(tuple(alphs), dict(atoms)), MergeMap(COORDS[k], rep)


def mixture_split(mu, rho, nu):
    """Return ν′ with μ = ρ·ν + (1−ρ)·ν′, exactly.

    ``mu`` and ``nu`` are either both :class:`TripleDistribution` on the same
    alphabets or both mappings ``{outcome: probability}``.
    """
    rho = Fraction(rho)
    if not 0 < rho < 1:
        raise ArgumentError(f"mixture weight must lie in (0,1), got {rho}")
    triple = isinstance(mu, TripleDistribution)
    if triple:
        if not isinstance(nu, TripleDistribution) or nu.alphabets != mu.alphabets:
            raise ArgumentError("mixture parts must share alphabets")
        mu_p, nu_p = dict(mu.atoms), dict(nu.atoms)
    else:
        mu_p = {k: Fraction(v) for k, v in mu.items()}
        nu_p = {k: Fraction(v) for k, v in nu.items()}
    out = {}
    for a in list(mu_p) + [k for k in nu_p if k not in mu_p]:
        m, v = mu_p.get(a, Fraction(0)), nu_p.get(a, Fraction(0))
        if m < rho * v:
            raise DomainError(f"infeasible split at atom {a!r}: μ={m} < ρ·ν={rho * v}")
        out[a] = (m - rho * v) / (1 - rho)
    if triple:
        return TripleDistribution(mu.alphabets, out)
    if sum(out.values()) != 1:
        raise DomainError("mixture parts do not sum to one")
    return out


def sample_tensor(dist: TripleDistribution, n: int, count: int, seed: int) -> list:
    """``count`` i.i.d. draws from μ^{⊗n}, each a tuple of ``n`` atoms."""
    if n < 1:
        raise ArgumentError("n must be at least 1")
    if count < 0:
        raise ArgumentError("count must be nonnegative")
    if count == 0:
        return []
    atoms = dist.support
    p = np.array([float(dist.atoms[a]) for a in atoms])
    p /= p.sum()
    rng = generator(seed, "sample_tensor", n)
    draws = rng.choice(len(atoms), size=(count, n), p=p)
    return [tuple(atoms[j] for j in row) for row in draws]
