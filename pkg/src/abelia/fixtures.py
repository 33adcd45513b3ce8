"""Named example distributions and the seeded random corpus."""

from __future__ import annotations

import itertools
from fractions import Fraction

from .dist_core import Alphabet, TripleDistribution
from .rng import generator


def _syms(k: int) -> tuple:
    return tuple(str(i) for i in range(k))


def cyclic_equation(q: int = 3) -> TripleDistribution:
    """Uniform on {(a,b,c) ∈ ℤ_q³ : a+b+c = 0}."""
    s = _syms(q)
    supp = [(str(a), str(b), str((-a - b) % q)) for a in range(q) for b in range(q)]
    return TripleDistribution.uniform((s, s, s), supp)


def three_atom() -> TripleDistribution:
    """Uniform on {(0,0,0),(1,1,0),(1,0,1)}: admits the ℤ-embedding (x, −y, −z)."""
    s = _syms(2)
    return TripleDistribution.uniform((s, s, s), [("0", "0", "0"), ("1", "1", "0"), ("1", "0", "1")])


def full_support(k: int = 2) -> TripleDistribution:
    s = _syms(k)
    return TripleDistribution.uniform((s, s, s), itertools.product(s, s, s))


def diagonal_pair() -> TripleDistribution:
    """Support {(1,1,1),(2,2,2)}: every pair graph has two components."""
    s = ("1", "2")
    return TripleDistribution.uniform((s, s, s), [("1", "1", "1"), ("2", "2", "2")])


def partial_image() -> TripleDistribution:
    """x ∈ {0,1}, y,z ∈ ℤ₃ with x+y+z ≡ 0: σ's image {0,1} is not a subgroup of ℤ₃."""
    supp = [(str(x), str(y), str((-x - y) % 3)) for x in range(2) for y in range(3)]
    return TripleDistribution.uniform((_syms(2), _syms(3), _syms(3)), supp)


def two_to_one(weights=(1, 1, 1, 1)) -> TripleDistribution:
    """Σ = {a0,a1,b0,b1} mapped two-to-one onto ℤ₂; y,z ∈ ℤ₂ with σ(x)+y+z = 0.

    ``weights`` are the relative masses of a0, a1, b0, b1; each x-symbol is
    paired with both y values.  Unequal weights inside a fiber make the
    σ-fibers non-uniform.
    """
    sigma = {"a0": 0, "a1": 0, "b0": 1, "b1": 1}
    atoms = {}
    tot = Fraction(0)
    for (x, s), w in zip(sigma.items(), weights):
        for y in range(2):
            atoms[(x, str(y), str((s + y) % 2))] = Fraction(w)
            tot += w
    atoms = {k: v / tot for k, v in atoms.items()}
    return TripleDistribution((tuple(sigma), _syms(2), _syms(2)), atoms)


def random_distribution(seed: int, max_alphabet: int = 3, max_support: int = 6,
                        label="corpus") -> TripleDistribution:
    """Random law with alphabets ≤ max_alphabet and support ≤ max_support.

    Alphabets are trimmed to the marginal supports, and masses are random
    small-denominator rationals.
    """
    rng = generator(seed, label)
    sizes = [int(rng.integers(1, max_alphabet + 1)) for _ in range(3)]
    cells = list(itertools.product(*(range(k) for k in sizes)))
    m = int(rng.integers(1, min(max_support, len(cells)) + 1))
    pick = sorted(rng.choice(len(cells), size=m, replace=False).tolist())
    weights = [int(w) for w in rng.integers(1, 5, size=m)]
    total = sum(weights)
    atoms = {tuple(str(v) for v in cells[i]): Fraction(w, total) for i, w in zip(pick, weights)}
    d = TripleDistribution(tuple(_syms(k) for k in sizes), atoms)
    return d.pruned()


def corpus(size: int = 200, seed: int = 0) -> list:
    return [random_distribution(seed * 100003 + i) for i in range(size)]


def skewed_two_to_one() -> TripleDistribution:
    """Two-to-one law whose conditional y-law differs inside the σ-fiber {a0, a1}."""
    sigma = {"a0": 0, "a1": 0, "b0": 1, "b1": 1}
    mass = {("a0", 0): 2, ("a0", 1): 1, ("a1", 0): 1, ("a1", 1): 2,
            ("b0", 0): 1, ("b0", 1): 1, ("b1", 0): 1, ("b1", 1): 1}
    tot = sum(mass.values())
    atoms = {(x, str(y), str((sigma[x] + y) % 2)): Fraction(w, tot) for (x, y), w in mass.items()}
    return TripleDistribution((tuple(sigma), _syms(2), _syms(2)), atoms)


def very_base(q: int = 3) -> TripleDistribution:
    """Σ = Φ = ℤ_q, Γ = ℤ_{q+1} read mod q, uniform over x = −(y mod q) − z."""
    supp = [(str((-(y % q) - z) % q), str(y), str(z)) for y in range(q + 1) for z in range(q)]
    return TripleDistribution.uniform((_syms(q), _syms(q + 1), _syms(q)), supp)
