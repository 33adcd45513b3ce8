"""Product-function classes, correlation lists, greedy short lists and symbolic distance."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kernels
from .abelian import GroupMap, all_characters
from .errors import ArgumentError, PreconditionError, ResourceError
from .fourier import TensorFunction, product_weights

BOUND_TOL = 1e-12
DUP_TOL = 1e-12
DEFAULT_BUDGET = 200_000


@dataclass(frozen=True, eq=False)
class ProductClass:
    """A finite dictionary of 1-bounded univariate functions over (Σ, μ).

    n-variate members are index tuples into the dictionary; the canonical
    total order on members is lexicographic on those tuples.
    """

    symbols: tuple
    weights: np.ndarray
    dictionary: np.ndarray          # R × |Σ| complex
    source: str = "dictionary"

    def __post_init__(self):
        D = np.asarray(self.dictionary, dtype=complex)
        w = np.asarray(self.weights, dtype=float)
        if D.ndim != 2 or D.shape[1] != len(self.symbols) or w.shape != (len(self.symbols),):
            raise ArgumentError("dictionary must be R × |Σ| with one weight per symbol")
        if np.any(np.abs(D) > 1 + BOUND_TOL):
            raise ArgumentError("dictionary functions must be 1-bounded")
        for a, b in itertools.combinations(range(D.shape[0]), 2):
            if np.max(np.abs(D[a] - D[b])) <= DUP_TOL:
                raise ArgumentError(f"dictionary entries {a} and {b} coincide")
        D.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "dictionary", D)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_sigma(cls, sigma: GroupMap, symbols: Sequence, weights) -> "ProductClass":
        """F_σ: characters composed with σ, with coinciding compositions merged."""
        rows: list = []
        for chi in all_characters(sigma.group):
            v = np.array([chi(sigma(s)) for s in symbols])
            if not any(np.max(np.abs(v - r)) <= DUP_TOL for r in rows):
                rows.append(v)
        return cls(tuple(symbols), np.asarray(weights, dtype=float), np.array(rows), "sigma")

    @property
    def size(self) -> int:
        return self.dictionary.shape[0]

    def gram(self) -> np.ndarray:
        D = self.dictionary
        return (D * self.weights) @ D.conj().T

    @cached_property
    def separation(self) -> float:
        return class_separation(self)

    def members(self, n: int):
        return itertools.product(range(self.size), repeat=n)

    def function(self, idx: Sequence[int]) -> "ProductFunction":
        return ProductFunction(tuple(self.dictionary[i] for i in idx), tuple(idx), self)


def class_separation(cls: ProductClass) -> float:
    """τ = min over distinct dictionary pairs of 1 − |⟨p, p′⟩_μ| (τ = 1 below two entries)."""
    if cls.size < 2:
        return 1.0
    G = np.abs(cls.gram())
    iu = np.triu_indices(cls.size, 1)
    tau = float(1 - G[iu].max())
    if cls.source == "sigma" and tau <= 0:
        raise PreconditionError("F_σ is not separated; is 0 in the image of σ?")
    return tau


@dataclass(frozen=True, eq=False)
class ProductFunction:
    factors: tuple                 # univariate value vectors
    indices: tuple | None = None   # dictionary indices when drawn from a class
    cls: ProductClass | None = None
    scale: complex = 1.0

    def __post_init__(self):
        for f in self.factors:
            if np.max(np.abs(f), initial=0.0) > 1 + BOUND_TOL:
                raise ArgumentError("factors must be 1-bounded")

    @property
    def n(self) -> int:
        return len(self.factors)

    def values(self) -> np.ndarray:
        out = np.array(self.scale, dtype=complex)
        for f in self.factors:
            out = np.multiply.outer(out, f)
        return out

    def as_tensor(self) -> TensorFunction:
        if self.cls is None:
            raise ArgumentError("a class is needed to fix the domain")
        return TensorFunction(self.cls.symbols, self.cls.weights, self.values())

    def restrict(self, fixed: dict) -> "ProductFunction":
        """Fix coordinates {j: symbol index}; the fixed factors fold into ``scale``."""
        theta = complex(self.scale)
        keep_f, keep_i = [], []
        for j, f in enumerate(self.factors):
            if j in fixed:
                theta *= complex(f[fixed[j]])
            else:
                keep_f.append(f)
                if self.indices is not None:
                    keep_i.append(self.indices[j])
        return ProductFunction(tuple(keep_f), tuple(keep_i) if self.indices is not None else None,
                               self.cls, theta)

    def normalized(self) -> "ProductFunction":
        """Drop the unimodular part of the constant: members are equal up to a phase."""
        return ProductFunction(self.factors, self.indices, self.cls, abs(self.scale))


def product_inner(p: ProductFunction, q: ProductFunction, weights) -> complex:
    """⟨p, q⟩ = Π_i ⟨p_i, q_i⟩ under μ^{⊗n}."""
    if p.n != q.n:
        raise ArgumentError("product functions must have the same arity")
    w = np.asarray(weights, dtype=float)
    out = complex(p.scale) * complex(np.conj(q.scale))
    for a, b in zip(p.factors, q.factors):
        out *= complex(np.sum(w * a * np.conj(b)))
    return out


@dataclass(frozen=True)
class ListEntry:
    index: tuple
    correlation: complex

    def to_json(self) -> dict:
        return {"index": list(self.index), "re": self.correlation.real, "im": self.correlation.imag}


def all_correlations(f: TensorFunction, cls: ProductClass, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Tensor of ⟨f, p⟩ over every n-variate member p, indexed by dictionary indices."""
    if f.symbols != cls.symbols or not np.allclose(f.weights, cls.weights, atol=0, rtol=0):
        raise ArgumentError("f and the class must live on the same (Σ, μ)")
    if cls.size ** f.n > budget:
        raise ResourceError(f"{cls.size}^{f.n} members exceed the budget of {budget}")
    M = np.conj(cls.dictionary) * cls.weights
    return kernels.apply_axes(np.asarray(f.values, dtype=complex), [M] * f.n)


def correlation_list(f: TensorFunction, eps: float, cls: ProductClass,
                     budget: int = DEFAULT_BUDGET) -> list:
    """List_ε[f]: every member with |⟨f, p⟩| ≥ ε, in canonical order."""
    C = all_correlations(f, cls, budget)
    hits = np.argwhere(np.abs(C) >= eps - BOUND_TOL)
    return [ListEntry(tuple(int(i) for i in h), complex(C[tuple(h)])) for h in hits]


def member_inner(cls: ProductClass, a: Sequence[int], b: Sequence[int]) -> complex:
    G = cls.gram()
    return complex(np.prod([G[i, j] for i, j in zip(a, b)]))


@dataclass
class ShortList:
    entries: list
    full: list
    eps: float
    delta: float
    bound: float = field(init=False)

    def __post_init__(self):
        self.bound = 1.0 / (self.eps ** 2 - self.delta)

    def indices(self) -> list:
        return [e.index for e in self.entries]

    def to_json(self) -> dict:
        return {"eps": self.eps, "delta": self.delta, "bound": self.bound,
                "short_list": [e.to_json() for e in self.entries], "list_size": len(self.full)}


def short_list(f: TensorFunction, eps: float, delta: float, cls: ProductClass,
               budget: int = DEFAULT_BUDGET) -> ShortList:
    """Greedy ShortList_{ε,δ}[f] over List_ε[f] in canonical order.

    A member joins when its correlation with every earlier pick is below δ,
    so every List member ends up δ-correlated with some pick.
    """
    if not 0 <= delta < eps ** 2:
        raise ArgumentError("need 0 ≤ δ < ε²")
    nf = math.sqrt(float(np.sum(product_weights(f.weights, f.n) * np.abs(f.values) ** 2)))
    if nf > 1 + 1e-9:
        raise ArgumentError("f must satisfy ‖f‖₂ ≤ 1")
    full = correlation_list(f, eps, cls, budget)
    G = cls.gram()
    picks: list = []
    for e in full:
        if all(abs(np.prod([G[i, j] for i, j in zip(e.index, p.index)])) < delta for p in picks):
            picks.append(e)
    out = ShortList(picks, full, eps, delta)
    if not len(picks) < out.bound:
        raise AssertionError("greedy short list exceeded 1/(ε²−δ)")
    return out


def coverage_ok(sl: ShortList, cls: ProductClass) -> bool:
    G = cls.gram()
    return all(any(abs(np.prod([G[i, j] for i, j in zip(e.index, p.index)])) >= sl.delta - BOUND_TOL
                   for p in sl.entries) for e in sl.full)


def symbolic_distance(p: ProductFunction, q: ProductFunction) -> int:
    """Number of coordinates whose factors differ."""
    if p.cls is not q.cls or p.cls is None:
        raise ArgumentError("symbolic distance needs two members of the same class")
    if p.n != q.n:
        raise ArgumentError("arity mismatch")
    return sum(a != b for a, b in zip(p.indices, q.indices))


def correlation_bound_check(p: ProductFunction, q: ProductFunction, tau: float | None = None,
                            tol: float = BOUND_TOL) -> bool:
    """|⟨p, p′⟩| ≤ (1 − τ)^Δ."""
    t = p.cls.separation if tau is None else tau
    lhs = abs(product_inner(p, q, p.cls.weights))
    return lhs <= (1 - t) ** symbolic_distance(p, q) + tol


# ---------------------------------------------------------------------------
# auxiliary facts, checked numerically
# ---------------------------------------------------------------------------

def dimensionality_check(k: int, ell: int, rng: np.random.Generator) -> dict:
    """ℓ ≥ k+1 unit vectors in ℂᵏ: some distinct pair has |⟨u_i,u_j⟩| ≥ 1/(kℓ)."""
    if ell < k + 1:
        raise ArgumentError("need ℓ ≥ k + 1")
    U = rng.standard_normal((ell, k)) + 1j * rng.standard_normal((ell, k))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    G = np.abs(U @ U.conj().T)
    np.fill_diagonal(G, 0)
    best = float(G.max())
    return {"max_pair": best, "bound": 1 / (k * ell), "holds": best >= 1 / (k * ell)}


def restrict_keeps_correlations_check(f: TensorFunction, g: TensorFunction, live: Sequence[int]) -> dict:
    """Pr_{x̃}[|⟨f_{Ī→x̃}, g_{Ī→x̃}⟩| ≥ η/2] ≥ η²/4 for η = |⟨f, g⟩|, by exact enumeration."""
    if np.max(np.abs(g.values), initial=0.0) > 1 + BOUND_TOL:
        raise PreconditionError("g must be 1-bounded")
    w = f.weights
    n = f.n
    live = sorted(live)
    fixed = [i for i in range(n) if i not in live]
    eta = abs(complex(np.sum(product_weights(w, n) * f.values * np.conj(g.values))))
    order = fixed + live
    F = np.transpose(f.values, order).reshape(len(w) ** len(fixed), -1)
    Gv = np.transpose(g.values, order).reshape(len(w) ** len(fixed), -1)
    wl = product_weights(w, len(live)).reshape(-1)
    wf = product_weights(w, len(fixed)).reshape(-1)
    inners = np.abs((F * np.conj(Gv)) @ wl)
    prob = float(np.sum(wf[inners >= eta / 2 - BOUND_TOL]))
    return {"eta": eta, "probability": prob, "bound": eta ** 2 / 4, "holds": prob >= eta ** 2 / 4 - BOUND_TOL}


def holder_trick_check(px, py, event: np.ndarray, k: int, ell: int) -> dict:
    """Pr[∩_{i,j} E(x_i, y_j)] ≥ Pr[E]^{kℓ} for independent samples, computed exactly."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    E = np.asarray(event, dtype=bool)
    delta = float(px @ E @ py)
    total = 0.0
    for ys in itertools.product(range(py.size), repeat=ell):
        pys = float(np.prod(py[list(ys)]))
        all_y = np.all(E[:, list(ys)], axis=1)
        total += pys * float(px @ all_y) ** k
    return {"delta": delta, "probability": total, "bound": delta ** (k * ell),
            "holds": total >= delta ** (k * ell) - BOUND_TOL}
