"""L₂ analysis on finite product spaces.

Functions on Σⁿ are dense complex tensors of shape ``(|Σ|,)*n`` under a
product measure μ^{⊗n}.  The module provides Efron–Stein and monomial
decompositions, the embed/non-embed/modest split basis, the three noise
operators, influences, random restrictions, Markov-chain spectra and the
W wrap that rewrites x-functions as functions of (y, z).

Numerical tolerances are shared module-wide: equality ``TOL_EQ``, inequality
slack ``TOL_SLACK`` and the Gram–Schmidt rank cutoff ``TOL_RANK``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import kernels
from .abelian import Character, GroupMap, all_characters
from .dist_core import (TripleDistribution, _symbol_from_json, _symbol_to_json,
                        implies_third, mixture_split, univariate)
from .errors import ArgumentError, InvariantViolation, PreconditionError

TOL_EQ = 1e-10
TOL_SLACK = 1e-9
TOL_RANK = 1e-8
_MEASURE_TOL = 1e-12


# ---------------------------------------------------------------------------
# functions on product spaces
# ---------------------------------------------------------------------------

def _as_weights(weights) -> np.ndarray:
    w = np.asarray([float(v) for v in weights], dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ArgumentError("measure must be a nonempty vector")
    if np.any(w < 0) or abs(w.sum() - 1.0) > _MEASURE_TOL * max(1, w.size):
        raise ArgumentError("measure must be a probability vector")
    return w


def product_weights(w: np.ndarray, n: int) -> np.ndarray:
    """The tensor μ^{⊗n} as an array of shape ``(k,)*n``."""
    out = np.ones(())
    for _ in range(n):
        out = np.multiply.outer(out, w)
    return out


@dataclass(frozen=True, eq=False)
class TensorFunction:
    """f: Σⁿ → ℂ together with the univariate measure of the product space."""

    symbols: tuple
    weights: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        syms = tuple(self.symbols)
        w = _as_weights(self.weights)
        if len(syms) != w.size:
            raise ArgumentError("one weight per symbol is required")
        vals = np.array(self.values, dtype=complex)
        if any(d != len(syms) for d in vals.shape):
            raise ArgumentError(f"value tensor shape {vals.shape} does not match |Σ|={len(syms)}")
        if not np.all(np.isfinite(vals)):
            raise ArgumentError("function values must be finite")
        vals.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "symbols", syms)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def k(self) -> int:
        return len(self.symbols)

    def with_values(self, values) -> "TensorFunction":
        return TensorFunction(self.symbols, self.weights, values)

    def same_space(self, other: "TensorFunction") -> bool:
        return (self.symbols == other.symbols and self.n == other.n
                and np.allclose(self.weights, other.weights, rtol=0, atol=_MEASURE_TOL))

    def __call__(self, *xs):
        return complex(self.values[tuple(self.symbols.index(s) for s in xs)])

    def __add__(self, other: "TensorFunction") -> "TensorFunction":
        _require_same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "TensorFunction") -> "TensorFunction":
        _require_same(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "TensorFunction":
        if isinstance(c, TensorFunction):
            _require_same(self, c)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def conj(self) -> "TensorFunction":
        return self.with_values(np.conj(self.values))

    def mean(self) -> complex:
        return complex(np.sum(product_weights(self.weights, self.n) * self.values))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def to_json(self) -> dict:
        flat = self.values.reshape(-1)
        return {
            "domain": {"symbols": [_symbol_to_json(s) for s in self.symbols],
                       "weights": [float(v) for v in self.weights], "n": self.n},
            "values": [[float(v.real), float(v.imag)] for v in flat],
        }

    @classmethod
    def from_json(cls, doc) -> "TensorFunction":
        try:
            dom = doc["domain"]
            syms = tuple(_symbol_from_json(s) for s in dom["symbols"])
            n = int(dom["n"])
            vals = np.array([complex(re, im) for re, im in doc["values"]], dtype=complex)
        except (KeyError, TypeError, ValueError) as exc:
            raise ArgumentError(f"malformed function document: {exc}") from None
        if vals.size != len(syms) ** n:
            raise ArgumentError("value count does not match the domain")
        return cls(syms, dom["weights"], vals.reshape((len(syms),) * n))

    # constructors --------------------------------------------------------
    @classmethod
    def constant(cls, symbols, weights, n: int, c=1.0) -> "TensorFunction":
        return cls(symbols, weights, np.full((len(symbols),) * n, c, dtype=complex))

    @classmethod
    def product(cls, symbols, weights, factors: Sequence) -> "TensorFunction":
        """⊗ of univariate vectors, one per coordinate."""
        out = np.ones((), dtype=complex)
        for u in factors:
            out = np.multiply.outer(out, np.asarray(u, dtype=complex))
        return cls(symbols, weights, out)

    @classmethod
    def random(cls, symbols, weights, n: int, rng: np.random.Generator,
               bounded: bool = True) -> "TensorFunction":
        """Random f; ``bounded`` gives |f| ≤ 1, otherwise complex Gaussian entries."""
        shape = (len(symbols),) * n
        if bounded:
            vals = rng.random(shape) * np.exp(2j * np.pi * rng.random(shape))
        else:
            vals = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return cls(symbols, weights, vals)


def _require_same(f: TensorFunction, g: TensorFunction) -> None:
    if not f.same_space(g):
        raise ArgumentError("functions live on different product spaces")


def inner_product(f: TensorFunction, g: TensorFunction) -> complex:
    """E_{x∼μ^{⊗n}}[f(x)·conj(g(x))]."""
    _require_same(f, g)
    return complex(np.sum(product_weights(f.weights, f.n) * f.values * np.conj(g.values)))


def norm2(f: TensorFunction) -> float:
    return math.sqrt(max(inner_product(f, f).real, 0.0))


# ---------------------------------------------------------------------------
# Efron–Stein
# ---------------------------------------------------------------------------

def _subsets(n: int) -> list:
    return [S for r in range(n + 1) for S in itertools.combinations(range(n), r)]


def conditional_expectation(f: TensorFunction, keep) -> TensorFunction:
    """E[f | x_keep], returned as a function on Σⁿ (constant along the other axes)."""
    keep = set(keep)
    avg = np.outer(np.ones(f.k), f.weights)
    mats = [None if i in keep else avg for i in range(f.n)]
    return f.with_values(kernels.apply_axes(f.values, mats))


def efron_stein(f: TensorFunction) -> dict:
    """Map S ↦ f^{=S} (S a sorted tuple) via Möbius inversion of E[f | x_S]."""
    cond = {S: conditional_expectation(f, S).values for S in _subsets(f.n)}
    out = {}
    for S in cond:
        acc = np.zeros_like(f.values)
        for r in range(len(S) + 1):
            sign = (-1) ** (len(S) - r)
            for T in itertools.combinations(S, r):
                acc = acc + sign * cond[T]
        out[S] = f.with_values(acc)
    return out


def level_weights(f: TensorFunction) -> np.ndarray:
    """W_{=d}[f] = Σ_{|S|=d} ‖f^{=S}‖² for d = 0..n."""
    w = np.zeros(f.n + 1)
    for S, part in efron_stein(f).items():
        w[len(S)] += norm2(part) ** 2
    return w


def weight_up_to(f: TensorFunction, d) -> float:
    """W_{≤d}[f]; ``d`` may be any real (floored)."""
    if d < 0:
        return 0.0
    return float(level_weights(f)[: int(math.floor(d)) + 1].sum())


def degree_truncate(f: TensorFunction, d: int) -> TensorFunction:
    """f^{≤d} = Σ_{|S|≤d} f^{=S}."""
    acc = np.zeros_like(f.values)
    for S, part in efron_stein(f).items():
        if len(S) <= d:
            acc = acc + part.values
    return f.with_values(acc)


# ---------------------------------------------------------------------------
# the split basis
# ---------------------------------------------------------------------------

EMBED, NONEMBED, MODEST = "embed", "nonembed", "modest"


@dataclass(frozen=True, eq=False)
class BasisElement:
    values: np.ndarray
    tag: str
    character: Character | None = None   # pivot character for embed elements

    def label(self) -> str:
        if self.tag == EMBED:
            return "embed(" + ",".join(map(str, self.character.exponents)) + ")"
        return self.tag


@dataclass(frozen=True, eq=False)
class SplitBasis:
    """Orthonormal basis of L₂(Σ; μ_x) split as B_embed ∪ B_nonembed ∪ B_modest."""

    symbols: tuple
    weights: np.ndarray
    elements: tuple
    sigma: GroupMap
    modest: tuple | None = None

    @property
    def matrix(self) -> np.ndarray:
        """Rows are basis elements evaluated in symbol order."""
        return np.array([e.values for e in self.elements], dtype=complex).reshape(len(self.elements), len(self.symbols))

    @property
    def tags(self) -> tuple:
        return tuple(e.tag for e in self.elements)

    def indices(self, tag: str) -> list:
        return [i for i, e in enumerate(self.elements) if e.tag == tag]

    def counts(self) -> dict:
        return {t: len(self.indices(t)) for t in (EMBED, NONEMBED, MODEST)}

    def gram(self) -> np.ndarray:
        B = self.matrix
        return (B * self.weights) @ B.conj().T

    def embed_projector(self) -> np.ndarray:
        """Matrix P (acting on value vectors) of the μ-orthogonal projection onto Embed_σ."""
        E = self.matrix[self.indices(EMBED)]
        return E.T @ (E.conj() * self.weights)

    def to_json(self) -> dict:
        return {
            "symbols": [_symbol_to_json(s) for s in self.symbols],
            "weights": [float(v) for v in self.weights],
            "elements": [{"tag": e.label(),
                          "values": [[float(v.real), float(v.imag)] for v in e.values]}
                         for e in self.elements],
            "modest": None if self.modest is None else [_symbol_to_json(s) for s in self.modest],
        }


def _gram_schmidt(candidates, w: np.ndarray, basis: list) -> list:
    """Pivoted Gram–Schmidt: append each candidate whose residual survives ``TOL_RANK``.

    Returns the positions (in ``candidates``) that were kept.
    """
    kept = []
    for pos, v in enumerate(candidates):
        r = np.array(v, dtype=complex)
        for _ in range(2):  # reorthogonalize once for stability
            for b in basis:
                r = r - np.sum(w * r * np.conj(b)) * b
        nrm = math.sqrt(max(float(np.sum(w * np.abs(r) ** 2)), 0.0))
        if nrm > TOL_RANK:
            basis.append(r / nrm)
            kept.append(pos)
    return kept


def build_split_basis(measure: Mapping, sigma: GroupMap, modest=None) -> SplitBasis:
    """Orthonormal split basis for L₂(Σ; μ_x).

    ``measure`` maps each symbol of Σ (in alphabet order) to its positive mass.
    Pivot order: χ∘σ in character order, then the constant-on-Σ_modest
    complement (symbol indicators, with the modest block entered once as its
    indicator at the first modest symbol), then single modest indicators.
    """
    symbols = tuple(measure)
    w = _as_weights(measure.values())
    if np.any(w <= 0):
        raise ArgumentError("split basis needs a measure with full support")
    missing = [s for s in symbols if s not in sigma.values]
    if missing:
        raise ArgumentError(f"σ is undefined on {missing!r}")
    mset = None
    if modest is not None:
        mset = tuple(s for s in symbols if s in set(modest))
        if len(mset) != len(set(modest)):
            raise ArgumentError("Σ_modest must be a subset of Σ")
        if len(mset) < 2:
            raise ArgumentError("Σ_modest needs at least two symbols")
        if len({sigma(s) for s in mset}) != 1:
            raise ArgumentError("Σ_modest spans several σ-values")

    basis: list = []
    elements: list = []
    chars = all_characters(sigma.group)
    cand = [np.array([c(sigma(s)) for s in symbols], dtype=complex) for c in chars]
    for pos in _gram_schmidt(cand, w, basis):
        elements.append(BasisElement(basis[len(elements)], EMBED, chars[pos]))

    k = len(symbols)
    eye = np.eye(k, dtype=complex)
    if mset is None:
        comp = [eye[i] for i in range(k)]
    else:
        mind = np.array([s in mset for s in symbols], dtype=complex)
        comp = []
        for i, s in enumerate(symbols):
            if s not in mset:
                comp.append(eye[i])
            elif s == mset[0]:
                comp.append(mind)
    for _ in _gram_schmidt(comp, w, basis):
        elements.append(BasisElement(basis[len(elements)], NONEMBED))
    if mset is not None:
        rest = [eye[symbols.index(s)] for s in mset]
        for _ in _gram_schmidt(rest, w, basis):
            elements.append(BasisElement(basis[len(elements)], MODEST))
    if len(elements) != k:
        raise InvariantViolation(f"split basis has {len(elements)} elements for |Σ|={k}")
    for e in elements:
        e.values.setflags(write=False)
    return SplitBasis(symbols, w, tuple(elements), sigma, mset)


def split_basis_for(dist: TripleDistribution, sigma: GroupMap, modest=None) -> SplitBasis:
    """Split basis on the x-marginal of ``dist`` (zero-mass symbols dropped)."""
    mu = {s: p for s, p in univariate(dist, "x").items() if p > 0}
    return build_split_basis(mu, GroupMap(sigma.group, {s: sigma(s) for s in mu}), modest)


# ---------------------------------------------------------------------------
# monomials and coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Monomial:
    index: tuple
    embeddeg_by_character: tuple   # ((exponents, count), ...) in character order
    embeddeg: int
    nedeg: int
    effnon: int

    @property
    def n(self) -> int:
        return len(self.index)


def monomial(basis: SplitBasis, index: Sequence[int]) -> Monomial:
    index = tuple(int(i) for i in index)
    per: dict = {}
    for i in index:
        e = basis.elements[i]
        if e.tag == EMBED:
            per[e.character.exponents] = per.get(e.character.exponents, 0) + 1
    order = [e.character.exponents for e in basis.elements if e.tag == EMBED]
    emb = sum(per.values())
    eff = sum(1 for i in index if basis.elements[i].tag == MODEST)
    return Monomial(index, tuple((c, per.get(c, 0)) for c in order), emb, len(index) - emb, eff)


def monomial_function(basis: SplitBasis, index: Sequence[int]) -> TensorFunction:
    return TensorFunction.product(basis.symbols, basis.weights,
                                  [basis.elements[i].values for i in index])


def _check_basis_space(basis: SplitBasis, f: TensorFunction) -> None:
    if basis.symbols != f.symbols or not np.allclose(basis.weights, f.weights, rtol=0, atol=_MEASURE_TOL):
        raise ArgumentError("basis and function use different measures")


def coefficients(f: TensorFunction, basis: SplitBasis) -> np.ndarray:
    """f̂(χ) = ⟨f, χ⟩ for every monomial χ, as a tensor indexed by basis positions."""
    _check_basis_space(basis, f)
    M = basis.matrix.conj() * basis.weights
    return kernels.apply_axes(f.values, [M] * f.n)


def synthesize(coeffs: np.ndarray, basis: SplitBasis) -> TensorFunction:
    """Σ_χ c(χ)·χ."""
    coeffs = np.asarray(coeffs, dtype=complex)
    return TensorFunction(basis.symbols, basis.weights,
                          kernels.apply_axes(coeffs, [basis.matrix.T] * coeffs.ndim))


def count_grid(flags: Sequence[bool], n: int) -> np.ndarray:
    """Tensor whose entry at (i₁..iₙ) counts the coordinates j with flags[i_j]."""
    v = np.asarray(flags, dtype=np.int64)
    out = np.zeros((), dtype=np.int64)
    for _ in range(n):
        out = np.add.outer(out, v)
    return out


def degree_grids(basis: SplitBasis, n: int) -> dict:
    """nedeg / embeddeg / effnon tensors over the monomial index grid."""
    tags = basis.tags
    return {
        "embeddeg": count_grid([t == EMBED for t in tags], n),
        "nedeg": count_grid([t != EMBED for t in tags], n),
        "effnon": count_grid([t == MODEST for t in tags], n),
        "degree": count_grid([i != 0 for i in range(len(tags))], n),
    }


def monomial_level_weights(f: TensorFunction, basis: SplitBasis) -> np.ndarray:
    """Weight per standard degree from the basis expansion.

    The first basis element is the constant function, so a monomial's degree
    is its number of non-constant factors.
    """
    c = np.abs(coefficients(f, basis)) ** 2
    deg = degree_grids(basis, f.n)["degree"]
    return np.bincount(deg.reshape(-1), weights=c.reshape(-1), minlength=f.n + 1)


# ---------------------------------------------------------------------------
# noise operators
# ---------------------------------------------------------------------------

STANDARD, NONEMBED_NOISE, EFFECTIVE = "standard", "nonembed", "effective"


def fiber_resample_matrix(w: np.ndarray, blocks: Sequence[Sequence[int]]) -> np.ndarray:
    """K[x,x′] = μ(x′)/μ(block(x)) when x, x′ share a block."""
    k = w.size
    K = np.zeros((k, k))
    for blk in blocks:
        blk = list(blk)
        mass = w[blk].sum()
        for a in blk:
            K[a, blk] = w[blk] / mass
    return K


def _sigma_blocks(symbols, sigma: GroupMap) -> list:
    blocks: dict = {}
    for i, s in enumerate(symbols):
        blocks.setdefault(sigma(s), []).append(i)
    return list(blocks.values())


def modest_matrix(basis: SplitBasis) -> np.ndarray:
    """The modest chain: stay outside Σ_modest, resample by μ inside it."""
    if basis.modest is None:
        raise PreconditionError("the modest chain needs a Σ_modest-equipped basis")
    idx = [basis.symbols.index(s) for s in basis.modest]
    blocks = [idx] + [[i] for i in range(len(basis.symbols)) if i not in idx]
    return fiber_resample_matrix(basis.weights, blocks)


@dataclass(frozen=True, eq=False)
class NoiseOperatorSpec:
    """A single-coordinate averaging operator (Tf)(x) = Σ_{x′} K[x,x′] f(x′), tensorized.

    ``rate`` is the retention parameter: ρ, 1−ξ or 1−δ depending on ``kind``.
    """

    kind: str
    rate: float
    weights: np.ndarray
    matrix: np.ndarray
    symbols: tuple = field(default=())

    def __post_init__(self):
        check_reversible(self.matrix, self.weights)

    @classmethod
    def standard(cls, symbols, weights, rho: float) -> "NoiseOperatorSpec":
        _check_rate(rho)
        w = _as_weights(weights)
        K = rho * np.eye(w.size) + (1 - rho) * np.outer(np.ones(w.size), w)
        return cls(STANDARD, float(rho), w, K, tuple(symbols))

    @classmethod
    def nonembed(cls, basis: SplitBasis, rho: float) -> "NoiseOperatorSpec":
        """Stay with probability ρ, else resample inside the σ-fiber."""
        _check_rate(rho)
        F = fiber_resample_matrix(basis.weights, _sigma_blocks(basis.symbols, basis.sigma))
        K = rho * np.eye(len(basis.symbols)) + (1 - rho) * F
        return cls(NONEMBED_NOISE, float(rho), basis.weights, K, basis.symbols)

    @classmethod
    def effective(cls, basis: SplitBasis, rho: float) -> "NoiseOperatorSpec":
        """Stay with probability ρ, else take one step of the modest chain."""
        _check_rate(rho)
        K = rho * np.eye(len(basis.symbols)) + (1 - rho) * modest_matrix(basis)
        return cls(EFFECTIVE, float(rho), basis.weights, K, basis.symbols)


def _check_rate(rho) -> None:
    if not 0.0 <= float(rho) <= 1.0:
        raise ArgumentError(f"noise rate must lie in [0,1], got {rho}")


def check_reversible(K: np.ndarray, w: np.ndarray) -> None:
    """Raise unless K is stochastic with w stationary and reversible."""
    K = np.asarray(K, dtype=float)
    if K.shape != (w.size, w.size):
        raise ArgumentError("chain and measure sizes differ")
    if np.any(K < -TOL_EQ) or not np.allclose(K.sum(axis=1), 1.0, rtol=0, atol=TOL_EQ):
        raise ArgumentError("chain is not stochastic")
    if not np.allclose(w @ K, w, rtol=0, atol=TOL_EQ):
        raise ArgumentError("measure is not stationary for the chain")
    J = w[:, None] * K
    if not np.allclose(J, J.T, rtol=0, atol=TOL_EQ):
        raise ArgumentError("chain is not reversible with respect to the measure")


def noise_apply(spec: NoiseOperatorSpec, f: TensorFunction) -> TensorFunction:
    if not np.allclose(spec.weights, f.weights, rtol=0, atol=_MEASURE_TOL) or spec.weights.size != f.k:
        raise ArgumentError("operator and function use different measures")
    return f.with_values(kernels.apply_axes(f.values, [spec.matrix] * f.n))


def nestab(f: TensorFunction, rho: float, basis: SplitBasis) -> float:
    """⟨f, T_{non-embed,ρ}^{⊗n} f⟩."""
    return inner_product(f, noise_apply(NoiseOperatorSpec.nonembed(basis, rho), f)).real


def stab(f: TensorFunction, rho: float) -> float:
    """Standard noise stability ⟨f, T_ρ^{⊗n} f⟩."""
    return inner_product(f, noise_apply(NoiseOperatorSpec.standard(f.symbols, f.weights, rho), f)).real


def eigenvalue_grid(spec: NoiseOperatorSpec, basis: SplitBasis, n: int) -> np.ndarray:
    """Closed-form eigenvalue of every monomial under ``spec``."""
    g = degree_grids(basis, n)
    exp = {STANDARD: g["degree"], NONEMBED_NOISE: g["nedeg"], EFFECTIVE: g["effnon"]}[spec.kind]
    return spec.rate ** exp.astype(float)


# ---------------------------------------------------------------------------
# influences
# ---------------------------------------------------------------------------

INFLUENCE_KINDS = (NONEMBED, MODEST)


def _influence_chain(basis: SplitBasis, kind: str) -> np.ndarray:
    if kind == NONEMBED:
        return fiber_resample_matrix(basis.weights, _sigma_blocks(basis.symbols, basis.sigma))
    if kind == MODEST:
        return modest_matrix(basis)
    raise ArgumentError(f"unknown influence kind {kind!r}")


def influence_by_definition(f: TensorFunction, j: int, basis: SplitBasis, kind: str = NONEMBED) -> float:
    """E over x_{−j}∼μ, a∼μ, b∼K(a,·) of |f(x_{−j},a) − f(x_{−j},b)|².

    K resamples inside σ-fibers (``nonembed``) or runs the modest chain
    (``modest``).
    """
    _check_basis_space(basis, f)
    if not 0 <= j < f.n:
        raise ArgumentError(f"coordinate {j} out of range")
    K = _influence_chain(basis, kind)
    joint = basis.weights[:, None] * K
    F = np.moveaxis(f.values, j, -1)
    rest = product_weights(f.weights, f.n - 1)
    diff = np.abs(F[..., :, None] - F[..., None, :]) ** 2
    return float(np.sum(rest[..., None, None] * joint * diff))


def influence(f: TensorFunction, j: int, basis: SplitBasis, kind: str = NONEMBED) -> float:
    """Coefficient formula: 2·Σ over monomials whose j-th factor is non-embed (resp. modest)."""
    if kind not in INFLUENCE_KINDS:
        raise ArgumentError(f"unknown influence kind {kind!r}")
    if kind == MODEST and basis.modest is None:
        raise PreconditionError("modest influence needs a Σ_modest-equipped basis")
    if not 0 <= j < f.n:
        raise ArgumentError(f"coordinate {j} out of range")
    c = np.abs(coefficients(f, basis)) ** 2
    flags = np.array([t != EMBED if kind == NONEMBED else t == MODEST for t in basis.tags])
    return 2.0 * float(np.sum(np.moveaxis(c, j, 0)[flags]))


def total_influence(f: TensorFunction, basis: SplitBasis, kind: str = NONEMBED) -> float:
    """2·Σ_χ deg(χ)|f̂(χ)|² with deg = nedeg or effnon."""
    if kind not in INFLUENCE_KINDS:
        raise ArgumentError(f"unknown influence kind {kind!r}")
    if kind == MODEST and basis.modest is None:
        raise PreconditionError("modest influence needs a Σ_modest-equipped basis")
    c = np.abs(coefficients(f, basis)) ** 2
    g = degree_grids(basis, f.n)["nedeg" if kind == NONEMBED else "effnon"]
    return 2.0 * float(np.sum(g * c))


# ---------------------------------------------------------------------------
# restrictions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitMode:
    """μ = ρ·ν + (1−ρ)·ν′: live coordinates use ν, fixed ones are drawn from ν′."""

    rho: Fraction
    nu: tuple
    nu_prime: tuple

    @classmethod
    def from_mixture(cls, mu: Sequence, rho, nu: Sequence) -> "SplitMode":
        keys = list(range(len(mu)))
        nup = mixture_split(dict(zip(keys, mu)), rho, dict(zip(keys, nu)))
        return cls(Fraction(rho), tuple(Fraction(v) for v in nu), tuple(nup[k] for k in keys))

    def check(self, weights: np.ndarray) -> None:
        mix = [float(self.rho * a + (1 - self.rho) * b) for a, b in zip(self.nu, self.nu_prime)]
        if len(mix) != weights.size or not np.allclose(mix, weights, rtol=0, atol=_MEASURE_TOL):
            raise ArgumentError("split mode does not decompose the function's measure")


def restrict(f: TensorFunction, live: Sequence[int], z: Sequence[int],
             mode: SplitMode | None = None) -> TensorFunction:
    """f_{Ī→z} on Σ^I.  ``z`` lists symbol indices for the fixed coordinates in increasing order.

    The result carries μ (``mode`` None) or ν (split mode) as its measure.
    """
    live = tuple(sorted(int(i) for i in live))
    if len(set(live)) != len(live) or any(not 0 <= i < f.n for i in live):
        raise ArgumentError("invalid live coordinate set")
    fixed = [i for i in range(f.n) if i not in live]
    if len(z) != len(fixed):
        raise ArgumentError(f"need {len(fixed)} fixed values, got {len(z)}")
    index = [slice(None)] * f.n
    for i, v in zip(fixed, z):
        if not 0 <= int(v) < f.k:
            raise ArgumentError(f"fixed value {v} out of range")
        index[i] = int(v)
    weights = f.weights
    if mode is not None:
        mode.check(f.weights)
        weights = np.array([float(v) for v in mode.nu])
    return TensorFunction(f.symbols, weights, f.values[tuple(index)])


def restriction_law(n: int, rho: float, fixed_weights: np.ndarray) -> Iterator[tuple]:
    """Exact law of (I, z): each coordinate live with probability ρ, z ∼ fixed_weights^{Ī}.

    Yields ``(probability, live, z)``; zero-probability outcomes are skipped.
    """
    fw = np.asarray(fixed_weights, dtype=float)
    for live in _subsets(n):
        p_live = rho ** len(live) * (1 - rho) ** (n - len(live))
        if p_live == 0:
            continue
        m = n - len(live)
        for z in itertools.product(range(fw.size), repeat=m):
            p = p_live * float(np.prod(fw[list(z)])) if m else p_live
            if p > 0:
                yield p, live, z


def sample_restriction(n: int, rho: float, fixed_weights, rng: np.random.Generator) -> tuple:
    """Draw (I, z) with I ⊆_ρ [n] and z from ``fixed_weights`` on the complement."""
    live = tuple(int(i) for i in np.flatnonzero(rng.random(n) < rho))
    m = n - len(live)
    fw = np.asarray(fixed_weights, dtype=float)
    z = tuple(int(v) for v in rng.choice(fw.size, size=m, p=fw / fw.sum())) if m else ()
    return live, z


# ---------------------------------------------------------------------------
# Markov chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarkovSpectrum:
    eigenvalues: tuple      # descending
    components: int

    @property
    def lambda2(self) -> float:
        """Largest |λ| outside the top ``components`` unit eigenvalues (0 if none)."""
        rest = self.eigenvalues[self.components:]
        return max((abs(v) for v in rest), default=0.0)


def markov_spectrum(K, weights) -> MarkovSpectrum:
    w = _as_weights(weights)
    if np.any(w <= 0):
        raise ArgumentError("spectrum needs a measure with full support")
    K = np.asarray(K, dtype=float)
    check_reversible(K, w)
    d = np.sqrt(w)
    S = (d[:, None] * K) / d[None, :]
    S = (S + S.T) / 2
    ev = np.sort(np.linalg.eigvalsh(S))[::-1]
    adj = coo_matrix((K > TOL_EQ).astype(float))
    ncomp, _ = connected_components(adj, directed=False)
    return MarkovSpectrum(tuple(float(v) for v in ev), int(ncomp))


# ---------------------------------------------------------------------------
# the W wrap
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PairGrid:
    """Γ×Φ flattened as index y·|Φ|+z, with μ_{y,z} and the forced x per pair."""

    pairs: tuple
    weights: np.ndarray
    forced: np.ndarray         # x-index per pair, −1 off the support
    x_symbols: tuple
    x_weights: np.ndarray


def pair_grid(dist: TripleDistribution) -> PairGrid:
    if not implies_third(dist, "yz"):
        raise PreconditionError("(y, z) must determine x on the support")
    X, G, P = dist.alphabets
    mu_x = univariate(dist, "x")
    xs = tuple(s for s in X if mu_x[s] > 0)
    pairs = tuple((y, z) for y in G for z in P)
    pos = {p: i for i, p in enumerate(pairs)}
    w = np.zeros(len(pairs))
    forced = np.full(len(pairs), -1, dtype=np.int64)
    for (x, y, z), p in dist.atoms.items():
        w[pos[(y, z)]] += float(p)
        forced[pos[(y, z)]] = xs.index(x)
    return PairGrid(pairs, w, forced, xs, np.array([float(mu_x[s]) for s in xs]))


def _check_x_space(f: TensorFunction, grid: PairGrid) -> None:
    if f.symbols != grid.x_symbols or not np.allclose(f.weights, grid.x_weights, rtol=0, atol=_MEASURE_TOL):
        raise ArgumentError("function must live on the x-marginal of the distribution")


def wrap_W(f: TensorFunction, dist: TripleDistribution) -> TensorFunction:
    """W f(y,z) = f(x forced by (y,z)); zero off the support."""
    grid = pair_grid(dist)
    _check_x_space(f, grid)
    idx = np.where(grid.forced >= 0, grid.forced, 0)
    vals = f.values[np.ix_(*([idx] * f.n))] if f.n else f.values
    mask = product_weights((grid.forced >= 0).astype(float), f.n)
    return TensorFunction(grid.pairs, grid.weights, vals * mask)


def unwrap_W(F: TensorFunction, dist: TripleDistribution) -> TensorFunction:
    """Inverse of :func:`wrap_W`; F must be constant on the forced-x fibers."""
    grid = pair_grid(dist)
    if F.symbols != grid.pairs:
        raise ArgumentError("F must live on the (y, z) pair grid of the distribution")
    rep = np.array([int(np.flatnonzero(grid.forced == i)[0]) for i in range(len(grid.x_symbols))],
                   dtype=np.int64)
    vals = F.values[np.ix_(*([rep] * F.n))] if F.n else F.values
    f = TensorFunction(grid.x_symbols, grid.x_weights, vals)
    back = wrap_W(f, dist)
    mask = product_weights((grid.forced >= 0).astype(float), F.n)
    if np.max(np.abs((back.values - F.values) * mask), initial=0.0) > TOL_EQ:
        raise ArgumentError("F is not constant on the connected components of the pair graph")
    return f


# ---------------------------------------------------------------------------
# numeric checks of the analytic facts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    holds: bool
    detail: Mapping = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "holds": self.holds,
                "detail": dict(self.detail)}


def comparison_constant(nu1, nu2, beta: float, xi: float, blocks) -> tuple:
    """(η*, c) for restriction-vs-noise comparison.

    The per-coordinate chain J (stay with ν₂ w.p. 1−β, else draw from ν₁ and
    take one T_{1−ξ,ν₁} step) agrees with the identity on block-constant
    functions; η* = 1 − λ_max(J on their μ-orthogonal complement) is the
    largest η with J ≤ (1−η)I + η·P_blocks, and c = η*/(βξ).
    """
    nu1 = np.asarray(nu1, float)
    nu2 = np.asarray(nu2, float)
    mu = beta * nu1 + (1 - beta) * nu2
    Kv = (1 - xi) * np.eye(mu.size) + xi * fiber_resample_matrix(nu1, blocks)
    joint = (1 - beta) * np.diag(nu2) + beta * nu1[:, None] * Kv
    d = np.sqrt(mu)
    S = joint / np.outer(d, d)
    S = (S + S.T) / 2
    # orthonormal basis (in the d-scaled picture) of block-constant functions
    V = np.zeros((mu.size, len(blocks)))
    for c, blk in enumerate(blocks):
        V[list(blk), c] = d[list(blk)]
        V[:, c] /= np.linalg.norm(V[:, c])
    Q = np.eye(mu.size) - V @ V.T
    comp = Q @ S @ Q
    ev = np.linalg.eigvalsh((comp + comp.T) / 2)
    dim = mu.size - len(blocks)
    lam = float(np.sort(ev)[::-1][0]) if dim > 0 else 0.0
    eta = 1.0 - lam
    return eta, eta / (beta * xi)


def op_comparison_check(f: TensorFunction, nu1, nu2, beta: float, xi: float, blocks) -> InequalityCheck:
    """E_{I,z∼ν₂}⟨f_rest, T_{1−ξ,ν₁} f_rest⟩_{ν₁} ≤ ⟨f, T_{1−cβξ,μ} f⟩ by exact enumeration."""
    nu1 = np.asarray(nu1, float)
    nu2 = np.asarray(nu2, float)
    mu = beta * nu1 + (1 - beta) * nu2
    if not np.allclose(mu, f.weights, rtol=0, atol=_MEASURE_TOL):
        raise ArgumentError("β·ν₁ + (1−β)·ν₂ must equal the function's measure")
    Kv = (1 - xi) * np.eye(mu.size) + xi * fiber_resample_matrix(nu1, blocks)
    lhs = 0.0
    for p, live, z in restriction_law(f.n, beta, nu2):
        g = TensorFunction(f.symbols, nu1, restrict(f, live, z).values)
        lhs += p * inner_product(g, g.with_values(kernels.apply_axes(g.values, [Kv] * g.n))).real
    eta, c = comparison_constant(nu1, nu2, beta, xi, blocks)
    T = (1 - eta) * np.eye(mu.size) + eta * fiber_resample_matrix(mu, blocks)
    rhs = inner_product(f, f.with_values(kernels.apply_axes(f.values, [T] * f.n))).real
    return InequalityCheck("op_comparison", lhs, rhs, lhs <= rhs + TOL_SLACK,
                           {"eta": eta, "c": c, "beta": beta, "xi": xi})


def noticeable_to_lowdegwt_check(f: TensorFunction, g: TensorFunction, K) -> InequalityCheck:
    """For ε = |⟨f, T^{⊗n} g⟩| and d least with λ₂^{d+1} ≤ ε/2: W_{≤d}[f] ≥ ε²/4."""
    _require_same(f, g)
    if max(f.sup_norm(), g.sup_norm()) > 1 + TOL_EQ:
        raise PreconditionError("functions must be 1-bounded")
    spec = markov_spectrum(K, f.weights)
    if spec.components != 1:
        raise PreconditionError("the chain must be connected")
    Tg = g.with_values(kernels.apply_axes(g.values, [np.asarray(K, float)] * g.n))
    eps = abs(inner_product(f, Tg))
    lam = spec.lambda2
    if eps <= 0:
        return InequalityCheck("noticeable_to_lowdegwt", 0.0, 0.0, True, {"vacuous": True})
    d = 0
    while lam ** (d + 1) > eps / 2 and d < f.n:
        d += 1
    w = weight_up_to(f, d)
    return InequalityCheck("noticeable_to_lowdegwt", w, eps ** 2 / 4, w >= eps ** 2 / 4 - TOL_SLACK,
                           {"eps": eps, "d": d, "lambda2": lam})


def stability_to_weight_check(f: TensorFunction, eps: float) -> InequalityCheck:
    """For ‖f‖ ≤ 1 and δ = Stab_{1−ε}(f): W_{≤2log(1/δ)/ε}[f] ≥ δ/2."""
    if norm2(f) > 1 + TOL_EQ:
        raise PreconditionError("f must have 2-norm at most 1")
    delta = stab(f, 1 - eps)
    if delta <= 0:
        return InequalityCheck("stability_to_weight", 0.0, 0.0, True, {"vacuous": True})
    d = 2 * math.log(1 / delta) / eps if delta < 1 else 0.0
    w = weight_up_to(f, d)
    return InequalityCheck("stability_to_weight", w, delta / 2, w >= delta / 2 - TOL_SLACK,
                           {"delta": delta, "eps": eps, "d": d})


def rest_to_correlation_check(F: TensorFunction, d: int) -> InequalityCheck:
    """Live w.p. 1/(2d), rest from μ: P(|E F_rest| ≥ √(W/2e)) ≥ W/2e with W = W_{≤d}[F]."""
    if d < 1:
        raise ArgumentError("d must be at least 1")
    if F.sup_norm() > 1 + TOL_EQ:
        raise PreconditionError("F must be 1-bounded")
    W = weight_up_to(F, d)
    thr = math.sqrt(W / (2 * math.e))
    prob = 0.0
    second = 0.0
    for p, live, z in restriction_law(F.n, 1 / (2 * d), F.weights):
        v = abs(restrict(F, live, z).mean())
        second += p * v * v
        if v >= thr - TOL_EQ:
            prob += p
    return InequalityCheck("rest_to_correlation", prob, W / (2 * math.e),
                           prob >= W / (2 * math.e) - TOL_SLACK,
                           {"d": d, "weight": W, "second_moment": second})


def nestab_monotone_check(f: TensorFunction, basis: SplitBasis, rhos: Sequence[float]) -> InequalityCheck:
    """NEStab_ρ(f) is nondecreasing along the sorted ``rhos``."""
    rhos = sorted(rhos)
    vals = [nestab(f, r, basis) for r in rhos]
    worst = min((b - a for a, b in zip(vals, vals[1:])), default=0.0)
    return InequalityCheck("nestab_monotone", worst, -TOL_EQ, worst >= -TOL_EQ,
                           {"rhos": list(rhos), "values": vals})
