"""Weighted L^p spaces on the grid and the covering sequence norms.

The solid spaces are L^p_w with norm (sum_x mu_x |F(x)|^p w(x)^p)^(1/p)
(weighted sup for p = inf). Sequences over a covering are measured through
their pile-up functions: the flat norm piles |lambda_i| on chi_{U_i}, the
natural norm first divides by mu(U_i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coverings import Covering, weight_compatibility
from .errors import StructuralError
from .kernels import DiscreteMeasure, Weight2D
from .quadrature import QuadratureSpace


@dataclass(frozen=True, eq=False)
class WeightedLp:
    """Solid weighted L^p space over a quadrature space."""

    space: QuadratureSpace
    p: float
    w: np.ndarray

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise StructuralError("exponent p must satisfy p >= 1")
        wv = np.asarray(self.w, dtype=float).reshape(-1)
        if wv.shape[0] != self.space.n_points:
            raise StructuralError("space weight length mismatch")
        if np.any(wv <= 0) or not np.all(np.isfinite(wv)):
            raise StructuralError("space weight must be positive and finite")
        wv.setflags(write=False)
        object.__setattr__(self, "w", wv)
        object.__setattr__(self, "p", float(self.p))

    @classmethod
    def lebesgue(cls, space: QuadratureSpace, p: float) -> "WeightedLp":
        return cls(space, p, np.ones(space.n_points))

    def norm(self, f) -> float:
        arr = self.space.check_function(f)
        vals = np.abs(arr) * self.w
        if np.isinf(self.p):
            return float(vals.max())
        return float(np.sum(self.space.weights * vals ** self.p) ** (1.0 / self.p))

    def weight2d(self, ref_index: int = 0) -> Weight2D:
        """Associated two-point weight max{w(x)/w(y), w(y)/w(x)}."""
        return Weight2D.from_pointwise(self.space, self.w, ref_index)

    def holder_l1_constant(self, subset) -> float:
        """Sharp constant of |chi_Q F|_{L^1} <= C |F|_{L^p_w} on a point subset."""
        idx = np.asarray(subset, dtype=int).reshape(-1)
        mu = self.space.weights[idx]
        winv = 1.0 / self.w[idx]
        if np.isinf(self.p):
            return float(np.sum(mu * winv))
        if self.p == 1.0:
            return float(np.max(winv))
        q = self.p / (self.p - 1.0)
        return float(np.sum(mu * winv ** q) ** (1.0 / q))


def sup_infinity_space(Y: WeightedLp, weight: Weight2D) -> WeightedLp:
    """The sup-normed space with weight 1/v, v the one-point trace of ``weight``."""
    return WeightedLp(Y.space, np.inf, 1.0 / weight.v)


def pileup(seq, cov: Covering, natural: bool = False) -> np.ndarray:
    """Grid function sum_i |lambda_i| chi_{U_i} (divided by mu(U_i) if natural)."""
    lam = np.abs(np.asarray(seq, dtype=complex).reshape(-1))
    if lam.shape[0] != cov.n_sets:
        raise StructuralError("sequence length must equal number of covering sets")
    coef = lam / cov.measures if natural else lam
    return coef @ cov.membership.astype(float)


def norm_flat(seq, cov: Covering, Y: WeightedLp) -> float:
    """Pile-up norm |sum_i |lambda_i| chi_{U_i}|_Y."""
    return Y.norm(pileup(seq, cov, natural=False))


def norm_natural(seq, cov: Covering, Y: WeightedLp) -> float:
    """Measure-normalized pile-up norm |sum_i |lambda_i| chi_{U_i}/mu(U_i)|_Y."""
    return Y.norm(pileup(seq, cov, natural=True))


def lp_sequence_norm(seq, weights, p: float) -> float:
    """Discrete weighted l^p norm of a sequence."""
    lam = np.abs(np.asarray(seq, dtype=complex).reshape(-1))
    wts = np.asarray(weights, dtype=float).reshape(-1)
    if lam.shape != wts.shape:
        raise StructuralError("sequence/weight length mismatch")
    if np.isinf(p):
        return float(np.max(lam * wts))
    return float(np.sum((lam * wts) ** p) ** (1.0 / p))


@dataclass(frozen=True, eq=False)
class SequenceNorms:
    """Per-set weights that turn the pile-up norms into plain weighted l^p norms.

    flat_weights     b(i) = mu(U_i)^(1/p)  * sup_{x in U_i} w(x)
    natural_weights  d(i) = mu(U_i)^(1/p-1)* sup_{x in U_i} w(x)
    sup_trace        r(i) = mu(U_i) * sup_{x in U_i} v(x)
    """

    covering: Covering
    Y: WeightedLp
    flat_weights: np.ndarray
    natural_weights: np.ndarray
    sup_trace: np.ndarray
    w_sup: np.ndarray
    v_sup: np.ndarray

    @classmethod
    def build(cls, cov: Covering, Y: WeightedLp, weight: Weight2D) -> "SequenceNorms":
        w_sup = np.array([Y.w[idx].max() for idx in cov.sets])
        v_sup = np.array([weight.v[idx].max() for idx in cov.sets])
        mu = cov.measures
        inv_p = 0.0 if np.isinf(Y.p) else 1.0 / Y.p
        b = mu ** inv_p * w_sup
        d = mu ** (inv_p - 1.0) * w_sup
        r = mu * v_sup
        return cls(cov, Y, b, d, r, w_sup, v_sup)


def flat_equivalence_interval(cov: Covering, weight: Weight2D) -> tuple:
    """[1/C_mU, N]: guaranteed range of norm_flat / weighted-l^p ratios."""
    c_mu = weight_compatibility(cov, weight)
    return 1.0 / c_mu, float(cov.overlap_bound)


def set_pair_kernel_norms(cov: Covering, weight: Weight2D, ref_set: int = 0) -> np.ndarray:
    """Schur norms of the rank-one set kernels chi_{U_k}(x) chi_{U_i}(y), k fixed.

    Computed directly from the definition (no dense kernels): the two Schur
    integrals of set i are sup_{x in U_k} sum_{y in U_i} mu_y m(x,y) and the
    transpose-side analogue.
    """
    mu = cov.space.weights
    k_idx = cov.sets[ref_set]
    out = np.empty(cov.n_sets)
    for i, idx in enumerate(cov.sets):
        block = weight.matrix[np.ix_(k_idx, idx)]
        row = float((block * mu[idx][None, :]).sum(axis=1).max())
        col = float((block * mu[k_idx][:, None]).sum(axis=0).max())
        out[i] = max(row, col)
    return out


@dataclass(frozen=True, eq=False)
class SupEmbeddingReport:
    """Coefficient bound |lambda_i| <= C r(i) |lambda|_natural, with evidence."""

    apriori_constant: float
    observed_constant: float
    per_set_constants: np.ndarray
    sup_trace: np.ndarray


def sup_embedding_report(cov: Covering, Y: WeightedLp, weight: Weight2D,
                         ref_set: int = 0, n_trials: int = 100,
                         seed: int = 0) -> SupEmbeddingReport:
    """Bound single coefficients by the natural norm, scaled by r(i).

    The a-priori constant comes from the set-pair kernels; the observed one
    is the worst ratio over basis sequences and ``n_trials`` random draws.
    """
    norms = SequenceNorms.build(cov, Y, weight)
    base = Y.norm(cov.membership[ref_set].astype(float))
    per_set = set_pair_kernel_norms(cov, weight, ref_set) / base
    apriori = float(np.max(per_set / norms.sup_trace))

    rng = np.random.default_rng(seed)
    observed = 0.0
    n = cov.n_sets
    probes = [np.eye(n)[j] for j in range(n)]
    for _ in range(n_trials):
        probes.append(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    for lam in probes:
        nat = norm_natural(lam, cov, Y)
        if nat == 0.0:
            continue
        ratios = np.abs(lam) / (norms.sup_trace * nat)
        observed = max(observed, float(ratios.max()))
    return SupEmbeddingReport(apriori, observed, per_set, norms.sup_trace)


def decomposition_norm(nu, cov: Covering, Y: WeightedLp) -> float:
    """Natural pile-up norm of the per-set masses of a measure or function.

    Measures contribute sum of |coefficients| of atoms inside U_i; grid
    functions contribute the integral of |F| over U_i.
    """
    if isinstance(nu, DiscreteMeasure):
        nu.check_on(cov.space)
        masses = nu.set_totals(cov.sets)
    else:
        arr = cov.space.check_function(nu)
        dens = np.abs(arr) * cov.space.weights
        masses = cov.membership.astype(float) @ dens
    return norm_natural(masses, cov, Y)


def local_integrability_constant(cov: Covering, Y: WeightedLp, weight: Weight2D,
                                 ref_set: int = 0) -> float:
    """A-priori constant C with |F|_{D(L^1, natural sup-space)} <= C |F|_Y.

    Chains the sharp local Hoelder embedding on the reference set with the
    set-pair kernel norms:
    |chi_{U_i} F|_{L^1} <= C_k mu(U_k)^{-1} |K_i| |F|_Y, then takes the
    weighted sup of the resulting pile-up against 1/v.
    """
    k_idx = cov.sets[ref_set]
    c_hold = Y.holder_l1_constant(k_idx)
    mu_k = cov.space.subset_measure(k_idx)
    kernel_norms = set_pair_kernel_norms(cov, weight, ref_set)
    coef = kernel_norms / cov.measures
    envelope = coef @ cov.membership.astype(float)
    return float(c_hold / mu_k * np.max(envelope / weight.v))
