"""Phase-corrected oscillation of the reproducing kernel over a covering.

For a covering with neighborhoods Q_y and a unimodular phase Gamma, the
oscillation kernel is

    osc(x, y) = max over z in Q_y of |R(x, y) - Gamma(y, z) R(x, z)|,

computed by exact enumeration. Its Schur norm against the target weight is
the budget that certifies invertibility of the sampling operator: with
sigma = max{C_mU |R|, |R| + delta}, the sufficient condition reads
delta (|R| + sigma) <= 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coverings import Covering, singleton_covering, uniform_covering, \
    weight_compatibility
from .errors import CertificationError, StructuralError
from .kernels import Weight2D, schur_norm
from .models import FrameModel
from .quadrature import QuadratureSpace


class PhaseFunction:
    """Unimodular table Gamma(y, z), stored dense.

    Built-in rules: ``one`` (the constant phase, recovering plain kernel
    oscillation) and ``kernel`` (the phase of R(z, y), which cancels the
    kernel's own rotation and typically shrinks the oscillation norm).
    Choosing the unimodular table that minimizes the oscillation norm is an
    open optimization problem; arbitrary tables can be supplied directly.
    """

    def __init__(self, space: QuadratureSpace, table, rule: str = "table"):
        tab = np.ascontiguousarray(np.asarray(table, dtype=complex))
        n = space.n_points
        if tab.shape != (n, n):
            raise StructuralError(f"phase table shape {tab.shape}, expected {(n, n)}")
        mod = np.abs(tab)
        if np.max(np.abs(mod - 1.0)) > 1e-14:
            raise StructuralError("phase values must have modulus one")
        tab.setflags(write=False)
        self.space = space
        self.table = tab
        self.rule = rule

    @classmethod
    def ones(cls, space: QuadratureSpace) -> "PhaseFunction":
        return cls(space, np.ones((space.n_points, space.n_points), dtype=complex),
                   rule="one")

    @classmethod
    def from_kernel(cls, model: FrameModel, eps: float = 1e-12) -> "PhaseFunction":
        """Gamma(y, z) = R(z, y)/|R(z, y)|, with phase 1 wherever |R| <= eps.

        The diagonal is exactly one: R(y, y) is a positive quadratic form.
        """
        r = model.kernel
        mag = np.abs(r)
        tab = np.where(mag > eps, r / np.where(mag > eps, mag, 1.0), 1.0)
        tab = tab.T.copy()
        np.fill_diagonal(tab, 1.0)
        return cls(model.space, tab, rule="kernel")


def make_phase(model: FrameModel, rule: str) -> PhaseFunction:
    if rule == "one":
        return PhaseFunction.ones(model.space)
    if rule == "kernel":
        return PhaseFunction.from_kernel(model)
    raise StructuralError(f"unknown phase rule {rule!r}")


def oscillation_kernel(model: FrameModel, cov: Covering,
                       gamma: PhaseFunction) -> np.ndarray:
    """Exact sup over the finite neighborhoods; nonnegative real kernel."""
    if cov.space is not model.space and cov.space.n_points != model.space.n_points:
        raise StructuralError("covering lives on a different space")
    r = model.kernel
    n = model.space.n_points
    out = np.empty((n, n))
    for y in range(n):
        zs = cov.q_neighborhood(y)
        diffs = np.abs(r[:, [y]] - r[:, zs] * gamma.table[y, zs][None, :])
        out[:, y] = diffs.max(axis=1)
    return out


def sigma_constant(delta: float, r_norm: float, c_mu: float) -> float:
    """sigma = max{C_mU |R|, |R| + delta}."""
    return max(c_mu * r_norm, r_norm + delta)


def invertibility_condition(delta: float, r_norm: float, c_mu: float) -> tuple:
    """LHS and truth of delta (|R| + max{C_mU |R|, |R| + delta}) <= 1."""
    lhs = delta * (r_norm + sigma_constant(delta, r_norm, c_mu))
    return lhs, bool(lhs <= 1.0)


@dataclass(frozen=True, eq=False)
class OscReport:
    """Snapshot of the oscillation budget for one covering/phase/weight."""

    osc: np.ndarray          # the oscillation kernel itself (not serialized)
    osc_norm: float
    delta: float
    sigma: float
    r_norm: float
    c_mu: float
    oscillation_ok: bool     # osc_norm < delta (strict)
    invertibility_ok: bool   # delta (r_norm + sigma) <= 1
    condition_lhs: float
    covering_id: str
    gamma_rule: str
    overlap_bound: int
    n_sets: int

    def to_json_dict(self) -> dict:
        return {
            "osc_norm": self.osc_norm,
            "delta": self.delta,
            "sigma": self.sigma,
            "R_norm": self.r_norm,
            "C_mU": self.c_mu,
            "holds_D": self.oscillation_ok,
            "holds_58": self.invertibility_ok,
            "condition_lhs": self.condition_lhs,
            "covering_id": self.covering_id,
            "gamma_rule": self.gamma_rule,
            "N": self.overlap_bound,
            "n_sets": self.n_sets,
        }


def oscillation_report(model: FrameModel, cov: Covering, gamma: PhaseFunction,
                       weight: Weight2D, delta: float) -> OscReport:
    """Evaluate the oscillation budget; reports, never raises on failure."""
    osc = oscillation_kernel(model, cov, gamma)
    osc_norm = schur_norm(model.space, osc, weight)
    r_norm = schur_norm(model.space, model.kernel, weight)
    c_mu = weight_compatibility(cov, weight)
    sigma = sigma_constant(delta, r_norm, c_mu)
    lhs, inv_ok = invertibility_condition(delta, r_norm, c_mu)
    return OscReport(
        osc=osc,
        osc_norm=float(osc_norm),
        delta=float(delta),
        sigma=float(sigma),
        r_norm=float(r_norm),
        c_mu=float(c_mu),
        oscillation_ok=bool(osc_norm < delta),
        invertibility_ok=inv_ok,
        condition_lhs=float(lhs),
        covering_id=cov.identifier(),
        gamma_rule=gamma.rule,
        overlap_bound=cov.overlap_bound,
        n_sets=cov.n_sets,
    )


def refine_until(model: FrameModel, weight: Weight2D, delta: float,
                 gamma_rule: str = "kernel", max_rounds: int = 12,
                 require_invertibility: bool = True,
                 overlap_ratio: float = 0.0) -> tuple:
    """Halve the covering width until the oscillation budget is met.

    Starts from a single box spanning the grid and halves the box width each
    round. Succeeds as soon as the oscillation norm is below ``delta`` and
    (when required) the invertibility condition holds; an all-singleton
    covering ends the search regardless, since its oscillation vanishes.
    Raises CertificationError when ``max_rounds`` is exhausted first.
    """
    if delta <= 0:
        raise StructuralError("delta must be positive")
    space = model.space
    gamma = make_phase(model, gamma_rule)
    spans = space.points.max(axis=0) - space.points.min(axis=0)
    width = np.where(spans > 0, spans, 1.0) * 1.0000001 + 1.0

    # Finest usable box width per axis; below it boxes can fall between points.
    spacing = np.full(space.dim, np.inf)
    for a in range(space.dim):
        coords = np.unique(space.points[:, a])
        if coords.size > 1:
            spacing[a] = np.diff(coords).min()

    last = None
    for _ in range(max_rounds):
        if np.all(width >= spacing):
            cov = uniform_covering(space, width, overlap_ratio * width)
        else:
            cov = singleton_covering(space)
        report = oscillation_report(model, cov, gamma, weight, delta)
        last = (cov, report)
        done = report.oscillation_ok and (
            not require_invertibility or report.invertibility_ok)
        singleton = all(s.size == 1 for s in cov.sets)
        if done or (singleton and report.oscillation_ok):
            return cov, report
        width = width / 2.0
    raise CertificationError(
        f"no covering met the oscillation budget within {max_rounds} rounds "
        f"(last osc_norm {last[1].osc_norm:.3e} vs delta {delta:.3e})"
    )
