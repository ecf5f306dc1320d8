"""Coverings of the point set, partitions of unity, and covering kernels.

A covering is a finite family of nonempty point-index subsets. Validation
computes the overlap bound N, the smallest set measure D, and the
moderateness constant C~ = max mu(U_i)/mu(U_j) over intersecting pairs,
all by exact enumeration.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import StructuralError
from .kernels import Weight2D
from .quadrature import QuadratureSpace


@dataclass(frozen=True, eq=False)
class Covering:
    """Indexed family of point subsets with precomputed overlap structure.

    Derived attributes (all exact):
      membership   bool (n_sets, n_points), membership[i, x] = x in U_i
      measures     mu(U_i)
      neighbors    lists i* = {j : U_i and U_j intersect} (i is in i*)
      overlap_bound      N  = max_j #(j*)
      min_measure        D  = min_i mu(U_i)
      moderateness       C~ = max mu(U_i)/mu(U_j) over intersecting pairs
      neighborhood pairs Q[y, z] = (z lies in some U_i containing y)
    """

    space: QuadratureSpace
    sets: tuple

    def __post_init__(self):
        n = self.space.n_points
        clean = []
        for s in self.sets:
            idx = np.unique(np.asarray(s, dtype=int).reshape(-1))
            if idx.size == 0:
                raise StructuralError("covering sets must be nonempty")
            if idx.min() < 0 or idx.max() >= n:
                raise StructuralError("covering set contains invalid point index")
            idx.setflags(write=False)
            clean.append(idx)
        if not clean:
            raise StructuralError("covering needs at least one set")
        object.__setattr__(self, "sets", tuple(clean))

        member = np.zeros((len(clean), n), dtype=bool)
        for i, idx in enumerate(clean):
            member[i, idx] = True
        member.setflags(write=False)
        object.__setattr__(self, "membership", member)

        measures = member @ self.space.weights
        measures.setflags(write=False)
        object.__setattr__(self, "measures", measures)

        # float matmuls hit BLAS; counts are exact well below 2^53
        memf = member.astype(np.float64)
        inter = (memf @ memf.T) > 0.5
        object.__setattr__(self, "_intersects", inter)
        object.__setattr__(self, "neighbors",
                           tuple(np.flatnonzero(inter[i]) for i in range(len(clean))))

        qmap = (memf.T @ memf) > 0.5
        qmap.setflags(write=False)
        object.__setattr__(self, "q_pairs", qmap)

    @property
    def n_sets(self) -> int:
        return len(self.sets)

    @property
    def cover_counts(self) -> np.ndarray:
        """Number of sets containing each point."""
        return np.asarray(self.membership.sum(axis=0))

    @property
    def covers_all(self) -> bool:
        return bool(np.all(self.cover_counts > 0))

    @property
    def overlap_bound(self) -> int:
        return int(max(len(nb) for nb in self.neighbors))

    @property
    def min_measure(self) -> float:
        return float(self.measures.min())

    @property
    def moderateness(self) -> float:
        ratio = self.measures[:, None] / self.measures[None, :]
        return float(np.max(np.where(self._intersects, ratio, 0.0)))

    def q_neighborhood(self, y: int) -> np.ndarray:
        """Indices z reachable from y through a common covering set."""
        return np.flatnonzero(self.q_pairs[y])

    def identifier(self) -> str:
        """Deterministic content hash used in reports."""
        payload = json.dumps([s.tolist() for s in self.sets]).encode()
        return hashlib.sha256(payload).hexdigest()[:12]


@dataclass(frozen=True, eq=False)
class CoveringReport:
    admissible: bool
    moderate: bool
    overlap_bound: int
    min_measure: float
    moderateness: float
    uncovered: tuple

    def to_json_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "moderate": self.moderate,
            "N": self.overlap_bound,
            "D": self.min_measure,
            "C_tilde": self.moderateness,
            "uncovered_points": list(self.uncovered),
        }


def validate_covering(cov: Covering) -> CoveringReport:
    """Exact enumeration of the covering constants.

    A family failing to cover every point is reported inadmissible rather
    than rejected; on a finite space an admissible covering is automatically
    moderate (D > 0 and C~ finite).
    """
    uncovered = tuple(int(x) for x in np.flatnonzero(cov.cover_counts == 0))
    admissible = len(uncovered) == 0
    moderate = admissible and cov.min_measure > 0 and np.isfinite(cov.moderateness)
    return CoveringReport(admissible, moderate, cov.overlap_bound,
                          cov.min_measure, cov.moderateness, uncovered)


def weight_compatibility(cov: Covering, weight: Weight2D) -> float:
    """Largest value of the two-point weight inside any single covering set."""
    best = 0.0
    for idx in cov.sets:
        best = max(best, float(weight.matrix[np.ix_(idx, idx)].max()))
    return best


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """Nonnegative functions phi_i <= 1 supported in U_i and summing to one."""

    covering: Covering
    phi: np.ndarray

    def __post_init__(self):
        cov = self.covering
        arr = np.asarray(self.phi, dtype=float)
        if arr.shape != cov.membership.shape:
            raise StructuralError("phi must be shaped (n_sets, n_points)")
        if np.any(arr < -1e-15) or np.any(arr > 1 + 1e-12):
            raise StructuralError("partition values must lie in [0, 1]")
        if np.any((~cov.membership) & (arr != 0.0)):
            raise StructuralError("phi_i must vanish outside U_i")
        total = arr.sum(axis=0)
        if np.max(np.abs(total - 1.0)) > 1e-12:
            raise StructuralError("partition functions must sum to one")
        arr.setflags(write=False)
        object.__setattr__(self, "phi", arr)

    @property
    def masses(self) -> np.ndarray:
        """c_i = integral of phi_i."""
        return self.phi @ self.covering.space.weights


def build_pou(cov: Covering, kind: str = "flat") -> PartitionOfUnity:
    """Partition of unity subordinate to a covering.

    flat   : equal sharing, phi_i(x) = 1/#{j : x in U_j} on U_i.
    smooth : Gaussian bump around each set's coordinate center, normalized.
    """
    counts = cov.cover_counts
    if np.any(counts == 0):
        raise StructuralError("cannot build a partition of unity: uncovered points")
    member = cov.membership.astype(float)
    if kind == "flat":
        phi = member / counts[None, :]
    elif kind == "smooth":
        pts = cov.space.points
        raw = np.zeros_like(member)
        for i, idx in enumerate(cov.sets):
            center = pts[idx].mean(axis=0)
            d2 = np.sum((pts[idx] - center) ** 2, axis=1)
            spread = max(float(d2.max()), 1e-12)
            raw[i, idx] = np.exp(-d2 / spread)
        phi = raw / raw.sum(axis=0)[None, :]
    else:
        raise StructuralError(f"unknown partition kind {kind!r}")
    return PartitionOfUnity(cov, phi)


@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    equivalent: bool
    measure_lower: float   # C_1: min mu(V_i)/mu(U_i)
    measure_upper: float   # C_2: max mu(V_i)/mu(U_i)
    cross_weight: float    # C': max over i of sup_{x in U_i, y in V_i} m(x,y)

    def to_json_dict(self) -> dict:
        return {
            "equivalent": self.equivalent,
            "C_1": self.measure_lower,
            "C_2": self.measure_upper,
            "C_prime": self.cross_weight,
        }


def check_m_equivalent(cov_u: Covering, cov_v: Covering,
                       weight: Weight2D) -> EquivalenceReport:
    """Measure-ratio and cross-weight constants linking two coverings.

    Requires identical index sets. On a finite space the constants are
    always finite, so the report mostly carries their magnitudes.
    """
    if cov_u.n_sets != cov_v.n_sets:
        raise StructuralError("coverings must share one index set")
    ratios = cov_v.measures / cov_u.measures
    cross = 0.0
    for ui, vi in zip(cov_u.sets, cov_v.sets):
        cross = max(cross, float(weight.matrix[np.ix_(ui, vi)].max()))
    c1, c2 = float(ratios.min()), float(ratios.max())
    ok = np.isfinite(c1) and np.isfinite(c2) and np.isfinite(cross) and c1 > 0
    return EquivalenceReport(bool(ok), c1, c2, cross)


def transfer_kernel(cov_u: Covering, cov_v: Covering) -> np.ndarray:
    """Kernel moving coefficient pile-ups over ``cov_v`` to pile-ups over ``cov_u``.

    L(x, y) = sum_j chi_{U_j}(x) chi_{V_j}(y) / mu(V_j).
    """
    if cov_u.n_sets != cov_v.n_sets:
        raise StructuralError("coverings must share one index set")
    mu = cov_u.membership.astype(float)
    mv = cov_v.membership.astype(float)
    return (mu.T @ (mv / cov_v.measures[:, None])).astype(complex)


def permutation_kernel(cov: Covering, pi) -> np.ndarray:
    """Kernel bounding the relabeling lambda -> lambda o pi on pile-up norms.

    K_pi(x, y) = sum_i chi_{U_{pi^{-1}(i)}}(x) chi_{U_i}(y) / mu(U_{pi^{-1}(i)}).
    ``pi`` must be a permutation of range(n_sets).
    """
    pi = np.asarray(pi, dtype=int)
    if sorted(pi.tolist()) != list(range(cov.n_sets)):
        raise StructuralError("pi must be a permutation of the covering index set")
    inv = np.empty_like(pi)
    inv[pi] = np.arange(cov.n_sets)
    member = cov.membership.astype(float)
    src = member[inv] / cov.measures[inv][:, None]   # row i: chi_{U_{pi^-1(i)}}/mu
    return (src.T @ member).astype(complex)


def is_admissible_permutation(cov: Covering, pi) -> bool:
    """True when pi(i) always lies in the neighbor set i*."""
    pi = np.asarray(pi, dtype=int)
    return all(cov._intersects[i, pi[i]] for i in range(cov.n_sets))


def random_admissible_permutation(cov: Covering, rng: np.random.Generator):
    """Random permutation with pi(i) in i*, or None if the greedy draw fails.

    The identity is always admissible, so callers can fall back to it.
    """
    n = cov.n_sets
    order = rng.permutation(n)
    taken = np.zeros(n, dtype=bool)
    pi = np.full(n, -1, dtype=int)
    for i in order:
        options = [j for j in cov.neighbors[i] if not taken[j]]
        if not options:
            return None
        j = options[rng.integers(len(options))]
        pi[i] = j
        taken[j] = True
    return pi


def neighbor_sums(cov: Covering, seq) -> np.ndarray:
    """lambda+_i = sum over j with U_j meeting U_i of lambda_j."""
    arr = np.asarray(seq, dtype=complex).reshape(-1)
    if arr.shape[0] != cov.n_sets:
        raise StructuralError("sequence length must equal number of sets")
    return cov._intersects.astype(float) @ arr


def singleton_covering(space: QuadratureSpace) -> Covering:
    """One singleton set per point, in point order."""
    return Covering(space, tuple(np.array([i]) for i in range(space.n_points)))


def uniform_covering(space: QuadratureSpace, width, overlap=0.0) -> Covering:
    """Sliding half-open coordinate boxes of the given width and overlap.

    Along every axis, windows [a, a + width) start at the axis minimum and
    advance by ``width - overlap`` while they still start at or below the
    axis maximum; sets are the box preimages on the grid. ``width`` and
    ``overlap`` may be scalars or per-axis sequences.
    """
    dim = space.dim
    widths = np.broadcast_to(np.asarray(width, dtype=float).reshape(-1), (dim,)) \
        if np.ndim(width) else np.full(dim, float(width))
    overlaps = np.broadcast_to(np.asarray(overlap, dtype=float).reshape(-1), (dim,)) \
        if np.ndim(overlap) else np.full(dim, float(overlap))
    if np.any(widths <= 0):
        raise StructuralError("width must be positive")
    if np.any(overlaps < 0) or np.any(overlaps >= widths):
        raise StructuralError("overlap must satisfy 0 <= overlap < width")

    tol = 1e-9
    axis_windows = []
    for a in range(dim):
        coords = space.points[:, a]
        lo, hi = float(coords.min()), float(coords.max())
        stride = widths[a] - overlaps[a]
        starts = []
        s = lo
        while s <= hi + tol:
            starts.append(s)
            s += stride
        masks = []
        for s in starts:
            masks.append((coords >= s - tol) & (coords < s + widths[a] - tol))
        axis_windows.append(masks)

    sets = []
    idx_grid = [range(len(m)) for m in axis_windows]
    for combo in itertools.product(*idx_grid):
        mask = np.ones(space.n_points, dtype=bool)
        for a, k in enumerate(combo):
            mask &= axis_windows[a][k]
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            raise StructuralError(
                "uniform covering produced an empty box; adjust width/overlap"
            )
        sets.append(idx)
    return Covering(space, tuple(sets))


def covering_to_json(cov: Covering) -> dict:
    return {"sets": [s.tolist() for s in cov.sets]}


def covering_from_json(space: QuadratureSpace, doc: dict) -> Covering:
    try:
        return Covering(space, tuple(np.asarray(s, dtype=int) for s in doc["sets"]))
    except KeyError as exc:
        raise StructuralError(f"covering document missing key {exc}") from exc
