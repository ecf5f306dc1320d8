"""Finite continuous-frame models: a vector per grid point, plus transforms.

A model couples a quadrature space with one unit vector psi_x in C^d per
point. The frame operator S = sum_x w_x psi_x psi_x^* must be positive
definite; its inverse defines the reproducing kernel

    R(x, y) = psi_x^* S^{-1} psi_y,

a Hermitian matrix that is idempotent under weighted composition and acts
as the identity on the range of both analysis transforms.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .errors import SingularOperatorError, StructuralError
from .kernels import DiscreteMeasure
from .quadrature import QuadratureSpace, uniform_grid


class FrameModel:
    """Immutable frame model over a quadrature space.

    Parameters
    ----------
    space : QuadratureSpace with n points.
    vectors : complex array (d, n); column x is psi_x.
    eig_floor : smallest admissible eigenvalue of the frame operator.
        Models below the floor are refused rather than regularized.
    """

    def __init__(self, space: QuadratureSpace, vectors, eig_floor: float = 1e-10):
        psi = np.asarray(vectors, dtype=complex)
        if psi.ndim != 2 or psi.shape[1] != space.n_points:
            raise StructuralError("vectors must be shaped (dim, n_points)")
        if not np.all(np.isfinite(psi.real)) or not np.all(np.isfinite(psi.imag)):
            raise StructuralError("frame vectors must be finite")
        psi.setflags(write=False)
        self.space = space
        self.vectors = psi
        self.dim = psi.shape[0]

        s = (psi * space.weights[None, :]) @ psi.conj().T
        s = 0.5 * (s + s.conj().T)
        evals, evecs = np.linalg.eigh(s)
        if evals.min() <= eig_floor:
            raise SingularOperatorError(
                f"frame operator eigenvalue {evals.min():.3e} at or below floor "
                f"{eig_floor:.1e}; the family does not span (use more points "
                f"or a wider spread)"
            )
        self.frame_operator = s
        self.s_eigenvalues = evals
        self._s_evecs = evecs
        self.s_inverse = (evecs / evals[None, :]) @ evecs.conj().T

    @cached_property
    def kernel(self) -> np.ndarray:
        """Reproducing kernel R(x, y) = psi_x^* S^{-1} psi_y (Hermitian)."""
        r = self.vectors.conj().T @ (self.s_inverse @ self.vectors)
        return 0.5 * (r + r.conj().T)

    def check_vector(self, f) -> np.ndarray:
        arr = np.asarray(f, dtype=complex).reshape(-1)
        if arr.shape[0] != self.dim:
            raise StructuralError(f"vector of length {arr.shape[0]}, expected {self.dim}")
        return arr

    def apply_s_inverse(self, f) -> np.ndarray:
        return self.s_inverse @ self.check_vector(f)

    def analyze(self, f) -> np.ndarray:
        """Frame coefficients <f, psi_x> as a grid function."""
        return self.vectors.conj().T @ self.check_vector(f)

    def dual_analyze(self, f) -> np.ndarray:
        """Canonical-dual coefficients <f, S^{-1} psi_x> as a grid function."""
        return self.vectors.conj().T @ (self.s_inverse @ self.check_vector(f))

    def from_analysis(self, F) -> np.ndarray:
        """Invert ``analyze`` on its range: f = S^{-1} sum_x w_x F(x) psi_x."""
        arr = self.space.check_function(F)
        return self.s_inverse @ (self.vectors @ (self.space.weights * arr))

    def from_dual_analysis(self, F) -> np.ndarray:
        """Invert ``dual_analyze`` on its range: f = sum_x w_x F(x) psi_x."""
        arr = self.space.check_function(F)
        return self.vectors @ (self.space.weights * arr)

    def synthesize(self, coeffs: DiscreteMeasure, dual_atoms: bool = False) -> np.ndarray:
        """sum_i lambda_i psi_{x_i} (or S^{-1} psi_{x_i} with ``dual_atoms``)."""
        coeffs.check_on(self.space)
        if coeffs.indices.size == 0:
            return np.zeros(self.dim, dtype=complex)
        out = self.vectors[:, coeffs.indices] @ coeffs.coefficients
        return self.s_inverse @ out if dual_atoms else out

    def project_to_range(self, F) -> np.ndarray:
        """Weighted-L2-orthogonal projection of a grid function onto the
        common range of the analysis transforms."""
        arr = self.space.check_function(F)
        return self.vectors.conj().T @ (
            self.s_inverse @ (self.vectors @ (self.space.weights * arr)))

    def random_range_function(self, rng: np.random.Generator) -> np.ndarray:
        """Analysis of a random vector: a generic element of the range."""
        f = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        return self.analyze(f)

    def save_vectors(self, path) -> None:
        """Write the (dim, n) frame-vector matrix in the binary fixture format."""
        from .kernels import save_kernel_binary
        save_kernel_binary(self.vectors, path)


def load_frame_vectors(path, dim: int) -> np.ndarray:
    """Read a (dim, n) frame-vector matrix written by ``save_vectors``."""
    from .kernels import load_kernel_binary
    flat = load_kernel_binary(path, shape=(-1,))
    if flat.size % dim:
        raise StructuralError("file size is not a multiple of the dimension")
    return flat.reshape(dim, flat.size // dim)


def _periodized_gaussian(d: int, width: float) -> np.ndarray:
    k = np.arange(d, dtype=float)
    g = np.zeros(d)
    for shift in range(-4, 5):
        g += np.exp(-np.pi * ((k + shift * d) / width) ** 2)
    norm = np.linalg.norm(g)
    if norm == 0.0:
        raise StructuralError("window width too small: window vanished")
    return g / norm


def build_gabor_model(n_time: int, n_freq: int, window_width: float,
                      eig_floor: float = 1e-10) -> FrameModel:
    """Time-frequency shifted periodized Gaussians on an n_time x n_freq grid.

    The signal length equals ``n_time``; atoms are the window translated to
    every sample and modulated to ``n_freq`` equispaced frequencies, unit
    normalized. Grid weights are d/n so that full frequency sampling gives
    a frame operator equal to the identity.
    """
    if n_time <= 0 or n_freq <= 0:
        raise StructuralError("n_time and n_freq must be positive")
    if not (window_width > 0):
        raise StructuralError("window width must be positive")
    d = int(n_time)
    g = _periodized_gaussian(d, float(window_width))
    n = d * int(n_freq)
    psi = np.empty((d, n), dtype=complex)
    k = np.arange(d)
    col = 0
    for t in range(d):
        shifted = np.roll(g, t)
        for j in range(int(n_freq)):
            psi[:, col] = shifted * np.exp(2j * np.pi * j * k / float(n_freq))
            col += 1
    freq_step = d / float(n_freq)
    coords = np.array([(t, j * freq_step) for t in range(d) for j in range(int(n_freq))])
    space = QuadratureSpace(coords, np.full(n, d / float(n)))
    return FrameModel(space, psi, eig_floor=eig_floor)


def build_random_smooth_model(d: int, n_points: int, smoothness: float,
                              seed: int, eig_floor: float = 1e-10) -> FrameModel:
    """Random trigonometric vector field on [0, 1), unit-normalized columns.

    Mode amplitudes decay like (1 + m)^(-smoothness); larger smoothness
    gives slower variation of x -> psi_x. Deterministic for a fixed seed.
    """
    if n_points < d:
        raise StructuralError("need n_points >= dim for a spanning family")
    rng = np.random.default_rng(seed)
    n_modes = max(d, min(n_points, 32))
    decay = (1.0 + np.arange(n_modes)) ** (-float(smoothness))
    coef = (rng.standard_normal((d, n_modes))
            + 1j * rng.standard_normal((d, n_modes))) * decay[None, :]
    x = np.arange(n_points, dtype=float) / n_points
    phases = np.exp(2j * np.pi * np.outer(np.arange(n_modes), x))
    psi = coef @ phases
    norms = np.linalg.norm(psi, axis=0)
    if np.any(norms == 0):
        raise StructuralError("degenerate random field: zero column")
    psi /= norms[None, :]
    space = uniform_grid(n_points, spacing=1.0 / n_points,
                         weights=1.0 / n_points)
    return FrameModel(space, psi, eig_floor=eig_floor)


def build_orthonormal_model(d: int) -> FrameModel:
    """Standard basis as a frame: one point per basis vector, unit weights."""
    space = uniform_grid(d, spacing=1.0, weights=1.0)
    return FrameModel(space, np.eye(d, dtype=complex))
