"""Dense numerical kernels for small (n <= 16) complex systems.

Eigendecomposition and matrix exponentials are delegated to LAPACK through
numpy/scipy; this module adds the accuracy contracts the physics code relies
on (reconstruction test, biorthogonal left vectors) plus a fixed-step RK4
integrator that serves as an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np
import scipy.linalg

from .errors import DegenerateSpectrum, NonConvergence, StepTooLarge

MAX_DENSE_DIM = 16
RECONSTRUCTION_RTOL = 1e-9


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    reconstruction_error: float
    condition: float


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and weights for an expectation over a 1D distribution."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1D arrays of equal length")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.nodes)

    def expect(self, f: Callable[[float], float]) -> float:
        return float(sum(w * f(x) for x, w in zip(self.nodes, self.weights)))


def eig_dense(matrix, rtol: float = RECONSTRUCTION_RTOL) -> EigenDecomposition:
    """Right/left eigendecomposition with a reconstruction check.

    ``left_vectors`` is the inverse of ``right_vectors``, so its rows are the
    left eigenvectors normalized biorthogonally to the columns of
    ``right_vectors``. Raises :class:`DegenerateSpectrum` when
    ``R diag(w) L`` misses ``matrix`` by more than ``rtol`` (relative
    Frobenius norm), which is what happens at exceptional points.
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DENSE_DIM:
        raise ValueError(f"eig_dense handles n <= {MAX_DENSE_DIM}, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")

    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"eigenvalue iteration did not converge: {exc}") from exc

    try:
        v_inv = np.linalg.inv(v)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSpectrum("eigenvector matrix is singular", matrix=a, error=math.inf) from exc

    scale = np.linalg.norm(a)
    recon = v @ (w[:, None] * v_inv)
    err = float(np.linalg.norm(recon - a) / scale) if scale > 0 else float(np.linalg.norm(recon))
    if not np.isfinite(err) or err > rtol:
        raise DegenerateSpectrum(
            f"reconstruction error {err:.3g} exceeds {rtol:g}", matrix=a, error=err
        )
    cond = float(np.linalg.norm(v, 2) * np.linalg.norm(v_inv, 2))
    return EigenDecomposition(w, v, v_inv, err, cond)


def expm_action(decomp, t: float, v) -> np.ndarray:
    """exp(A t) v evaluated from a cached eigendecomposition of A."""
    if t < 0:
        raise ValueError("t must be non-negative")
    v = np.asarray(v, dtype=complex)
    if t == 0:
        return v.copy()
    coeff = decomp.left_vectors @ v
    return decomp.right_vectors @ (np.exp(decomp.eigenvalues * t) * coeff)


def expm_dense(matrix, t: float = 1.0) -> np.ndarray:
    """Scaling-and-squaring matrix exponential of ``matrix * t`` (no eigendecomposition)."""
    return scipy.linalg.expm(np.asarray(matrix, dtype=complex) * t)


class Trajectory(NamedTuple):
    times: np.ndarray
    states: np.ndarray  # shape (len(times), n)


Rhs = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk_integrate(rhs: Rhs, v0, t_end: float, dt: float, t_eval=None) -> Trajectory:
    """Classical fixed-step RK4 for dv/dt = rhs(v).

    ``rhs`` is either a matrix (linear system) or a callable. For a matrix the
    step must satisfy ``dt <= 0.1 / max|entry|``; otherwise
    :class:`StepTooLarge` is raised. With ``t_eval`` the solution is reported
    at those times (each interval is split into equal steps no longer than
    ``dt``); without it, every step is returned.
    """
    if dt <= 0:
        raise StepTooLarge("dt must be positive")
    if callable(rhs):
        f = rhs
    else:
        m = np.asarray(rhs, dtype=complex)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        bound = 0.1 / np.max(np.abs(m)) if np.any(m) else math.inf
        if dt > bound * (1 + 1e-12):
            raise StepTooLarge(f"dt={dt:.3g} exceeds stability bound {bound:.3g}")
        f = lambda y: m @ y  # noqa: E731

    y = np.atleast_1d(np.asarray(v0, dtype=complex)).copy()
    if t_eval is None:
        n = max(1, math.ceil(t_end / dt - 1e-12))
        h = t_end / n
        out = np.empty((n + 1, y.size), dtype=complex)
        out[0] = y
        for i in range(n):
            y = _rk4_step(f, y, h)
            out[i + 1] = y
        return Trajectory(np.linspace(0.0, t_end, n + 1), out)

    t_eval = np.asarray(t_eval, dtype=float)
    if np.any(np.diff(t_eval) < 0) or t_eval[0] < 0:
        raise ValueError("t_eval must be non-negative and increasing")
    out = np.empty((t_eval.size, y.size), dtype=complex)
    t = 0.0
    for i, target in enumerate(t_eval):
        span = target - t
        if span > 0:
            n = math.ceil(span / dt - 1e-12)
            h = span / n
            for _ in range(n):
                y = _rk4_step(f, y, h)
        out[i] = y
        t = target
    return Trajectory(t_eval.copy(), out)


def gauss_hermite(n: int, sigma: float) -> QuadratureGrid:
    """Gauss-Hermite rule for expectations over Normal(0, sigma**2).

    Exact for polynomials of degree <= 2n - 1; weights sum to one.
    """
    if not 1 <= n <= 64:
        raise ValueError("n must be between 1 and 64")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    x, w = np.polynomial.hermite_e.hermegauss(n)
    w = w / w.sum()
    x = 0.5 * (x - x[::-1])  # exact antisymmetry of the nodes
    w = 0.5 * (w + w[::-1])
    return QuadratureGrid(sigma * x, w)


def log_time_grid(t_min: float, t_max: float, n: int) -> np.ndarray:
    """``n`` samples: t = 0 followed by geometric spacing from t_min to t_max."""
    if not 0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max")
    return np.concatenate(([0.0], np.geomspace(t_min, t_max, n - 1)))


def time_grid_weights(times) -> np.ndarray:
    """Quadrature weights w with int_0^t_max f dt ~= sum(w * f(times)).

    For a grid built by :func:`log_time_grid` the geometric part is
    integrated as a trapezoid rule in u = log t (integrand f * t), which
    converges spectrally for smooth decaying integrands; [0, t_1] uses a
    plain trapezoid. Any other grid gets ordinary trapezoid weights.
    """
    t = np.asarray(times, dtype=float)
    w = np.zeros_like(t)
    if t.size < 2:
        return w
    geometric = t[0] == 0 and t.size > 3 and t[1] > 0
    if geometric:
        du = np.diff(np.log(t[1:]))
        geometric = np.allclose(du, du[0], rtol=1e-6)
    if not geometric:
        dt = np.diff(t)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
        return w
    h = du[0]
    w[0] = w[1] = 0.5 * t[1]
    w[1:] += h * t[1:]
    w[1] -= 0.5 * h * t[1]
    w[-1] -= 0.5 * h * t[-1]
    return w


def tail_integral(values, times) -> np.ndarray:
    """Q(t_i) = int_{t_i}^{t_max} f dt on a :func:`log_time_grid` grid (cumulative Simpson in log t)."""
    from scipy.integrate import cumulative_simpson

    t = np.asarray(times, dtype=float)
    f = np.asarray(values)
    u = np.log(t[1:])
    g = (f[1:] * t[1:])[::-1]
    q = np.empty_like(f)
    q[1:] = cumulative_simpson(g, x=-u[::-1], initial=0.0)[::-1]
    q[0] = q[1] + 0.5 * t[1] * (f[0] + f[1])
    return q
