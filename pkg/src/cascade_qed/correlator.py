"""Two-time field correlators and Hong-Ou-Mandel indistinguishability.

The retarded propagator is G(tau) = exp(-i h_eff tau) with
h_eff = H - (i/2) diag(gamma + gamma*, kappa1, kappa2). By the quantum
regression theorem the first-order correlator of mode m is

    <m^dag(t + tau) m(t)>* = sum_x G_mx(tau) rho_xm(t).

The indistinguishability is the ratio of int int |c(t, tau)|^2 over
int int P(t) P(t + tau), both over t, tau >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateGenerator, DegenerateSpectrum
from .master import DEFAULT_SAMPLES, PopulationTrace, TimeWindow, auto_window, propagate
from .model import DIM, SystemParams, build_hamiltonian, mode_index
from .numerics import EigenDecomposition, eig_dense, expm_dense, tail_integral, time_grid_weights

UNDEFINED_DENOMINATOR = 1e-24


@dataclass(frozen=True)
class RetardedPropagator:
    h_eff: np.ndarray
    eigen: Optional[EigenDecomposition]  # of -i h_eff; None when defective

    @property
    def generator(self) -> np.ndarray:
        return -1j * self.h_eff

    @property
    def rates(self) -> np.ndarray:
        """Eigenvalues of -i h_eff (all with negative real part)."""
        if self.eigen is not None:
            return self.eigen.eigenvalues
        return np.linalg.eigvals(self.generator)


@dataclass(frozen=True)
class IndistinguishabilityReport:
    value: float
    p_coincidence: float
    numerator: float
    denominator: float
    method: str  # "spectral" or "quadrature"
    defined: bool = True
    identity_error: float = 0.0  # denominator / (0.5 * (int P)^2) - 1


def effective_hamiltonian(params: SystemParams) -> np.ndarray:
    h = build_hamiltonian(params)
    return h - 0.5j * np.diag([params.total_dephasing, params.kappa1, params.kappa2])


def build_propagator(params: SystemParams) -> RetardedPropagator:
    h = effective_hamiltonian(params)
    try:
        eigen = eig_dense(-1j * h)
    except DegenerateSpectrum:
        eigen = None
    return RetardedPropagator(h, eigen)


def green_row(prop: RetardedPropagator, mode, tau) -> np.ndarray:
    """Row ``mode`` of exp(-i h_eff tau): (G_me, G_ma, G_mb).

    Scalar ``tau`` gives shape (3,); an array gives (len(tau), 3).
    """
    m = mode_index(mode)
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(taus < 0):
        raise ValueError("tau must be non-negative")
    if prop.eigen is not None:
        v, vi, mu = prop.eigen.right_vectors, prop.eigen.left_vectors, prop.eigen.eigenvalues
        rows = (v[m][None, :] * np.exp(np.outer(taus, mu))) @ vi
        rows[taus == 0] = np.eye(DIM)[m]
    else:
        rows = np.array([expm_dense(prop.generator, t)[m] for t in taus])
    return rows[0] if np.ndim(tau) == 0 else rows


def _green_coefficients(prop: RetardedPropagator, m: int) -> np.ndarray:
    """B[x, k] with G_mx(tau) = sum_k B[x, k] exp(mu_k tau)."""
    v, vi = prop.eigen.right_vectors, prop.eigen.left_vectors
    return (v[m][:, None] * vi).T


def two_time_correlator(trace: PopulationTrace, prop: RetardedPropagator, mode, t, tau, variant="full"):
    """sum_x G_mx(tau) rho_xm(t); broadcasts to shape (len(t), len(tau)) for arrays.

    ``variant="gbb"`` keeps only the x = m term.
    """
    m = mode_index(mode)
    rho = trace.rho_at(t)  # (nt, 3, 3)
    col = rho[:, :, m]
    g = np.atleast_2d(green_row(prop, m, tau))  # (ntau, 3)
    if variant == "gbb":
        mask = np.zeros(DIM)
        mask[m] = 1.0
        g = g * mask
    elif variant != "full":
        raise ValueError(f"unknown variant {variant!r}")
    c = col @ g.T
    if np.ndim(t) == 0 and np.ndim(tau) == 0:
        return complex(c[0, 0])
    if np.ndim(t) == 0:
        return c[0]
    if np.ndim(tau) == 0:
        return c[:, 0]
    return c


@dataclass(frozen=True)
class CorrelatorExpansion:
    """c(t, tau) = sum_jk A[j, k] exp(lam_j t) exp(mu_k tau) and P(t) = sum_j p[j] exp(lam_j t)."""

    A: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    p: np.ndarray


def correlator_expansion(trace: PopulationTrace, prop: RetardedPropagator, mode, variant="full") -> CorrelatorExpansion:
    m = mode_index(mode)
    sol = trace.solution
    a = np.array([sol.amplitudes(x, m) for x in range(DIM)])  # rho_xm amplitudes, (3, 9)
    b = _green_coefficients(prop, m)  # (3, 3)
    if variant == "gbb":
        a_used, b_used = a[m:m + 1], b[m:m + 1]
    else:
        a_used, b_used = a, b
    A = np.einsum("xj,xk->jk", a_used, b_used)
    return CorrelatorExpansion(A, sol.eigenvalues, prop.eigen.eigenvalues, a[m])


def overlap_integral(e1: CorrelatorExpansion, e2: CorrelatorExpansion) -> complex:
    """int int c1(t, tau) conj(c2(t, tau)) dt dtau over the positive quadrant."""
    dl = 1.0 / -(e1.lam[:, None] + e2.lam.conj()[None, :])
    dm = 1.0 / -(e1.mu[:, None] + e2.mu.conj()[None, :])
    return complex(np.einsum("jk,lm,jl,km->", e1.A, e2.A.conj(), dl, dm))


def population_product_integral(e1: CorrelatorExpansion, e2: CorrelatorExpansion) -> complex:
    """int int P1(t) P2(t + tau) dt dtau over the positive quadrant."""
    dl = 1.0 / -(e1.lam[:, None] + e2.lam[None, :])
    return complex(np.einsum("j,l,jl,l->", e1.p, e2.p, dl, 1.0 / -e2.lam))


def _report(num, den, p_int, method) -> IndistinguishabilityReport:
    if den < UNDEFINED_DENOMINATOR:
        return IndistinguishabilityReport(float("nan"), float("nan"), num, den, method, defined=False)
    value = num / den
    identity = den / (0.5 * p_int**2) - 1.0
    return IndistinguishabilityReport(value, 0.5 * (1.0 - value), num, den, method, True, identity)


def _spectral(trace, prop, mode, variant) -> IndistinguishabilityReport:
    exp_ = correlator_expansion(trace, prop, mode, variant)
    num = overlap_integral(exp_, exp_).real
    den = population_product_integral(exp_, exp_).real
    p_int = float(np.sum(exp_.p / -exp_.lam).real)
    return _report(num, den, p_int, "spectral")


def tau_grid(prop: RetardedPropagator, n_samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    w = auto_window(prop.rates, n_samples)
    return w.grid(float(np.max(np.abs(prop.rates))))


def _quadrature(trace, prop, mode, variant, n_samples=DEFAULT_SAMPLES) -> IndistinguishabilityReport:
    """n_samples x n_samples log-grid quadrature over the trace's window."""
    m = mode_index(mode)
    fastest = float(np.max(np.abs(trace.solution.eigenvalues)))
    t = TimeWindow(trace.window.t_max, n_samples, trace.window.t_min).grid(fastest)
    tau = tau_grid(prop, n_samples)
    c = two_time_correlator(trace, prop, m, t, tau, variant)
    wt, wtau = time_grid_weights(t), time_grid_weights(tau)
    num = wt @ (np.abs(c) ** 2 @ wtau)
    p = trace.rho_at(t)[:, m, m].real
    den = wt @ (p * tail_integral(p, t))
    return _report(float(num), float(den), float(wt @ p), "quadrature")


def indistinguishability(params: SystemParams, mode="b", method: str = "auto", variant: str = "full",
                         trace: Optional[PopulationTrace] = None,
                         window: Optional[TimeWindow] = None) -> IndistinguishabilityReport:
    """HOM visibility I = 1 - 2 p_c of photons emitted through ``mode``.

    ``method="auto"`` uses the closed-form double spectral sums and falls back
    to 2D trapezoid quadrature when either propagator is defective.
    """
    if method not in ("auto", "spectral", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    trace = trace if trace is not None else propagate(params, window)
    prop = build_propagator(params)
    spectral_ok = trace.solution.spectral and prop.eigen is not None
    if method == "spectral" and not spectral_ok:
        raise DegenerateGenerator("spectral method requested but a propagator is defective")
    if method == "quadrature" or not spectral_ok:
        return _quadrature(trace, prop, mode, variant)
    return _spectral(trace, prop, mode, variant)
