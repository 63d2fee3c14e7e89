"""Exact propagation of the master equation from |e,0,0> and the collection efficiency."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateGenerator, TailTooHeavy
from .model import (
    DIM,
    DensityState,
    LiouvillianDecomposition,
    SystemParams,
    build_liouvillian,
    mode_index,
    unvec,
    vec,
    vec_index,
)
from .numerics import expm_dense, log_time_grid, time_grid_weights

log = logging.getLogger(__name__)

WINDOW_DECAY_LENGTHS = 40.0
TAIL_TOLERANCE = 1e-8
DEFAULT_SAMPLES = 2048
MIN_SAMPLES = 64
MAX_SAMPLES = 2**17
OSCILLATION_STEP = 3.0  # max phase advance per log-grid step, in radians
NEGLIGIBLE_AMPLITUDE = 1e-10
FALLBACK_SAMPLES = 8192


@dataclass(frozen=True)
class TimeWindow:
    t_max: float
    n_samples: int = DEFAULT_SAMPLES
    t_min: Optional[float] = None  # first nonzero sample; defaults to 1e-3 / fastest rate
    tail_mass: Optional[float] = None  # filled in by propagate
    undersampled: bool = False  # auto sizing hit MAX_SAMPLES; quadratures may be inaccurate

    def __post_init__(self):
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.n_samples < MIN_SAMPLES:
            raise ValueError(f"n_samples must be >= {MIN_SAMPLES}")

    def grid(self, fastest_rate: float) -> np.ndarray:
        t_min = self.t_min if self.t_min is not None else 1e-3 / fastest_rate
        t_min = min(t_min, self.t_max / 10)
        return log_time_grid(t_min, self.t_max, self.n_samples)


def auto_window(eigenvalues, n_samples: Optional[int] = None, amplitudes=None) -> TimeWindow:
    """t_max = 40 / slowest decay rate of the generator.

    Without an explicit ``n_samples`` the log grid is refined until every
    oscillating mode that still carries weight is resolved: its phase may
    advance by at most ``OSCILLATION_STEP`` per step for as long as its
    amplitude (``amplitudes``, one per eigenvalue; 1 if omitted) exceeds
    ``NEGLIGIBLE_AMPLITUDE``. The result is clipped to
    [DEFAULT_SAMPLES, MAX_SAMPLES].
    """
    lam = np.asarray(eigenvalues)
    slow = float(np.min(np.abs(lam.real)))
    fast = float(np.max(np.abs(lam)))
    t_max, t_min = WINDOW_DECAY_LENGTHS / slow, 1e-3 / fast
    if n_samples is None:
        amp = np.ones(lam.size) if amplitudes is None else np.asarray(amplitudes, dtype=float)
        span = np.log(t_max / min(t_min, t_max / 10))
        n_samples = DEFAULT_SAMPLES
        for mu, a in zip(lam, amp):
            if a <= NEGLIGIBLE_AMPLITUDE or abs(mu.imag) * t_min > OSCILLATION_STEP:
                continue
            t_live = min(t_max, np.log(a / NEGLIGIBLE_AMPLITUDE) / max(-mu.real, 1e-300))
            du = OSCILLATION_STEP / (abs(mu.imag) * t_live) if mu.imag else np.inf
            n_samples = max(n_samples, int(np.ceil(span / du)) + 2)
        if n_samples > MAX_SAMPLES:
            log.warning("long-lived oscillations need %d samples; capped at %d", n_samples, MAX_SAMPLES)
            return TimeWindow(t_max, MAX_SAMPLES, t_min, undersampled=True)
    return TimeWindow(t_max, n_samples, t_min)


class MasterSolution:
    """rho(t) for the initial state |e,0,0>, evaluable at any t >= 0.

    In the spectral representation vec(rho(t)) = C @ exp(lambda * t); when the
    generator is not diagonalizable the solution is carried by the sampled
    states and evaluated between samples with the exact interval propagator.
    """

    def __init__(self, params: SystemParams, decomposition: Optional[LiouvillianDecomposition],
                 generator: np.ndarray):
        self.params = params
        self.decomposition = decomposition
        self.generator = generator
        self._samples = None  # (times, vec states) for the fallback path
        rho0 = vec(DensityState.excited().rho)
        if decomposition is not None:
            self.eigenvalues = decomposition.eigenvalues
            self.coefficients = decomposition.right_vectors * (decomposition.left_vectors @ rho0)
        else:
            self.eigenvalues = np.linalg.eigvals(generator)
            self.coefficients = None

    @property
    def spectral(self) -> bool:
        return self.coefficients is not None

    def amplitudes(self, i: int, j: int) -> np.ndarray:
        """rho_ij(t) = sum_k amplitudes[k] * exp(eigenvalues[k] * t)."""
        if not self.spectral:
            raise DegenerateGenerator("no spectral representation available", matrix=self.generator)
        return self.coefficients[vec_index(i, j)]

    def vec_states(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if self.spectral:
            return (self.coefficients @ np.exp(np.outer(self.eigenvalues, times))).T
        return self._stepwise(times)

    def _stepwise(self, times) -> np.ndarray:
        out = np.empty((times.size, DIM * DIM), dtype=complex)
        if self._samples is not None:
            ts, vs = self._samples
        else:
            ts, vs = np.array([0.0]), vec(DensityState.excited().rho)[None, :]
        for n, t in enumerate(times):
            k = max(0, np.searchsorted(ts, t, side="right") - 1)
            dt = t - ts[k]
            out[n] = vs[k] if dt == 0 else expm_dense(self.generator, dt) @ vs[k]
        return out

    def integrals(self) -> np.ndarray:
        """int_0^inf vec(rho(t)) dt, exactly."""
        if self.spectral:
            return self.coefficients @ (1.0 / -self.eigenvalues)
        return np.linalg.solve(-self.generator, vec(DensityState.excited().rho))


@dataclass(frozen=True)
class PopulationTrace:
    times: np.ndarray
    rho: np.ndarray  # (n, 3, 3)
    window: TimeWindow
    method: str  # "spectral" or "expm"
    fallback: bool
    params: SystemParams
    solution: MasterSolution = field(repr=False, compare=False)

    @property
    def p_e(self):
        return self.rho[:, 0, 0].real

    @property
    def p_a(self):
        return self.rho[:, 1, 1].real

    @property
    def p_b(self):
        return self.rho[:, 2, 2].real

    @property
    def coh_ea(self):
        return self.rho[:, 0, 1]

    @property
    def coh_eb(self):
        return self.rho[:, 0, 2]

    @property
    def coh_ab(self):
        return self.rho[:, 1, 2]

    def population(self, mode) -> np.ndarray:
        i = mode_index(mode)
        return self.rho[:, i, i].real

    @property
    def tail_mass(self) -> float:
        return float(np.trace(self.rho[-1]).real)

    def state(self, index: int) -> DensityState:
        return DensityState(self.rho[index], float(self.times[index]))

    def rho_at(self, t) -> np.ndarray:
        """rho at arbitrary times (exact, not interpolated); shape (len(t), 3, 3)."""
        v = self.solution.vec_states(np.atleast_1d(t))
        return v.reshape(-1, DIM, DIM, order="F")


def propagate(params: SystemParams, window: Optional[TimeWindow] = None) -> PopulationTrace:
    """Evolve rho from |e,0,0> and sample it on a log-spaced grid.

    Uses the cached eigendecomposition of the Liouvillian; if it is
    degenerate, falls back to exact interval propagators (scaling and
    squaring) and records the fallback.
    """
    try:
        decomp = build_liouvillian(params)
        solution = MasterSolution(params, decomp, decomp.generator)
        method, fallback = "spectral", False
    except DegenerateGenerator as exc:
        log.warning("spectral propagation unavailable (%s); using interval propagators", exc)
        solution = MasterSolution(params, None, exc.generator)
        method, fallback = "expm", True

    if window is None:
        if solution.spectral:
            diag = [vec_index(i, i) for i in range(DIM)]
            amps = np.max(np.abs(solution.coefficients[diag]), axis=0)
            window = auto_window(solution.eigenvalues, amplitudes=amps)
        else:
            # every sample costs a dense exponential here
            window = auto_window(solution.eigenvalues, FALLBACK_SAMPLES)
    times = window.grid(float(np.max(np.abs(solution.eigenvalues))))

    if solution.spectral:
        states = solution.vec_states(times)
    else:
        states = np.empty((times.size, DIM * DIM), dtype=complex)
        states[0] = vec(DensityState.excited().rho)
        for n in range(1, times.size):
            states[n] = expm_dense(solution.generator, times[n] - times[n - 1]) @ states[n - 1]
        solution._samples = (times, states)

    rho = states.reshape(-1, DIM, DIM, order="F")
    tail = float(np.trace(rho[-1]).real)
    window = TimeWindow(window.t_max, window.n_samples, window.t_min, tail, window.undersampled)
    return PopulationTrace(times, rho, window, method, fallback, params, solution)


def _decay_rate(params: SystemParams, i: int) -> float:
    return (params.gamma, params.kappa1, params.kappa2)[i]


def efficiency_exact(trace: PopulationTrace, params: Optional[SystemParams] = None, mode="b") -> float:
    """Probability that the excitation leaves through ``mode``'s radiative channel.

    kappa * int_0^inf rho_mm dt, evaluated in closed form from the spectral
    representation (sum of A_k / -lambda_k).
    """
    params = params or trace.params
    if trace.tail_mass > TAIL_TOLERANCE:
        raise TailTooHeavy(
            f"{trace.tail_mass:.3g} of the excitation remains at t_max={trace.window.t_max:.4g}",
            tail_mass=trace.tail_mass,
        )
    i = mode_index(mode)
    if trace.params == params:
        integral = unvec(trace.solution.integrals())[i, i].real
    else:
        integral = time_grid_weights(trace.times) @ trace.rho[:, i, i].real
    return float(_decay_rate(params, i) * integral)


def efficiency_quadrature(trace: PopulationTrace, mode="b") -> float:
    """Same quantity as :func:`efficiency_exact` by quadrature of the sampled trace."""
    i = mode_index(mode)
    return float(_decay_rate(trace.params, i) * (time_grid_weights(trace.times) @ trace.rho[:, i, i].real))


def efficiency_single_cavity(params: SystemParams, window: Optional[TimeWindow] = None) -> float:
    """kappa1 * int p_a dt for an emitter coupled to C1 alone."""
    if params.g2 != 0:
        raise ValueError("single-cavity efficiency requires g2 = 0")
    return efficiency_exact(propagate(params, window), params, mode="a")


def channel_totals(trace: PopulationTrace) -> np.ndarray:
    """(gamma int p_e, kappa1 int p_a, kappa2 int p_b) by quadrature of the sampled trace."""
    p = trace.params
    rates = np.array([p.gamma, p.kappa1, p.kappa2])
    pops = trace.rho.diagonal(axis1=1, axis2=2).real
    return rates * (time_grid_weights(trace.times) @ pops)
