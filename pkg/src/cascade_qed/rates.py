"""Rate-equation model obtained by adiabatically eliminating all coherences.

With every coherence slaved to the populations, (P_e, P_a, P_b) obey a
linear system whose matrix is symmetric; transfer rates R1 (emitter <-> C1)
and R2 (C1 <-> C2) carry all the coherent physics. Closed forms for the
efficiency, the Reg. 1 indistinguishability and the C2 decay rate of the
effective-emitter reduction live here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SystemParams

ADIABATIC_MARGIN = 5.0


def transfer_rate_r1(params: SystemParams) -> float:
    """Emitter-C1 hopping rate, Lorentzian in the detuning."""
    width = params.total_dephasing + params.kappa1
    if width <= 0:
        raise ValueError("gamma + gamma* + kappa1 must be positive")
    return 4 * params.g1**2 / width / (1 + (2 * params.delta / width) ** 2)


def transfer_rate_r2(params: SystemParams, r1: float) -> float:
    """C1-C2 hopping rate; R1 acts as extra decoherence of the C1 field."""
    width = r1 + params.kappa1 + params.kappa2
    if width <= 0:
        raise ValueError("r1 + kappa1 + kappa2 must be positive")
    return 4 * params.g2**2 / width


def rate_matrix(params: SystemParams, r1: float, r2: float) -> np.ndarray:
    g, k1, k2 = params.gamma, params.kappa1, params.kappa2
    return np.array(
        [
            [-g - r1, r1, 0.0],
            [r1, -k1 - r1 - r2, r2],
            [0.0, r2, -k2 - r2],
        ]
    )


def parallel(x: float, y: float) -> float:
    """x || y = x y / (x + y)."""
    return x * y / (x + y) if x + y > 0 else 0.0


def _efficiency(k1, k2, r2):
    den = k1 * (k2 + r2) + k2 * r2
    return k2 * r2 / den if den > 0 else 0.0


def _indistinguishability(k1, k2, r2):
    return (k1 / 2 + parallel(k2, r2) / 2) / (k1 / 2 + k2 + 1.5 * r2)


def _pb_decay_rate(k1, k2, r2):
    return (k1 * (k2 + r2) + k2 * r2) / (k1 + 2 * k2 + 3 * r2)


@dataclass(frozen=True)
class RegimeFlags:
    regime: str  # "reg1", "reg2" or "mixed"
    reg1_formula_valid: bool  # R2, kappa2 < kappa1 and 2 R1 >> kappa1 + R2
    adiabatic: bool  # 2 R1 >= 5 (kappa1 + R2)

    def label(self) -> str:
        suffix = "" if self.adiabatic else ";weak-r1"
        return self.regime + suffix


def regime_flags(params: SystemParams, r1: float, r2: float) -> RegimeFlags:
    k1, k2 = params.kappa1, params.kappa2
    if r2 < k1 and k2 < k1:
        regime = "reg1"
    elif r2 > k1 and k2 > k1:
        regime = "reg2"
    else:
        regime = "mixed"
    adiabatic = 2 * r1 >= ADIABATIC_MARGIN * (k1 + r2)
    return RegimeFlags(regime, regime == "reg1" and adiabatic, adiabatic)


@dataclass(frozen=True)
class RateModel:
    params: SystemParams
    r1: float
    r2: float
    matrix: np.ndarray
    roots: np.ndarray  # eigenvalues of ``matrix`` (= -s1, -s2, -s3), sorted by magnitude
    eta_closed: float
    i_closed: float
    pb_decay_rate: float
    flags: RegimeFlags

    @property
    def cubic_coefficients(self) -> np.ndarray:
        """Monic coefficients [1, c2, c1, c0] of the characteristic polynomial in s."""
        return characteristic_polynomial(self.params, self.r1, self.r2)


def characteristic_polynomial(params: SystemParams, r1: float, r2: float) -> np.ndarray:
    """Monic [1, c2, c1, c0] of (s + g + R1)[(s + k1 + R1 + R2)(s + k2 + R2) - R2^2] - R1^2 (s + k2 + R2).

    The coefficients are the trace, principal 2x2 minors and determinant of
    -M, expanded so that no subtraction occurs (all terms are positive); this
    keeps them accurate to rounding even when R1, R2 >> the decay rates.
    """
    g, k1, k2 = params.gamma, params.kappa1, params.kappa2
    c2 = g + k1 + k2 + 2 * r1 + 2 * r2
    m_ea = g * (k1 + r1 + r2) + r1 * (k1 + r2)
    m_ab = k1 * (k2 + r2) + r1 * (k2 + r2) + r2 * k2
    m_eb = (g + r1) * (k2 + r2)
    c0 = g * ((k1 + r1) * (k2 + r2) + r2 * k2) + r1 * (k1 * k2 + k1 * r2 + k2 * r2)
    return np.array([1.0, c2, m_ea + m_ab + m_eb, c0])


def _polish(coeffs: np.ndarray, roots: np.ndarray, steps: int = 3) -> np.ndarray:
    """Newton refinement of the eigenvalue estimates on the characteristic cubic.

    Eigenvalue solvers give roots with absolute error ~eps * |M|; the small
    roots then lose relative accuracy when the transfer rates are large.
    Newton steps on the subtraction-free cubic restore it. Iteration stops
    once |q| is at its rounding floor, and a step is kept only if it lowers
    |q| and stays well inside the gap to the neighbouring roots, so
    clustered roots are left as the eigensolver returned them.
    """
    x = -roots.real  # decay rates s_i > 0, roots of q(x) = x^3 - c2 x^2 + c1 x - c0
    _, c2, c1, c0 = coeffs
    q = lambda x: ((x - c2) * x + c1) * x - c0  # noqa: E731
    dq = lambda x: (3 * x - 2 * c2) * x + c1  # noqa: E731
    out = x.copy()
    for i in range(out.size):
        gap = np.min(np.abs(np.delete(x, i) - x[i]))
        for _ in range(steps):
            xi = out[i]
            floor = 8 * np.finfo(float).eps * (xi**3 + c2 * xi**2 + c1 * xi + c0)
            d = dq(xi)
            if d == 0 or abs(q(xi)) <= floor:
                break
            trial = out[i] - q(out[i]) / d
            if abs(trial - x[i]) > 0.1 * gap or not abs(q(trial)) < abs(q(out[i])):
                break
            out[i] = trial
    return -out


def build_rate_model(params: SystemParams) -> RateModel:
    r1 = transfer_rate_r1(params)
    r2 = transfer_rate_r2(params, r1)
    m = rate_matrix(params, r1, r2)
    roots = _polish(characteristic_polynomial(params, r1, r2), np.linalg.eigvalsh(m))
    roots = roots[np.argsort(np.abs(roots))].astype(complex)
    k1, k2 = params.kappa1, params.kappa2
    return RateModel(
        params=params,
        r1=r1,
        r2=r2,
        matrix=m,
        roots=roots,
        eta_closed=_efficiency(k1, k2, r2),
        i_closed=_indistinguishability(k1, k2, r2),
        pb_decay_rate=_pb_decay_rate(k1, k2, r2),
        flags=regime_flags(params, r1, r2),
    )


def characteristic_roots(model: RateModel) -> np.ndarray:
    """Roots -s1, -s2, -s3 of the characteristic cubic, sorted by |Re|.

    Eigenvalues of the (symmetric, hence never defective) rate matrix,
    Newton-polished on the cubic, rather than Cardano's formula.
    """
    return model.roots.copy()


@dataclass(frozen=True)
class RateTrace:
    times: np.ndarray
    p_e: np.ndarray
    p_a: np.ndarray
    p_b: np.ndarray


def rate_propagate(model: RateModel, t_grid) -> RateTrace:
    """Analytic solution from (P_e, P_a, P_b) = (1, 0, 0)."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be non-negative and increasing")
    w, v = np.linalg.eigh(model.matrix)
    c = v[0]  # v.T @ (1, 0, 0)
    pops = (v * c) @ np.exp(np.outer(w, t))
    return RateTrace(t, pops[0], pops[1], pops[2])


def rate_integrals(model: RateModel) -> np.ndarray:
    """Exact (int P_e, int P_a, int P_b) over [0, inf), i.e. -M^-1 (1, 0, 0).

    Solved by elimination from the C2 end; k_eff is the loss rate seen by
    C1 (its own decay plus leakage through C2).
    """
    p, r1, r2 = model.params, model.r1, model.r2
    k_eff = p.kappa1 + (r2 * p.kappa2 / (p.kappa2 + r2) if r2 > 0 else 0.0)
    x_e = (r1 + k_eff) / (p.gamma * (r1 + k_eff) + r1 * k_eff)
    x_a = r1 * x_e / (r1 + k_eff)
    x_b = r2 * x_a / (p.kappa2 + r2)
    return np.array([x_e, x_a, x_b])


def rate_efficiency(model: RateModel) -> float:
    """kappa2 * int P_b from the full rate model (keeps the gamma loss channel)."""
    return float(model.params.kappa2 * rate_integrals(model)[2])


def efficiency_from_roots(model: RateModel) -> float:
    """kappa2 R1 R2 / (s1 s2 s3)."""
    s_product = float(np.prod(-model.roots).real)
    return model.params.kappa2 * model.r1 * model.r2 / s_product


def efficiency_closed(params: SystemParams) -> float:
    """kappa2 R2 / (kappa1 (kappa2 + R2) + kappa2 R2).

    Drops the emitter's own decay gamma against R1, so it is the gamma -> 0
    limit of :func:`rate_efficiency`.
    """
    r1 = transfer_rate_r1(params)
    return _efficiency(params.kappa1, params.kappa2, transfer_rate_r2(params, r1))


def indistinguishability_closed(params: SystemParams) -> float:
    """Reg. 1 closed form (kappa1/2 + (kappa2||R2)/2) / (kappa1/2 + kappa2 + 3 R2/2).

    Evaluated everywhere; check :func:`regime_flags` for validity.
    """
    r1 = transfer_rate_r1(params)
    return _indistinguishability(params.kappa1, params.kappa2, transfer_rate_r2(params, r1))


@dataclass(frozen=True)
class EffectiveEmitter:
    matrix: np.ndarray  # 2x2 system for (P_s, P_b)
    pb_decay_rate: float
    valid: bool  # 2 R1 >= 5 (kappa1 + R2)

    @property
    def slowest_rate(self) -> float:
        """Exact slowest decay rate of the 2x2 system (no small-root expansion)."""
        return float(np.min(np.abs(np.linalg.eigvals(self.matrix).real)))


def effective_emitter(model: RateModel) -> EffectiveEmitter:
    """Composite emitter (P_s = P_e + P_a) coupled asymmetrically to C2."""
    k1, k2, r2 = model.params.kappa1, model.params.kappa2, model.r2
    m = np.array([[-(k1 + r2) / 2, r2 / 2], [r2, -(k2 + r2)]])
    return EffectiveEmitter(m, _pb_decay_rate(k1, k2, r2), model.flags.adiabatic)


def transformation_matrix(model: RateModel, exact: bool = True) -> np.ndarray:
    """Change of basis (P_d, P_s, P_b) -> (P_e, P_a, P_b); the large-R1 limit when ``exact`` is False."""
    if not exact:
        return np.array([[1.0, 1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    k = model.params.kappa1 + model.r2
    root = math.sqrt(k**2 + 4 * model.r1**2)
    r1 = model.r1
    lower = 2 * r1 / (k - root) if k != root else -math.inf
    return np.array([[1.0, 1.0, 0.0], [lower, 2 * r1 / (k + root), 0.0], [0.0, 0.0, 1.0]])


def single_cavity_efficiency(params: SystemParams) -> float:
    """kappa R / (kappa R + gamma (kappa + R)) for C1 alone (g2 = 0)."""
    r = transfer_rate_r1(params)
    k, g = params.kappa1, params.gamma
    return k * r / (k * r + g * (k + r))
