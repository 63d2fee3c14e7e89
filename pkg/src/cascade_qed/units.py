"""Conversion between cavity quality factors and normalized decay rates.

Internally every rate is in units of the emitter radiative rate gamma;
laboratory units only appear here. kappa = omega / Q, so with omega and
gamma_lab in the same frequency unit kappa / gamma = omega / (Q gamma_lab).
"""

from __future__ import annotations

from dataclasses import dataclass

# silicon-vacancy center at room temperature
SIV_OMEGA = 400e12
SIV_GAMMA = 160e6
SIV_GAMMA_STAR = 400e9


@dataclass(frozen=True)
class QFactorSpec:
    q: float
    omega: float = SIV_OMEGA
    gamma_lab: float = SIV_GAMMA

    def __post_init__(self):
        if self.q <= 0 or self.omega <= 0 or self.gamma_lab <= 0:
            raise ValueError("q, omega and gamma_lab must be positive")

    @property
    def kappa(self) -> float:
        return q_to_kappa(self)


def q_to_kappa(spec: QFactorSpec) -> float:
    return (spec.omega / spec.q) / spec.gamma_lab


def kappa_to_q(kappa: float, omega: float = SIV_OMEGA, gamma_lab: float = SIV_GAMMA) -> float:
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return omega / (kappa * gamma_lab)


def normalized_rate(rate_lab: float, gamma_lab: float = SIV_GAMMA) -> float:
    """A laboratory rate expressed in units of gamma."""
    return rate_lab / gamma_lab
