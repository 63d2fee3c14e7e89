"""Physical parameters, Hamiltonian and Liouvillian on the one-excitation subspace.

Basis ordering is (e, a, b) = (|e,0,0>, |g,1,0>, |g,0,1>). The ground state
|g,0,0> is a sink and is not represented: its population is 1 - tr(rho).
Density matrices are vectorized column-major (``rho.reshape(-1, order="F")``),
so entry rho[i, j] sits at index ``i + 3 * j``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import DegenerateGenerator, DegenerateSpectrum, InvalidParameters
from .numerics import RECONSTRUCTION_RTOL, eig_dense

BASIS = ("e", "a", "b")
DIM = 3


def mode_index(mode) -> int:
    if isinstance(mode, (int, np.integer)):
        if not 0 <= mode < DIM:
            raise ValueError(f"mode index out of range: {mode}")
        return int(mode)
    try:
        return BASIS.index(mode)
    except ValueError:
        raise ValueError(f"unknown mode {mode!r}; expected one of {BASIS}") from None


def vec_index(i: int, j: int) -> int:
    """Position of rho[i, j] in the column-stacked vector."""
    return i + DIM * j


def vec(rho) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape(DIM, DIM, order="F")


@dataclass(frozen=True)
class SystemParams:
    """All rates in units of the emitter radiative decay rate."""

    g1: float
    kappa1: float
    g2: float
    kappa2: float
    gamma: float = 1.0
    gamma_star: float = 1e4
    delta: float = 0.0

    def __post_init__(self):
        for name in ("g1", "kappa1", "g2", "kappa2", "gamma", "gamma_star", "delta"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise InvalidParameters(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.gamma <= 0:
            raise InvalidParameters("gamma must be > 0")
        if self.kappa1 <= 0 or self.kappa2 <= 0:
            raise InvalidParameters("kappa1 and kappa2 must be > 0")
        if self.gamma_star < 0 or self.g1 < 0 or self.g2 < 0:
            raise InvalidParameters("gamma_star, g1 and g2 must be >= 0")

    @classmethod
    def single_cavity(cls, g, kappa, **kw):
        """One emitter-cavity pair: C1 carries the cavity, C2 is decoupled (g2 = 0)."""
        kw.setdefault("kappa2", 1.0)
        return cls(g1=g, kappa1=kappa, g2=0.0, **kw)

    @property
    def total_dephasing(self) -> float:
        """Gamma = gamma + gamma*, the homogeneous emitter linewidth."""
        return self.gamma + self.gamma_star

    @property
    def max_rate(self) -> float:
        return max(self.gamma, self.gamma_star, self.g1, self.kappa1, self.g2, self.kappa2, abs(self.delta))

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DensityState:
    rho: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (DIM, DIM):
            raise ValueError(f"rho must be {DIM}x{DIM}")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def excited(cls) -> "DensityState":
        rho = np.zeros((DIM, DIM), dtype=complex)
        rho[0, 0] = 1.0
        return cls(rho, 0.0)

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()

    @property
    def ground_population(self) -> float:
        return float(1.0 - np.trace(self.rho).real)

    def check(self, herm_tol=1e-12, psd_tol=1e-10) -> None:
        """Raise ValueError if rho is not Hermitian, PSD and of trace in [0, 1]."""
        if np.max(np.abs(self.rho - self.rho.conj().T)) > herm_tol:
            raise ValueError("rho is not Hermitian")
        evals = np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))
        if evals.min() < -psd_tol:
            raise ValueError(f"rho has negative eigenvalue {evals.min():.3g}")
        tr = np.trace(self.rho).real
        if tr < -psd_tol or tr > 1 + psd_tol:
            raise ValueError(f"trace {tr} outside [0, 1]")


@dataclass(frozen=True)
class LiouvillianDecomposition:
    generator: np.ndarray
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    condition_estimate: float
    reconstruction_error: float

    def apply(self, rho) -> np.ndarray:
        """d rho / dt for a 3x3 rho."""
        return unvec(self.generator @ vec(rho))

    @property
    def slowest_rate(self) -> float:
        return float(np.min(np.abs(self.eigenvalues.real)))


def build_hamiltonian(params: SystemParams) -> np.ndarray:
    """H / hbar in the rotating frame; detuning sits on the emitter entry."""
    p = params
    return np.array(
        [[p.delta, p.g1, 0.0], [p.g1, 0.0, p.g2], [0.0, p.g2, 0.0]],
        dtype=complex,
    )


def _projector(i: int) -> np.ndarray:
    m = np.zeros((DIM, DIM))
    m[i, i] = 1.0
    return m


def liouvillian_matrix(params: SystemParams) -> np.ndarray:
    """The 9x9 generator acting on column-stacked rho.

    Decay into |g,0,0> leaves the block, so only the anticommutator part of
    the emitter and cavity dissipators survives. Pure dephasing acts through
    the emitter projector and damps the e-a and e-b coherences at gamma*/2.
    With vec(A X B) = (B^T kron A) vec(X):
    """
    eye = np.eye(DIM)
    h = build_hamiltonian(params)
    gen = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for i, rate in enumerate((params.gamma, params.kappa1, params.kappa2)):
        p = _projector(i)
        gen -= 0.5 * rate * (np.kron(eye, p) + np.kron(p, eye))
    pe = _projector(0)
    gen += params.gamma_star * (np.kron(pe, pe) - 0.5 * np.kron(eye, pe) - 0.5 * np.kron(pe, eye))
    return gen


def build_liouvillian(params: SystemParams, rtol: float = RECONSTRUCTION_RTOL) -> LiouvillianDecomposition:
    gen = liouvillian_matrix(params)
    try:
        eig = eig_dense(gen, rtol=rtol)
    except DegenerateSpectrum as exc:
        raise DegenerateGenerator(
            f"Liouvillian is not safely diagonalizable: {exc}", matrix=gen, error=exc.error
        ) from exc
    return LiouvillianDecomposition(
        generator=gen,
        eigenvalues=eig.eigenvalues,
        right_vectors=eig.right_vectors,
        left_vectors=eig.left_vectors,
        condition_estimate=eig.condition,
        reconstruction_error=eig.reconstruction_error,
    )


def bloch_rhs(params: SystemParams, rho) -> np.ndarray:
    """Optical Bloch equations written element by element.

    Independent of :func:`liouvillian_matrix`; used to cross-check it.
    """
    p = params
    r = np.asarray(rho, dtype=complex)
    ee, aa, bb = r[0, 0], r[1, 1], r[2, 2]
    ea, eb, ab = r[0, 1], r[0, 2], r[1, 2]
    ae, be, ba = r[1, 0], r[2, 0], r[2, 1]
    g1, g2, d = p.g1, p.g2, p.delta
    big = p.gamma + p.gamma_star

    out = np.empty((3, 3), dtype=complex)
    out[0, 0] = -p.gamma * ee + 1j * g1 * (ea - ae)
    out[1, 1] = -p.kappa1 * aa + 1j * g1 * (ae - ea) + 1j * g2 * (ab - ba)
    out[2, 2] = -p.kappa2 * bb + 1j * g2 * (ba - ab)
    # detuning adds -i*delta to the e-row coherences and +i*delta to the e-column ones
    out[0, 1] = -(big + p.kappa1) / 2 * ea + 1j * g1 * (ee - aa) + 1j * g2 * eb - 1j * d * ea
    out[0, 2] = -(big + p.kappa2) / 2 * eb + 1j * (g2 * ea - g1 * ab) - 1j * d * eb
    out[1, 2] = -(p.kappa1 + p.kappa2) / 2 * ab + 1j * g2 * (aa - bb) - 1j * g1 * eb
    out[1, 0] = -(big + p.kappa1) / 2 * ae - 1j * g1 * (ee - aa) - 1j * g2 * be + 1j * d * ae
    out[2, 0] = -(big + p.kappa2) / 2 * be - 1j * (g2 * ae - g1 * ba) + 1j * d * be
    out[2, 1] = -(p.kappa1 + p.kappa2) / 2 * ba - 1j * g2 * (aa - bb) + 1j * g1 * be
    return out
