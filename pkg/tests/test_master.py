import numpy as np
import pytest
from hypothesis import assume, given, settings

from cascade_qed import master
from cascade_qed.errors import DegenerateGenerator, TailTooHeavy
from cascade_qed.master import (
    DEFAULT_SAMPLES,
    MAX_SAMPLES,
    TimeWindow,
    channel_totals,
    efficiency_exact,
    efficiency_quadrature,
    efficiency_single_cavity,
    propagate,
)
from cascade_qed.model import DensityState, SystemParams, liouvillian_matrix, vec
from cascade_qed.numerics import rk_integrate
from cascade_qed.rates import single_cavity_efficiency

from conftest import SIV_GAMMA_STAR, mild_params_strategy, params_strategy


def test_bare_emitter_decay():
    tr = propagate(SystemParams(0, 5.0, 3.0, 2.0, gamma_star=10.0))
    assert np.allclose(tr.p_e, np.exp(-tr.times), atol=1e-12)
    assert np.max(np.abs(tr.p_a)) < 1e-14 and np.max(np.abs(tr.p_b)) < 1e-14


def test_reg1_emitter_and_c1_lock(reg1):
    # after ~1/R1 the emitter and C1 populations share one slow decay
    tr = propagate(reg1)
    r1 = 99.49
    mask = (tr.times > 5 / r1) & (tr.times < 2.0)
    ratio = tr.p_a[mask] / tr.p_e[mask]
    assert 0.5 < ratio.min() and ratio.max() < 1.0
    assert tr.p_e[mask][-1] < 0.05 * tr.p_e[mask][0]


@given(params_strategy)
def test_channel_completeness(params):
    tr = propagate(params)
    # see test_capped_window_is_flagged for the one documented exception
    assume(not tr.window.undersampled)
    assert channel_totals(tr).sum() == pytest.approx(1.0, abs=1e-6)


def test_capped_window_is_flagged():
    # near-lossless, undephased, strongly coupled: oscillations live ~1e3 periods
    tr = propagate(SystemParams(1000.0, 0.1, 330.0, 0.1, gamma_star=0.1, delta=0.1))
    assert tr.window.undersampled and tr.window.n_samples == MAX_SAMPLES
    assert efficiency_exact(tr) + 1e-9 > 0  # exact integrals stay available


def test_oscillating_modes_refine_grid():
    tr = propagate(SystemParams(51.0, 2.0, 0.0, 2.0, gamma_star=0.0))
    assert tr.window.n_samples > 3 * DEFAULT_SAMPLES and not tr.window.undersampled
    assert channel_totals(tr).sum() == pytest.approx(1.0, abs=1e-9)


@given(params_strategy)
def test_positivity(params):
    tr = propagate(params)
    herm = 0.5 * (tr.rho + np.conj(np.swapaxes(tr.rho, 1, 2)))
    assert np.min(np.linalg.eigvalsh(herm)) >= -1e-9
    tr_vals = np.trace(tr.rho, axis1=1, axis2=2).real
    assert np.all(tr_vals <= 1 + 1e-9) and np.all(np.diff(tr_vals) <= 1e-12)


@settings(max_examples=10)
@given(mild_params_strategy)
def test_spectral_matches_rk_oracle(params):
    tr = propagate(params)
    t_eval = np.linspace(0.0, min(tr.window.t_max, 5.0), 21)
    gen = liouvillian_matrix(params)
    dt = 0.1 / np.max(np.abs(gen))
    rk = rk_integrate(gen, vec(DensityState.excited().rho), t_eval[-1], dt, t_eval=t_eval).states
    rk_pops = rk[:, [0, 4, 8]].real
    rho = tr.rho_at(t_eval)
    spectral = np.stack([rho[:, i, i].real for i in range(3)], axis=1)
    assert np.max(np.abs(spectral - rk_pops)) < 1e-5


@given(params_strategy)
def test_detuning_sign_symmetry(params):
    a = propagate(params)
    b = propagate(params.with_(delta=-params.delta), window=a.window)
    pops = lambda tr: tr.rho.diagonal(axis1=1, axis2=2).real  # noqa: E731
    assert np.max(np.abs(pops(a) - pops(b))) < 1e-10


def test_efficiency_zero_without_g2():
    assert efficiency_exact(propagate(SystemParams(500, 50, 0, 1))) == 0.0


def test_efficiency_exact_vs_quadrature(reg2):
    tr = propagate(reg2)
    assert efficiency_exact(tr) == pytest.approx(efficiency_quadrature(tr), abs=1e-7)


@pytest.mark.parametrize(
    "args, eta, tol",
    [((500, 360, 30, 5), 0.0076, 5e-4), ((500, 5, 530, 1200), 0.986, 5e-3)],
)
def test_table_efficiencies(args, eta, tol):
    p = SystemParams(*args, gamma_star=SIV_GAMMA_STAR)
    assert efficiency_exact(propagate(p)) == pytest.approx(eta, abs=tol)


def test_single_cavity_efficiency_table():
    p = SystemParams.single_cavity(500, 667, gamma_star=SIV_GAMMA_STAR)
    assert efficiency_single_cavity(p) == pytest.approx(0.995, abs=3e-3)


def test_single_cavity_zero_coupling():
    assert efficiency_single_cavity(SystemParams.single_cavity(0, 5.0)) == 0.0


def test_single_cavity_no_dephasing_rate_limit():
    p = SystemParams.single_cavity(500, 667, gamma_star=0.0)
    assert efficiency_single_cavity(p) == pytest.approx(single_cavity_efficiency(p), abs=1e-3)


def test_single_cavity_requires_no_c2():
    with pytest.raises(ValueError):
        efficiency_single_cavity(SystemParams(1, 1, 1, 1))


def test_short_window_tail_too_heavy(reg1):
    tr = propagate(reg1, TimeWindow(0.01, 128))
    with pytest.raises(TailTooHeavy) as exc:
        efficiency_exact(tr)
    assert exc.value.tail_mass > 0.1


def test_fallback_path_matches_spectral(reg2, monkeypatch):
    ref = propagate(reg2)

    def broken(params, rtol=None):
        raise DegenerateGenerator("forced", matrix=liouvillian_matrix(params))

    monkeypatch.setattr(master, "build_liouvillian", broken)
    tr = propagate(reg2, TimeWindow(ref.window.t_max, 256))
    assert tr.fallback and tr.method == "expm"
    assert efficiency_exact(tr) == pytest.approx(efficiency_exact(ref), rel=1e-9)
    t = np.array([0.0, 0.013, 0.1])
    assert np.allclose(tr.rho_at(t), ref.rho_at(t), atol=1e-10)


def test_window_validation():
    with pytest.raises(ValueError):
        TimeWindow(-1.0)
    with pytest.raises(ValueError):
        TimeWindow(1.0, 10)
