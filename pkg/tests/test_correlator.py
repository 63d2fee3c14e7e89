import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascade_qed import correlator
from cascade_qed.correlator import (
    build_propagator,
    effective_hamiltonian,
    green_row,
    indistinguishability,
    two_time_correlator,
)
from cascade_qed.errors import DegenerateGenerator, DegenerateSpectrum
from cascade_qed.master import propagate
from cascade_qed.model import SystemParams
from cascade_qed.numerics import rk_integrate
from cascade_qed.rates import build_rate_model

from conftest import SIV_GAMMA_STAR, mild_params_strategy, params_strategy

physical_params = st.builds(
    lambda g1, k1, g2, k2, gs: SystemParams(g1, k1, g2, k2, gamma_star=gs),
    st.floats(100.0, 1000.0), st.floats(1.0, 1000.0), st.floats(1.0, 1000.0),
    st.floats(1.0, 3000.0), st.floats(1e3, 1e4),
)


def test_green_row_identity_at_zero(reg1):
    prop = build_propagator(reg1)
    for m in range(3):
        assert np.allclose(green_row(prop, m, 0.0), np.eye(3)[m])


def test_green_row_decoupled():
    p = SystemParams(0, 3.0, 0, 2.0)
    row = green_row(build_propagator(p), "b", 0.8)
    assert np.allclose(row, [0, 0, np.exp(-2.0 * 0.8 / 2)], atol=1e-14)


def test_green_row_array_shape(reg1):
    rows = green_row(build_propagator(reg1), "b", np.array([0.0, 0.1, 1.0]))
    assert rows.shape == (3, 3)


def test_gbb_envelope_reg1(reg1):
    prop = build_propagator(reg1)
    r2 = build_rate_model(reg1).r2
    tau = np.array([1.0, 3.0])
    g = np.abs(green_row(prop, "b", tau)[:, 2])
    slope = -np.log(g[1] / g[0]) / (tau[1] - tau[0])
    assert slope == pytest.approx((reg1.kappa2 + r2) / 2, rel=0.10)


def test_green_row_expm_fallback(reg1):
    prop = build_propagator(reg1)
    fallback = correlator.RetardedPropagator(prop.h_eff, None)
    for tau in (0.0, 0.05, 0.7):
        assert np.allclose(green_row(fallback, "b", tau), green_row(prop, "b", tau), atol=1e-12)


@given(params_strategy)
def test_equal_time_correlator_is_population(params):
    tr = propagate(params)
    prop = build_propagator(params)
    t = tr.times[::97]
    c = two_time_correlator(tr, prop, "b", t, 0.0)
    assert np.max(np.abs(c - tr.rho_at(t)[:, 2, 2])) < 1e-10


def test_correlator_vanishes_without_coupling():
    p = SystemParams(0, 5.0, 3.0, 2.0)
    tr = propagate(p)
    c = two_time_correlator(tr, build_propagator(p), "b", tr.times[::50], np.linspace(0, 1, 7))
    assert np.max(np.abs(c)) == 0


@settings(max_examples=10)
@given(mild_params_strategy, st.floats(0.0, 2.0), st.floats(0.01, 2.0))
def test_correlator_matches_regression_ode(params, t, tau):
    tr = propagate(params)
    prop = build_propagator(params)
    y0 = tr.rho_at(t)[0][:, 2]
    gen = -1j * effective_hamiltonian(params)
    dt = 0.05 / np.max(np.abs(gen))
    y = rk_integrate(gen, y0, tau, dt).states[-1]
    assert abs(two_time_correlator(tr, prop, "b", t, tau) - y[2]) < 1e-8


@given(params_strategy)
def test_indistinguishability_bounded_and_identity(params):
    r = indistinguishability(params)
    if not r.defined:
        return
    assert -1e-9 <= r.value <= 1 + 1e-9
    assert abs(r.identity_error) < 1e-8


@settings(max_examples=10)
@given(physical_params)
def test_spectral_matches_quadrature(params):
    tr = propagate(params)
    s = indistinguishability(params, method="spectral", trace=tr)
    q = indistinguishability(params, method="quadrature", trace=tr)
    assert q.method == "quadrature"
    assert abs(s.value - q.value) < 1e-4


@pytest.mark.parametrize("args", [(500, 50, 10, 1), (30, 50, 150, 300), (500, 5, 530, 1200)])
def test_dephasing_never_helps(args):
    vals = [indistinguishability(SystemParams(*args, gamma_star=gs)).value for gs in (0.0, 1e2, 1e4)]
    assert vals[0] >= vals[1] >= vals[2]


def test_no_dephasing_gives_unit_visibility(reg1):
    p = reg1.with_(gamma_star=0.0)
    assert indistinguishability(p).value == pytest.approx(1.0, abs=1e-3)
    assert indistinguishability(p, method="quadrature").value == pytest.approx(1.0, abs=1e-3)


def test_table_reg1_row():
    p = SystemParams(500, 360, 30, 5, gamma_star=SIV_GAMMA_STAR)
    assert indistinguishability(p).value == pytest.approx(0.950, abs=0.01)


def test_single_cavity_reference():
    p = SystemParams.single_cavity(500, 50)
    assert indistinguishability(p, "a").value == pytest.approx(0.14, abs=0.02)


def test_reg2_peak(reg2):
    assert indistinguishability(reg2).value == pytest.approx(0.27, abs=0.02)


def test_undefined_without_emission():
    r = indistinguishability(SystemParams(0, 1, 0, 1))
    assert not r.defined and np.isnan(r.value)


def test_gbb_variant_runs(reg1):
    full = indistinguishability(reg1).value
    gbb = indistinguishability(reg1, variant="gbb").value
    assert 0 < gbb <= 1 and gbb != full


def test_defective_propagator_uses_quadrature(reg1, monkeypatch):
    ref = indistinguishability(reg1)

    def broken(matrix, rtol=None):
        raise DegenerateSpectrum("forced")

    monkeypatch.setattr(correlator, "eig_dense", broken)
    r = indistinguishability(reg1)
    assert r.method == "quadrature"
    assert r.value == pytest.approx(ref.value, abs=1e-4)
    with pytest.raises(DegenerateGenerator):
        indistinguishability(reg1, method="spectral")


def test_bad_method(reg1):
    with pytest.raises(ValueError):
        indistinguishability(reg1, method="nope")
