import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cascade_qed.correlator import indistinguishability
from cascade_qed.model import SystemParams
from cascade_qed.rates import (
    build_rate_model,
    characteristic_polynomial,
    characteristic_roots,
    efficiency_closed,
    efficiency_from_roots,
    effective_emitter,
    indistinguishability_closed,
    rate_efficiency,
    rate_integrals,
    rate_propagate,
    regime_flags,
    single_cavity_efficiency,
    transfer_rate_r1,
    transfer_rate_r2,
    transformation_matrix,
)

from conftest import params_strategy


def test_r1_example(reg1):
    assert transfer_rate_r1(reg1) == pytest.approx(99.49, abs=1e-2)


def test_r1_half_width(reg1):
    width = reg1.total_dephasing + reg1.kappa1
    assert transfer_rate_r1(reg1.with_(delta=width / 2)) == pytest.approx(transfer_rate_r1(reg1) / 2, rel=1e-14)


def test_r1_zero_coupling(reg1):
    assert transfer_rate_r1(reg1.with_(g1=0)) == 0


def test_r2_examples(reg1):
    assert transfer_rate_r2(reg1, 99.49) == pytest.approx(2.658, abs=1e-3)
    assert transfer_rate_r2(reg1, 0.0) == pytest.approx(4 * 100 / 51)
    assert transfer_rate_r2(reg1.with_(g2=0), 99.49) == 0


@given(params_strategy)
def test_matrix_columns_leak_only_radiatively(params):
    m = build_rate_model(params).matrix
    assert np.allclose(m.sum(axis=0), [-params.gamma, -params.kappa1, -params.kappa2])


@given(params_strategy)
def test_roots_negative_and_match_cubic(params):
    model = build_rate_model(params)
    roots = characteristic_roots(model)
    assert np.all(roots.real < 0)
    coeffs = model.cubic_coefficients
    s_product = np.prod(-roots).real
    assert s_product == pytest.approx(coeffs[-1], rel=1e-9)
    scale = np.max(np.abs(roots))
    for r in roots:
        assert abs(np.polyval(coeffs, r)) <= 1e-9 * scale**3


@given(params_strategy)
def test_roots_equal_matrix_eigenvalues(params):
    model = build_rate_model(params)
    ev = np.sort(np.linalg.eigvals(model.matrix).real)
    assert np.allclose(np.sort(characteristic_roots(model).real), ev, rtol=1e-9, atol=1e-9 * np.max(np.abs(ev)))


def test_roots_decoupled():
    model = build_rate_model(SystemParams(0, 3.0, 0, 7.0))
    assert sorted(characteristic_roots(model).real) == pytest.approx([-7, -3, -1])


def test_bare_emitter_trace():
    model = build_rate_model(SystemParams(0, 3.0, 2.0, 7.0))
    t = np.linspace(0, 3, 31)
    tr = rate_propagate(model, t)
    assert np.allclose(tr.p_e, np.exp(-t)) and np.allclose(tr.p_a, 0) and np.allclose(tr.p_b, 0)


def test_pb_initial_conditions(reg1):
    model = build_rate_model(reg1)
    h = 1e-6 / model.r1
    tr = rate_propagate(model, [0.0, h, 2 * h])
    assert abs(tr.p_b[0]) < 1e-15
    assert (tr.p_b[1] - tr.p_b[0]) / h == pytest.approx(0.0, abs=1e-3)
    assert (tr.p_b[2] - 2 * tr.p_b[1] + tr.p_b[0]) / h**2 == pytest.approx(model.r1 * model.r2, rel=0.01)


@given(params_strategy)
def test_rate_branching_complete(params):
    model = build_rate_model(params)
    integrals = rate_integrals(model)
    total = params.gamma * integrals[0] + params.kappa1 * integrals[1] + params.kappa2 * integrals[2]
    assert total == pytest.approx(1.0, abs=1e-12)


@given(params_strategy)
def test_efficiency_from_roots_equals_trace_integral(params):
    model = build_rate_model(params)
    assert efficiency_from_roots(model) == pytest.approx(rate_efficiency(model), rel=1e-9, abs=1e-15)


@given(params_strategy)
def test_closed_forms_in_range(params):
    eta, ind = efficiency_closed(params), indistinguishability_closed(params)
    if build_rate_model(params).r2 > 1e-200:
        assert 0 < eta < 1
    assert 0 < ind <= 1


@given(st.builds(SystemParams, st.floats(1, 1000), st.floats(0.1, 1000), st.floats(1, 1000), st.floats(0.1, 1000)))
def test_closed_efficiency_monotone(params):
    from cascade_qed.rates import _efficiency

    k1, k2 = params.kappa1, params.kappa2
    r2 = build_rate_model(params).r2
    h = 1e-6
    assert _efficiency(k1, k2, r2 * (1 + h)) > _efficiency(k1, k2, r2)
    assert _efficiency(k1 * (1 + h), k2, r2) < _efficiency(k1, k2, r2)


def test_closed_efficiency_lossless_c1(reg1):
    assert efficiency_closed(reg1.with_(kappa1=1e-12)) == pytest.approx(1.0, abs=1e-9)


def test_closed_efficiency_table_reg1():
    assert efficiency_closed(SystemParams(500, 360, 30, 5)) == pytest.approx(0.00839, abs=1e-5)


def test_gamma_free_closed_form_is_limit_of_rate_model(reg1):
    # the closed form drops the emitter's own decay against R1
    p = reg1.with_(gamma=1e-9)
    assert efficiency_closed(p) == pytest.approx(rate_efficiency(build_rate_model(p)), rel=1e-6)


def test_closed_ind_weak_c2_limit(reg1):
    p = reg1.with_(g2=1e-9)
    assert indistinguishability_closed(p) == pytest.approx((25) / (25 + 1), rel=1e-12)


def test_reg1_closed_ind_degrades_with_small_r1(reg1):
    r1 = transfer_rate_r1(reg1)

    def dev(k2):
        p = reg1.with_(kappa2=k2)
        return abs(indistinguishability(p).value - indistinguishability_closed(p))

    assert dev(r1 / 2) > dev(r1 / 50)


def test_effective_emitter(reg1):
    model = build_rate_model(reg1)
    eff = effective_emitter(model)
    r2 = model.r2
    assert np.allclose(eff.matrix, [[-(50 + r2) / 2, r2 / 2], [r2, -(1 + r2)]])
    assert eff.pb_decay_rate == pytest.approx(3.094, abs=1e-3)


def test_effective_emitter_no_c2_coupling(reg1):
    eff = effective_emitter(build_rate_model(reg1.with_(g2=0)))
    assert np.allclose(eff.matrix, np.diag([-25.0, -1.0]))
    assert eff.pb_decay_rate == pytest.approx(50 / 52)


def test_effective_emitter_exact_slow_rate(reg1):
    model = build_rate_model(reg1)
    slowest = abs(characteristic_roots(model)[0].real)
    assert effective_emitter(model).slowest_rate == pytest.approx(slowest, rel=3e-3)


def test_transformation_limits(reg1):
    model = build_rate_model(reg1)
    exact = transformation_matrix(model, exact=True)
    approx = transformation_matrix(model, exact=False)
    assert exact.shape == approx.shape == (3, 3)
    big = build_rate_model(reg1.with_(g1=1e5, kappa1=1e-3, g2=1e-3))
    assert np.allclose(transformation_matrix(big), approx, atol=1e-3)


def test_regimes():
    assert regime_flags(SystemParams(1, 50, 1, 1), 100.0, 2.0).regime == "reg1"
    assert regime_flags(SystemParams(1, 50, 1, 300), 100.0, 400.0).regime == "reg2"
    f = regime_flags(SystemParams(1, 50, 1, 300), 100.0, 2.0)
    assert f.regime == "mixed" and not f.reg1_formula_valid


def test_single_cavity_efficiency_formula():
    p = SystemParams.single_cavity(500, 667, gamma_star=0.0)
    r = 4 * 500**2 / 668
    assert single_cavity_efficiency(p) == pytest.approx(667 * r / (667 * r + 667 + r))


def test_polynomial_leading_coefficient(reg1):
    m = build_rate_model(reg1)
    assert characteristic_polynomial(reg1, m.r1, m.r2)[0] == 1.0
