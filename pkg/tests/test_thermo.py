import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from aclab import ThermoParams, c_mu_t, fermi, fermi_derivative_neg, pair_weight

finite_energy = st.floats(min_value=-50.0, max_value=50.0,
                          allow_nan=False, allow_infinity=False)


def test_fermi_midpoint():
    assert fermi(0.0, ThermoParams(1.0, 0.0)) == 0.5


def test_fermi_step_branch():
    p = ThermoParams(0.0, 0.3)
    assert fermi(0.3, p) == 1.0
    assert fermi(0.3 + 1e-12, p) == 0.0
    assert fermi(-5.0, p) == 1.0


def test_fermi_saturates_without_overflow():
    p = ThermoParams(1.0, 0.0)
    with np.errstate(over="raise"):
        assert fermi(700.0, p) == pytest.approx(0.0, abs=1e-300)
        assert fermi(1000.0, p) == 0.0
        assert fermi(-700.0, p) == 1.0


def test_derivative_peak_value():
    p = ThermoParams(0.25, 1.5)
    assert fermi_derivative_neg(1.5, p) == pytest.approx(1.0 / (4 * 0.25), rel=1e-14)


def test_derivative_integrates_to_one():
    p = ThermoParams(0.7, -0.4)
    value, _ = quad(lambda e: fermi_derivative_neg(e, p), -60, 60, epsabs=1e-12)
    assert value == pytest.approx(1.0, abs=1e-10)


def test_derivative_even_about_mu():
    p = ThermoParams(0.5, 2.0)
    x = np.linspace(0.0, 8.0, 33)
    assert np.allclose(fermi_derivative_neg(2.0 + x, p),
                       fermi_derivative_neg(2.0 - x, p), rtol=1e-13)


def test_derivative_rejects_t_zero():
    with pytest.raises(ValueError):
        fermi_derivative_neg(0.0, ThermoParams(0.0, 0.0))


def test_pair_weight_step_quotient():
    assert pair_weight(1.0, -1.0, ThermoParams(0.0, 0.0), 1e-10) == 0.5


def test_pair_weight_closed_form_tanh():
    value = pair_weight(1.0, -1.0, ThermoParams(1.0, 0.0), 1e-10)
    assert value == pytest.approx(np.tanh(0.5) / 2.0, rel=1e-14)


def test_pair_weight_degenerate_limit():
    p = ThermoParams(1.0, 2.0)
    assert pair_weight(2.0, 2.0, p, 1e-10) == pytest.approx(0.25, rel=1e-14)
    # T = 0 degenerate pairs carry no difference-quotient weight
    assert pair_weight(2.0, 2.0, ThermoParams(0.0, 2.0), 1e-10) == 0.0


@settings(max_examples=200, deadline=None)
@given(finite_energy, finite_energy, st.floats(min_value=0.05, max_value=20.0),
       finite_energy)
def test_pair_weight_symmetric_bounded(e_n, e_m, temperature, mu):
    p = ThermoParams(temperature, mu)
    w_nm = pair_weight(e_n, e_m, p, 1e-10)
    w_mn = pair_weight(e_m, e_n, p, 1e-10)
    assert w_nm == w_mn
    # mean-value bound up to quotient cancellation (~ ulp / gap)
    cancellation = 1e-15 / max(abs(e_n - e_m), 1e-10)
    assert 0.0 <= w_nm <= 1.0 / (4.0 * temperature) + cancellation


@settings(max_examples=100, deadline=None)
@given(finite_energy, finite_energy, st.floats(min_value=0.05, max_value=5.0))
def test_fermi_monotone_nonincreasing(e_lo, e_hi, temperature):
    p = ThermoParams(temperature, 0.3)
    lo, hi = min(e_lo, e_hi), max(e_lo, e_hi)
    f_lo, f_hi = fermi(lo, p), fermi(hi, p)
    assert 0.0 <= f_hi <= f_lo <= 1.0


def test_pair_weight_equals_quadrature_of_step_weights():
    # the thermal quotient is the (-f)' average of zero-temperature quotients
    p = ThermoParams(0.6, 0.2)
    e_n, e_m = 1.3, -0.7
    direct = pair_weight(e_n, e_m, p, 1e-12)

    def integrand(level):
        step = ThermoParams(0.0, level)
        return fermi_derivative_neg(level, p) * pair_weight(e_n, e_m, step, 1e-12)

    value, _ = quad(integrand, -40, 40, epsabs=1e-13, limit=200,
                    points=[e_m, e_n])
    assert value == pytest.approx(direct, abs=1e-9)


def test_c_mu_t_endpoint_value():
    p = ThermoParams(4.0, 0.0)
    value = c_mu_t(p, (-2.0, 2.0), convention=1)
    assert value == pytest.approx(1.0 / np.cosh(1.0) ** 2, rel=1e-12)


def test_c_mu_t_high_temperature_limit():
    assert c_mu_t(ThermoParams(1e9, 0.0), (-2.0, 2.0)) == pytest.approx(1.0, abs=1e-12)


def test_c_mu_t_decreases_as_mu_leaves_interval():
    bounds = (-3.0, 3.0)
    values = [c_mu_t(ThermoParams(2.0, mu), bounds) for mu in (0.0, 2.0, 5.0, 9.0)]
    assert np.all(np.diff(values) < 0)


def test_c_mu_t_in_unit_interval_and_below_derivative_inf():
    # c = 2 never exceeds the actual minimum of 4T (-f)' over the bounds
    p = ThermoParams(0.8, 0.6)
    bounds = (-2.5, 3.1)
    c2 = c_mu_t(p, bounds, convention=2)
    assert 0.0 < c2 <= 1.0
    grid = np.linspace(bounds[0], bounds[1], 2001)
    inf_scaled = (4.0 * p.temperature * fermi_derivative_neg(grid, p)).min()
    assert c2 <= inf_scaled * (1 + 1e-12)


def test_c_mu_t_validation():
    with pytest.raises(ValueError):
        c_mu_t(ThermoParams(0.0, 0.0), (-2.0, 2.0))
    with pytest.raises(ValueError):
        c_mu_t(ThermoParams(1.0, 0.0), (-2.0, 2.0), convention=3)


def test_thermo_params_validation():
    with pytest.raises(ValueError):
        ThermoParams(-0.1, 0.0)
