import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab.weights import (arithmetic_mean, check_weight, log_mean, m_theta_closed_form, m_theta_numeric,
                             parse_phi, parse_theta, phi_alpha, theta_alpha, theta_from_phi)

positive = st.floats(1e-3, 1e3)
alphas = st.sampled_from([1.0, 1.2, 1.5, 1.75, 2.0])


def power_mean_oracle(alpha, s, t):
    """(s - t) / (phi'(s) - phi'(t)) written out for the generator family."""
    if alpha == 1.0:
        return (s - t) / (math.log(s) - math.log(t))
    return (alpha - 1) * (s - t) / (alpha * (s ** (alpha - 1) - t ** (alpha - 1)))


def test_generator_values():
    for a in (1.0, 1.3, 1.8, 2.0):
        assert phi_alpha(a).phi(1.0) == pytest.approx(0.0, abs=1e-15)
    assert phi_alpha(1.0).phi(math.e) == pytest.approx(1.0)
    t = np.linspace(0.1, 4, 9)
    assert np.allclose(phi_alpha(2.0).phi(t), (t - 1) ** 2)


def test_log_mean_values():
    th = log_mean()
    assert th(3.0, 3.0) == pytest.approx(3.0)
    assert th(1.0, math.e) == pytest.approx(math.e - 1)
    assert theta_alpha(2.0)(3.0, 7.0) == pytest.approx(0.5)


@settings(max_examples=200, deadline=None)
@given(alphas, positive, positive)
def test_power_means_match_oracle(alpha, s, t):
    if abs(s - t) < 1e-6 * max(s, t):
        return
    got = float(theta_alpha(alpha)(s, t))
    assert got == pytest.approx(power_mean_oracle(alpha, s, t), rel=1e-9)


def test_near_diagonal_is_continuous():
    for alpha in (1.0, 1.5, 1.75):
        th = theta_alpha(alpha)
        s = 2.0
        close = [float(th(s, s * (1 + h))) for h in (1e-4, 1e-6, 1e-9, 0.0)]
        assert np.allclose(close, close[-1], rtol=1e-3)


def test_generic_weight_from_generator():
    s = np.geomspace(0.05, 20, 15)
    S, T = np.meshgrid(s, s)
    assert np.allclose(theta_from_phi(phi_alpha(1.0))(S, T), log_mean()(S, T), rtol=1e-10)
    assert np.allclose(theta_from_phi(phi_alpha(2.0))(S, T), 0.5)
    assert theta_from_phi(phi_alpha(1.5))(4.0, 4.0) == pytest.approx(4.0 / 3.0)


@pytest.mark.parametrize("spec", ["log", "arith", "alpha:1.5", "alpha:1.9"])
def test_weight_checks(spec):
    rep = check_weight(parse_theta(spec))
    assert rep.ok, rep


def test_generic_weight_checks():
    assert check_weight(theta_from_phi(phi_alpha(1.3)), n_pairs=300).ok


def test_m_theta_closed_form_values():
    assert m_theta_closed_form(1.0) == 1.0
    assert m_theta_closed_form(1.5) == 1.0
    assert m_theta_closed_form(2.0) == 1.0
    assert m_theta_closed_form(1.75) == pytest.approx(2.0 / 3.0)


def test_m_theta_numeric_examples():
    lo, hi = m_theta_numeric(log_mean())
    assert lo <= 1.0 <= hi + 1e-12 and hi - 1.0 <= 1e-3
    lo, hi = m_theta_numeric(arithmetic_mean())
    assert lo == hi == 1.0
    # theta_{7/4}: the sampled minimum decreases toward 2/3 as the range grows
    his = [m_theta_numeric(theta_alpha(1.75), lam_max=lam)[1] for lam in (1e3, 1e6, 1e9)]
    assert his[0] > his[1] > his[2] > 2.0 / 3.0


def test_bad_inputs():
    with pytest.raises(ValueError):
        parse_theta("harmonic")
    with pytest.raises(ValueError):
        m_theta_numeric(log_mean(), lam_max=0.5)
    with pytest.raises(ValueError):
        phi_alpha(3.0)


def test_generator_table(tmp_path):
    t = np.linspace(0.05, 10, 200)
    gen = phi_alpha(1.0)
    rows = np.column_stack([t, gen.phi(t), gen.phi_prime(t), gen.phi_second(t)])
    path = tmp_path / "phi.csv"
    np.savetxt(path, rows, delimiter=",", header="t,phi,dphi,d2phi", comments="")
    table = parse_phi(str(path))
    x = np.array([0.3, 1.0, 4.2])
    assert np.allclose(table.phi(x), gen.phi(x), atol=1e-4)
