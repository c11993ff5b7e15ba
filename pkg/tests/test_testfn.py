import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from critspec.errors import DomainError
from critspec.testfn import (Combination, bump_derivatives, make_test_function, phi_eval,
                             plancherel_defect, weyl_kill_check)

# integral of exp(-1/(1-u^2)) over [-1, 1]
BUMP_MASS = 0.44399381616807943

SYM = make_test_function(3, -1.0, 1.0)
ONE = make_test_function(0, 0.2, math.pi - 0.2, "one_sided")


def test_bump_mass():
    tf = make_test_function(0, -1.0, 1.0)
    assert tf.hat_integral().real == pytest.approx(BUMP_MASS, rel=1e-9)
    assert tf.phi(0.0).real == pytest.approx(BUMP_MASS / (2 * math.pi), rel=1e-9)


def test_bump_derivatives_match_finite_differences():
    u = np.linspace(-0.9, 0.9, 41)
    d = bump_derivatives(u, 3)
    step = 1e-5
    for m in range(3):
        hi = bump_derivatives(u + step, m)[m]
        lo = bump_derivatives(u - step, m)[m]
        np.testing.assert_allclose(d[m + 1], (hi - lo) / (2 * step), rtol=1e-5, atol=1e-8)


@given(st.floats(-150.0, 150.0))
def test_cache_matches_direct_quadrature(s):
    for tf in (SYM, ONE):
        peak = abs(tf.phi(0.0)) + abs(tf.hat_integral()) / (2 * math.pi)
        assert abs(tf.phi(s) - tf.phi_direct(s)[0]) <= 1e-8 * peak


def test_hat_integral_is_two_pi_phi0():
    for tf in (SYM, ONE):
        assert tf.hat_integral() == pytest.approx(2 * math.pi * tf.phi(0.0), rel=1e-8)


@pytest.mark.parametrize("tf", [SYM, ONE, make_test_function(1, -2.0, 2.0)])
def test_plancherel(tf):
    assert plancherel_defect(tf) <= 1e-6


def test_decay_slope_j0_3():
    # super-polynomial decay; the slope over [10, 100] depends on the support
    # scale, [-4, 4] puts this range in the asymptotic regime
    tf = make_test_function(3, -4.0, 4.0)
    s = np.linspace(10, 100, 4000)
    a = np.abs(tf.phi(s))
    blocks = np.array_split(np.arange(len(s)), 30)
    xs = [s[b][np.argmax(a[b])] for b in blocks]
    ys = [a[b].max() for b in blocks]
    assert np.polyfit(np.log(xs), np.log(ys), 1)[0] <= -6


@given(st.floats(0.0, 3000.0))
def test_decay_bound_dominates(s):
    for tf in (SYM, ONE):
        # beyond the cache phi is direct quadrature with ~1e-16 absolute round-off
        roundoff = 1e-14 * tf.decay_constants[0]
        for x in (s, -s):
            assert abs(tf.phi(x)) <= tf.decay_bound(x) + roundoff


def test_tail_sum_bound_dominates_lattice_sums():
    # points with spacing 1/density beyond s0 on the right
    for tf in (SYM, ONE):
        for s0, density in ((20.0, 2.0), (60.0, 0.5)):
            pts = s0 + np.arange(0, 200000) / density
            pts = pts[pts <= tf.effective_s_max]
            total = np.sum(np.abs(tf.phi(pts)))
            assert total <= tf.tail_sum_bound(s0, density, side=1)


def test_effective_s_max():
    assert SYM.effective_s_max >= 200
    assert float(SYM.pw_bound(SYM.effective_s_max)) <= 1e-13 * SYM.decay_constants[0] or \
        SYM.effective_s_max >= 20000
    assert make_test_function(3, -1.0, 1.0, s_max=300.0).effective_s_max == 300.0


def test_lipschitz_bounds_derivative():
    s = np.linspace(-50, 50, 20001)
    v = SYM.phi(s)
    slope = np.max(np.abs(np.diff(v)) / np.diff(s))
    assert slope <= SYM.lipschitz * (1 + 1e-6)


def test_weyl_kill_examples():
    assert weyl_kill_check(make_test_function(3, -1.0, 1.0))
    assert not weyl_kill_check(make_test_function(0, -1.0, 1.0))
    assert weyl_kill_check(make_test_function(0, 0.5, 2.0, "one_sided"))


@given(st.floats(-40.0, 40.0), st.floats(-3.0, 3.0))
def test_shift_and_reflection(s, c):
    assert ONE.with_shift(c).phi(s) == pytest.approx(ONE.phi(s + c), abs=1e-10)
    assert ONE.reflected().phi(s) == pytest.approx(ONE.phi(-s), abs=1e-10)


@given(st.floats(-30.0, 30.0), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_combination_is_linear(s, a, b):
    combo = Combination(((a, SYM), (b, ONE)))
    assert combo.phi(s) == pytest.approx(a * SYM.phi(s) + b * ONE.phi(s), abs=1e-12)
    assert phi_eval(SYM, s) == SYM.phi(s)


def test_symmetric_phi_is_real():
    s = np.linspace(-20, 20, 101)
    assert np.max(np.abs(SYM.phi(s).imag)) <= 1e-15
    assert SYM.is_real and not ONE.is_real


def test_domain_errors():
    with pytest.raises(DomainError):
        make_test_function(0, 1.0, 0.5, "one_sided")
    with pytest.raises(DomainError):
        make_test_function(0, -1.0, 2.0)  # symmetric needs [-T, T]
    with pytest.raises(DomainError):
        make_test_function(0, -1.0, 1.0, "one_sided")
    with pytest.raises(DomainError):
        make_test_function(-1, -1.0, 1.0)


def test_json_roundtrip_fields():
    d = ONE.to_json()
    assert d["j0"] == 0 and d["support"] == [0.2, math.pi - 0.2] and d["mode"] == "one_sided"
