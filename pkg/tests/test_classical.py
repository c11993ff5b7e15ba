import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critspec.classical import (PhasePoint, alphas_to_hessian_eigenvalues, calibrate_reparametrization,
                                closed_form_density, density_from_hessian, dgu_density, hessian_alphas,
                                integrate_flow, linearized_flow, mehler_kernel, minimal_period_search,
                                period_lower_bound)
from critspec.errors import DimensionError, DomainError, SingularTimeError
from critspec.potential import double_well, harmonic, polynomial, power, quadratic


def test_harmonic_orbit_closes():
    res = integrate_flow(harmonic(), PhasePoint([1.0], [0.0]), math.pi)
    fin = res.final
    assert fin.x[0] == pytest.approx(1.0, abs=1e-9) and fin.xi[0] == pytest.approx(0.0, abs=1e-9)


def test_harmonic_quarter_period_monodromy():
    # x' = 2 xi, xi' = -2x: rotation by 2t
    M = linearized_flow(harmonic(), [0.0], math.pi / 4)
    np.testing.assert_allclose(M, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-9)
    assert dgu_density(harmonic(), [0.0], math.pi / 4) == pytest.approx(2 ** -0.5, rel=1e-10)


quartic_2d = polynomial([[(4, 0), 1.0], [(0, 4), 1.0], [(2, 2), 0.5], [(2, 0), 0.3]], dim=2)


@settings(max_examples=6)
@given(st.floats(-1.2, 1.2), st.floats(-1.2, 1.2), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_symplectic_and_energy_conserving(x1, x2, p1, p2):
    for pot, z in ((quartic_2d, PhasePoint([x1, x2], [p1, p2])), (double_well(), PhasePoint([x1], [p1]))):
        res = integrate_flow(pot, z, 1.0, record_every=200)
        assert res.energy_drift() <= 1e-8  # relative to 1 + |E0|
        assert np.max(np.abs(res.det_monodromy() - 1.0)) <= 1e-6


def test_flow_csv_columns():
    res = integrate_flow(harmonic([1.0, 2.0]), PhasePoint([0.5, 0.1], [0.0, 0.2]), 0.1, record_every=50)
    head = res.to_csv().splitlines()[0]
    assert head == "t,x0,x1,xi0,xi1,energy,det_monodromy"


def test_leaving_the_box_is_flagged():
    pot = harmonic(box=1.0)
    res = integrate_flow(pot, PhasePoint([0.0], [2.0]), 1.0, with_monodromy=False)
    assert res.left_box


def test_yorke_bounds():
    assert period_lower_bound(harmonic(), (0.0, 1.0)) == pytest.approx(math.pi)
    # sup |V''| = 12 x^2 = 12 on {x^4 <= 1}
    assert period_lower_bound(power(2), (0.0, 1.0)) == pytest.approx(2 * math.pi / 12, rel=1e-9)
    with pytest.raises(DomainError):
        period_lower_bound(harmonic(box=1.0), (0.0, 4.0))


@pytest.mark.parametrize("pot,energies", [(harmonic(), (0.3, 1.0, 2.0)), (power(2), (0.2, 0.7, 1.5)),
                                          (double_well(), (0.5, 1.4, 2.5))])
def test_periods_respect_yorke(pot, energies):
    for E in energies:
        T = minimal_period_search(pot, E)
        assert T is not None and T >= period_lower_bound(pot, (E - 0.1, E + 0.1)) - 1e-9
        if pot.name == "harmonic":
            assert abs(T - math.pi) <= 1e-3


def test_quartic_period_oracle():
    # period of xi^2 + x^4 = E: 2 * integral dx / sqrt(E - x^4) over the well,
    # = Gamma(1/4)^2 / (sqrt(2 pi) E^(1/4)) with x' = 2 xi
    E = 0.7
    exact = math.gamma(0.25) ** 2 / math.sqrt(2 * math.pi) / E ** 0.25 / 2
    assert minimal_period_search(power(2), E) == pytest.approx(exact, rel=1e-6)


@pytest.mark.parametrize("hess", [np.diag([2.0]), np.diag([-4.0]), np.diag([2.0, 6.0]),
                                  np.diag([2.0, -3.0]), np.array([[1.0, 0.5], [0.5, -2.0]])])
def test_density_matches_closed_form(hess):
    pot = quadratic(0.5 * hess)
    al = hessian_alphas(hess)
    ell = [a for a, s in al if s > 0]
    T = math.pi / max(ell) if ell else 2.0
    for t in np.linspace(0.1 * T, 0.9 * T, 7):
        num = dgu_density(pot, np.zeros(len(hess)), t)
        assert num == pytest.approx(density_from_hessian(hess, t), rel=1e-6)


def test_closed_form_values():
    assert closed_form_density([(1.0, "elliptic")], math.pi / 2) == pytest.approx(1.0)
    assert closed_form_density([(1.0, -1)], 1.0) == pytest.approx(1 / math.sinh(1.0))
    with pytest.raises(SingularTimeError):
        closed_form_density([(1.0, 1)], math.pi)


@given(st.lists(st.floats(0.1, 5.0).flatmap(lambda a: st.sampled_from([a, -a])), min_size=1, max_size=3))
def test_alpha_hessian_roundtrip(mu):
    back = alphas_to_hessian_eigenvalues(hessian_alphas(np.diag(mu)))
    np.testing.assert_allclose(np.sort(back), np.sort(mu), rtol=1e-12)


def test_calibration():
    w, c = calibrate_reparametrization()
    assert w == pytest.approx(1.0, abs=1e-6) and c == pytest.approx(0.5, abs=1e-6)


def test_density_errors():
    with pytest.raises(SingularTimeError):
        dgu_density(harmonic(), [0.0], math.pi)
    with pytest.raises(DomainError):
        dgu_density(harmonic(), [0.5], 0.3)


def test_mehler_kernel():
    amp, S = mehler_kernel([1.0], math.pi / 2, [1.0], [1.0])
    assert S == pytest.approx(-1.0)
    assert abs(amp) == pytest.approx(math.sqrt(1 / (2 * math.pi)))
    with pytest.raises(SingularTimeError):
        mehler_kernel([1.0], math.pi, [0.0], [0.0])


def test_phase_point_validation():
    with pytest.raises(DimensionError):
        PhasePoint([0.0, 1.0], [0.0])
    with pytest.raises(DomainError):
        PhasePoint([np.nan], [0.0])
