import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from critspec.errors import DomainError
from critspec.potential import double_well, harmonic
from critspec.quantum1d import Spectrum, compute_spectrum
from critspec.specdist import NO_CONTRAST, e_scan, find_profile_peaks, h_sweep, upsilon
from critspec.testfn import Combination, make_test_function

ONE3 = make_test_function(3, 0.2, math.pi - 0.2, "one_sided")
SYM = make_test_function(3, -1.0, 1.0)
SPEC = compute_spectrum(double_well(), 0.02, (0.5, 1.5), 0.1)


def _exact_harmonic(h, top):
    lam = h * (2 * np.arange(int(top / (2 * h)) + 2) + 1)
    lam = lam[lam <= top]
    return Spectrum(h, (0.0, top), lam, np.zeros(len(lam)), 0, 1.0, 1, False, {"tol": 1e-12})


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.6, 1.4))
def test_linearity(a, b, E):
    combo = Combination(((a, SYM), (b, ONE3)))
    lhs = upsilon(SPEC, E, combo)
    rhs = a * upsilon(SPEC, E, SYM) + b * upsilon(SPEC, E, ONE3)
    scale = abs(a * upsilon(SPEC, E, SYM)) + abs(b * upsilon(SPEC, E, ONE3)) + 1e-300
    assert abs(lhs - rhs) <= 1e-12 * scale


@pytest.mark.parametrize("E", [0.7, 1.0, 1.3])
def test_truncation_insensitivity(E):
    short = make_test_function(3, -1.0, 1.0, s_max=200.0)
    full = upsilon(SPEC, E, SYM)
    cut = upsilon(SPEC, E, short, full=True)
    assert abs(full - cut.value) <= cut.tail_bound


def test_harmonic_solver_against_exact_ladder():
    # discretization residual after extrapolation, propagated through phi
    for h in (0.05, 0.02, 0.01):
        spec = compute_spectrum(harmonic(), h, (0.0, 2.0))
        assert abs(upsilon(spec, 1.0, ONE3) - upsilon(_exact_harmonic(h, 2.0), 1.0, ONE3)) <= 2e-6


def test_harmonic_regular_level_is_below_floor():
    # Poisson summation: phi_hat vanishes at every multiple of pi, so the
    # full-ladder sum is zero and only the truncated ends remain
    for h in (0.02, 0.01):
        u = upsilon(_exact_harmonic(h, 2.0), 1.0, ONE3, full=True)
        neg = np.sum(np.abs(ONE3.phi((h * (2 * np.arange(-2000, 0) + 1) - 1.0) / h)))
        assert abs(u.value) <= u.tail_bound + neg


def test_upsilon_bounds_fields():
    u = upsilon(SPEC, 1.0, SYM, full=True)
    assert u.floor == u.tail_bound + u.noise_bound and u.count > 0
    with pytest.raises(DomainError):
        upsilon(SPEC, 3.0, SYM)


H_SHORT = np.geomspace(0.05, 0.015, 6)


def test_sweep_outputs_and_worker_independence():
    a = h_sweep(harmonic(), 1.0, ONE3, H_SHORT, workers=1)
    b = h_sweep(harmonic(), 1.0, ONE3, H_SHORT, workers=3)
    assert np.array_equal(a.values, b.values) and a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == "h,re,im,abs,tail_bound,noise_bound,count"
    assert len(a.to_csv().splitlines()) == 7
    d = a.to_json()
    assert d["window"] == [0.0, 2.0] and d["eps"] == pytest.approx(0.2)
    assert d["provenance"]["potential"]["kind"] == "harmonic"


def test_sweep_validation():
    with pytest.raises(DomainError):
        h_sweep(harmonic(), 1.0, ONE3, [0.01, 0.02])
    with pytest.raises(DomainError):
        h_sweep(harmonic(), 1.0, ONE3, [])
    with pytest.raises(DomainError):
        h_sweep(harmonic(), 1.0, ONE3, [0.02], window=(1.5, 2.0))


def test_sweep_error_names_h():
    with pytest.raises(DomainError, match="h=0.05"):
        h_sweep(harmonic(box=1.2), 1.0, ONE3, [0.05], window=(0.0, 2.0))


def test_scan_warns_without_flatness():
    prof = e_scan(double_well(), 0.02, make_test_function(0, -0.25, 0.25), np.linspace(-0.1, 1.3, 29))
    assert prof.warning == NO_CONTRAST and prof.peaks == ()
    assert prof.to_csv().splitlines()[0] == "E,re,im,abs,floor"


def test_find_profile_peaks():
    E = np.linspace(0, 2, 201)
    y = 0.1 + np.exp(-((E - 0.5) / 0.03) ** 2) + 0.7 * np.exp(-((E - 1.4) / 0.05) ** 2)
    assert find_profile_peaks(E, y) == pytest.approx((0.5, 1.4))
    assert find_profile_peaks(E, np.ones_like(E)) == ()
    assert find_profile_peaks(E, 0.1 + 0.01 * np.sin(40 * E) ** 2) == ()
