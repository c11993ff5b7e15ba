"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line detail; the terminal summary prints a
PASS/FAIL line per criterion.
"""
import math
import time

import numpy as np
import pytest
from scipy.stats import special_ortho_group

from critspec.classical import (PhasePoint, closed_form_density, density_from_hessian, dgu_density,
                                hessian_alphas, integrate_flow, minimal_period_search, period_lower_bound)
from critspec.detector import (classify_level, default_test_function, density_from_quantum, fit_power_log,
                               hessian_from_quantum, infer_degree, log_probe, recover_hessian_spectrum,
                               recover_spherical_mean_ratio)
from critspec.invariants import exponent, min_functional
from critspec.potential import (Polynomial, double_well, find_critical_points, harmonic, polynomial, power,
                                quadratic, spherical_mean)
from critspec.quantum1d import compute_spectrum, count_eigenvalues, weyl_count
from critspec.specdist import h_sweep, upsilon
from critspec.testfn import Combination, make_test_function

ONE_SIDED_3 = make_test_function(3, 0.2, math.pi - 0.2, "one_sided")
ONE_SIDED_0 = make_test_function(0, 0.2, math.pi - 0.2, "one_sided")


def _say(record_property, text):
    record_property("detail", text)
    print(text)


@pytest.mark.acceptance(1, "harmonic eigenvalue oracle")
def test_c01_harmonic_oracle(record_property):
    t0 = time.perf_counter()
    spec = compute_spectrum(harmonic(), 0.05, (0.0, 1.0))
    elapsed = time.perf_counter() - t0
    exact = 0.05 * (2 * np.arange(len(spec.eigenvalues)) + 1)
    err = float(np.max(np.abs(spec.eigenvalues - exact)))
    _say(record_property, f"{len(exact)} eigenvalues, max error {err:.2e}, {elapsed:.2f} s")
    assert len(exact) == 10 and err <= 1e-6 and elapsed <= 10


@pytest.mark.acceptance(2, "Weyl count")
def test_c02_weyl_count(record_property):
    h = 0.01
    n2 = count_eigenvalues(compute_spectrum(harmonic(), h, (0.0, 1.0)), 0.0, 1.0)
    w2 = weyl_count(harmonic(), 0.0, 1.0, h)
    n4 = count_eigenvalues(compute_spectrum(power(2), h, (0.0, 1.0)), 0.0, 1.0)
    w4 = weyl_count(power(2), 0.0, 1.0, h)
    rel = abs(n4 - w4) / w4
    _say(record_property, f"x^2: {n2} vs {w2:.6f}; x^4: {n4} vs {w4:.3f} ({100 * rel:.2f}%)")
    assert n2 == 50 and w2 == pytest.approx(50.0, abs=1e-6)
    assert rel <= 0.03


@pytest.mark.slow
@pytest.mark.acceptance(3, "regular-level decay")
def test_c03_regular_decay(record_property):
    t0 = time.perf_counter()
    sw = h_sweep(harmonic(), 1.0, ONE_SIDED_3, window=(0.5, 1.5))
    elapsed = time.perf_counter() - t0
    fit = fit_power_log(sw)
    below = "all below tail bound" if fit.numerically_zero else "above floor"
    _say(record_property, f"slope {fit.alpha:.3g} ({below}), max |U| {np.max(sw.abs_values):.2e}, {elapsed:.1f} s")
    assert fit.alpha >= 3
    assert elapsed <= 300


@pytest.mark.slow
@pytest.mark.acceptance(4, "minimum exponent, k = 2")
def test_c04_quartic_minimum(record_property):
    pot = power(2)
    v = classify_level(pot, 0.0, default_test_function(pot, 0.0), window=(-1.0, 1.0))
    _say(record_property, f"alpha {v.fit.alpha:.4f}, m={v.fit.m}, rms {v.fit.rms:.3g}")
    assert v.fit.m == 0 and abs(v.fit.alpha + 0.25) <= 0.05


@pytest.mark.slow
@pytest.mark.acceptance(5, "minimum exponent, k = 1")
def test_c05_harmonic_minimum(record_property):
    sw = h_sweep(harmonic(), 0.0, ONE_SIDED_0, window=(-1.0, 1.0))
    fit = fit_power_log(sw)
    tail = float(np.max(sw.tail_bounds))
    _say(record_property, f"alpha {fit.alpha:.4f}, m={fit.m}, C {fit.C:.4g}, max tail bound {tail:.2e}")
    assert fit.m == 0 and abs(fit.alpha) <= 0.05
    assert fit.C >= 10 * tail


@pytest.mark.slow
@pytest.mark.acceptance(6, "log term at a barrier top")
def test_c06_barrier_log(record_property):
    lp = log_probe(double_well(), 1.0)
    fit = lp.fit
    _say(record_property, f"{lp.reason}; " + (f"m={fit.m}, alpha {fit.alpha:.4f}" if fit else "no fit"))
    assert lp.detected and fit.m == 1 and abs(fit.alpha) <= 0.1


@pytest.mark.acceptance(7, "degree roundtrip")
def test_c07_degree_roundtrip(record_property):
    hits = sum(infer_degree(exponent(n, k), n) == k for n in (1, 2, 3) for k in (1, 2, 3))
    _say(record_property, f"{hits}/9")
    assert hits == 9


@pytest.mark.slow
@pytest.mark.acceptance(8, "spherical-mean ratio")
def test_c08_spherical_mean_ratio(record_property):
    a, b = power(2), power(2, 16.0)
    expected = spherical_mean(find_critical_points(a)[0]) / spherical_mean(find_critical_points(b)[0])
    tf = default_test_function(b, 0.0)
    r = recover_spherical_mean_ratio(a, b, (0.0, 0.0), tf)
    _say(record_property, f"ratio {r.ratio:.4f} (closed form {expected:.4f})")
    assert expected == pytest.approx(2.0, rel=1e-9)
    assert abs(r.ratio - 2.0) <= 0.2 * 2.0


@pytest.mark.acceptance(9, "period lower bound")
def test_c09_period_bound(record_property):
    cases = ((harmonic(), (0.3, 1.0, 2.0)), (power(2), (0.2, 0.7, 1.5)), (double_well(), (0.5, 1.4, 2.5)))
    worst = math.inf
    for pot, energies in cases:
        for E in energies:
            T = minimal_period_search(pot, E)
            bound = period_lower_bound(pot, (E - 0.1, E + 0.1))
            assert T is not None and T >= bound - 1e-9
            worst = min(worst, T / bound)
            if pot.name == "harmonic":
                assert abs(T - bound) <= 1e-3
    _say(record_property, f"9/9 orbits, smallest period / bound {worst:.4f}")


@pytest.mark.acceptance(10, "density oracle")
def test_c10_density_oracle(record_property):
    models = (np.diag([2.0]), np.diag([-4.0]), np.diag([2.0, 6.0]), np.diag([2.0, -3.0]),
              np.array([[1.0, 0.5], [0.5, -2.0]]))
    worst = 0.0
    for hess in models:
        pot = quadratic(0.5 * hess)
        ell = [a for a, s in hessian_alphas(hess) if s > 0]
        T = math.pi / max(ell) if ell else 2.0
        for t in np.linspace(0.1 * T, 0.9 * T, 9):
            ref = density_from_hessian(hess, t)
            worst = max(worst, abs(dgu_density(pot, np.zeros(len(hess)), t) / ref - 1))
    _say(record_property, f"{len(models)} models, max relative error {worst:.2e}")
    assert worst <= 1e-6


def _synthetic_samples(alphas, noise, rng, n_pts=40):
    ell = [a for a, s in alphas if s > 0]
    T = math.pi / max(ell) if ell else 3.0
    t = np.linspace(0.08 * T, 0.92 * T, n_pts)
    return list(zip(t, closed_form_density(alphas, t) * (1 + noise * rng.standard_normal(n_pts))))


@pytest.mark.slow
@pytest.mark.acceptance(11, "Hessian spectrum recovery")
def test_c11_hessian_recovery(record_property):
    rng = np.random.default_rng(2024)
    cases = ([(1.0, 1)], [(1.4, -1)], [(0.8, -1), (1.3, 1)], [(0.6, 1), (1.1, 1)],
             [(0.7, -1), (1.2, -1), (0.9, 1)])
    worst = 0.0
    for alphas in cases:
        for _ in range(3):
            res = recover_hessian_spectrum(_synthetic_samples(alphas, 0.01, rng), len(alphas))
            assert res.r == sum(1 for _, s in alphas if s < 0)
            for sign in (-1, 1):
                got = sorted(a for a, s in res.alphas if s == sign)
                want = sorted(a for a, s in alphas if s == sign)
                assert len(got) == len(want)
                worst = max([worst] + [abs(g / w - 1) for g, w in zip(got, want)])
    pot = harmonic()
    cp = find_critical_points(pot)[0]
    samples = density_from_quantum(pot, cp, 0.0, np.linspace(0.45, 2.65, 16),
                                   h_list=np.geomspace(0.05, 0.01, 6))
    q = hessian_from_quantum(samples, 1)
    (alpha, sign), = q.alphas
    _say(record_property, f"synthetic worst {100 * worst:.2f}%; quantum x^2 alpha {alpha:.4f} (r={q.r})")
    assert worst <= 0.02
    assert q.r == 0 and abs(alpha - 1.0) <= 0.1


@pytest.mark.acceptance(12, "property suites")
def test_c12_properties(record_property):
    rng = np.random.default_rng(12)
    quartic_2d = polynomial([[(4, 0), 1.0], [(0, 4), 1.0], [(2, 2), 0.5], [(2, 0), 0.3]], dim=2)
    det_err = drift = 0.0
    for _ in range(3):
        x, p = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        res = integrate_flow(quartic_2d, PhasePoint(x, p), 1.0, record_every=200)
        drift = max(drift, res.energy_drift())
        det_err = max(det_err, float(np.max(np.abs(res.det_monodromy() - 1))))
    assert det_err <= 1e-6 and drift <= 1e-8

    spec = compute_spectrum(double_well(), 0.02, (0.5, 1.5), 0.1)
    sym = make_test_function(3, -1.0, 1.0)
    lin = 0.0
    for a, b, E in rng.uniform([-3, -3, 0.6], [3, 3, 1.4], (5, 3)):
        u1, u2 = upsilon(spec, E, sym), upsilon(spec, E, ONE_SIDED_3)
        lhs = upsilon(spec, E, Combination(((a, sym), (b, ONE_SIDED_3))))
        lin = max(lin, abs(lhs - a * u1 - b * u2) / (abs(a * u1) + abs(b * u2)))
    assert lin <= 1e-12

    short = make_test_function(3, -1.0, 1.0, s_max=200.0)
    for E in (0.7, 1.0, 1.3):
        cut = upsilon(spec, E, short, full=True)
        assert abs(upsilon(spec, E, sym) - cut.value) <= cut.tail_bound

    inv = 0.0
    for _ in range(3):
        lam = rng.uniform(0.3, 3.0, 2)
        R = special_ortho_group.rvs(2, random_state=rng)
        (cp0,) = find_critical_points(quadratic(np.diag(lam)), seeds=5)
        (cp1,) = find_critical_points(quadratic(R @ np.diag(lam) @ R.T), seeds=5)
        inv = max(inv, abs(spherical_mean(cp0) - spherical_mean(cp1)))
    g = Polynomial({(2, 0): 1.3, (1, 1): 0.4, (0, 2): 0.7}, 2)
    for j in (2, 3):
        inv = max(inv, abs(spherical_mean(g.power(j), 2 * j) - spherical_mean(g, 2)))
    assert inv <= 1e-8

    bf_err = _min_functional_brute_force_error()
    assert bf_err <= 1e-4
    _say(record_property, f"det {det_err:.1e}, energy {drift:.1e}, linearity {lin:.1e}, "
                          f"A invariance {inv:.1e}, min_functional {bf_err:.1e}")


def _min_functional_brute_force_error():
    x, w = np.polynomial.legendre.leggauss(40)
    worst = 0.0
    for n, k in ((1, 1), (1, 2), (2, 2)):
        S = 240.0
        axes = []
        for top in (S ** 0.5, S ** (1 / (2 * k))):
            e = np.linspace(0, top, int(4 * top) + 11)
            mid, half = 0.5 * (e[:-1] + e[1:]), 0.5 * (e[1:] - e[:-1])
            axes.append(((mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()))
        (u, wu), (v, wv) = axes
        s = u[:, None] ** 2 + v[None, :] ** (2 * k)
        vals = np.zeros(s.shape, complex)
        keep = s <= ONE_SIDED_0.effective_s_max
        vals[keep] = ONE_SIDED_0.phi(s[keep])
        bf = np.einsum("i,j,ij->", wu * u ** (n - 1), wv * v ** (n - 1), vals)
        worst = max(worst, abs(min_functional(ONE_SIDED_0, n, k) - bf) / abs(bf))
    return worst
