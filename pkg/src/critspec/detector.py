"""Inverse pipeline: power/log fits of spectral sweeps, level classification
and recovery of local data of the potential at a critical level."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import least_squares

from .classical import (DENSITY_SCALE, alphas_to_hessian_eigenvalues, hessian_alphas,
                        minimal_period_search, period_lower_bound)
from .errors import DomainError, FitError, PipelineError, SingularTimeError
from .potential import Potential, find_critical_points
from .quantum1d import SolverParams
from .specdist import SweepResult, h_sweep
from .testfn import TestFunction, make_test_function

LOG_MARGIN = 0.95  # m = 1 only if its residual is below 95% of the m = 0 residual
RESIDUAL_TOL = 0.25  # RMS in log|Upsilon| above which a fit is inconclusive
REGULAR_SLOPE = 3.0
WEAK_SLOPE = -0.05


@dataclass(frozen=True)
class FitResult:
    """log|U| = log C + alpha log h + m log log(1/h)."""

    alpha: float
    m: int
    C: float
    rms: float
    cov: np.ndarray  # covariance of (log C, alpha)
    n_points: int
    alpha_err: float  # statistical and range-drift uncertainty of alpha
    rms_other: float  # residual of the rejected log model
    numerically_zero: bool = False

    @property
    def log_C(self) -> float:
        return math.log(self.C) if self.C > 0 else -math.inf

    def to_json(self):
        return {"alpha": self.alpha, "m": self.m, "C": self.C, "rms": self.rms,
                "alpha_err": self.alpha_err, "rms_other_model": self.rms_other,
                "cov": np.asarray(self.cov).tolist(), "n_points": self.n_points,
                "numerically_zero": self.numerically_zero}


def _linfit(X, y):
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    dof = max(len(y) - X.shape[1], 1)
    s2 = float(r @ r) / dof
    cov = s2 * np.linalg.pinv(X.T @ X)
    return coef, float(np.sqrt(np.mean(r * r))), cov


def _sweep_arrays(sweep):
    if isinstance(sweep, SweepResult):
        ok = np.array([not f for f in sweep.flags]) if sweep.flags else np.ones(len(sweep.hs), bool)
        return sweep.hs[ok], np.abs(sweep.values[ok]), sweep.floors[ok]
    hs, vals = sweep[0], sweep[1]
    floors = sweep[2] if len(sweep) > 2 else np.zeros(len(hs))
    return np.asarray(hs, float), np.abs(np.asarray(vals)), np.asarray(floors, float)


def fit_power_log(sweep, force_m: int | None = None, min_points: int = 6) -> FitResult:
    """Fit |Upsilon(h)| to C h^alpha log(1/h)^m with m in {0, 1} selected by
    residual (5% margin towards m = 0).

    ``sweep`` is a SweepResult or a tuple (h, values[, floors]).
    """
    hs, mags, floors = _sweep_arrays(sweep)
    good = mags > 0
    hs, mags, floors = hs[good], mags[good], floors[good]
    if len(hs) < min_points:
        raise FitError(f"need at least {min_points} usable h points, got {len(hs)}", module="detector")
    if hs.max() / hs.min() < math.sqrt(10.0) * (1 - 1e-9):
        raise FitError("h range spans less than half a decade", module="detector")
    if np.any(hs >= 1):
        raise FitError("log(1/h) model needs h < 1", module="detector")
    zero = bool(np.all(mags <= floors))
    lh = np.log(hs)
    y = np.log(mags)
    X = np.column_stack([np.ones_like(lh), lh])
    ll = np.log(-lh)
    fits = {}
    for m in (0, 1):
        coef, rms, cov = _linfit(X, y - m * ll)
        fits[m] = (coef, rms, cov)
    if force_m is not None:
        m = force_m
    else:
        m = 1 if fits[1][1] < LOG_MARGIN * fits[0][1] else 0
    coef, rms, cov = fits[m]
    stat = float(math.sqrt(max(cov[1, 1], 0.0)))
    # drift: refit on the smaller-h half
    half = np.argsort(hs)[: max(3, len(hs) // 2)]
    drift = 0.0
    if len(half) >= 3 and hs[half].max() / hs[half].min() > 1.5:
        c2, _, _ = _linfit(X[half], (y - m * ll)[half])
        drift = abs(float(c2[1]) - float(coef[1]))
    return FitResult(
        alpha=float(coef[1]), m=m, C=float(math.exp(coef[0])), rms=rms, cov=cov, n_points=len(hs),
        alpha_err=math.hypot(stat, drift), rms_other=fits[1 - m][1], numerically_zero=zero,
    )


@dataclass(frozen=True)
class LevelVerdict:
    kind: str  # "regular" | "critical" | "inconclusive"
    E: float
    fit: FitResult | None
    sweep: SweepResult | None = None
    reason: str = ""
    mode: str = "strict"

    @property
    def is_critical(self) -> bool:
        return self.kind == "critical"

    def to_json(self):
        return {"E": self.E, "verdict": self.kind, "mode": self.mode, "reason": self.reason,
                "fit": self.fit.to_json() if self.fit else None}


def default_test_function(pot: Potential, E: float, band: float = 0.1, j0: int = 0,
                          symmetric: bool = False) -> TestFunction:
    """phi_hat supported well inside (0, T) (one-sided) or (-T, T) (symmetric),
    with T the period lower bound on the band [E - band, E + band]."""
    T = period_lower_bound(pot, (E - band, E + band))
    if symmetric:
        return make_test_function(j0, -0.9 * T, 0.9 * T, "symmetric")
    return make_test_function(j0, 0.1 * T, 0.9 * T, "one_sided")


def classify_level(pot: Potential, E: float, tf, params: SolverParams = SolverParams(),
                   h_list=None, window=None, eps=None, mode: str = "strict",
                   residual_tol: float = RESIDUAL_TOL, sweep: SweepResult | None = None) -> LevelVerdict:
    """Regular / critical decision from an h-sweep at energy E.

    strict: regular if the sweep is numerically zero or decays with slope >= 3.
    weak (test function support may contain periods): regular if bounded,
    i.e. slope >= -0.05 without a log term.
    """
    if mode not in ("strict", "weak"):
        raise DomainError(f"unknown mode {mode!r}", module="detector")
    if sweep is None:
        sweep = h_sweep(pot, E, tf, h_list, params, window=window, eps=eps)
    fit = fit_power_log(sweep)
    if fit.numerically_zero:
        return LevelVerdict("regular", E, fit, sweep, "all values below the tail bound", mode)
    if mode == "strict" and fit.alpha >= REGULAR_SLOPE:
        return LevelVerdict("regular", E, fit, sweep, f"decay slope {fit.alpha:.3g} >= {REGULAR_SLOPE}", mode)
    if fit.rms > residual_tol:
        return LevelVerdict("inconclusive", E, fit, sweep, f"log residual {fit.rms:.3g} > {residual_tol}", mode)
    if mode == "weak" and fit.m == 0 and fit.alpha >= WEAK_SLOPE:
        return LevelVerdict("regular", E, fit, sweep, "bounded sweep", mode)
    return LevelVerdict("critical", E, fit, sweep, f"alpha={fit.alpha:.4g}, m={fit.m}", mode)


def infer_degree(alpha, n: int, alpha_err: float = 0.0) -> int:
    """k = n / (n + 2 alpha), rounded; rejected if the rounding error exceeds
    three standard errors of the propagated alpha uncertainty."""
    if isinstance(alpha, Fraction):
        if not (Fraction(-n, 2) < alpha <= 0):
            raise DomainError(f"alpha={alpha} outside (-n/2, 0]", module="detector")
        k = Fraction(n) / (n + 2 * alpha)
        if k.denominator != 1:
            raise FitError(f"k = {k} is not an integer", module="detector")
        return int(k)
    alpha = float(alpha)
    if not (-n / 2 < alpha <= 3 * alpha_err + 1e-9):
        raise DomainError(f"alpha={alpha:.4g} outside (-n/2, 0]", module="detector")
    alpha = min(alpha, 0.0)
    k_raw = n / (n + 2 * alpha)
    k = max(1, int(round(k_raw)))
    sigma_k = 2 * n * alpha_err / (n + 2 * alpha) ** 2
    if abs(k_raw - k) > max(3 * sigma_k, 1e-9):
        raise FitError(f"k_raw={k_raw:.4g} is not within 3 sigma ({sigma_k:.3g}) of an integer",
                       module="detector")
    return k


@dataclass(frozen=True)
class LogProbe:
    """Outcome of the constant-cancelling log probe."""

    detected: bool
    fit: FitResult | None
    slope: float  # A in Upsilon_0 ~ A log(1/h) + B
    intercept: float
    c: float  # weight of the t^2 component
    values: np.ndarray
    hs: np.ndarray
    reason: str = ""

    def to_json(self):
        return {"detected": self.detected, "fit": self.fit.to_json() if self.fit else None,
                "log_slope": self.slope, "intercept": self.intercept, "c": self.c, "reason": self.reason}


def log_probe(pot: Potential, E: float, params: SolverParams = SolverParams(), h_list=None,
              T: float | None = None, window_half: float = 1.0, min_trend: float = 0.1,
              max_weight: float = 100.0) -> LogProbe:
    """Expose a log(1/h) term hidden behind a large constant.

    With phi_hat(0) != 0 a log term reads A log(1/h) + B where B/A is the
    log of the local energy scale, so a pure power/log fit prefers a small
    negative power. The probe sweeps phi_0 = bump and phi_2 = t^2 bump
    (symmetric, same support), and fits phi = phi_0 - c phi_2 with c chosen
    so the constant cancels; phi_2 does not feel the log since
    phi_2_hat(0) = 0. Without a clear log(1/h) trend in phi_0 the probe
    reports nothing (no constant is cancelled).
    """
    if T is None:
        T = min(1.0, 0.5 * orbit_period_floor(pot, E))
    f0 = make_test_function(0, -T, T)
    f2 = make_test_function(1, -T, T)
    win = (E - window_half, E + window_half)
    s0 = h_sweep(pot, E, f0, h_list, params, window=win)
    s2 = h_sweep(pot, E, f2, h_list, params, window=win)
    L = -np.log(s0.hs)
    X = np.column_stack([L, np.ones_like(L)])
    a0, b0 = np.linalg.lstsq(X, s0.values.real, rcond=None)[0]
    _, b2 = np.linalg.lstsq(X, s2.values.real, rcond=None)[0]
    trend = abs(a0) * (L.max() - L.min())
    scale = float(np.max(np.abs(s0.values)))
    if trend < min_trend * scale:
        return LogProbe(False, None, float(a0), float(b0), 0.0, s0.values, s0.hs,
                        f"no log(1/h) trend ({trend:.3g} < {min_trend} x {scale:.3g})")
    c = b0 / b2 if b2 != 0 else math.inf
    if not abs(c) <= max_weight:
        return LogProbe(False, None, float(a0), float(b0), float(c), s0.values, s0.hs,
                        f"constant cannot be cancelled (weight {c:.3g})")
    vals = s0.values - c * s2.values  # = sweep of the combined test function
    fit = fit_power_log((s0.hs, vals, s0.floors + abs(c) * s2.floors))
    ok = fit.m == 1 and fit.rms <= RESIDUAL_TOL
    return LogProbe(ok, fit, float(a0), float(b0), float(c), vals, s0.hs,
                    "log term" if ok else "combined sweep has no log term")


@dataclass(frozen=True)
class TypeVerdict:
    kind: str  # "min" | "max" | "inconclusive"
    ratio: complex | None = None
    noise: float | None = None
    reason: str = ""

    def to_json(self):
        return {"type": self.kind, "reason": self.reason, "noise": self.noise,
                "ratio": None if self.ratio is None else [self.ratio.real, self.ratio.imag]}


def infer_type(pot: Potential, E_c: float, params: SolverParams = SolverParams(), tf=None, fit=None,
               h_list=None, window=None, eps=None, max_noise: float = 0.3) -> TypeVerdict:
    """Extremum type at a critical level.

    A log term means a maximum. Otherwise compare the responses to phi(s)
    and phi(-s): a minimum only sees s >= 0, so the ratio moves away from 1.
    """
    if fit is not None and fit.m == 1:
        return TypeVerdict("max", reason="log term present")
    if tf is None:
        tf = default_test_function(pot, E_c)
    a = h_sweep(pot, E_c, tf, h_list, params, window=window, eps=eps)
    b = h_sweep(pot, E_c, tf.reflected(), h_list, params, window=window, eps=eps)
    small = np.argsort(a.hs)[: max(3, len(a.hs) // 2)]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = b.values[small] / a.values[small]
    r = r[np.isfinite(r)]
    if len(r) < 3:
        return TypeVerdict("inconclusive", reason="responses vanish")
    R = complex(np.mean(r))
    noise = float(np.std(np.abs(r - R)) + np.abs(r - R).mean() / math.sqrt(len(r)))
    dev = abs(R - 1)
    if noise > max_noise:
        return TypeVerdict("inconclusive", R, noise, "reflection ratio too noisy")
    if dev >= 3 * noise and dev > 0.05:
        return TypeVerdict("min", R, noise, "one-sided response")
    return TypeVerdict("max", R, noise, "reflection-symmetric response")


@dataclass(frozen=True)
class AmplitudeRatio:
    ratio: float
    alpha: float
    m: int
    rms: float

    def __float__(self):
        return self.ratio


def _critical_signature(pot, E, tol=1e-6):
    cps = [c for c in find_critical_points(pot) if abs(c.value - E) < tol and c.extremal]
    if len(cps) != 1:
        raise DomainError(f"expected one extremal critical point at level {E}, found {len(cps)}",
                          module="detector")
    c = cps[0]
    return (c.dim, c.k, c.kind)


def joint_amplitude_fit(sweep_a, sweep_b, m: int = 0) -> AmplitudeRatio:
    """Shared exponent, separate amplitudes; returns C_a / C_b."""
    ha, ya, _ = _sweep_arrays(sweep_a)
    hb, yb, _ = _sweep_arrays(sweep_b)
    lh = np.concatenate([np.log(ha), np.log(hb)])
    y = np.log(np.concatenate([ya, yb])) - m * np.log(-lh)
    X = np.column_stack([
        np.concatenate([np.ones(len(ha)), np.zeros(len(hb))]),
        np.concatenate([np.zeros(len(ha)), np.ones(len(hb))]),
        lh,
    ])
    coef, rms, _ = _linfit(X, y)
    return AmplitudeRatio(float(math.exp(coef[0] - coef[1])), float(coef[2]), m, rms)


def recover_spherical_mean_ratio(pot_a: Potential, pot_b: Potential, E_pair, tf,
                                 params: SolverParams = SolverParams(), h_list=None, window_half: float = 1.0,
                                 check: bool = True) -> AmplitudeRatio:
    """A(V_a) / A(V_b) from the ratio of leading amplitudes at the two
    critical levels; universal constants and the test-function functional
    cancel."""
    Ea, Eb = E_pair
    if check and _critical_signature(pot_a, Ea) != _critical_signature(pot_b, Eb):
        raise DomainError("potentials differ in (n, k, type) at the given levels", module="detector")
    sa = h_sweep(pot_a, Ea, tf, h_list, params, window=(Ea - window_half, Ea + window_half))
    sb = h_sweep(pot_b, Eb, tf, h_list, params, window=(Eb - window_half, Eb + window_half))
    m = fit_power_log(sa).m
    return joint_amplitude_fit(sa, sb, m)


@dataclass(frozen=True)
class HessianSpectrum:
    alphas: tuple  # ((alpha, sign), ...) hyperbolic (sign -1) first
    r: int  # number of negative Hessian eigenvalues
    rms: float

    @property
    def hessian_eigenvalues(self):
        return alphas_to_hessian_eigenvalues(self.alphas)

    def to_json(self):
        return {"alphas": [[a, s] for a, s in self.alphas], "signature_r": self.r, "rms": self.rms,
                "hessian_eigenvalues": self.hessian_eigenvalues.tolist()}


def _model_log(t, alphas, r):
    out = np.zeros_like(t)
    for j, a in enumerate(alphas):
        f = np.sinh(a * t) if j < r else np.sin(a * t)
        out = out - np.log(np.abs(f))
    return out


def recover_hessian_spectrum(samples, n: int, residual_tol: float = 0.05,
                             starts=(0.3, 0.7, 1.5, 3.0)) -> HessianSpectrum:
    """Fit 1 / |prod_{j<=r} sinh(alpha_j t) prod_{j>r} sin(alpha_j t)| to density
    samples (closed-form normalization), over r in 0..n, in log scale."""
    t = np.array([s[0] for s in samples], dtype=float)
    v = np.array([s[1] for s in samples], dtype=float)
    if len(t) < 8 * (n + 1):
        raise FitError(f"need at least {8 * (n + 1)} samples", module="detector")
    if np.any(v <= 0) or np.any(t <= 0):
        raise FitError("samples must be positive at positive times", module="detector")
    y = np.log(v)
    best = None
    for r in range(n + 1):
        # sinh factors commute among themselves, as do sin factors
        for init in itertools.combinations_with_replacement(starts, n):
            p0 = np.log(np.array(init, dtype=float))

            def resid(p, r=r):
                return _model_log(t, np.exp(p), r) - y

            try:
                sol = least_squares(resid, p0, xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=2000)
            except ValueError:
                continue
            if not np.all(np.isfinite(sol.fun)):
                continue
            rms = float(np.sqrt(np.mean(sol.fun ** 2)))
            if best is None or rms < best[0] - 1e-12:
                best = (rms, r, np.exp(sol.x))
    if best is None or best[0] > residual_tol:
        raise FitError(f"no product model fits (best log residual {best[0] if best else math.inf:.3g})",
                       module="detector")
    rms, r, al = best
    hyp = sorted(al[:r])
    ell = sorted(al[r:])
    return HessianSpectrum(tuple([(float(a), -1) for a in hyp] + [(float(a), 1) for a in ell]), r, rms)


def orbit_period_floor(pot: Potential, E: float, band: float = 0.1, energies: int = 5) -> float:
    """Smallest closed-orbit period found at regular energies around E
    (the critical level itself excluded); falls back to the Yorke bound."""
    yorke = period_lower_bound(pot, (E - band, E + band))
    found = []
    for e in np.linspace(E - band, E + band, energies):
        if abs(e - E) < 1e-9:
            continue
        p = minimal_period_search(pot, float(e))
        if p is not None:
            found.append(p)
    return max(yorke, min(found)) if found else yorke


@dataclass(frozen=True)
class DensitySample:
    t: float
    value: float
    alpha: float
    C: float


def density_from_quantum(pot: Potential, z0, E_c: float, centers, params: SolverParams = SolverParams(),
                         half_width: float = 0.3, h_list=None, window_half: float = 1.0,
                         T: float | None = None, flat_tol: float = 0.1) -> list[DensitySample]:
    """Estimates of |det(dPhi_t(z0) - I)|^(-1/2) at the bump centers t_i.

    Each bump phi_hat_i lives on (t_i - w, t_i + w) inside (0, T); the
    h -> 0 limit of |Upsilon| (intercept of a linear fit in h) times 2 pi
    over the integral of phi_hat_i estimates the density.
    """
    if pot.dim != 1:
        raise DomainError("the quantum route is one-dimensional", module="detector")
    x0 = np.atleast_1d(np.asarray(getattr(z0, "location", z0), dtype=float))
    al = hessian_alphas(pot.hessian(x0))
    periods = [math.pi / a for a, s in al if s > 0]
    if T is None:
        T = orbit_period_floor(pot, E_c)
    out = []
    for tc in centers:
        lo, hi = tc - half_width, tc + half_width
        if lo <= 0 or hi >= T:
            raise DomainError(f"bump ({lo:.3g}, {hi:.3g}) not inside (0, {T:.3g})", module="detector")
        for p in periods:
            k = math.floor(hi / p)
            if k >= 1 and lo <= k * p:
                raise SingularTimeError(f"bump around t={tc} contains the linearized period {k * p:.4g}",
                                        module="detector")
        tf = make_test_function(0, lo, hi, "one_sided")
        sw = h_sweep(pot, E_c, tf, h_list, params, window=(E_c - window_half, E_c + window_half))
        fit = fit_power_log(sw, force_m=0)
        if abs(fit.alpha) > flat_tol:
            raise PipelineError(f"sweep at t={tc} is not flat (alpha={fit.alpha:.3g})", module="detector")
        X = np.column_stack([np.ones(len(sw.hs)), sw.hs])
        coef, *_ = np.linalg.lstsq(X, np.abs(sw.values), rcond=None)
        C = float(coef[0])
        value = 2 * math.pi * C / abs(tf.hat_integral())
        out.append(DensitySample(float(tc), value, fit.alpha, C))
    return out


def hessian_from_quantum(samples: list[DensitySample], n: int = 1, **kw) -> HessianSpectrum:
    """Hessian spectrum from quantum density samples (rescaled to the
    closed-form normalization)."""
    scale = DENSITY_SCALE ** -n
    return recover_hessian_spectrum([(s.t, s.value * scale) for s in samples], n, **kw)


@dataclass
class CriticalReport:
    E_c: float
    type: str
    k: int | None
    alpha: float
    m: int
    spherical_mean: float | None = None  # ratio-calibrated, None without calibration
    hessian: HessianSpectrum | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        return {"E_c": self.E_c, "type": self.type, "k": self.k, "alpha": self.alpha, "m": self.m,
                "spherical_mean": self.spherical_mean,
                "hessian": self.hessian.to_json() if self.hessian else None,
                "diagnostics": self.diagnostics}

    def summary(self) -> str:
        rows = [("E_c", f"{self.E_c:.6g}"), ("type", self.type), ("k", str(self.k)),
                ("alpha", f"{self.alpha:.4f}"), ("log power m", str(self.m))]
        if self.spherical_mean is not None:
            rows.append(("A(V)", f"{self.spherical_mean:.4g}"))
        if self.hessian is not None:
            rows.append(("Hessian eigenvalues", ", ".join(f"{v:.4g}" for v in self.hessian.hessian_eigenvalues)))
            rows.append(("signature r", str(self.hessian.r)))
        w = max(len(a) for a, _ in rows)
        return "\n".join(f"{a.ljust(w)}  {b}" for a, b in rows)


def invert_level(pot: Potential, E_c: float, params: SolverParams = SolverParams(), h_list=None,
                 tf=None, calibration=None, density_centers=None, probe_log: bool = True) -> CriticalReport:
    """Full local reconstruction at one critical level.

    ``calibration`` is (potential, level, known A) sharing (n, k, type), used
    to turn the amplitude ratio into A(V). ``density_centers`` enable the
    Hessian route when k = 1. At a maximum ``probe_log`` runs the log probe.
    """
    if tf is None:
        tf = default_test_function(pot, E_c)
    diag = {"test_function": tf.to_json()}
    verdict = classify_level(pot, E_c, tf, params, h_list)
    diag["classification"] = verdict.to_json()
    fit = verdict.fit
    if verdict.kind != "critical":
        return CriticalReport(E_c, "inconclusive" if verdict.kind == "inconclusive" else "regular",
                              None, fit.alpha if fit else math.nan, fit.m if fit else 0, diagnostics=diag)
    tv = infer_type(pot, E_c, params, tf=tf, fit=fit, h_list=h_list)
    diag["type"] = tv.to_json()
    if probe_log and tv.kind == "max" and fit.m == 0:
        lp = log_probe(pot, E_c, params, h_list)
        diag["log_probe"] = lp.to_json()
        if lp.detected:
            fit = lp.fit
    try:
        k = 1 if fit.m == 1 else infer_degree(fit.alpha, pot.dim, fit.alpha_err)
    except (FitError, DomainError) as exc:
        diag["degree_error"] = str(exc)
        k = None
    report = CriticalReport(E_c, tv.kind, k, fit.alpha, fit.m, diagnostics=diag)
    if calibration is not None and k is not None:
        cal_pot, cal_level, cal_A = calibration
        ar = recover_spherical_mean_ratio(pot, cal_pot, (E_c, cal_level), tf, params, h_list, check=False)
        report.spherical_mean = ar.ratio * cal_A
        diag["amplitude_ratio"] = ar.ratio
    if density_centers is not None and k == 1 and pot.dim == 1:
        cps = [c for c in find_critical_points(pot) if abs(c.value - E_c) < 1e-6]
        if cps:
            samples = density_from_quantum(pot, cps[0], E_c, density_centers, params, h_list=h_list)
            diag["density_samples"] = [[s.t, s.value] for s in samples]
            try:
                report.hessian = hessian_from_quantum(samples, 1)
            except FitError as exc:
                diag["hessian_error"] = str(exc)
    return report
