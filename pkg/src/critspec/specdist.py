"""Smoothed spectral sums Upsilon(E, h, phi) = sum_j phi((lambda_j - E) / h)
and their sweeps over h and scans over E."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .errors import CritspecError, DomainError
from .potential import Potential
from .quantum1d import SolverParams, Spectrum, compute_spectrum
from .testfn import weyl_kill_check

DEFAULT_H_LIST = tuple(np.geomspace(0.05, 0.004, 12))


@dataclass(frozen=True)
class UpsilonValue:
    value: complex
    tail_bound: float  # dropped terms and eigenvalues outside the window
    noise_bound: float  # eigenvalue tolerance propagated through phi
    count: int  # eigenvalues entering the sum

    @property
    def floor(self) -> float:
        return self.tail_bound + self.noise_bound


def _edge_density(lam: np.ndarray, h: float, which: str) -> float:
    """Points per unit s near one end of the spectrum, with a factor 2 margin."""
    if len(lam) < 2:
        return 1.0
    seg = lam[:6] if which == "low" else lam[-6:]
    spacing = float(np.min(np.diff(seg)))
    return 2.0 * h / max(spacing, 1e-300)


def upsilon(spec: Spectrum, E: float, tf, full: bool = False):
    """sum over the window eigenvalues of phi((lambda_j - E) / h).

    Arguments beyond the test function's s_max are dropped and bounded.
    With ``full`` an UpsilonValue is returned carrying the bounds.
    """
    lo, hi = spec.window
    if not lo <= E <= hi:
        raise DomainError(f"E={E} outside the spectral window {spec.window}", module="specdist")
    h = spec.h
    lam = np.asarray(spec.eigenvalues)
    s = (lam - E) / h
    s_max = tf.effective_s_max
    keep = np.abs(s) <= s_max
    val = complex(np.sum(tf.phi(s[keep]))) if np.any(keep) else 0j
    if not full:
        return val
    dropped = float(np.sum(tf.decay_bound(s[~keep]))) if np.any(~keep) else 0.0
    # eigenvalues outside the window
    tail = dropped
    if spec.first_index > 0:
        s_lo = (E - lo) / h
        tail += min(spec.first_index * float(tf.decay_bound(-s_lo)),
                    tf.tail_sum_bound(s_lo, _edge_density(lam, h, "low"), side=-1))
    tail += tf.tail_sum_bound((hi - E) / h, _edge_density(lam, h, "high"), side=1)
    # bisection tolerance moves each argument by tol / h
    tol = float(spec.provenance.get("tol", 1e-12))
    noise = len(lam) * (tf.lipschitz * tol / h + 1e-16 * tf.decay_constants[0])
    return UpsilonValue(val, tail, noise, int(np.count_nonzero(keep)))


@dataclass(frozen=True, eq=False)
class SweepResult:
    E: float
    hs: np.ndarray
    values: np.ndarray  # complex
    counts: np.ndarray
    tail_bounds: np.ndarray
    noise_bounds: np.ndarray
    window: tuple[float, float]
    eps: float
    test_function: dict
    flags: tuple = ()  # per-h solver annotations ("" when clean)
    provenance: dict = field(default_factory=dict)

    @property
    def abs_values(self):
        return np.abs(self.values)

    @property
    def floors(self):
        return self.tail_bounds + self.noise_bounds

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "re", "im", "abs", "tail_bound", "noise_bound", "count"])
        for h, v, tb, nb, c in zip(self.hs, self.values, self.tail_bounds, self.noise_bounds, self.counts):
            w.writerow([repr(float(h)), repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v))),
                        repr(float(tb)), repr(float(nb)), int(c)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "E": self.E,
            "window": list(self.window),
            "eps": self.eps,
            "test_function": self.test_function,
            "h": [float(h) for h in self.hs],
            "re": [float(v.real) for v in self.values],
            "im": [float(v.imag) for v in self.values],
            "tail_bound": [float(v) for v in self.tail_bounds],
            "noise_bound": [float(v) for v in self.noise_bounds],
            "count": [int(c) for c in self.counts],
            "flags": list(self.flags),
            "provenance": self.provenance,
        }


def default_window(E: float, half_width: float = 1.0) -> tuple[float, float]:
    return (E - half_width, E + half_width)


def _resolve_window(E, window, eps):
    if window is None:
        window = default_window(E)
    E1, E2 = float(window[0]), float(window[1])
    if not E1 <= E <= E2:
        raise DomainError(f"E={E} is not inside [{E1}, {E2}]", module="specdist")
    if eps is None:
        eps = 0.1 * (E2 - E1)
    return (E1, E2), float(eps)


def _one_point(pot, E, tf, h, window, eps, params):
    try:
        spec = compute_spectrum(pot, h, window, eps, params)
    except CritspecError as exc:
        raise type(exc)(f"h={h:g}: {exc.args[0]}", module=exc.module) from exc
    return upsilon(spec, E, tf, full=True), spec


def h_sweep(pot: Potential, E: float, tf, h_list=None, params: SolverParams = SolverParams(),
            window=None, eps: float | None = None, workers: int | None = None) -> SweepResult:
    """Upsilon(E, h, phi) for each h (strictly decreasing), one spectrum per h."""
    hs = np.asarray(DEFAULT_H_LIST if h_list is None else h_list, dtype=float)
    if hs.ndim != 1 or len(hs) == 0 or np.any(hs <= 0):
        raise DomainError("h_list must be a non-empty list of positive values", module="specdist")
    if np.any(np.diff(hs) >= 0):
        raise DomainError("h_list must be strictly decreasing", module="specdist")
    window, eps = _resolve_window(E, window, eps)

    def job(h):
        return _one_point(pot, E, tf, float(h), window, eps, params)

    if workers == 1:
        results = [job(h) for h in hs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(job, hs))  # map keeps input order
    vals = [r[0] for r in results]
    grids = [{"h": float(h), "L": s.L, "N": s.N} for h, (_, s) in zip(hs, results)]
    return SweepResult(
        E=float(E),
        hs=hs,
        values=np.array([v.value for v in vals], dtype=complex),
        counts=np.array([v.count for v in vals]),
        tail_bounds=np.array([v.tail_bound for v in vals]),
        noise_bounds=np.array([v.noise_bound for v in vals]),
        window=window,
        eps=eps,
        test_function=tf.to_json(),
        flags=tuple("" for _ in hs),
        provenance={"potential": pot.to_json(), "solver": params.to_json(), "grids": grids},
    )


@dataclass(frozen=True, eq=False)
class ScanProfile:
    h: float
    energies: np.ndarray
    values: np.ndarray  # complex
    floors: np.ndarray
    peaks: tuple
    warning: str = ""

    @property
    def abs_values(self):
        return np.abs(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["E", "re", "im", "abs", "floor"])
        for e, v, f in zip(self.energies, self.values, self.floors):
            w.writerow([repr(float(e)), repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v))),
                        repr(float(f))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"h": self.h, "E": [float(e) for e in self.energies],
                "abs": [float(abs(v)) for v in self.values], "peaks": list(self.peaks),
                "warning": self.warning}


NO_CONTRAST = ("test function does not vanish at t = 0: the smooth (Weyl) part of the "
               "spectral sum dominates and critical levels show no contrast")


def find_profile_peaks(energies, mags, rel_height: float = 1.2, rel_prominence: float = 0.2):
    """Interior local maxima above rel_height * median with prominence at
    least rel_prominence of the profile's range."""
    mags = np.asarray(mags)
    if len(mags) < 3 or not np.any(mags > 0):
        return ()
    base = float(np.median(mags))
    span = float(np.max(mags) - np.min(mags))
    if span <= 1e-12 * float(np.max(mags)):
        return ()
    idx, _ = find_peaks(mags, height=rel_height * base, prominence=rel_prominence * span)
    return tuple(float(energies[i]) for i in idx)


def e_scan(pot: Potential, h: float, tf, E_grid, params: SolverParams = SolverParams(),
           eps: float | None = None) -> ScanProfile:
    """|Upsilon(E, h, phi)| over an energy grid from a single spectrum.

    The default margin eps keeps the window edges where phi has decayed
    by 1e-4 so truncation does not masquerade as a peak.
    """
    E_grid = np.asarray(E_grid, dtype=float)
    window = (float(E_grid.min()), float(E_grid.max()))
    if eps is None:
        eps = max(0.1 * (window[1] - window[0]), h * tf.edge_scale(1e-4))
    spec = compute_spectrum(pot, h, window, eps, params)
    res = [upsilon(spec, float(E), tf, full=True) for E in E_grid]
    values = np.array([r.value for r in res])
    floors = np.array([r.floor for r in res])
    warning = ""
    if hasattr(tf, "j0") and not weyl_kill_check(tf):
        warning = NO_CONTRAST
    peaks = () if warning else find_profile_peaks(E_grid, np.abs(values))
    return ScanProfile(float(h), E_grid, values, floors, peaks, warning)
