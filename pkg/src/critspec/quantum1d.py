"""Finite-difference discretisation of P_h = -h^2 d^2/dx^2 + V on [-L, L]
with Dirichlet ends, windowed eigenvalues by Sturm bisection, counting
functions and phase-space volumes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import integrate, optimize

from ._sturm import bisect_indices, sturm_count
from .errors import DimensionError, DomainError, ResolutionError
from .potential import Potential

POINTS_PER_H = 10.0  # resolution rule: dx <= h / 10
AGMON_MARGIN = 18.0  # tunnelling distance (in units of h) from the turning point to the wall


@dataclass(frozen=True)
class SolverParams:
    """Discretisation and eigensolver settings.

    ``L``/``N`` of ``None`` are chosen from the confinement and resolution
    rules. ``oversample`` multiplies the minimal N.
    """

    L: float | None = None
    N: int | None = None
    oversample: float = 1.0
    tol: float = 1e-12
    richardson: bool = True

    def to_json(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    pot: Potential
    h: float
    L: float
    N: int
    dx: float
    diag: np.ndarray
    off: float

    @property
    def x(self):
        return -self.L + self.dx * np.arange(1, self.N + 1)

    @property
    def boundary_value(self) -> float:
        return float(min(self.pot.value(np.array([[-self.L], [self.L]]))))

    def count_below(self, x: float) -> int:
        return int(sturm_count(self.diag, self.off * self.off, float(x)))

    def gershgorin(self):
        r = 2 * abs(self.off)
        return float(self.diag.min() - r), float(self.diag.max() + r)

    def refined(self) -> "DiscretizedOperator":
        """Same box, grid spacing halved (N -> 2N + 1, nodes nest)."""
        return discretize(self.pot, self.h, self.L, 2 * self.N + 1)


def discretize(pot: Potential, h: float, L: float, N: int, window=None, eps: float = 0.0) -> DiscretizedOperator:
    """Three-point finite-difference operator on N interior nodes.

    Raises ResolutionError if N < 2L/(h/10) and DomainError if the window
    top E2 + 2 eps is above V(+-L).
    """
    if pot.dim != 1:
        raise DimensionError("quantum discretisation is one-dimensional", module="quantum1d")
    if h <= 0 or L <= 0:
        raise DomainError("h and L must be positive", module="quantum1d")
    need = 2 * L / (h / POINTS_PER_H)
    if N < need * (1 - 1e-12):
        raise ResolutionError(
            f"resolution rule violated: N={N} < 2L/(h/10)={need:.1f} (h={h}, L={L})", module="quantum1d"
        )
    if L > pot.box * (1 + 1e-12):
        raise DomainError(f"L={L} exceeds the confinement box {pot.box}", module="quantum1d")
    if window is not None:
        top = window[1] + 2 * eps
        vb = float(min(pot.value(np.array([[-L], [L]]))))
        if vb < top:
            raise DomainError(
                f"box too small: V(+-L)={vb:.4g} < E2 + 2 eps = {top:.4g}", module="quantum1d"
            )
    dx = 2 * L / (N + 1)
    x = -L + dx * np.arange(1, N + 1)
    c = h * h / (dx * dx)
    diag = 2 * c + pot.value(x[:, None])
    return DiscretizedOperator(pot, float(h), float(L), int(N), float(dx), np.ascontiguousarray(diag), -c)


def choose_box(pot: Potential, top: float, h: float | None = None, samples: int = 4001) -> float:
    """Smallest L with V(x) >= Vmin + 2 (top - Vmin) for all L <= |x| <= box.

    With ``h`` the box is also pushed out until the Agmon distance from the
    outermost turning point, integral of sqrt(V - top) / h, reaches
    AGMON_MARGIN on both sides, so the Dirichlet wall moves eigenvalues by
    about exp(-2 AGMON_MARGIN).
    """
    vmin = pot.minimum_on_grid(samples)
    thr = vmin + 2.0 * max(top - vmin, 1e-3)
    xs = np.linspace(0.0, pot.box, samples)
    vp = pot.value(xs[:, None])
    vm = pot.value(-xs[:, None])
    ok = (vp >= thr) & (vm >= thr)
    # last index where the condition fails
    bad = np.nonzero(~ok)[0]
    i = 1 if len(bad) == 0 else bad[-1] + 1
    if i >= samples:
        raise DomainError(
            f"sublevel set {{V <= {thr:.4g}}} reaches the box edge {pot.box}", module="quantum1d"
        )
    if h is not None:
        dx = xs[1] - xs[0]
        for v in (vp, vm):
            below = np.nonzero(v < top)[0]
            start = below[-1] + 1 if len(below) else 0
            dist = np.cumsum(np.sqrt(np.maximum(v[start:] - top, 0.0))) * dx / h
            reach = np.nonzero(dist >= AGMON_MARGIN)[0]
            # a box too small for the margin is used as is
            j = start + reach[0] + 1 if len(reach) else samples - 1
            i = max(i, min(j, samples - 1))
    return float(xs[i])


def build_operator(pot: Potential, h: float, window, eps: float, params: SolverParams = SolverParams()):
    L = params.L if params.L is not None else choose_box(pot, window[1] + 2 * eps, h)
    N = params.N
    if N is None:
        N = int(math.ceil(params.oversample * 2 * L * POINTS_PER_H / h))
    return discretize(pot, h, L, N, window=window, eps=eps)


@dataclass(frozen=True, eq=False)
class Spectrum:
    h: float
    window: tuple[float, float]
    eigenvalues: np.ndarray
    convergence: np.ndarray
    first_index: int
    L: float
    N: int
    richardson: bool
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.eigenvalues)

    def count(self, a: float, b: float) -> int:
        return count_eigenvalues(self, a, b)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "lambda", "convergence"])
        for i, (lam, c) in enumerate(zip(self.eigenvalues, self.convergence)):
            w.writerow([self.first_index + i, repr(float(lam)), repr(float(c))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "h": self.h,
            "window": list(self.window),
            "first_index": self.first_index,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "convergence": [float(v) for v in self.convergence],
            "grid": {"L": self.L, "N": self.N, "richardson": self.richardson},
            "provenance": self.provenance,
        }


def _indexed_eigs(op: DiscretizedOperator, k0: int, k1: int, tol: float) -> np.ndarray:
    lo, hi = op.gershgorin()
    return bisect_indices(op.diag, op.off * op.off, k0, k1, lo, hi, tol)


def eigen_window(op: DiscretizedOperator, window, tol: float = 1e-12, richardson: bool = True) -> Spectrum:
    """All eigenvalues of ``op`` inside ``window`` = J(eps).

    With ``richardson`` the three-point O(dx^2) error is removed by
    combining the operator with its nested refinement,
    lambda = (4 lambda_{dx/2} - lambda_dx) / 3; the reported convergence
    estimate is the size of that correction.
    """
    a, b = float(window[0]), float(window[1])
    if b > 0.8 * op.boundary_value:
        raise DomainError(
            f"window top {b:.4g} above boundary-artifact threshold 0.8 V(+-L) = {0.8 * op.boundary_value:.4g}",
            module="quantum1d",
        )
    k0 = op.count_below(a)
    k1 = op.count_below(b)
    prov = {"potential": op.pot.to_json(), "h": op.h, "L": op.L, "N": op.N, "tol": tol}
    if not richardson:
        lam = _indexed_eigs(op, k0, k1, tol)
        return Spectrum(op.h, (a, b), lam, np.full(len(lam), tol), k0, op.L, op.N, False, prov)
    # pad by two indices each side: extrapolation may move values across the edges
    fine = op.refined()
    j0 = max(0, k0 - 2)
    j1 = min(op.N, k1 + 2)
    coarse_vals = _indexed_eigs(op, j0, j1, tol)
    fine_vals = _indexed_eigs(fine, j0, j1, tol)
    extrap = (4.0 * fine_vals - coarse_vals) / 3.0
    corr = np.abs(extrap - fine_vals)
    keep = (extrap >= a) & (extrap <= b)
    idx = np.nonzero(keep)[0]
    first = j0 + (int(idx[0]) if len(idx) else k0 - j0)
    prov["N_fine"] = fine.N
    return Spectrum(op.h, (a, b), extrap[keep], np.maximum(corr[keep], tol), first, op.L, op.N, True, prov)


def compute_spectrum(pot: Potential, h: float, window, eps: float = 0.0,
                     params: SolverParams = SolverParams()) -> Spectrum:
    """Spectrum of P_h in J(eps) = [E1 - eps, E2 + eps]."""
    op = build_operator(pot, h, window, eps, params)
    J = (window[0] - eps, window[1] + eps)
    return eigen_window(op, J, tol=params.tol, richardson=params.richardson)


def refinement_shift(pot: Potential, h: float, window, eps: float = 0.0,
                     params: SolverParams = SolverParams()) -> float:
    """Largest relative move max|lam(2N) - lam(N)| / max(1, |lam|) of the
    (extrapolated) window eigenvalues when the grid is refined."""
    op = build_operator(pot, h, window, eps, params)
    J = (window[0] - eps, window[1] + eps)
    s1 = eigen_window(op, J, params.tol, params.richardson)
    s2 = eigen_window(op.refined(), J, params.tol, params.richardson)
    common = sorted(set(range(s1.first_index, s1.first_index + len(s1)))
                    & set(range(s2.first_index, s2.first_index + len(s2))))
    if not common:
        return 0.0
    v1 = np.array([s1.eigenvalues[j - s1.first_index] for j in common])
    v2 = np.array([s2.eigenvalues[j - s2.first_index] for j in common])
    return float(np.max(np.abs(v2 - v1) / np.maximum(1.0, np.abs(v1))))


def count_eigenvalues(spec: Spectrum, a: float, b: float) -> int:
    """#{j : lambda_j in [a, b]}; [a, b] must lie inside the window."""
    if a > b:
        raise DomainError("empty interval", module="quantum1d")
    lo, hi = spec.window
    if a < lo - 1e-14 or b > hi + 1e-14:
        raise DomainError(f"[{a}, {b}] is not inside the window {spec.window}", module="quantum1d")
    lam = spec.eigenvalues
    return int(np.searchsorted(lam, b, side="right") - np.searchsorted(lam, a, side="left"))


# -- phase-space volumes -----------------------------------------------------

def _turning_points(pot: Potential, E: float, samples: int = 4001):
    xs = np.linspace(-pot.box, pot.box, samples)
    f = pot.value(xs[:, None]) - E
    pts = [-pot.box, pot.box]
    for i in np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]:
        pts.append(optimize.brentq(lambda x: float(pot.value(np.array([x]))) - E, xs[i], xs[i + 1]))
    return xs, f, sorted(pts)


def _sublevel_volume_1d(pot: Potential, E: float):
    xs, f, pts = _turning_points(pot, E)
    if f[0] < 0 or f[-1] < 0:
        raise DomainError(f"sublevel set of E={E} is not inside the box", module="quantum1d")
    total = 0.0
    err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi)
        if float(pot.value(np.array([mid]))) >= E:
            continue
        val, e = integrate.quad(
            lambda x: 2.0 * math.sqrt(max(E - float(pot.value(np.array([x]))), 0.0)),
            lo, hi, limit=200, epsabs=1e-13, epsrel=1e-12,
        )
        total += val
        err += e
    return total, err


def _sublevel_volume_nd(pot: Potential, E: float, points_per_axis: int):
    n = pot.dim
    ball = math.pi ** (n / 2) / math.gamma(n / 2 + 1)

    def on_grid(m):
        axis = np.linspace(-pot.box, pot.box, m)
        dx = axis[1] - axis[0]
        g = np.stack([a.ravel() for a in np.meshgrid(*([axis] * n), indexing="ij")], axis=-1)
        v = pot.value(g)
        return ball * np.sum(np.maximum(E - v, 0.0) ** (n / 2)) * dx ** n

    fine = on_grid(points_per_axis)
    coarse = on_grid((points_per_axis + 1) // 2)
    return fine, abs(fine - coarse)


def sublevel_volume(pot: Potential, E: float, points_per_axis: int = 401):
    """(Vol{p <= E}, error estimate) in R^{2n}."""
    if pot.dim == 1:
        return _sublevel_volume_1d(pot, E)
    return _sublevel_volume_nd(pot, E, points_per_axis)


def liouville_volume(pot: Potential, a: float, b: float, with_error: bool = False):
    """Vol(p^{-1}([a, b])); optionally also the absolute error estimate."""
    if b < a:
        raise DomainError("need a <= b", module="quantum1d")
    va, ea = sublevel_volume(pot, a)
    vb, eb = sublevel_volume(pot, b)
    vol = vb - va
    if not math.isfinite(vol):
        raise DomainError("non-finite phase-space volume", module="quantum1d")
    return (vol, ea + eb) if with_error else vol


def liouville_surface(pot: Potential, E: float, dE: float | None = None) -> float:
    """Lvol(Sigma_E) as the E-derivative of the sublevel volume."""
    if dE is None:
        dE = 1e-4 * max(1.0, abs(E))
    return (sublevel_volume(pot, E + dE)[0] - sublevel_volume(pot, E - dE)[0]) / (2 * dE)


def weyl_count(pot: Potential, a: float, b: float, h: float) -> float:
    """Vol(p^{-1}([a, b])) / (2 pi h)^n."""
    return liouville_volume(pot, a, b) / (2 * math.pi * h) ** pot.dim
