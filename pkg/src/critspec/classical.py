"""Hamiltonian flow of p(x, xi) = |xi|^2 + V(x) and its linearization."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, SingularTimeError
from .potential import CriticalPointInfo, Potential

# fourth-order Yoshida composition of the second-order leapfrog
_CBRT2 = 2.0 ** (1.0 / 3.0)
_W1 = 1.0 / (2.0 - _CBRT2)
_W0 = -_CBRT2 / (2.0 - _CBRT2)
YOSHIDA = (_W1, _W0, _W1)

STEPS_PER_PERIOD = 1000  # dt <= 1e-3 * characteristic period

# Frozen map between the linearized-flow density and the product formula:
# for V with Hessian eigenvalue mu, alpha = sqrt(|mu| / 2) and
# |det(dPhi_t - I)|^(-1/2) = DENSITY_SCALE^n / |prod sin or sinh(alpha t)|.
DENSITY_SCALE = 0.5


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        if x.shape != xi.shape or x.ndim != 1:
            raise DimensionError("x and xi must be vectors of equal length", module="classical")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi))):
            raise DomainError("phase point has non-finite components", module="classical")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    def as_vector(self):
        return np.concatenate([self.x, self.xi])


def _as_phase_point(z, n=None) -> PhasePoint:
    if isinstance(z, PhasePoint):
        return z
    if isinstance(z, CriticalPointInfo):
        return PhasePoint(z.location, np.zeros_like(np.atleast_1d(z.location)))
    v = np.atleast_1d(np.asarray(z, dtype=float))
    if n is not None and v.shape[0] == n:
        return PhasePoint(v, np.zeros(n))
    half = v.shape[0] // 2
    return PhasePoint(v[:half], v[half:])


def hamiltonian_field(pot: Potential, z) -> np.ndarray:
    """H_p(z) = (dp/dxi, -dp/dx) = (2 xi, -grad V(x))."""
    z = _as_phase_point(z)
    if z.dim != pot.dim:
        raise DimensionError(f"phase point has dimension {z.dim}, potential {pot.dim}", module="classical")
    return np.concatenate([2.0 * z.xi, -pot.gradient(z.x)])


@dataclass(frozen=True, eq=False)
class FlowResult:
    times: np.ndarray
    x: np.ndarray  # (m, n)
    xi: np.ndarray  # (m, n)
    monodromy: np.ndarray | None  # (m, 2n, 2n)
    dt: float
    energy: np.ndarray
    left_box: bool = False

    @property
    def final(self) -> PhasePoint:
        return PhasePoint(self.x[-1], self.xi[-1])

    def energy_drift(self) -> float:
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / (1.0 + abs(e0)))

    def det_monodromy(self) -> np.ndarray:
        if self.monodromy is None:
            return np.full(len(self.times), np.nan)
        return np.linalg.det(self.monodromy)

    def to_csv(self) -> str:
        n = self.x.shape[1]
        cols = ["t"] + [f"x{i}" for i in range(n)] + [f"xi{i}" for i in range(n)] + ["energy", "det_monodromy"]
        data = np.column_stack([self.times, self.x, self.xi, self.energy, self.det_monodromy()])
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        np.savetxt(buf, data, delimiter=",", fmt="%.17g")
        return buf.getvalue()


def _leapfrog(pot, x, xi, tau, M=None):
    """One kick-drift-kick step of size tau; M (2n x 2n) carried along."""
    g = pot.gradient(x)
    xi = xi - 0.5 * tau * g
    if M is not None:
        n = x.shape[0]
        X, Xi = M[:n], M[n:]
        Xi = Xi - 0.5 * tau * pot.hessian(x) @ X
    x = x + 2.0 * tau * xi
    xi = xi - 0.5 * tau * pot.gradient(x)
    if M is not None:
        X = X + 2.0 * tau * Xi
        Xi = Xi - 0.5 * tau * pot.hessian(x) @ X
        M = np.vstack([X, Xi])
    return x, xi, M


def flow_step(pot, x, xi, dt, M=None):
    for w in YOSHIDA:
        x, xi, M = _leapfrog(pot, x, xi, w * dt, M)
    return x, xi, M


def characteristic_period(pot: Potential, energy: float) -> float:
    """2 pi / a with a = max(2, sup |d^2 V|) over the sublevel set {V <= energy}."""
    try:
        return period_lower_bound(pot, (energy, energy))
    except DomainError:
        return math.pi


def integrate_flow(pot: Potential, z0, t_end: float, with_monodromy: bool = True,
                   dt: float | None = None, record_every: int = 1) -> FlowResult:
    """Integrate z' = H_p(z) from 0 to t_end with a fixed symplectic step.

    The monodromy dPhi_t solves the variational equations with the same
    scheme. Leaving the box truncates the result and sets ``left_box``.
    """
    z0 = _as_phase_point(z0)
    if z0.dim != pot.dim:
        raise DimensionError("phase point / potential dimension mismatch", module="classical")
    x = z0.x.copy()
    xi = z0.xi.copy()
    e0 = float(xi @ xi + pot.value(x))
    if dt is None:
        dt = characteristic_period(pot, e0) / STEPS_PER_PERIOD
    steps = max(1, int(math.ceil(abs(t_end) / dt - 1e-9)))
    h = t_end / steps if t_end != 0 else 0.0
    n = pot.dim
    M = np.eye(2 * n) if with_monodromy else None
    ts, xs, xis, Ms = [0.0], [x.copy()], [xi.copy()], [M.copy()] if with_monodromy else None
    left = False
    if t_end != 0:
        for k in range(1, steps + 1):
            x, xi, M = flow_step(pot, x, xi, h, M)
            if np.any(np.abs(x) > pot.box) or not np.all(np.isfinite(x)):
                left = True
                break
            if k % record_every == 0 or k == steps:
                ts.append(k * h)
                xs.append(x.copy())
                xis.append(xi.copy())
                if with_monodromy:
                    Ms.append(M.copy())
    X = np.array(xs)
    XI = np.array(xis)
    energy = np.sum(XI ** 2, axis=1) + pot.value(X)
    return FlowResult(np.array(ts), X, XI, np.array(Ms) if with_monodromy else None, abs(h) or dt,
                      energy, left)


@dataclass(frozen=True)
class PeriodBound:
    T: float
    a: float
    b: float
    spacing: float

    def __float__(self):
        return self.T


def _region_1d(pot: Potential, top: float, samples: int = 20001):
    """Closed intervals where V <= top, refined to the turning points."""
    from scipy.optimize import brentq

    xs = np.linspace(-pot.box, pot.box, samples)
    f = pot.value(xs[:, None]) - top
    inside = f <= 0
    if not np.any(inside):
        return []
    if inside[0] or inside[-1]:
        raise DomainError("sublevel set reaches the edge of the box", module="classical")
    g = lambda s: float(pot.value(np.array([s])) - top)
    out = []
    idx = np.flatnonzero(np.diff(inside.astype(int)))
    for lo_i, hi_i in zip(idx[::2], idx[1::2]):
        a = brentq(g, xs[lo_i], xs[lo_i + 1], xtol=1e-14)
        b = brentq(g, xs[hi_i], xs[hi_i + 1], xtol=1e-14)
        out.append((a, b))
    return out


def period_lower_bound(pot: Potential, J, eps: float = 0.0, points_per_axis: int | None = None,
                       full: bool = False):
    """Yorke bound T = 2 pi / a, a = max(2, b), b = sup |d^2 V| (spectral
    norm) over the x-projection {V <= E2 + eps} of p^{-1}(J(eps))."""
    top = float(J[1]) + eps
    if pot.dim == 1:
        m = points_per_axis or 4001
        regions = _region_1d(pot, top)
        if not regions:
            b, spacing = 0.0, 0.0
        else:
            b, spacing = 0.0, math.inf
            for lo, hi in regions:
                xs = np.linspace(lo, hi, m)
                b = max(b, float(np.max(np.abs(pot.hessian(xs[:, None])[:, 0, 0]))))
                spacing = min(spacing, (hi - lo) / (m - 1))
    else:
        m = points_per_axis or {2: 201, 3: 61}.get(pot.dim, 21)
        grid = pot.grid(m)
        spacing = 2 * pot.box / (m - 1)
        sel = pot.value(grid) <= top
        on_edge = np.any(np.isclose(np.abs(grid), pot.box), axis=1)
        if np.any(sel & on_edge):
            raise DomainError("sublevel set reaches the edge of the box", module="classical")
        if np.any(sel):
            H = pot.hessian(grid[sel])
            b = float(np.max(np.linalg.norm(H, ord=2, axis=(1, 2))))
        else:
            b = 0.0
    a = max(2.0, b)
    res = PeriodBound(2 * math.pi / a, a, b, spacing)
    return res if full else res.T


def _refine_crossing(pot, x, xi, h, axis=0):
    """Bisect tau in (0, h] for the zero of xi[axis] after one step."""
    lo, hi = 0.0, h
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        xim = flow_step(pot, x, xi, mid)[1]
        if xim[axis] < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


def _first_return(pot, x0, xi0, dt, t_max, closure_tol):
    """Time of the first upward crossing of xi_1 = 0 that closes the orbit."""
    x, xi = x0.copy(), xi0.copy()
    scale = 1.0 + float(np.linalg.norm(np.concatenate([x0, xi0])))
    t = 0.0
    prev = xi[0]
    started = False  # leave the section before looking for a return
    while t < t_max:
        xn, xin, _ = flow_step(pot, x, xi, dt)
        if np.any(np.abs(xn) > pot.box):
            return None
        if xin[0] < 0:
            started = True
        if started and prev < 0 <= xin[0]:
            tau = _refine_crossing(pot, x, xi, dt)
            xc, xic, _ = flow_step(pot, x, xi, tau)
            if np.linalg.norm(np.concatenate([xc - x0, xic - xi0])) <= closure_tol * scale:
                return t + tau
        x, xi, prev = xn, xin, xin[0]
        t += dt
    return None


def minimal_period_search(pot: Potential, E: float, seeds: int = 8, t_max: float | None = None,
                          closure_tol: float = 1e-6) -> float | None:
    """Smallest closed-orbit period found on the energy surface p = E.

    Section xi_1 = 0, upward crossings, bisection refinement. In 1D every
    orbit is closed and the seeds are the left turning points of each well.
    """
    dt = characteristic_period(pot, E) / STEPS_PER_PERIOD
    if t_max is None:
        t_max = 200.0 * characteristic_period(pot, E)
    if pot.dim == 1:
        if E <= pot.minimum_on_grid(4001):
            return None
        regions = _region_1d(pot, E)
        starts = [np.array([lo]) for lo, hi in regions if hi - lo > 1e-9]
        if not starts:
            return None
        periods = [p for p in (_first_return(pot, s, np.zeros(1), dt, t_max, closure_tol) for s in starts)
                   if p is not None]
        return min(periods) if periods else None
    rng = np.random.default_rng(0)
    grid = pot.grid(41)
    v = pot.value(grid)
    cand = grid[v < E]
    if len(cand) == 0:
        return None
    picks = cand[rng.choice(len(cand), size=min(seeds, len(cand)), replace=False)]
    periods = []
    for x0 in picks:
        r = math.sqrt(E - float(pot.value(x0)))
        d = rng.normal(size=pot.dim - 1)
        d /= np.linalg.norm(d) or 1.0
        xi0 = np.concatenate([[0.0], r * d])
        p = _first_return(pot, x0, xi0, dt, t_max, closure_tol)
        if p is not None:
            periods.append(p)
    return min(periods) if periods else None


def _equilibrium(pot: Potential, z0) -> PhasePoint:
    z = _as_phase_point(z0, pot.dim)
    if np.linalg.norm(z.xi) > 1e-10 or np.linalg.norm(pot.gradient(z.x)) > 1e-8:
        raise DomainError("density requires an equilibrium (x0 critical, xi = 0)", module="classical")
    return z


def linearized_flow(pot: Potential, z0, t: float) -> np.ndarray:
    if t == 0:
        return np.eye(2 * pot.dim)
    z = _as_phase_point(z0, pot.dim)
    # near an equilibrium the Yorke period of the whole box is too pessimistic
    a = max(2.0, float(np.linalg.norm(pot.hessian(z.x), 2)))
    dt = 2 * math.pi / a / STEPS_PER_PERIOD
    res = integrate_flow(pot, z, t, with_monodromy=True, dt=dt, record_every=10 ** 9)
    return res.monodromy[-1]


def dgu_density(pot: Potential, z0, t: float) -> float:
    """|det(dPhi_t(z0) - I)|^(-1/2) at an equilibrium z0."""
    z = _equilibrium(pot, z0)
    M = linearized_flow(pot, z, t)
    d = abs(float(np.linalg.det(M - np.eye(M.shape[0]))))
    if d < 1e-12:
        raise SingularTimeError(f"t={t} is a period of the linearized flow", module="classical")
    return d ** -0.5


def _parse_alphas(alphas):
    out = []
    for item in alphas:
        a, s = item
        if isinstance(s, str):
            s = {"elliptic": 1, "positive": 1, "+": 1, "hyperbolic": -1, "negative": -1, "-": -1}[s]
        out.append((float(a), 1 if s > 0 else -1))
    return out


def closed_form_density(alphas, t):
    """1 / |prod_{hyperbolic} sinh(alpha t) prod_{elliptic} sin(alpha t)|.

    ``alphas`` is a list of (alpha, sign); sign < 0 (or "hyperbolic") selects sinh.
    """
    t = np.asarray(t, dtype=float)
    prod = np.ones_like(t)
    for a, s in _parse_alphas(alphas):
        prod = prod * (np.sinh(a * t) if s < 0 else np.sin(a * t))
    if np.any(np.abs(prod) < 1e-14):
        raise SingularTimeError("a factor of the product vanishes", module="classical")
    out = 1.0 / np.abs(prod)
    return float(out) if out.ndim == 0 else out


def hessian_alphas(hess) -> list[tuple[float, int]]:
    """Frozen reparametrization: Hessian eigenvalue mu -> (sqrt(|mu|/2), sign mu)."""
    mu = np.linalg.eigvalsh(np.atleast_2d(hess))
    if np.any(np.abs(mu) < 1e-12):
        raise DomainError("degenerate Hessian", module="classical")
    return [(math.sqrt(abs(m) / 2.0), 1 if m > 0 else -1) for m in mu]


def alphas_to_hessian_eigenvalues(alphas) -> np.ndarray:
    return np.array([s * 2.0 * a * a for a, s in _parse_alphas(alphas)])


def density_from_hessian(hess, t):
    """Closed-form density in the normalization of dgu_density."""
    al = hessian_alphas(hess)
    return DENSITY_SCALE ** len(al) * closed_form_density(al, t)


def calibrate_reparametrization(times=(0.3, 0.7, 1.1)) -> tuple[float, float]:
    """(frequency factor, constant factor) mapping the V = x^2 linearized
    density onto 1/|sin(alpha t)|, determined numerically."""
    from scipy.optimize import least_squares

    from .potential import harmonic

    pot = harmonic()
    vals = np.array([dgu_density(pot, [0.0], t) for t in times])

    def resid(p):
        w, c = p
        return np.log(c / np.abs(np.sin(w * np.asarray(times)))) - np.log(vals)

    fit = least_squares(resid, [0.9, 0.6], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return float(fit.x[0]), float(fit.x[1])


def mehler_kernel(w, t: float, x, y):
    """Amplitude prod (w_k / (2 pi i sin(w_k t)))^(1/2) and action
    S = sum w_k / sin(w_k t) (cos(w_k t)(x_k^2 + y_k^2)/2 - x_k y_k)."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    x = np.broadcast_to(np.asarray(x, dtype=float), w.shape)
    y = np.broadcast_to(np.asarray(y, dtype=float), w.shape)
    s = np.sin(w * t)
    if np.any(np.abs(s) < 1e-14):
        raise SingularTimeError(f"t={t} is a multiple of pi / w", module="classical")
    amp = complex(np.prod(np.sqrt(w / (2j * math.pi * s))))
    S = float(np.sum(w / s * (0.5 * np.cos(w * t) * (x * x + y * y) - x * y)))
    return amp, S
