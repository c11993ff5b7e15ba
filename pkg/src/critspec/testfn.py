"""Admissible test functions.

phi_hat(t) = t^(2 j0) * b((t - c) / w) with the smooth bump
b(u) = exp(-1/(1 - u^2)) on |u| < 1, and

    phi(s) = (1 / 2 pi) * integral exp(-i t s) phi_hat(t) dt,

the inverse of phi_hat(t) = integral exp(i t x) phi(x) dx.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from .errors import DomainError

_BUMP_EDGE = 2e-3  # 1 - u^2 below this: b < exp(-500), treated as 0
S_MAX_DEFAULT = 200.0
S_MAX_CAP = 20000.0
DECAY_ORDERS = (2, 3, 4, 5, 6, 7, 8)


def bump_derivatives(u, order: int):
    """[b, b', ..., b^(order)] of b(u) = exp(-1/(1-u^2)), zero for |u| >= 1."""
    u = np.asarray(u, dtype=float)
    inside = (1.0 - u * u) > _BUMP_EDGE
    uu = np.where(inside, u, 0.0)
    b0 = np.where(inside, np.exp(-1.0 / (1.0 - uu * uu)), 0.0)
    # g = -1/(1-u^2); g^(m) = -(m!/2) [(1-u)^-(m+1) + (-1)^m (1+u)^-(m+1)]
    g = [None]
    for m in range(1, order + 1):
        g.append(-0.5 * math.factorial(m) * ((1 - uu) ** -(m + 1) + (-1) ** m * (1 + uu) ** -(m + 1)))
    b = [b0]
    for n in range(1, order + 1):
        acc = np.zeros_like(b0)
        for k in range(n):
            acc = acc + math.comb(n - 1, k) * g[k + 1] * b[n - 1 - k]
        b.append(np.where(inside, acc, 0.0))
    return b


@dataclass(frozen=True, eq=False)
class TestFunction:
    """phi_hat(t) = exp(-i t shift) t^(2 j0) b((t - c)/w), supported in [t_minus, t_plus].

    ``shift`` realises phi(s) -> phi(s + shift) (subprincipal hook);
    ``weight`` is a plain multiplicative constant.
    """

    __test__ = False  # not a pytest class

    j0: int
    t_minus: float
    t_plus: float
    mode: str = "symmetric"
    shift: float = 0.0
    weight: float = 1.0
    s_max: float | None = None
    ds: float = 1.0 / 128

    def __post_init__(self):
        if not self.t_minus < self.t_plus:
            raise DomainError(f"empty support [{self.t_minus}, {self.t_plus}]", module="testfn")
        if self.j0 < 0:
            raise DomainError("flatness order j0 must be >= 0", module="testfn")
        if self.mode not in ("symmetric", "one_sided"):
            raise DomainError(f"unknown mode {self.mode!r}", module="testfn")
        if self.mode == "symmetric" and not math.isclose(self.t_minus, -self.t_plus, abs_tol=1e-12):
            raise DomainError("symmetric mode needs a support [-T, T]", module="testfn")
        if self.mode == "one_sided" and self.t_minus < 0.0 < self.t_plus:
            raise DomainError("one-sided support must not contain 0 in its interior", module="testfn")

    # -- phi_hat ---------------------------------------------------------------

    @property
    def center(self) -> float:
        return 0.5 * (self.t_minus + self.t_plus)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.t_plus - self.t_minus)

    @property
    def support(self) -> tuple[float, float]:
        return (self.t_minus, self.t_plus)

    @property
    def is_real(self) -> bool:
        """phi is real iff phi_hat(-t) = conj(phi_hat(t))."""
        return self.mode == "symmetric" and self.shift == 0.0

    def phi_hat(self, t):
        t = np.asarray(t, dtype=float)
        u = (t - self.center) / self.half_width
        val = self.weight * t ** (2 * self.j0) * bump_derivatives(u, 0)[0]
        if self.shift:
            return val * np.exp(-1j * t * self.shift)
        return val

    def phi_hat_derivative(self, t, order: int):
        """d^order/dt^order of the unshifted, unweighted profile t^(2 j0) b(.)."""
        t = np.asarray(t, dtype=float)
        w = self.half_width
        bd = bump_derivatives((t - self.center) / w, order)
        p = 2 * self.j0
        out = np.zeros_like(t)
        for i in range(0, min(order, p) + 1):
            # i-th derivative of t^p
            coef = math.perm(p, i)
            out = out + math.comb(order, i) * coef * t ** (p - i) * bd[order - i] / w ** (order - i)
        return out

    @cached_property
    def _t_fine(self):
        return np.linspace(self.t_minus, self.t_plus, 20001)

    def hat_integral(self) -> complex:
        """integral of phi_hat = 2 pi phi(0) (before the shift)."""
        t = self._t_fine
        return complex(trapezoid(self.phi_hat(t), t))

    @cached_property
    def decay_constants(self) -> dict[int, float]:
        """C_N with |phi(s)| <= C_N |s|^-N, C_N = (1/2pi) int |d^N (phi_hat)|.

        For shifted functions the Leibniz bound sum_i C(N,i) |shift|^i |D^(N-i)|
        is used.
        """
        t = self._t_fine
        absd = [np.abs(self.phi_hat_derivative(t, m)) for m in range(max(DECAY_ORDERS) + 1)]
        out = {}
        for N in DECAY_ORDERS:
            integrand = np.zeros_like(t)
            for i in range(N + 1):
                integrand = integrand + math.comb(N, i) * abs(self.shift) ** i * absd[N - i]
            out[N] = abs(self.weight) * float(trapezoid(integrand, t)) / (2 * math.pi)
        out[0] = abs(self.weight) * float(trapezoid(absd[0], t)) / (2 * math.pi)
        # margin for the quadrature of the constants
        return {N: c * (1 + 1e-6) for N, c in out.items()}

    @cached_property
    def lipschitz(self) -> float:
        """sup |phi'| <= (1/2pi) int |t phi_hat(t)| dt."""
        t = self._t_fine
        return float(trapezoid(np.abs(t * self.phi_hat(t)), t)) / (2 * math.pi) * (1 + 1e-6)

    def pw_bound(self, s):
        """Paley-Wiener bound min_N C_N |s|^-N on |phi(s)|."""
        s = np.abs(np.asarray(s, dtype=float))
        c = self.decay_constants
        out = np.full(s.shape, c[0])
        with np.errstate(divide="ignore", over="ignore"):
            for N in DECAY_ORDERS:
                out = np.minimum(out, c[N] * s ** -float(N))
        return out

    def _pw_tail_integral(self, s0: float) -> float:
        c = self.decay_constants
        s0 = max(abs(s0), 1e-12)
        return min(c[N] * s0 ** (1 - N) / (N - 1) for N in DECAY_ORDERS)

    @cached_property
    def _envelope(self):
        """Non-increasing majorants of |phi| on each half line of the cache,
        with suffix integrals. Index i corresponds to |s| = i * ds."""
        s, vals, _ = self._cache
        mid = len(s) // 2  # s[mid] == 0
        peak = float(np.max(np.abs(vals)))
        floor = max(1e-12 * peak, float(self.pw_bound(s[-1])))
        out = {}
        for side, a in ((1, np.abs(vals[mid:])), (-1, np.abs(vals[mid::-1]))):
            env = np.maximum.accumulate(a[::-1])[::-1]
            env = np.maximum(env, np.concatenate([env[1:], env[-1:]]))
            env = np.maximum(np.concatenate([env[:1], env[:-1]]), env)  # one-step margin
            # peaks between grid points exceed the samples by <= ds^2 |phi''| / 8
            tmax = max(abs(self.t_minus), abs(self.t_plus)) + abs(self.shift)
            env = env * (1 + 0.25 * (self.ds * tmax) ** 2) + floor
            seg = 0.5 * (env[1:] + env[:-1]) * self.ds
            suffix = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
            out[side] = (env, suffix + self._pw_tail_integral(s[-1]))
        return out

    def decay_bound(self, s):
        """Bound on |phi(s)|: cached envelope inside s_max, Paley-Wiener beyond."""
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = self.pw_bound(s)
        grid_max = self._cache[0][-1]
        inside = np.abs(s) <= grid_max
        if np.any(inside):
            si = s[inside]
            idx = np.floor(np.abs(si) / self.ds).astype(int)
            env_p, _ = self._envelope[1]
            env_m, _ = self._envelope[-1]
            idx = np.minimum(idx, len(env_p) - 1)
            out[inside] = np.minimum(out[inside], np.where(si >= 0, env_p[idx], env_m[idx]))
        return float(out[0]) if scalar else out

    def edge_scale(self, rel: float = 1e-4) -> float:
        """Smallest s0 with |phi(s)| <= rel * sup|phi| for all |s| >= s0."""
        env_p, _ = self._envelope[1]
        env_m, _ = self._envelope[-1]
        env = np.maximum(env_p, env_m)
        above = np.nonzero(env > rel * env[0])[0]
        if len(above) == len(env):
            return float(self._cache[0][-1])
        return float((above[-1] + 1) * self.ds) if len(above) else 0.0

    def tail_sum_bound(self, s0: float, density: float, side: int = 0) -> float:
        """Bound on sum |phi(s_j)| over points with s_j >= s0 (side=+1),
        s_j <= -s0 (side=-1) or both (side=0), at most ``density`` points per
        unit s: density * integral of the envelope, plus one endpoint term."""
        s0 = abs(float(s0))
        if side == 0:
            return self.tail_sum_bound(s0, density, 1) + self.tail_sum_bound(s0, density, -1)
        grid_max = self._cache[0][-1]
        if s0 >= grid_max:
            return float(density * self._pw_tail_integral(s0) + self.pw_bound(s0))
        env, suffix = self._envelope[side]
        i = int(math.floor(s0 / self.ds))
        return float(density * (suffix[i]) + env[i])

    @cached_property
    def effective_s_max(self) -> float:
        if self.s_max is not None:
            return float(self.s_max)
        # extend past 200 until the certified bound is negligible
        peak = self.decay_constants[0]
        s = S_MAX_DEFAULT
        while s < S_MAX_CAP and float(self.pw_bound(s)) > 1e-13 * peak:
            s *= 1.25
        return float(min(s, S_MAX_CAP))

    # -- phi -------------------------------------------------------------------

    @cached_property
    def _cache(self):
        s_max = self.effective_s_max
        ds = self.ds
        K = int(math.ceil(s_max / ds)) + 4
        # FFT length: aliasing period P * ds >= 6 s_max
        P = 1 << int(math.ceil(math.log2(max(6 * K, 1 << 12))))
        dt = 2 * math.pi / (P * ds)
        M = int(math.floor((self.t_plus - self.t_minus) / dt)) + 1
        if M < 64:
            raise DomainError("support too narrow for the cache grid", module="testfn")
        t = self.t_minus + dt * np.arange(M)
        f = np.zeros(P, dtype=complex)
        f[:M] = self.phi_hat(t)
        F = np.fft.fft(f)  # F[k] = sum_m f_m exp(-2 pi i m k / P)
        k = np.arange(-K, K + 1)
        s = k * ds
        vals = dt / (2 * math.pi) * np.exp(-1j * self.t_minus * s) * F[k % P]
        return s, vals, CubicSpline(s, vals)

    @property
    def cache_samples(self):
        s, vals, _ = self._cache
        return s, vals

    def phi_direct(self, s):
        """Trapezoid quadrature of the inverse transform (no cache)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.linspace(self.t_minus, self.t_plus, 4097)
        dt = t[1] - t[0]
        fh = self.phi_hat(t)
        out = np.empty(s.shape, dtype=complex)
        for i in range(0, len(s), 2048):
            blk = s[i:i + 2048]
            out[i:i + 2048] = (np.exp(-1j * np.outer(blk, t)) @ fh) * dt / (2 * math.pi)
        return out

    def phi(self, s):
        """phi(s); cached cubic interpolation for |s| <= s_max, direct
        quadrature beyond."""
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        grid, _, spline = self._cache
        out = np.empty(s.shape, dtype=complex)
        inside = np.abs(s) <= grid[-1]
        out[inside] = spline(s[inside])
        if np.any(~inside):
            out[~inside] = self.phi_direct(s[~inside])
        return complex(out[0]) if scalar else out

    __call__ = phi

    def with_shift(self, c: float) -> "TestFunction":
        return _replace(self, shift=self.shift + c)

    def scaled(self, a: float) -> "TestFunction":
        return _replace(self, weight=self.weight * a)

    def reflected(self) -> "TestFunction":
        """phi(s) -> phi(-s), i.e. phi_hat(t) -> phi_hat(-t)."""
        if self.shift:
            raise DomainError("reflect before shifting", module="testfn")
        return _replace(self, t_minus=-self.t_plus, t_plus=-self.t_minus)

    def to_json(self):
        return {"j0": self.j0, "support": [self.t_minus, self.t_plus], "mode": self.mode,
                "shift": self.shift, "weight": self.weight, "s_max": self.effective_s_max}


def _replace(tf: TestFunction, **kw) -> TestFunction:
    d = dict(j0=tf.j0, t_minus=tf.t_minus, t_plus=tf.t_plus, mode=tf.mode, shift=tf.shift,
             weight=tf.weight, s_max=tf.s_max, ds=tf.ds)
    d.update(kw)
    return TestFunction(**d)


@dataclass(frozen=True, eq=False)
class Combination:
    """Finite linear combination sum a_i phi_i with the TestFunction interface
    used by the spectral sums."""

    __test__ = False

    parts: tuple = field(default_factory=tuple)  # ((coef, TestFunction), ...)

    def phi(self, s):
        return sum(a * tf.phi(s) for a, tf in self.parts)

    __call__ = phi

    def phi_hat(self, t):
        return sum(a * tf.phi_hat(t) for a, tf in self.parts)

    @property
    def effective_s_max(self) -> float:
        return min(tf.effective_s_max for _, tf in self.parts)

    def decay_bound(self, s):
        return sum(abs(a) * tf.decay_bound(s) for a, tf in self.parts)

    def tail_sum_bound(self, s0, density, side=0):
        return sum(abs(a) * tf.tail_sum_bound(s0, density, side) for a, tf in self.parts)

    def edge_scale(self, rel: float = 1e-4) -> float:
        return max(tf.edge_scale(rel) for _, tf in self.parts)

    @property
    def lipschitz(self) -> float:
        return sum(abs(a) * tf.lipschitz for a, tf in self.parts)

    @property
    def decay_constants(self):
        return {0: sum(abs(a) * tf.decay_constants[0] for a, tf in self.parts)}

    def to_json(self):
        return {"combination": [[a if not isinstance(a, complex) else [a.real, a.imag], tf.to_json()]
                                for a, tf in self.parts]}


def make_test_function(j0: int, t_minus: float, t_plus: float, mode: str = "symmetric", **kw) -> TestFunction:
    """phi_hat(t) = t^(2 j0) * bump on [t_minus, t_plus]."""
    return TestFunction(int(j0), float(t_minus), float(t_plus), mode, **kw)


def phi_eval(tf: TestFunction, s):
    return tf.phi(s)


def weyl_kill_check(tf: TestFunction, tol: float = 1e-9) -> bool:
    """True iff |phi_hat^(m)(0)| <= tol for m <= 2 j0 - 1 (at least m = 0),
    by central finite differences of phi_hat."""
    lo, hi = tf.support
    if lo >= 0.0 or hi <= 0.0:
        return True  # phi_hat vanishes near 0
    step = 1e-6 * tf.half_width
    for m in range(0, max(1, 2 * tf.j0)):
        # m-th central difference, O(step^2)
        k = np.arange(m + 1)
        pts = (m / 2.0 - k) * step
        w = (-1.0) ** k * np.array([math.comb(m, int(i)) for i in k])
        d = np.sum(w * tf.phi_hat(pts)) / step ** m
        if abs(d) > tol:
            return False
    return True


def plancherel_defect(tf: TestFunction) -> float:
    """|(1/2pi) int |phi_hat|^2 - int |phi|^2| relative, over the cached grid."""
    t = tf._t_fine
    lhs = float(trapezoid(np.abs(tf.phi_hat(t)) ** 2, t)) / (2 * math.pi)
    s, vals = tf.cache_samples
    rhs = float(trapezoid(np.abs(vals) ** 2, s))
    return abs(lhs - rhs) / lhs
