"""Exponents, log powers and test-function functionals attached to a
critical level."""
from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.special import beta as beta_fn

from .errors import DomainError
from .testfn import TestFunction

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class SingularityClass:
    n: int
    k: int
    extremum: str  # "min" | "max"
    alpha: float
    m: int
    case: str  # minimum | max-generic | max-log | max-even-integer
    alpha_exact: Fraction

    @property
    def gamma(self) -> Fraction:
        """n (k + 1) / (2k), the homogeneity of the local volume."""
        return Fraction(self.n * (self.k + 1), 2 * self.k)

    def to_json(self):
        d = asdict(self)
        d["alpha_exact"] = str(self.alpha_exact)
        return d


def exponent(n: int, k: int) -> Fraction:
    """n/2 + n/(2k) - n."""
    return Fraction(n, 2) + Fraction(n, 2 * k) - n


def classify_singularity(n: int, k: int, extremum: str) -> SingularityClass:
    if n < 1 or k < 1:
        raise DomainError("need n >= 1 and k >= 1", module="invariants")
    ext = {"minimum": "min", "maximum": "max"}.get(extremum, extremum)
    if ext not in ("min", "max"):
        raise DomainError(f"unknown extremum type {extremum!r}", module="invariants")
    a = exponent(n, k)
    g = Fraction(n * (k + 1), 2 * k)
    if ext == "min":
        case, m = "minimum", 0
    elif g.denominator == 1 and n % 2 == 1:
        case, m = "max-log", 1
    elif g.denominator == 1:
        case, m = "max-even-integer", 0
    else:
        case, m = "max-generic", 0
    return SingularityClass(n, k, ext, float(a), m, case, a)


def _half_line_moment(phi, gamma: float, sign: int = 1, s_max: float | None = None) -> complex:
    """integral_0^inf phi(sign * s) s^(gamma - 1) ds.

    [0, 1] uses s = u^q with q gamma integer so the weight is polynomial;
    the rest is composite Gauss-Legendre on unit panels up to s_max.
    """
    if gamma <= 0:
        raise DomainError("moment exponent must be positive", module="invariants")
    if s_max is None:
        s_max = phi.effective_s_max
    q = 4.0 / gamma
    u = 0.5 * (_GL_NODES + 1.0)
    w = 0.5 * _GL_WEIGHTS
    # sub-panels on u in [0, 1] keep the u^q map well resolved
    parts = 8
    uu = (np.arange(parts)[:, None] + u[None, :]).ravel() / parts
    ww = np.tile(w, parts) / parts
    head = np.sum(ww * q * uu ** 3 * phi(sign * uu ** q))
    edges = np.arange(1.0, math.floor(s_max) + 1.0)
    if len(edges) > 1:
        s = (edges[:-1, None] + u[None, :]).ravel()
        body = np.sum(np.tile(w, len(edges) - 1) * s ** (gamma - 1.0) * phi(sign * s))
    else:
        body = 0.0
    return complex(head + body)


def _real_if_close(z: complex, scale: float):
    return z.real if abs(z.imag) <= 1e-12 * max(scale, 1e-300) else z


def min_functional(tf, n: int, k: int):
    """integral over u, v > 0 of phi(u^2 + v^(2k)) u^(n-1) v^(n-1).

    Reduced exactly to B(n/2, n/2k)/(4k) * integral_0^inf phi(s) s^(gamma-1) ds.
    """
    if n < 1 or k < 1:
        raise DomainError("need n >= 1 and k >= 1", module="invariants")
    gamma = n * (k + 1) / (2 * k)
    z = beta_fn(n / 2, n / (2 * k)) / (4 * k) * _half_line_moment(tf, gamma)
    return _real_if_close(z, abs(z))


def max_functionals(tf, n: int, k: int):
    """(I_plus, I_minus) = integrals of |t|_+^(gamma-1) phi and |t|_-^(gamma-1) phi."""
    if n < 1 or k < 1:
        raise DomainError("need n >= 1 and k >= 1", module="invariants")
    gamma = n * (k + 1) / (2 * k)
    ip = _half_line_moment(tf, gamma, +1)
    im = _half_line_moment(tf, gamma, -1)
    scale = abs(ip) + abs(im)
    return _real_if_close(ip, scale), _real_if_close(im, scale)


def subprincipal_shift_hook(tf: TestFunction, p1_at_z0: float) -> TestFunction:
    """phi(t) -> phi(t + p1(z0))."""
    if p1_at_z0 == 0:
        return tf
    return tf.with_shift(float(p1_at_z0))


def pseudo_invariant(n: int, k: int, tf, p1_shift: float = 0.0, extremum: str = "min"):
    """(2n/k - n, (1/k) * integral phi(t + p1) t_side^((2n - k)/k) dt), side + for
    a minimum and - for a maximum. Valid for even k > 2."""
    if k <= 2 or k % 2:
        raise DomainError("k must be even and > 2", module="invariants")
    ext = {"minimum": "min", "maximum": "max"}.get(extremum, extremum)
    shifted = subprincipal_shift_hook(tf, p1_shift)
    g = 2 * n / k  # power (2n - k)/k = g - 1
    mom = _half_line_moment(shifted, g, +1 if ext == "min" else -1) / k
    return Fraction(2 * n, k) - n, _real_if_close(mom, abs(mom))


def exponent_table(n_max: int = 4, k_max: int = 5):
    rows = []
    for n in range(1, n_max + 1):
        for k in range(1, k_max + 1):
            lo = classify_singularity(n, k, "min")
            hi = classify_singularity(n, k, "max")
            rows.append({"n": n, "k": k, "alpha": str(lo.alpha_exact), "alpha_float": lo.alpha,
                         "gamma": str(lo.gamma), "m_min": lo.m, "m_max": hi.m, "case_max": hi.case})
    return rows


def exponent_table_csv(n_max: int = 4, k_max: int = 5) -> str:
    rows = exponent_table(n_max, k_max)
    buf = io.StringIO()
    keys = list(rows[0])
    buf.write(",".join(keys) + "\n")
    for r in rows:
        buf.write(",".join(str(r[c]) for c in keys) + "\n")
    return buf.getvalue()
