"""Potentials V on R^n, the symbol p(x, xi) = |xi|^2 + V(x), and local data
at critical points (degree, homogeneous germ, spherical mean).

Evaluators are vectorised over leading axes: ``x`` has shape ``(..., n)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import roots_jacobi

from .errors import DimensionError, DomainError, IndefiniteGermError

Exponent = tuple[int, ...]


class Polynomial:
    """Sparse real multivariate polynomial ``sum c_e x^e``."""

    __slots__ = ("dim", "terms")

    def __init__(self, terms: Mapping[Sequence[int], float], dim: int):
        clean = {}
        for e, c in terms.items():
            e = tuple(int(v) for v in e)
            if len(e) != dim:
                raise DimensionError(f"exponent {e} does not match dimension {dim}", module="potential")
            if c != 0.0:
                clean[e] = clean.get(e, 0.0) + float(c)
        self.dim = dim
        self.terms = {e: c for e, c in clean.items() if c != 0.0}

    @classmethod
    def from_coeffs_1d(cls, coeffs: Sequence[float]) -> "Polynomial":
        """Ascending coefficients ``c0 + c1 x + c2 x^2 + ...``."""
        return cls({(i,): c for i, c in enumerate(coeffs)}, 1)

    def __repr__(self):
        return f"Polynomial({self.terms!r}, dim={self.dim})"

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, tuple(sorted(self.terms.items()))))

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for e, c in self.terms.items():
            term = np.full(x.shape[:-1], c)
            for i, p in enumerate(e):
                if p:
                    term = term * x[..., i] ** p
            out = out + term
        return out

    def deriv(self, i: int) -> "Polynomial":
        new = {}
        for e, c in self.terms.items():
            if e[i] > 0:
                f = list(e)
                f[i] -= 1
                new[tuple(f)] = new.get(tuple(f), 0.0) + c * e[i]
        return Polynomial(new, self.dim)

    def homogeneous_part(self, d: int) -> "Polynomial":
        return Polynomial({e: c for e, c in self.terms.items() if sum(e) == d}, self.dim)

    def shift(self, x0) -> "Polynomial":
        """Return q with q(y) = self(x0 + y)."""
        x0 = np.asarray(x0, dtype=float).reshape(self.dim)
        new: dict[Exponent, float] = {}
        for e, c in self.terms.items():
            # expand prod_i (x0_i + y_i)^{e_i}
            factors = []
            for i, p in enumerate(e):
                factors.append([(j, math.comb(p, j) * x0[i] ** (p - j)) for j in range(p + 1)])
            for combo in itertools.product(*factors):
                exp = tuple(j for j, _ in combo)
                w = c
                for _, v in combo:
                    w *= v
                new[exp] = new.get(exp, 0.0) + w
        return Polynomial(new, self.dim)

    def chop(self, tol: float) -> "Polynomial":
        return Polynomial({e: c for e, c in self.terms.items() if abs(c) > tol}, self.dim)

    def power(self, j: int) -> "Polynomial":
        out = Polynomial({(0,) * self.dim: 1.0}, self.dim)
        for _ in range(j):
            out = out * self
        return out

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        new: dict[Exponent, float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                new[e] = new.get(e, 0.0) + c1 * c2
        return Polynomial(new, self.dim)

    def to_json(self):
        return [[list(e), c] for e, c in sorted(self.terms.items())]


@dataclass(frozen=True, eq=False)
class Potential:
    """A confining potential on the box ``[-box, box]^dim``.

    Either ``poly`` (exact polynomial form, preferred) or ``func`` must be
    given. Missing gradient/Hessian evaluators fall back to central
    differences of ``func``.
    """

    dim: int
    box: float
    poly: Polynomial | None = None
    func: Callable | None = None
    grad_func: Callable | None = None
    hess_func: Callable | None = None
    name: str = "custom"
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError("dimension must be positive", module="potential")
        if self.poly is None and self.func is None:
            raise ValueError("need a polynomial form or an evaluator")
        if self.poly is not None:
            if self.poly.dim != self.dim:
                raise DimensionError("polynomial dimension mismatch", module="potential")
            grad = tuple(self.poly.deriv(i) for i in range(self.dim))
            hess = tuple(tuple(g.deriv(j) for j in range(self.dim)) for g in grad)
            object.__setattr__(self, "_grad_polys", grad)
            object.__setattr__(self, "_hess_polys", hess)

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise DimensionError(
                f"expected points with last axis {self.dim}, got shape {x.shape}", module="potential"
            )
        return x

    def value(self, x):
        x = self._check(x)
        if self.poly is not None:
            return self.poly(x)
        return np.asarray(self.func(x), dtype=float)

    __call__ = value

    def gradient(self, x):
        x = self._check(x)
        if self.poly is not None:
            return np.stack([g(x) for g in self._grad_polys], axis=-1)
        if self.grad_func is not None:
            return np.asarray(self.grad_func(x), dtype=float)
        step = 1e-5 * max(1.0, self.box)
        out = []
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = step
            out.append((self.func(x + e) - self.func(x - e)) / (2 * step))
        return np.stack(out, axis=-1)

    def hessian(self, x):
        x = self._check(x)
        if self.poly is not None:
            rows = [np.stack([hij(x) for hij in row], axis=-1) for row in self._hess_polys]
            return np.stack(rows, axis=-2)
        if self.hess_func is not None:
            return np.asarray(self.hess_func(x), dtype=float)
        step = 1e-4 * max(1.0, self.box)
        cols = []
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = step
            cols.append((self.gradient(x + e) - self.gradient(x - e)) / (2 * step))
        return np.stack(cols, axis=-1)

    def grid(self, points_per_axis: int = 201):
        """Uniform tensor grid over the box, shape ``(m, dim)``."""
        axis = np.linspace(-self.box, self.box, points_per_axis)
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def minimum_on_grid(self, points_per_axis: int = 201) -> float:
        v = self.value(self.grid(points_per_axis))
        vmin = float(np.min(v))
        if not np.isfinite(vmin):
            raise DomainError("potential is not bounded below on the box", module="potential")
        return vmin

    def to_json(self):
        if self.spec:
            return dict(self.spec)
        out = {"kind": "polynomial", "dim": self.dim, "box": self.box}
        if self.poly is not None:
            out["terms"] = self.poly.to_json()
        return out


def symbol_eval(pot: Potential, x, xi):
    """p(x, xi) = |xi|^2 + V(x)."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if xi.ndim == 0:
        xi = xi.reshape(1)
    if x.shape[-1] != pot.dim or xi.shape[-1] != pot.dim:
        raise DimensionError("x and xi must have length n", module="potential")
    return np.sum(xi * xi, axis=-1) + pot.value(x)


# -- built-in families -------------------------------------------------------

def harmonic(coeffs: Sequence[float] = (1.0,), box: float = 10.0) -> Potential:
    """V(x) = sum_j c_j x_j^2."""
    n = len(coeffs)
    terms = {}
    for j, c in enumerate(coeffs):
        e = [0] * n
        e[j] = 2
        terms[tuple(e)] = c
    return Potential(n, box, Polynomial(terms, n), name="harmonic",
                     spec={"kind": "harmonic", "coefficients": list(map(float, coeffs)), "box": box})


def quadratic(matrix, box: float = 10.0) -> Potential:
    """V(x) = x^T Q x for a symmetric matrix Q."""
    q = np.atleast_2d(np.asarray(matrix, dtype=float))
    q = 0.5 * (q + q.T)
    n = q.shape[0]
    terms: dict[Exponent, float] = {}
    for i in range(n):
        for j in range(n):
            e = [0] * n
            e[i] += 1
            e[j] += 1
            terms[tuple(e)] = terms.get(tuple(e), 0.0) + q[i, j]
    return Potential(n, box, Polynomial(terms, n), name="quadratic",
                     spec={"kind": "quadratic", "matrix": q.tolist(), "box": box})


def power(k: int, coefficient: float = 1.0, dim: int = 1, box: float = 10.0) -> Potential:
    """V(x) = c |x|^{2k}."""
    if k < 1:
        raise ValueError("k must be >= 1")
    r2 = Polynomial({tuple(2 if i == j else 0 for i in range(dim)): 1.0 for j in range(dim)}, dim)
    poly = r2.power(k)
    poly = Polynomial({e: coefficient * c for e, c in poly.terms.items()}, dim)
    return Potential(dim, box, poly, name=f"power{2 * k}",
                     spec={"kind": "power", "k": k, "coefficient": coefficient, "dim": dim, "box": box})


def double_well(box: float = 10.0) -> Potential:
    """V(x) = (x^2 - 1)^2: minima at +-1 (value 0), maximum at 0 (value 1)."""
    return Potential(1, box, Polynomial.from_coeffs_1d([1.0, 0.0, -2.0, 0.0, 1.0]), name="double_well",
                     spec={"kind": "double_well", "box": box})


def asymmetric_double_well(epsilon: float, box: float = 10.0) -> Potential:
    """V(x) = (x^2 - 1)^2 + epsilon x."""
    return Potential(1, box, Polynomial.from_coeffs_1d([1.0, epsilon, -2.0, 0.0, 1.0]),
                     name="asymmetric_double_well",
                     spec={"kind": "asymmetric_double_well", "epsilon": epsilon, "box": box})


def polynomial(terms, dim: int = 1, box: float = 10.0) -> Potential:
    """General polynomial. ``terms`` is either a list of ascending 1D
    coefficients or a list of ``[exponent, coefficient]`` pairs."""
    if dim == 1 and terms and not isinstance(terms[0], (list, tuple)):
        poly = Polynomial.from_coeffs_1d(terms)
    else:
        poly = Polynomial({tuple(e): c for e, c in terms}, dim)
    return Potential(dim, box, poly, name="polynomial",
                     spec={"kind": "polynomial", "terms": poly.to_json(), "dim": dim, "box": box})


def from_config(cfg: Mapping) -> Potential:
    """Build a potential from a JSON-compatible mapping with key ``kind``."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    box = float(cfg.pop("box", 10.0))
    try:
        if kind == "harmonic":
            return harmonic(cfg.get("coefficients", [1.0]), box=box)
        if kind == "quadratic":
            return quadratic(cfg["matrix"], box=box)
        if kind == "power":
            return power(int(cfg["k"]), float(cfg.get("coefficient", 1.0)), int(cfg.get("dim", 1)), box=box)
        if kind == "double_well":
            return double_well(box=box)
        if kind == "asymmetric_double_well":
            return asymmetric_double_well(float(cfg["epsilon"]), box=box)
        if kind == "polynomial":
            return polynomial(cfg["terms"], int(cfg.get("dim", 1)), box=box)
    except KeyError as exc:
        raise DomainError(f"potential kind {kind!r} is missing key {exc}", module="potential") from None
    raise DomainError(f"unknown potential kind {kind!r}", module="potential")


# -- sphere quadrature -------------------------------------------------------

def sphere_quadrature(n: int, order: int = 64):
    """Nodes (m, n) and weights (m,) integrating over S^{n-1}.

    n = 1 is the two-point sphere {-1, +1} with unit weights. For n >= 2 a
    product rule in hyperspherical angles: trapezoid in the azimuth and
    Gauss-Jacobi in the cosines of the polar angles.
    """
    if n == 1:
        return np.array([[-1.0], [1.0]]), np.array([1.0, 1.0])
    m_phi = 2 * order
    phi = 2 * np.pi * np.arange(m_phi) / m_phi
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    weights = np.full(m_phi, 2 * np.pi / m_phi)
    # embed S^{d-1} into S^d: x = (cos t, sin t * y), weight sin^{d-1} t dt
    for d in range(2, n):
        a = (d - 2) / 2.0
        u, w = roots_jacobi(order, a, a)
        s = np.sqrt(1.0 - u * u)
        nodes = np.concatenate(
            [np.repeat(u, len(weights))[:, None], np.kron(s[:, None], nodes).reshape(-1, d)], axis=1
        )
        weights = np.kron(w, weights)
    return nodes, weights


def sphere_area(n: int) -> float:
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


# -- critical points ---------------------------------------------------------

@dataclass(frozen=True)
class CriticalPointInfo:
    location: tuple[float, ...]
    value: float
    degree: int
    germ: Polynomial | None
    kind: str  # "minimum" | "maximum" | "non-extremal"
    gradient_norm: float = 0.0

    @property
    def k(self) -> int:
        return self.degree // 2

    @property
    def dim(self) -> int:
        return len(self.location)

    @property
    def extremal(self) -> bool:
        return self.kind in ("minimum", "maximum")

    def to_json(self):
        return {
            "location": list(self.location),
            "value": self.value,
            "degree": self.degree,
            "k": self.k,
            "kind": self.kind,
            "germ": self.germ.to_json() if self.germ is not None else None,
        }


def _newton(pot: Potential, x, max_iter=400, step_tol=1e-14):
    x = np.array(x, dtype=float)
    for _ in range(max_iter):
        g = pot.gradient(x)
        if not np.all(np.isfinite(g)):
            return None
        if np.max(np.abs(g)) == 0.0:
            return x
        H = pot.hessian(x)
        dx, *_ = np.linalg.lstsq(H, -g, rcond=None)
        x = x + dx
        if np.any(np.abs(x) > 2 * pot.box) or not np.all(np.isfinite(x)):
            return None
        if np.max(np.abs(dx)) < step_tol * max(1.0, np.max(np.abs(x))):
            return x
    return x


def _germ_fd_1d(pot: Potential, x0: float, scale: float):
    """Lowest non-vanishing Taylor coefficient of order 2..6 by central
    differences with step 1e-2 * scale."""
    step = 1e-2 * scale
    xs = x0 + step * np.arange(-4, 5)
    vals = pot.value(xs[:, None])
    # central difference weights for derivatives 2..6 on the 9-point stencil
    offsets = np.arange(-4, 5, dtype=float)
    for order in range(2, 7):
        A = np.vander(offsets, 9, increasing=True).T
        rhs = np.zeros(9)
        rhs[order] = math.factorial(order)
        w = np.linalg.solve(A, rhs)
        d = float(w @ vals) / step ** order
        if abs(d) > 1e-6 * max(1.0, abs(float(pot.value(np.array([x0])))) ):
            return order, d / math.factorial(order)
    return None, 0.0


def extract_germ(pot: Potential, x0, tol: float = 1e-9):
    """Return (degree, homogeneous germ polynomial in y = x - x0)."""
    x0 = np.asarray(x0, dtype=float)
    if pot.poly is not None:
        q = pot.poly.shift(x0)
        scale = max(1.0, max((abs(c) for c in q.terms.values()), default=1.0))
        for d in range(2, q.degree + 1):
            part = q.homogeneous_part(d).chop(tol * scale)
            if part.terms:
                return d, part
        return None, None
    if pot.dim == 1:
        order, c = _germ_fd_1d(pot, float(x0[0]), max(1.0, 0.1 * pot.box))
        if order is None:
            return None, None
        return order, Polynomial({(order,): c}, 1)
    H = pot.hessian(x0)
    if np.max(np.abs(H)) > tol:
        terms: dict[Exponent, float] = {}
        n = pot.dim
        for i in range(n):
            for j in range(n):
                e = [0] * n
                e[i] += 1
                e[j] += 1
                terms[tuple(e)] = terms.get(tuple(e), 0.0) + 0.5 * H[i, j]
        return 2, Polynomial(terms, n).chop(tol)
    return None, None


def germ_sign(germ: Polynomial, n_samples: int = 64, tol: float = 1e-10) -> int:
    """+1 / -1 if the germ is definite on the sphere, 0 otherwise."""
    n = germ.dim
    if n == 1:
        pts = np.array([[-1.0], [1.0]])
    else:
        order = max(4, int(math.ceil(n_samples ** (1.0 / (n - 1)))))
        pts, _ = sphere_quadrature(n, order)
        if len(pts) < n_samples:
            pts, _ = sphere_quadrature(n, 2 * order)
    v = germ(pts)
    if np.all(v > tol):
        return 1
    if np.all(v < -tol):
        return -1
    return 0


def find_critical_points(pot: Potential, seeds: int | np.ndarray = 41, merge_tol: float = 1e-6,
                         grad_tol: float = 1e-10) -> list[CriticalPointInfo]:
    """Newton-polished, deduplicated critical points of V inside the box.

    ``seeds`` is either the number of seed points per axis or an explicit
    array of shape (m, n). Seeds whose Newton iteration diverges are skipped.
    """
    if np.isscalar(seeds):
        seed_pts = pot.grid(int(seeds))
    else:
        seed_pts = np.atleast_2d(np.asarray(seeds, dtype=float))
    found: list[np.ndarray] = []
    for s in seed_pts:
        x = _newton(pot, s)
        if x is None or np.any(np.abs(x) > pot.box):
            continue
        if np.max(np.abs(pot.gradient(x))) > grad_tol:
            continue
        if any(np.linalg.norm(x - y) < merge_tol for y in found):
            continue
        found.append(x)
    found.sort(key=lambda y: tuple(y))
    out = []
    for x in found:
        vc = float(pot.value(x))
        degree, germ = extract_germ(pot, x)
        if degree is None or degree % 2:
            kind = "non-extremal"
        else:
            sgn = germ_sign(germ)
            kind = {1: "minimum", -1: "maximum", 0: "non-extremal"}[sgn]
        out.append(CriticalPointInfo(
            location=tuple(float(v) for v in x), value=vc, degree=degree or 0, germ=germ,
            kind=kind, gradient_norm=float(np.max(np.abs(pot.gradient(x)))),
        ))
    return out


def spherical_mean(cp: CriticalPointInfo | Polynomial, degree: int | None = None, order: int = 96) -> float:
    """A(V) = integral over S^{n-1} of |V_2k(theta)|^{-n/(2k)}.

    Accepts a CriticalPointInfo or a bare homogeneous germ with its degree.
    """
    if isinstance(cp, CriticalPointInfo):
        germ, degree = cp.germ, cp.degree
    else:
        germ = cp
        if degree is None:
            degree = germ.degree
    if germ is None or germ_sign(germ) == 0:
        raise IndefiniteGermError("spherical mean needs a definite germ", module="potential")
    n = germ.dim
    nodes, weights = sphere_quadrature(n, order)
    vals = np.abs(germ(nodes)) ** (-n / degree)
    return float(np.sum(weights * vals))
