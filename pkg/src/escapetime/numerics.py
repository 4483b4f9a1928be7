"""Shared numerical primitives: special functions, quadrature, Abel transforms.

Everything here is a pure function. Angles are radians throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "QuadratureRule",
    "AbelPair",
    "elliptic_K",
    "legendre_P",
    "legendre_table",
    "gauss_rule",
    "abel_forward",
    "abel_invert",
    "abel_pair",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for integration over a fixed interval."""

    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    def __post_init__(self):
        a, b = self.interval
        n = np.asarray(self.nodes)
        if n.size and (np.any(np.diff(n) <= 0) or n[0] <= a - 1e-14 or n[-1] >= b + 1e-14):
            raise DomainError("quadrature nodes must be strictly increasing inside the interval")

    def integrate(self, f) -> float:
        return float(np.sum(self.weights * f(self.nodes)))


@dataclass(frozen=True)
class AbelPair:
    """Sampled forward/inverse Abel transforms on a cap of half-angle epsilon."""

    epsilon: float
    u_grid: np.ndarray
    H_values: np.ndarray
    theta_grid: np.ndarray
    h_values: np.ndarray


def elliptic_K(e):
    """Complete elliptic integral of the first kind K(e), e the modulus.

    Arithmetic-geometric mean iteration: K = pi / (2 agm(1, sqrt(1-e^2))).
    Quadratic convergence; relative accuracy ~1e-15. Accepts scalars or arrays.
    """
    arr = np.asarray(e, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"eccentricity must lie in [0, 1), got {e}")
    if np.any(arr == 1.0):
        raise DomainError("K(e) diverges at e = 1")
    a = np.ones_like(arr)
    b = np.sqrt(1.0 - arr * arr)
    for _ in range(60):
        if np.all(np.abs(a - b) < 1e-16 * a):
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    out = np.pi / (2.0 * a)
    return float(out) if np.isscalar(e) or arr.ndim == 0 else out


def legendre_P(n: int, x):
    """P_n(x) by the three-term recurrence. |x| <= 1 required."""
    if n < 0 or int(n) != n:
        raise DomainError("order must be a nonnegative integer")
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-14):
        raise DomainError(f"argument outside [-1, 1]: {x}")
    arr = np.clip(arr, -1.0, 1.0)
    p_prev = np.ones_like(arr)
    if n == 0:
        out = p_prev
    else:
        p = arr.copy()
        for k in range(1, n):
            p_prev, p = p, ((2 * k + 1) * arr * p - k * p_prev) / (k + 1)
        out = p
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def legendre_table(nmax: int, x: np.ndarray) -> np.ndarray:
    """All P_0..P_nmax at the points x, shape (nmax+1, len(x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    P = np.empty((nmax + 1, x.size))
    P[0] = 1.0
    if nmax >= 1:
        P[1] = x
    for n in range(1, nmax):
        P[n + 1] = ((2 * n + 1) * x * P[n] - n * P[n - 1]) / (n + 1)
    return P


def gauss_rule(n: int, a: float, b: float) -> QuadratureRule:
    """Gauss-Legendre rule with n points on [a, b]; exact to degree 2n-1."""
    if n < 1:
        raise DomainError("need at least one quadrature point")
    if not a < b:
        raise DomainError(f"empty interval [{a}, {b}]")
    x, w = np.polynomial.legendre.leggauss(int(n))
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return QuadratureRule(mid + half * x, half * w, (a, b))


# --- Abel transform pair on the cap -------------------------------------
#
# Forward:  H(u) = (1/2pi) int_u^eps h(alpha) sin(alpha) dalpha / sqrt(cos u - cos alpha)
# Inverse:  h(theta) = -(2/sin theta) d/dtheta int_theta^eps sin(u) H(u) du / sqrt(cos theta - cos u)
#
# Both integrals carry an inverse-square-root endpoint singularity. Substituting
# sin^2(alpha/2) = sin^2(u/2) + W sigma^2 with W = sin^2(eps/2) - sin^2(u/2)
# absorbs it exactly, leaving smooth integrands on [0, 1].


def _alpha_of_sigma(u: float, eps: float, sigma: np.ndarray) -> np.ndarray:
    W = np.sin(eps / 2) ** 2 - np.sin(u / 2) ** 2
    return 2.0 * np.arcsin(np.sqrt(np.sin(u / 2) ** 2 + W * sigma * sigma))


def abel_forward(h, eps: float, u: float, n: int = 64) -> float:
    """Forward transform H(u) of a function h on [0, eps].

    After the substitution the integral becomes
    H(u) = (sqrt2 sqrt(W)/pi) int_0^1 h(alpha(sigma)) dsigma.
    """
    if not 0 < eps < np.pi:
        raise DomainError(f"cap angle out of range: {eps}")
    if u > eps or u < 0:
        raise DomainError(f"evaluation point {u} outside [0, {eps}]")
    if u == eps:
        return 0.0
    W = np.sin(eps / 2) ** 2 - np.sin(u / 2) ** 2
    rule = gauss_rule(n, 0.0, 1.0)
    vals = np.asarray([h(a) for a in _alpha_of_sigma(u, eps, rule.nodes)], dtype=float)
    return float(np.sqrt(2.0 * W) / np.pi * np.sum(rule.weights * vals))


def _H_tilde_deriv(H, u_of, phi: float, step: float) -> float:
    # 5-point central difference of H(u(sin phi)) in phi; sin keeps the
    # argument inside [0, eps] for any real phi, so no one-sided stencils
    offs = np.array([-2.0, -1.0, 1.0, 2.0]) * step
    co = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * step)
    return float(sum(c * H(u_of(np.sin(phi + o))) for c, o in zip(co, offs)))


def abel_invert(H, eps: float, theta: float, n: int = 64, fd_step: float = 1e-3) -> float:
    """Inverse transform h(theta) for a forward-transformed H on [0, eps].

    The theta-derivative is taken analytically under the integral sign after
    the regularizing substitution (sigma = sin phi), which yields

      h(theta) = (sqrt2/sqrtV) [ int_0^{pi/2} Ht(phi) cos(phi) dphi
                                 - int_0^{pi/2} Ht'(phi) cos^2(phi)/sin(phi) dphi ]

    with Ht(phi) = H(u(sin phi)), sin^2(u/2) = sin^2(theta/2) + V sin^2(phi),
    V = sin^2(eps/2) - sin^2(theta/2). Ht is even in phi about both 0 and
    pi/2, so the stencil for Ht' never leaves the domain.
    """
    if not 0 < eps < np.pi:
        raise DomainError(f"cap angle out of range: {eps}")
    if not 0 < theta < eps:
        raise DomainError(f"evaluation point {theta} outside (0, {eps})")
    p = np.sin(theta / 2) ** 2
    V = np.sin(eps / 2) ** 2 - p

    def u_of(sigma: float) -> float:
        return 2.0 * np.arcsin(np.sqrt(p + V * sigma * sigma))

    rule = gauss_rule(n, 0.0, np.pi / 2)
    term1 = 0.0
    term2 = 0.0
    for phi, w in zip(rule.nodes, rule.weights):
        term1 += w * H(u_of(np.sin(phi))) * np.cos(phi)
        dHt = _H_tilde_deriv(H, u_of, phi, fd_step)
        term2 += w * dHt * np.cos(phi) ** 2 / np.sin(phi)
    return float(np.sqrt(2.0 / V) * (term1 - term2))


def abel_pair(h, eps: float, n_grid: int = 33, n: int = 64) -> AbelPair:
    """Sample h, its forward transform, and the recovered inverse on cap grids."""
    u_grid = np.linspace(0.0, eps, n_grid)
    H_values = np.array([abel_forward(h, eps, u, n=n) for u in u_grid])
    theta_grid = np.linspace(eps / n_grid, eps * (1 - 1.0 / n_grid), n_grid - 2)
    Hfun = lambda u: abel_forward(h, eps, u, n=n)
    h_values = np.array([abel_invert(Hfun, eps, t, n=n) for t in theta_grid])
    return AbelPair(eps, u_grid, H_values, theta_grid, h_values)
