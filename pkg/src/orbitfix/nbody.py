"""Planar relative equilibria of a central mass with a ring of bodies.

States interleave coordinates as (x_1, y_1, ..., x_n, y_n) for the ring
bodies; the central body of mass m0 sits at the origin and is eliminated.
In the frame rotating at the equilibrium rate the bodies satisfy
F(q) = omega^2 M q + grad U(q) = 0, and the interaction coefficients are
normalized so the unit regular polygon is an exact solution at
omega^2 = m0 + ring_constant(n). The system is equivariant under global
rotations, so solutions come in circles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .numlin import LinearOperator
from .solvers import HomogeneousSplit, ProblemSpec
from .symmetry import GroupAction

__all__ = [
    "NBodyConfig",
    "ring_constant",
    "polygon_solution",
    "grad_U",
    "hess_U",
    "build_nbody",
    "rotation_action",
    "reduced_polar_residual",
]

_COLLISION_EPS = 1e-12


def ring_constant(n: int) -> float:
    """Quarter sum of cosecants; the polygon's self-interaction strength."""
    if n < 2:
        raise ValueError("need at least two ring bodies")
    k = np.arange(1, n)
    return 0.25 * float(np.sum(1.0 / np.sin(np.pi * k / n)))


@dataclass(frozen=True)
class NBodyConfig:
    """Ring size, central mass, per-body masses, and the equilibrium rate."""

    n: int
    m0: float
    masses: Optional[Tuple[float, ...]] = None
    omega: float = 0.0  # filled from n and m0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two ring bodies")
        if self.m0 < 0.0:
            raise ValueError("central mass must be nonnegative")
        masses = self.masses
        if masses is None:
            masses = tuple(1.0 for _ in range(self.n))
        else:
            masses = tuple(float(m) for m in masses)
            if len(masses) != self.n:
                raise ValueError("need one mass per ring body")
            if any(m <= 0.0 for m in masses):
                raise ValueError("ring masses must be positive")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "omega", float(np.sqrt(self.m0 + ring_constant(self.n))))

    @property
    def coefficients(self) -> Tuple[float, float]:
        """(central, pairwise) interaction strengths.

        Chosen so the unit polygon solves F = 0 at the configured omega:
        central + pairwise * ring_constant(n) = omega^2.
        """
        c = ring_constant(self.n)
        a = (self.m0 + c) / (1.0 + self.m0 * c)
        return a, self.m0 * a

    @property
    def mass_diagonal(self) -> np.ndarray:
        return np.repeat(np.asarray(self.masses, dtype=float), 2)


def polygon_solution(n: int) -> np.ndarray:
    """Unit regular polygon with body j at angle 2*pi*j/n, j = 1..n."""
    if n < 2:
        raise ValueError("need at least two ring bodies")
    th = 2.0 * np.pi * np.arange(1, n + 1) / n
    q = np.empty(2 * n)
    q[0::2] = np.cos(th)
    q[1::2] = np.sin(th)
    return q


def _positions(config: NBodyConfig, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (2 * config.n,):
        raise ValueError("state length must be twice the body count")
    return q.reshape(config.n, 2)


def grad_U(config: NBodyConfig, q: np.ndarray) -> np.ndarray:
    """Gradient of the interaction potential at q."""
    a, b = config.coefficients
    pos = _positions(config, q)
    masses = np.asarray(config.masses)
    g = np.zeros_like(pos)
    for j in range(config.n):
        rj = float(np.linalg.norm(pos[j]))
        if rj < _COLLISION_EPS:
            raise ValueError("body collides with the center")
        g[j] = -a * masses[j] * pos[j] / rj ** 3
        for i in range(config.n):
            if i == j:
                continue
            d = pos[j] - pos[i]
            dist = float(np.linalg.norm(d))
            if dist < _COLLISION_EPS:
                raise ValueError("two ring bodies collide")
            g[j] -= b * masses[i] * masses[j] * d / dist ** 3
    return g.ravel()


def _pair_block(r: np.ndarray) -> np.ndarray:
    dist = float(np.linalg.norm(r))
    return np.eye(2) / dist ** 3 - 3.0 * np.outer(r, r) / dist ** 5


def hess_U(config: NBodyConfig, q: np.ndarray) -> np.ndarray:
    """Hessian of the interaction potential at q (dense, symmetric)."""
    a, b = config.coefficients
    pos = _positions(config, q)
    masses = np.asarray(config.masses)
    n = config.n
    H = np.zeros((2 * n, 2 * n))
    for j in range(n):
        rj = float(np.linalg.norm(pos[j]))
        if rj < _COLLISION_EPS:
            raise ValueError("body collides with the center")
        diag = -a * masses[j] * _pair_block(pos[j])
        for i in range(n):
            if i == j:
                continue
            d = pos[j] - pos[i]
            if float(np.linalg.norm(d)) < _COLLISION_EPS:
                raise ValueError("two ring bodies collide")
            block = b * masses[i] * masses[j] * _pair_block(d)
            diag -= block
            H[2 * j:2 * j + 2, 2 * i:2 * i + 2] = block
        H[2 * j:2 * j + 2, 2 * j:2 * j + 2] = diag
    return H


def build_nbody(config: NBodyConfig) -> ProblemSpec:
    """Rotating-frame equilibrium system for the configured ring.

    F(q) = omega^2 M q + grad U(q); the fixed-point form is
    G(q) = -M^{-1} grad U(q) / omega^2, and grad U is homogeneous of
    degree -2, which feeds the stabilized iteration.
    """
    w2 = config.omega ** 2
    mdiag = config.mass_diagonal
    dim = 2 * config.n

    def F(q):
        return w2 * mdiag * q + grad_U(config, q)

    def G(q):
        return -grad_U(config, q) / (w2 * mdiag)

    def jacobian_at(q):
        m = w2 * np.diag(mdiag) + hess_U(config, q)
        return LinearOperator(dim=dim, apply=lambda v: m @ v, symmetric=True)

    split = HomogeneousSplit(
        linear=LinearOperator(dim=dim, apply=lambda v: w2 * mdiag * v, symmetric=True),
        nonlinear=lambda q: -grad_U(config, q),
        degree=-2.0,
    )
    return ProblemSpec(dim=dim, F=F, G=G, jacobian_at=jacobian_at, homogeneous_split=split)


def _rotate(alpha: float, q: np.ndarray) -> np.ndarray:
    c, s = np.cos(alpha), np.sin(alpha)
    out = np.empty_like(q)
    out[0::2] = c * q[0::2] - s * q[1::2]
    out[1::2] = s * q[0::2] + c * q[1::2]
    return out


def _rotation_generator(q: np.ndarray) -> np.ndarray:
    v = np.empty_like(q)
    v[0::2] = -q[1::2]
    v[1::2] = q[0::2]
    return v


def _rotation_align(x: np.ndarray, xref: np.ndarray) -> float:
    # argmax over alpha of <x, R_alpha xref> = A cos + B sin
    a = float(np.dot(x, xref))
    b = float(np.dot(x, _rotation_generator(xref)))
    return float(np.arctan2(b, a))


def rotation_action() -> GroupAction:
    """Simultaneous rotation of all bodies about the origin."""
    return GroupAction(
        n_generators=1,
        act=lambda alpha, q: _rotate(float(alpha), np.asarray(q, dtype=float)),
        generators=lambda q: [_rotation_generator(np.asarray(q, dtype=float))],
        align=_rotation_align,
        period=2.0 * np.pi,
    )


def reduced_polar_residual(r1: float, r2: float, theta: float, m0: float) -> np.ndarray:
    """Two-body system reduced to radii and separation angle.

    Components: the two radial force balances and the rotation-invariant
    angular balance r1<F_1, J q_1^> - r2<F_2, J q_2^>. All three vanish
    at the polygon (r1 = r2 = 1, theta = pi) for every central mass.
    """
    if r1 < _COLLISION_EPS or r2 < _COLLISION_EPS:
        raise ValueError("body collides with the center")
    if m0 < 0.0:
        raise ValueError("central mass must be nonnegative")
    c = ring_constant(2)
    a = (m0 + c) / (1.0 + m0 * c)
    b = m0 * a
    w2 = m0 + c
    rho2 = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * np.cos(theta)
    if rho2 < _COLLISION_EPS ** 2:
        raise ValueError("two ring bodies collide")
    rho3 = rho2 ** 1.5
    return np.array([
        w2 * r1 - a / r1 ** 2 - b * (r1 - r2 * np.cos(theta)) / rho3,
        w2 * r2 - a / r2 ** 2 - b * (r2 - r1 * np.cos(theta)) / rho3,
        2.0 * b * r1 * r2 * np.sin(theta) / rho3,
    ])
