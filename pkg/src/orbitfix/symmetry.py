"""Group orbits of solutions: alignment, kernel checks, limit prediction.

When a system F(x) = 0 is equivariant under a continuous group, solutions
come in orbits and iterates converge to some orbit element rather than to
a prescribed one. The helpers here quantify that: distance to an orbit,
Jacobian kernel along the generators, and a first-order prediction of
which orbit element a seed will reach.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "GroupAction",
    "OrbitReport",
    "kernel_check",
    "align_to_orbit",
    "predict_limit",
]


@dataclass(frozen=True)
class GroupAction:
    """A finite-dimensional group acting on state vectors.

    act(alpha, x) applies the element with parameter alpha; generators(x)
    returns the l tangent vectors d/dalpha act(alpha, x) at alpha = 0.
    align(x, xref), when provided, is a closed-form minimizer of
    ||x - act(alpha, xref)|| over one parameter. period bounds the
    parameter range searched when no closed form exists.
    """

    n_generators: int
    act: Callable
    generators: Callable
    align: Optional[Callable] = None
    period: float = 2.0 * np.pi


@dataclass(frozen=True)
class OrbitReport:
    """Distances from a point to a reference and to the reference's orbit."""

    alpha_star: float
    orbital_distance: float
    raw_distance: float

    def __post_init__(self):
        if self.orbital_distance > self.raw_distance + 1e-12:
            raise ValueError("orbital distance exceeds raw distance")


def kernel_check(problem, xstar: np.ndarray, action: GroupAction) -> float:
    """Largest relative Jacobian residual over the symmetry generators.

    Small values certify that the generators span (part of) the Jacobian
    kernel at the solution xstar. xstar must actually solve the system.
    """
    if problem.jacobian_at is None:
        raise ValueError("kernel_check requires jacobian_at")
    xstar = np.asarray(xstar, dtype=float)
    fnorm = float(np.linalg.norm(problem.F(xstar)))
    if fnorm > 1e-8:
        raise ValueError(f"kernel_check requires a solution; |F(x)| = {fnorm:.3e}")
    gens = action.generators(xstar)
    if not len(gens):
        return 0.0
    jac = problem.jacobian_at(xstar)
    worst = 0.0
    for g in gens:
        g = np.asarray(g, dtype=float)
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            raise ValueError("zero generator vector")
        worst = max(worst, float(np.linalg.norm(jac.apply(g))) / gnorm)
    return worst


def _golden_minimize(f, lo: float, hi: float, tol: float) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def align_to_orbit(x: np.ndarray, xref: np.ndarray, action: GroupAction) -> OrbitReport:
    """Nearest element of the orbit of xref to x, for one-parameter groups.

    Uses the action's closed-form alignment when available; otherwise a
    coarse scan over one period refined by golden-section search, so the
    reported parameter is a global minimizer up to scan resolution.
    """
    if action.n_generators != 1:
        raise ValueError("align_to_orbit supports one-parameter groups only")
    x = np.asarray(x, dtype=float)
    xref = np.asarray(xref, dtype=float)
    raw = float(np.linalg.norm(x - xref))

    def dist(alpha):
        return float(np.linalg.norm(x - action.act(alpha, xref)))

    if action.align is not None:
        alpha = float(action.align(x, xref))
    else:
        period = action.period
        m = 64
        grid_pts = (np.arange(m) / m - 0.5) * period
        k = int(np.argmin([dist(a) for a in grid_pts]))
        lo = grid_pts[k] - period / m
        hi = grid_pts[k] + period / m
        alpha = _golden_minimize(dist, lo, hi, 1e-13 * max(period, 1.0))
    orbital = dist(alpha)
    # alpha = 0 reproduces the reference itself; never report worse than that
    if raw < orbital:
        alpha, orbital = 0.0, raw
    return OrbitReport(alpha_star=alpha, orbital_distance=orbital, raw_distance=raw)


def predict_limit(x0: np.ndarray, xstar: np.ndarray, action: GroupAction) -> np.ndarray:
    """First-order prediction of the orbit element a seed converges to.

    Projects x0 - xstar onto the generator span at xstar and returns the
    coefficients; for one generator this predicts the limit parameter up
    to second order in the seed offset.
    """
    x0 = np.asarray(x0, dtype=float)
    xstar = np.asarray(xstar, dtype=float)
    gens = [np.asarray(g, dtype=float) for g in action.generators(xstar)]
    if not gens:
        raise ValueError("predict_limit requires at least one generator")
    basis = np.column_stack(gens)
    if np.linalg.matrix_rank(basis) < basis.shape[1]:
        raise ValueError("generators are linearly dependent at this point")
    coef, *_ = np.linalg.lstsq(basis, x0 - xstar, rcond=None)
    return coef
