"""Outer iterations for algebraic systems whose solutions form group orbits.

The three drivers (fixed-point, stabilized fixed-point, Newton-Krylov)
share one trace format and one status vocabulary. A run that stalls on
the residual may still converge to some element of the solution orbit,
so traces carry both the residual and, when a reference is supplied, the
distance to that fixed reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .numlin import KrylovStats, LinearOperator, dense_eigenvalues, fd_jacobian, materialize, minres, pcg

__all__ = [
    "CONVERGED_RESIDUAL",
    "CONVERGED_REFERENCE",
    "MAX_ITERATIONS",
    "DIVERGED",
    "STATUSES",
    "HomogeneousSplit",
    "ProblemSpec",
    "SolverConfig",
    "IterationTrace",
    "SolveOutcome",
    "fixed_point_solve",
    "petviashvili_solve",
    "petviashvili_map",
    "newton_solve",
    "iteration_matrix_spectrum",
    "convergence_ratios",
]

CONVERGED_RESIDUAL = "ConvergedResidual"
CONVERGED_REFERENCE = "ConvergedReference"
MAX_ITERATIONS = "MaxIterations"
DIVERGED = "Diverged"
STATUSES = (CONVERGED_RESIDUAL, CONVERGED_REFERENCE, MAX_ITERATIONS, DIVERGED)


@dataclass(frozen=True)
class HomogeneousSplit:
    """F(x) = linear(x) - nonlinear(x) with nonlinear homogeneous of the given degree."""

    linear: LinearOperator
    nonlinear: Callable[[np.ndarray], np.ndarray]
    degree: float


@dataclass(frozen=True)
class ProblemSpec:
    """Algebraic system F(x) = 0 with optional extra structure.

    G is a fixed-point form (x = G(x) at solutions), jacobian_at maps a
    point to the derivative of F as a LinearOperator, and
    homogeneous_split feeds the stabilized fixed-point driver.
    """

    dim: int
    F: Callable[[np.ndarray], np.ndarray]
    G: Optional[Callable[[np.ndarray], np.ndarray]] = None
    jacobian_at: Optional[Callable[[np.ndarray], LinearOperator]] = None
    homogeneous_split: Optional[HomogeneousSplit] = None


@dataclass(frozen=True)
class SolverConfig:
    tol_residual: float = 1e-7
    max_outer: int = 1000
    gamma: float = 2.0 / 3.0
    inner_solver: str = "pcg"
    inner_tol: float = 1e-10
    inner_maxit: int = 500
    precond_s: float = 1.0
    divergence_cap: float = 1e8

    def __post_init__(self):
        if not self.tol_residual > 0.0:
            raise ValueError("tol_residual must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if self.inner_solver not in ("pcg", "minres"):
            raise ValueError("inner_solver must be 'pcg' or 'minres'")
        if not self.inner_tol > 0.0:
            raise ValueError("inner_tol must be positive")
        if self.inner_maxit < 1:
            raise ValueError("inner_maxit must be >= 1")
        if not self.precond_s > 0.0:
            raise ValueError("precond_s must be positive")
        if not self.divergence_cap > 0.0:
            raise ValueError("divergence_cap must be positive")


@dataclass
class IterationTrace:
    """Per-iterate history; row k describes iterate k.

    ref_errors is None-filled when no reference was supplied,
    stab_factors is None-filled outside the stabilized driver, and the
    terminal row has no step norm.
    """

    residuals: List[float] = field(default_factory=list)
    ref_errors: List[Optional[float]] = field(default_factory=list)
    stab_factors: List[Optional[float]] = field(default_factory=list)
    step_norms: List[Optional[float]] = field(default_factory=list)

    def append(self, residual, ref_error=None, stab_factor=None):
        self.residuals.append(residual)
        self.ref_errors.append(ref_error)
        self.stab_factors.append(stab_factor)
        self.step_norms.append(None)

    def set_step_norm(self, value):
        self.step_norms[-1] = value

    def __len__(self):
        return len(self.residuals)

    def rows(self):
        """(n, residual, ref_error, stab_factor, step_norm) tuples."""
        for k in range(len(self.residuals)):
            yield (k, self.residuals[k], self.ref_errors[k],
                   self.stab_factors[k], self.step_norms[k])


@dataclass
class SolveOutcome:
    status: str
    x: np.ndarray
    trace: IterationTrace
    iterations: int
    message: str = ""
    inner_iterations: int = 0
    pcg_fallbacks: int = 0

    @property
    def converged(self) -> bool:
        return self.status in (CONVERGED_RESIDUAL, CONVERGED_REFERENCE)


def _classify(n, residual, ref_error, config):
    """Shared stopping logic; returns a status or None to continue."""
    if not np.isfinite(residual) or residual > config.divergence_cap:
        return DIVERGED
    if residual <= config.tol_residual:
        return CONVERGED_RESIDUAL
    if ref_error is not None and ref_error <= config.tol_residual:
        return CONVERGED_REFERENCE
    if n == config.max_outer:
        return MAX_ITERATIONS
    return None


def fixed_point_solve(problem: ProblemSpec, x0: np.ndarray,
                      config: Optional[SolverConfig] = None,
                      reference: Optional[np.ndarray] = None) -> SolveOutcome:
    """Direct iteration x <- G(x); the residual is the fixed-point gap."""
    if problem.G is None:
        raise ValueError("fixed_point_solve requires a fixed-point map G")
    config = config or SolverConfig()
    x = np.asarray(x0, dtype=float).copy()
    trace = IterationTrace()
    for n in range(config.max_outer + 1):
        gx = problem.G(x)
        residual = float(np.linalg.norm(x - gx))
        ref_error = None if reference is None else float(np.linalg.norm(x - reference))
        trace.append(residual, ref_error)
        status = _classify(n, residual, ref_error, config)
        if status is not None:
            return SolveOutcome(status, x, trace, n)
        trace.set_step_norm(float(np.linalg.norm(gx - x)))
        x = np.asarray(gx, dtype=float)
    raise AssertionError("unreachable")


def petviashvili_solve(problem: ProblemSpec, x0: np.ndarray,
                       config: Optional[SolverConfig] = None,
                       reference: Optional[np.ndarray] = None) -> SolveOutcome:
    """Stabilized fixed-point iteration for F(x) = Ax - N(x), N homogeneous.

    Each step scales A^{-1}N(x) by s^gamma with s = <Ax,x>/<N(x),x>; at a
    solution s = 1, so the recorded factors must approach one on
    convergent runs. The factor for the terminal iterate is recorded too.
    """
    split = problem.homogeneous_split
    if split is None:
        raise ValueError("petviashvili_solve requires a homogeneous split")
    config = config or SolverConfig()
    a_mat = materialize(split.linear)
    x = np.asarray(x0, dtype=float).copy()
    trace = IterationTrace()
    for n in range(config.max_outer + 1):
        nx = np.asarray(split.nonlinear(x), dtype=float)
        gx = np.linalg.solve(a_mat, nx)
        residual = float(np.linalg.norm(x - gx))
        ref_error = None if reference is None else float(np.linalg.norm(x - reference))
        den = float(np.dot(nx, x))
        s = float(np.dot(a_mat @ x, x) / den) if den != 0.0 else None
        trace.append(residual, ref_error, s)
        status = _classify(n, residual, ref_error, config)
        if status is not None:
            return SolveOutcome(status, x, trace, n)
        if s is None:
            return SolveOutcome(DIVERGED, x, trace, n,
                                message="stabilizing factor has zero denominator")
        if s < 0.0 and not float(config.gamma).is_integer():
            return SolveOutcome(DIVERGED, x, trace, n,
                                message="negative stabilizing factor with non-integer exponent")
        x_next = (s ** config.gamma) * gx
        trace.set_step_norm(float(np.linalg.norm(x_next - x)))
        x = x_next
    raise AssertionError("unreachable")


def petviashvili_map(problem: ProblemSpec, gamma: float = 2.0 / 3.0) -> Callable:
    """One step of the stabilized iteration, as a plain map for spectra."""
    split = problem.homogeneous_split
    if split is None:
        raise ValueError("petviashvili_map requires a homogeneous split")
    a_mat = materialize(split.linear)

    def step(x):
        nx = np.asarray(split.nonlinear(x), dtype=float)
        s = float(np.dot(a_mat @ x, x) / np.dot(nx, x))
        return (s ** gamma) * np.linalg.solve(a_mat, nx)

    return step


def newton_solve(problem: ProblemSpec, x0: np.ndarray,
                 config: Optional[SolverConfig] = None,
                 reference: Optional[np.ndarray] = None,
                 precond: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> SolveOutcome:
    """Newton iteration with an iterative linear solve per step.

    The correction solves J(x) dx = -F(x) with PCG (using precond when
    given) or MINRES per config.inner_solver. On a PCG breakdown, which
    is expected when J is indefinite, the step falls back to MINRES and
    the event is counted. The MINRES path runs unpreconditioned: its
    iterates then stay orthogonal to any Jacobian null direction reached
    from the right-hand side, so symmetry-induced singularity is harmless.

    Three consecutive steps whose inner solve exhausts its budget without
    reducing the residual classify the run as MaxIterations.
    """
    if problem.jacobian_at is None:
        raise ValueError("newton_solve requires jacobian_at")
    config = config or SolverConfig()
    x = np.asarray(x0, dtype=float).copy()
    trace = IterationTrace()
    inner_total = 0
    fallbacks = 0
    stall = 0
    prev_residual = None
    prev_budget_hit = False
    for n in range(config.max_outer + 1):
        fx = np.asarray(problem.F(x), dtype=float)
        residual = float(np.linalg.norm(fx))
        ref_error = None if reference is None else float(np.linalg.norm(x - reference))
        trace.append(residual, ref_error)
        status = _classify(n, residual, ref_error, config)
        if status is not None:
            return SolveOutcome(status, x, trace, n,
                                inner_iterations=inner_total, pcg_fallbacks=fallbacks)
        if prev_budget_hit and prev_residual is not None and residual >= prev_residual:
            stall += 1
            if stall >= 3:
                return SolveOutcome(
                    MAX_ITERATIONS, x, trace, n,
                    message="inner solver repeatedly hit its budget without outer progress",
                    inner_iterations=inner_total, pcg_fallbacks=fallbacks)
        else:
            stall = 0

        jac = problem.jacobian_at(x)
        rhs = -fx
        if config.inner_solver == "pcg":
            dx, stats = pcg(jac, rhs, precond, tol=config.inner_tol, maxit=config.inner_maxit)
            inner_total += stats.iterations
            if stats.breakdown:
                fallbacks += 1
                dx, stats = minres(jac, rhs, tol=config.inner_tol, maxit=config.inner_maxit)
                inner_total += stats.iterations
        else:
            dx, stats = minres(jac, rhs, tol=config.inner_tol, maxit=config.inner_maxit)
            inner_total += stats.iterations
        prev_budget_hit = stats.iterations >= config.inner_maxit
        prev_residual = residual
        trace.set_step_norm(float(np.linalg.norm(dx)))
        x = x + dx
    raise AssertionError("unreachable")


def iteration_matrix_spectrum(step_map: Callable, xstar: np.ndarray,
                              step: Optional[float] = None,
                              jacobian: Optional[Callable] = None):
    """Spectrum of the iteration's derivative at a fixed point.

    The derivative is differenced from step_map unless an analytic
    jacobian (point -> matrix or LinearOperator) is supplied.
    """
    xstar = np.asarray(xstar, dtype=float)
    if jacobian is not None:
        m = materialize(jacobian(xstar))
    else:
        m = fd_jacobian(step_map, xstar, step)
    return dense_eigenvalues(m)


def convergence_ratios(values) -> np.ndarray:
    """Successive ratios of a positive decreasing sequence.

    The sequence is cut at the first exact zero (converged-to-roundoff
    tails carry no rate information).
    """
    vals = [float(v) for v in values]
    out = []
    for a, b in zip(vals, vals[1:]):
        if a == 0.0 or b == 0.0:
            break
        out.append(b / a)
    return np.asarray(out)
