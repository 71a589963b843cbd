"""Steady-state solvers: linear start system, damped Newton, continuation.

The s = 0 member of the residual family is linear and nonsingular for
every admissible network, so it can be solved with one factorization.
From there, continuation advances s toward 1 with an adaptive step,
using damped Newton as the corrector at each fixed s and restarting
from the last accepted state after a failed step.  The physical system
is the s = 1 endpoint; its solution is unique, so any converged state
is the solution.

Solutions and all Newton iterates are expected to stay inside the
safe-mode hypercube from ``pipeflow.bounds``; leaving it is reported as
a diagnostic (``BOUNDARY_VIOLATION``) rather than enforced, since it
signals inconsistent data or a bug, not a numerical difficulty.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bounds import compute_bounds
from .network import Network
from .residual import SingularMatrixError, assembly_for, solve_sparse


class SolveStatus(enum.Enum):
    CONVERGED = "converged"
    SINGULAR_AT_S0 = "singular_at_s0"
    NEWTON_DIVERGED = "newton_diverged"
    HOMOTOPY_STALLED = "homotopy_stalled"
    BOUNDARY_VIOLATION = "boundary_violation"


class SingularAtS0Error(RuntimeError):
    """The linear start system is singular: the network cannot be admissible."""


class TraceStep(NamedTuple):
    s: float
    newton_iters: int
    residual_norm: float


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and continuation schedule knobs.

    ``tol`` is an absolute infinity-norm residual tolerance.  The step
    schedule starts at ``ds_init``, grows by ``ds_growth`` after each
    accepted step (capped at the remaining distance), halves after each
    failed step, and gives up below ``ds_min``.
    """

    tol: float = 1e-10
    max_newton_iters: int = 50
    ds_init: float = 0.1
    ds_min: float = 1e-4
    damping: float = 0.5
    max_halvings: int = 30
    ds_growth: float = 1.5
    jacobian_eps: float = 1e-12

    def __post_init__(self) -> None:
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if not 0.0 < self.ds_min <= self.ds_init <= 1.0:
            raise ValueError("require 0 < ds_min <= ds_init <= 1")
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping factor must be in (0, 1)")
        if self.ds_growth <= 1.0:
            raise ValueError("ds_growth must exceed 1")


@dataclass(eq=False)
class SolveResult:
    """Outcome of a solve; ``state`` is the last iterate even on failure."""

    state: np.ndarray
    residual_norm: float
    status: SolveStatus
    trace: tuple[TraceStep, ...] = ()
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED


def _norm(vec: np.ndarray) -> float:
    return float(np.max(np.abs(vec))) if vec.size else 0.0


def solve_linear_s0(network: Network) -> np.ndarray:
    """Exact solution of the linear s = 0 system via one factorization.

    Admissible networks always yield a nonsingular matrix here; a
    ``SingularAtS0Error`` therefore means the network violates the
    admissibility assumptions and slipped past validation.
    """
    asm = assembly_for(network)
    zero = np.zeros(asm.dim)
    matrix = asm.jacobian(zero, 0.0, 0.0)
    rhs = -asm.residual(zero, 0.0)
    try:
        return solve_sparse(matrix, rhs)
    except SingularMatrixError as exc:
        raise SingularAtS0Error(
            f"linear start system is singular ({exc}); "
            "the network violates the admissibility assumptions"
        ) from exc


def newton_solve(
    network: Network,
    x0: np.ndarray,
    s: float,
    cfg: SolverConfig | None = None,
) -> SolveResult:
    """Damped Newton iteration on F(., s) from ``x0``.

    Each step solves J dx = -F and backtracks (halving) until the
    residual infinity norm strictly decreases; failure to decrease
    within ``max_halvings`` or to converge within ``max_newton_iters``
    reports ``NEWTON_DIVERGED``.
    """
    cfg = cfg or SolverConfig()
    asm = assembly_for(network)
    x = asm.check_state(x0).copy()
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"homotopy parameter s={s!r} outside [0, 1]")

    res = asm.residual(x, s)
    fnorm = _norm(res)
    iters = 0
    while fnorm > cfg.tol and iters < cfg.max_newton_iters:
        jac = asm.jacobian(x, s, cfg.jacobian_eps)
        try:
            dx = solve_sparse(jac, -res)
        except SingularMatrixError as exc:
            return SolveResult(
                x, fnorm, SolveStatus.NEWTON_DIVERGED,
                (TraceStep(s, iters, fnorm),),
                message=f"singular Jacobian at s={s:g}: {exc}",
            )
        step = 1.0
        for _ in range(cfg.max_halvings + 1):
            x_new = x + step * dx
            res_new = asm.residual(x_new, s)
            fnorm_new = _norm(res_new)
            if fnorm_new < fnorm:
                break
            step *= cfg.damping
        else:
            return SolveResult(
                x, fnorm, SolveStatus.NEWTON_DIVERGED,
                (TraceStep(s, iters, fnorm),),
                message=f"no residual decrease after {cfg.max_halvings} halvings",
            )
        x, res, fnorm = x_new, res_new, fnorm_new
        iters += 1

    if fnorm <= cfg.tol:
        return SolveResult(
            x, fnorm, SolveStatus.CONVERGED, (TraceStep(s, iters, fnorm),)
        )
    return SolveResult(
        x, fnorm, SolveStatus.NEWTON_DIVERGED,
        (TraceStep(s, iters, fnorm),),
        message=f"no convergence within {cfg.max_newton_iters} iterations",
    )


def homotopy_solve(network: Network, cfg: SolverConfig | None = None) -> SolveResult:
    """Continuation solve from the linear s = 0 system to the s = 1 system.

    The trace records one row per accepted continuation step.  When the
    s = 0 solution already satisfies the s = 1 system (zero flows, or
    all flow magnitudes equal to 1), the trace is a single step.
    """
    cfg = cfg or SolverConfig()
    asm = assembly_for(network)
    try:
        x = solve_linear_s0(network)
    except SingularAtS0Error as exc:
        return SolveResult(
            np.zeros(asm.dim), float("inf"), SolveStatus.SINGULAR_AT_S0, (),
            message=str(exc),
        )

    # Strict interior check with a relative epsilon: degenerate networks
    # (zero withdrawals and no compressors) park the slack potential
    # exactly on the hypercube boundary.
    limit = compute_bounds(network, "safe").L * (1.0 + 1e-12)

    def escaped(state: np.ndarray) -> bool:
        return _norm(state) > limit

    if escaped(x):
        return SolveResult(
            x, _norm(asm.residual(x, 0.0)), SolveStatus.BOUNDARY_VIOLATION, (),
            message="linear start solution escapes the solution hypercube",
        )

    end_norm = _norm(asm.residual(x, 1.0))
    if end_norm <= cfg.tol:
        return SolveResult(
            x, end_norm, SolveStatus.CONVERGED, (TraceStep(1.0, 0, end_norm),)
        )

    trace: list[TraceStep] = []
    s = 0.0
    ds = cfg.ds_init
    last_norm = _norm(asm.residual(x, 0.0))
    while s < 1.0:
        s_try = min(1.0, s + ds)
        result = newton_solve(network, x, s_try, cfg)
        if result.converged:
            s = s_try
            x = result.state
            last_norm = result.residual_norm
            trace.append(TraceStep(s, result.trace[0].newton_iters, last_norm))
            if escaped(x):
                return SolveResult(
                    x, last_norm, SolveStatus.BOUNDARY_VIOLATION, tuple(trace),
                    message=f"iterate escaped the solution hypercube at s={s:g}",
                )
            if s < 1.0:
                ds = min(ds * cfg.ds_growth, 1.0 - s)
        else:
            ds *= 0.5
            if ds < cfg.ds_min:
                return SolveResult(
                    x, last_norm, SolveStatus.HOMOTOPY_STALLED, tuple(trace),
                    message=(
                        f"step collapsed below ds_min={cfg.ds_min:g} at s={s:g} "
                        f"({result.message})"
                    ),
                )
    return SolveResult(x, last_norm, SolveStatus.CONVERGED, tuple(trace))


def solve(
    network: Network,
    cfg: SolverConfig | None = None,
    method: str = "auto",
) -> SolveResult:
    """Solve the s = 1 network system.

    method "newton": one damped Newton run at s = 1 from the linear
    start solution.  method "homotopy": full continuation.  method
    "auto": try the direct Newton run first and fall back to
    continuation, which separates cheap instances from stiff ones while
    keeping the guaranteed path available.
    """
    cfg = cfg or SolverConfig()
    if method == "homotopy":
        return homotopy_solve(network, cfg)
    if method not in ("auto", "newton"):
        raise ValueError(f"unknown method {method!r}")
    try:
        x0 = solve_linear_s0(network)
    except SingularAtS0Error as exc:
        return SolveResult(
            np.zeros(assembly_for(network).dim), float("inf"),
            SolveStatus.SINGULAR_AT_S0, (), message=str(exc),
        )
    result = newton_solve(network, x0, 1.0, cfg)
    if method == "newton" or result.converged:
        return result
    return homotopy_solve(network, cfg)


@dataclass(frozen=True)
class ProbeTrial:
    index: int
    converged: bool
    residual_norm: float
    cluster: int | None  # index into distinct_states, None if not converged


@dataclass(eq=False)
class UniquenessReport:
    """Outcome of repeated Newton solves from random starts.

    With a unique solution, every converged trial must land on the same
    state, so ``distinct_states`` should never hold more than one entry.
    """

    trials: tuple[ProbeTrial, ...]
    distinct_states: list[np.ndarray] = field(default_factory=list)
    distinct_tol: float = 1e-6

    @property
    def n_converged(self) -> int:
        return sum(1 for t in self.trials if t.converged)

    @property
    def n_distinct(self) -> int:
        return len(self.distinct_states)


def _clamp_to_box(x: np.ndarray, half_width: float) -> np.ndarray:
    """Clamp a start point into the closed hypercube [-L, L]^dim."""
    return np.clip(x, -half_width, half_width)


def uniqueness_probe(
    network: Network,
    cfg: SolverConfig | None = None,
    trials: int = 10,
    seed: int = 0,
    distinct_tol: float = 1e-6,
) -> UniquenessReport:
    """Probe solution uniqueness with Newton runs from random starts.

    Starts are sampled uniformly in the safe-mode hypercube (anything
    outside is clamped in).  Non-converged trials are recorded, not
    fatal; converged trials are clustered by infinity-distance
    ``distinct_tol``.
    """
    cfg = cfg or SolverConfig()
    asm = assembly_for(network)
    half_width = compute_bounds(network, "safe").L
    rng = np.random.default_rng(seed)

    trial_rows: list[ProbeTrial] = []
    distinct: list[np.ndarray] = []
    for i in range(trials):
        start = _clamp_to_box(
            rng.uniform(-half_width, half_width, size=asm.dim), half_width
        )
        result = newton_solve(network, start, 1.0, cfg)
        if not result.converged:
            trial_rows.append(ProbeTrial(i, False, result.residual_norm, None))
            continue
        cluster = None
        for c, state in enumerate(distinct):
            if _norm(result.state - state) <= distinct_tol:
                cluster = c
                break
        if cluster is None:
            distinct.append(result.state)
            cluster = len(distinct) - 1
        trial_rows.append(ProbeTrial(i, True, result.residual_norm, cluster))

    return UniquenessReport(
        trials=tuple(trial_rows), distinct_states=distinct, distinct_tol=distinct_tol
    )
