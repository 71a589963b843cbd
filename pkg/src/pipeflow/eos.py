"""Gas potential functions and compressor-ratio analysis.

The solver works in potential space: every junction carries a scalar
potential instead of a pressure.  The equation of state fixes the map
between the two.  Two models are supported:

* ideal gas:   potential(p) = p**2 / 2
* CNGA gas:    potential(p) = b1 * p**2 / 2 + b2 * p**3 / 3

CNGA pressures are in MPa (the b2 coefficient carries units of 1/MPa);
the ideal-gas potential is nondimensional.

A compressor boosts pressure by a ratio alpha >= 1.  In potential space
the boost becomes a multiplicative factor gamma = alpha**2, which is
exact for an ideal gas.  For CNGA gas the same factor is a close
approximation within normal operating ranges; ``alpha_cnga`` gives the
effective ratio implied by the CNGA potential and ``alpha_error_sweep``
maps the approximation error over a pressure/ratio grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Union

import numpy as np
from scipy.optimize import brentq

CNGA_B1_DEFAULT = 1.003
CNGA_B2_DEFAULT = 2.968e-2  # 1/MPa

ArrayLike = Union[float, np.ndarray]


class DomainError(ValueError):
    """Argument outside the meaningful domain of an operation."""


class NoRealPressureError(ValueError):
    """No real pressure maps to the requested potential (ideal gas, negative potential)."""


@dataclass(frozen=True)
class EosParams:
    """Equation-of-state selection plus CNGA coefficients.

    ``b1`` and ``b2`` are only meaningful for kind "cnga"; they keep
    their defaults for kind "ideal".
    """

    kind: str
    b1: float = CNGA_B1_DEFAULT
    b2: float = CNGA_B2_DEFAULT

    def __post_init__(self) -> None:
        if self.kind not in ("ideal", "cnga"):
            raise ValueError(f"unknown equation of state {self.kind!r}")
        if self.kind == "cnga" and (self.b1 <= 0.0 or self.b2 <= 0.0):
            raise ValueError("CNGA coefficients b1, b2 must be positive")

    @classmethod
    def ideal(cls) -> "EosParams":
        return cls(kind="ideal")

    @classmethod
    def cnga(cls, b1: float = CNGA_B1_DEFAULT, b2: float = CNGA_B2_DEFAULT) -> "EosParams":
        return cls(kind="cnga", b1=b1, b2=b2)


@dataclass(frozen=True)
class PressureResult:
    """Pressure recovered from a potential.

    ``generalized_only`` marks a value that solves the potential
    equation but is not a physical pressure (the negative CNGA root
    returned for a negative potential).
    """

    value: float
    generalized_only: bool


def potential(eos: EosParams, p: ArrayLike) -> ArrayLike:
    """Potential of pressure ``p`` under the given equation of state.

    Accepts scalars or numpy arrays.  Any real argument is allowed; the
    function is simply the polynomial above.
    """
    if eos.kind == "ideal":
        return p * p / 2.0
    return eos.b1 * p * p / 2.0 + eos.b2 * p * p * p / 3.0


def pressure_from_potential(eos: EosParams, pi: float) -> PressureResult:
    """Invert the potential function at ``pi``.

    Ideal gas: returns sqrt(2*pi) for pi >= 0 and raises
    ``NoRealPressureError`` otherwise (the square root has no real
    value, so not even a generalized pressure exists).

    CNGA gas: the cubic always has a real root.  For pi >= 0 the unique
    non-negative root is returned; for pi < 0 the unique real root is
    negative and flagged ``generalized_only``.
    """
    pi = float(pi)
    if eos.kind == "ideal":
        if pi < 0.0:
            raise NoRealPressureError(
                f"no real pressure for negative ideal-gas potential {pi!r}"
            )
        return PressureResult(math.sqrt(2.0 * pi), False)
    return PressureResult(_invert_cnga(eos, pi), pi < 0.0)


def _invert_cnga(eos: EosParams, pi: float) -> float:
    """Root of b1*p**2/2 + b2*p**3/3 = pi, on the branch described above.

    The cubic is strictly increasing on [0, inf) and on
    (-inf, -b1/b2], so the target root is bracketed structurally and a
    safeguarded bracketing solve cannot pick a wrong branch.  One Newton
    step polishes the result.
    """
    if pi == 0.0:
        return 0.0
    b1, b2 = eos.b1, eos.b2

    def f(p: float) -> float:
        return b1 * p * p / 2.0 + b2 * p * p * p / 3.0 - pi

    if pi > 0.0:
        # On p >= 0: potential >= b1*p**2/2, so the root is below sqrt(2*pi/b1).
        lo = 0.0
        hi = math.sqrt(2.0 * pi / b1)
        while f(hi) < 0.0:
            hi *= 2.0
    else:
        # The single real root lies left of the local maximum at -b1/b2.
        hi = -b1 / b2
        lo = hi - max(1.0, abs(hi))
        while f(lo) > 0.0:
            lo = hi + 2.0 * (lo - hi)
    root = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    slope = b1 * root + b2 * root * root
    if slope != 0.0:
        root -= f(root) / slope
    return root


def gamma_from_alpha(alpha: float) -> float:
    """Potential-space boost factor for a compressor of ratio ``alpha``."""
    if alpha < 1.0:
        raise DomainError(f"compressor ratio must be >= 1, got {alpha!r}")
    return alpha * alpha


def alpha_cnga(eos: EosParams, alpha: ArrayLike, p: ArrayLike) -> ArrayLike:
    """Effective CNGA compressor ratio at inlet pressure ``p`` (MPa).

    This is the pressure ratio that the potential-space factor
    gamma = alpha**2 actually realizes under the CNGA potential:

        sqrt(potential(alpha*p) / potential(p))
          = alpha * sqrt((3*b1 + 2*b2*alpha*p) / (3*b1 + 2*b2*p))

    It exceeds ``alpha`` whenever alpha > 1 and p > 0, and tends to
    ``alpha`` as p -> 0.
    """
    if eos.kind != "cnga":
        raise DomainError("alpha_cnga is defined for the CNGA equation of state")
    if np.any(np.asarray(p) <= 0.0):
        raise DomainError("inlet pressure must be positive")
    if np.any(np.asarray(alpha) < 1.0):
        raise DomainError("compressor ratio must be >= 1")
    num = 3.0 * eos.b1 + 2.0 * eos.b2 * alpha * p
    den = 3.0 * eos.b1 + 2.0 * eos.b2 * p
    return alpha * np.sqrt(num / den)


@dataclass(frozen=True)
class AlphaSweepResult:
    """Grid evaluation of the effective-ratio error |alpha_cnga - alpha|."""

    p: np.ndarray        # (n_p,) inlet pressures, MPa
    alpha: np.ndarray    # (n_alpha,) nominal ratios
    alpha_eff: np.ndarray  # (n_p, n_alpha)
    abs_err: np.ndarray    # (n_p, n_alpha)
    max_abs_err: float
    argmax_p: float
    argmax_alpha: float
    max_rel_err: float

    def to_csv(self, stream: IO[str]) -> None:
        """Write rows `p_mpa,alpha,alpha_cnga,abs_err` plus a summary comment."""
        stream.write("p_mpa,alpha,alpha_cnga,abs_err\n")
        for i, p in enumerate(self.p):
            for j, a in enumerate(self.alpha):
                stream.write(
                    f"{p!r},{a!r},{self.alpha_eff[i, j]!r},{self.abs_err[i, j]!r}\n"
                )
        stream.write(
            f"# max_abs_err={self.max_abs_err!r},"
            f"argmax_p={self.argmax_p!r},argmax_alpha={self.argmax_alpha!r}\n"
        )


def alpha_error_sweep(
    eos: EosParams,
    p_range: tuple[float, float] = (0.1, 10.0),
    alpha_range: tuple[float, float] = (1.1, 2.1),
    grid: tuple[int, int] = (100, 100),
) -> AlphaSweepResult:
    """Evaluate alpha_cnga on a dense rectangular (p, alpha) grid.

    Defaults cover the usual compressor operating envelope: inlet
    pressures up to 10 MPa and ratios between 1.1 and 2.1.
    """
    if eos.kind != "cnga":
        raise DomainError("alpha_error_sweep is defined for the CNGA equation of state")
    if p_range[0] <= 0.0 or alpha_range[0] < 1.0:
        raise DomainError("sweep ranges must be positive (alpha >= 1)")
    if grid[0] < 2 or grid[1] < 2:
        raise DomainError("grid counts must be >= 2")
    p = np.linspace(p_range[0], p_range[1], grid[0])
    alpha = np.linspace(alpha_range[0], alpha_range[1], grid[1])
    alpha_eff = alpha_cnga(eos, alpha[np.newaxis, :], p[:, np.newaxis])
    abs_err = np.abs(alpha_eff - alpha[np.newaxis, :])
    i, j = np.unravel_index(int(np.argmax(abs_err)), abs_err.shape)
    rel_err = abs_err / alpha[np.newaxis, :]
    return AlphaSweepResult(
        p=p,
        alpha=alpha,
        alpha_eff=alpha_eff,
        abs_err=abs_err,
        max_abs_err=float(abs_err[i, j]),
        argmax_p=float(p[i]),
        argmax_alpha=float(alpha[j]),
        max_rel_err=float(np.max(rel_err)),
    )
