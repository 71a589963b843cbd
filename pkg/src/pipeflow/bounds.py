"""A-priori hypercube bound containing every solution of the network system.

From the boundary data alone one can bound any solution componentwise:
the flow into a single edge can never exceed the total withdrawal
magnitude, and the largest potential is capped by the largest slack
potential, worst-case pipe losses, and the maximal compression
achievable across the whole network:

    phi_m = max|q| * (number of nonslack nodes)
    pi_m  = (max|pi_star| + |P| * beta_m * phi_m**2) * m**|C|
    L     = max(phi_m, pi_m)

where the per-compressor multiplier m is alpha_m in "paper" mode and
gamma_m = alpha_m**2 in "safe" mode.  Potentials scale by gamma across
a compressor, so the safe mode is the conservative choice; the solver's
runtime boundary diagnostic uses it.  Both are exposed because the
alpha-scaled variant is the form usually quoted.
"""

from __future__ import annotations

from dataclasses import dataclass

from .network import Network

MODES = ("paper", "safe")


@dataclass(frozen=True)
class DomainBounds:
    """Hypercube data: every solution satisfies |x_i| < L componentwise."""

    beta_m: float
    alpha_m: float
    gamma_m: float
    phi_m: float
    pi_m: float
    L: float
    mode: str


def compute_bounds(network: Network, mode: str = "safe") -> DomainBounds:
    """Solution-containing hypercube for a validated network.

    Networks without compressors use multiplier 1; networks without
    pipes contribute no loss term; networks with all-zero withdrawals
    get phi_m = 0 (the solution then has zero flows).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")

    betas = [e.device.beta for e in network.edges if e.is_pipe]
    alphas = [e.device.alpha for e in network.edges if not e.is_pipe]
    n_pipes = len(betas)
    n_comps = len(alphas)
    beta_m = max(betas) if betas else 0.0
    alpha_m = max(alphas) if alphas else 1.0
    gamma_m = alpha_m * alpha_m

    withdrawals = [abs(j.withdrawal) for j in network.junctions if not j.slack]
    phi_m = (max(withdrawals) if withdrawals else 0.0) * len(withdrawals)

    pi_slack_m = max(abs(j.potential) for j in network.junctions if j.slack)
    multiplier = gamma_m if mode == "safe" else alpha_m
    pi_m = (pi_slack_m + n_pipes * beta_m * phi_m * phi_m) * multiplier**n_comps

    return DomainBounds(
        beta_m=beta_m,
        alpha_m=alpha_m,
        gamma_m=gamma_m,
        phi_m=phi_m,
        pi_m=pi_m,
        L=max(phi_m, pi_m),
        mode=mode,
    )
