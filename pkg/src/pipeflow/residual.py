"""Residual and sparse Jacobian assembly for the network flow system.

The unknowns are stacked per ``network.ordering``: edge flows phi first,
junction potentials pi after.  The system F(x, s) = 0 interpolates the
pipe law through a parameter s in [0, 1]:

* pipe row e:        pi_i - pi_j - beta * phi_e * |phi_e|**s
* compressor row e:  gamma * pi_i - pi_j
* nonslack row k:    sum(inflow) - sum(outflow) - q_k
* slack row k:       pi_k - pi_k_star

s = 1 is the physical quadratic friction law; s = 0 is a linear system
that is provably nonsingular for admissible networks and serves as the
continuation start point.

Assembly is vectorized over a per-network index structure that is built
once and cached; rows and columns follow the fixed unknown ordering, so
factorizations are reproducible run to run.
"""

from __future__ import annotations

import weakref

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .network import Network, ordering


class DimensionMismatchError(ValueError):
    """State vector length does not match the network's unknown count."""


class SingularMatrixError(RuntimeError):
    """Linear system factorization failed or produced non-finite values."""


def solve_sparse(matrix: sparse.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` with a pivoted sparse LU.

    Raises ``SingularMatrixError`` when the factorization reports a
    singular matrix or the solution contains non-finite entries.
    """
    try:
        lu = splu(sparse.csc_matrix(matrix))
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("factorization produced non-finite values")
    return x


class SystemAssembly:
    """Precomputed index arrays for one network's residual and Jacobian."""

    def __init__(self, network: Network):
        self.network = network
        order = ordering(network)
        ne, nv = order.num_edges, order.num_junctions
        self.ne, self.nv, self.dim = ne, nv, order.dim

        pos = network.junction_positions
        self.from_j = np.fromiter(
            (pos[e.from_id] for e in network.edges), dtype=np.intp, count=ne
        )
        self.to_j = np.fromiter(
            (pos[e.to_id] for e in network.edges), dtype=np.intp, count=ne
        )
        self.is_pipe = np.fromiter(
            (e.is_pipe for e in network.edges), dtype=bool, count=ne
        )
        self.beta = np.array(
            [e.device.beta if e.is_pipe else 0.0 for e in network.edges], dtype=float
        )
        self.gamma = np.array(
            [0.0 if e.is_pipe else e.device.gamma for e in network.edges], dtype=float
        )
        self.slack = np.array([j.slack for j in network.junctions], dtype=bool)
        self.q = np.array(
            [0.0 if j.slack else j.withdrawal for j in network.junctions], dtype=float
        )
        self.pi_star = np.array(
            [j.potential if j.slack else 0.0 for j in network.junctions], dtype=float
        )

        # Node balance: incidence @ phi gives inflow - outflow per junction.
        inc_rows = np.concatenate((self.to_j, self.from_j))
        inc_cols = np.concatenate((np.arange(ne),) * 2) if ne else np.empty(0, np.intp)
        inc_vals = np.concatenate((np.ones(ne), -np.ones(ne)))
        self.incidence = sparse.csr_matrix(
            (inc_vals, (inc_rows, inc_cols)), shape=(nv, ne)
        )

        # Static Jacobian pattern; only pipe-row flow entries vary with x, s.
        rows: list[int] = []
        cols: list[int] = []
        vals: list[float] = []
        pipe_slots: list[int] = []
        for e in range(ne):
            fj, tj = int(self.from_j[e]), int(self.to_j[e])
            if self.is_pipe[e]:
                rows += [e, e, e]
                cols += [ne + fj, ne + tj, e]
                vals += [1.0, -1.0, 0.0]
                pipe_slots.append(len(vals) - 1)
            else:
                rows += [e, e]
                cols += [ne + fj, ne + tj]
                vals += [self.gamma[e], -1.0]
        for e in range(ne):
            tj = int(self.to_j[e])
            fj = int(self.from_j[e])
            if not self.slack[tj]:
                rows.append(ne + tj)
                cols.append(e)
                vals.append(1.0)
            if not self.slack[fj]:
                rows.append(ne + fj)
                cols.append(e)
                vals.append(-1.0)
        for k in range(nv):
            if self.slack[k]:
                rows.append(ne + k)
                cols.append(ne + k)
                vals.append(1.0)
        self._jac_rows = np.asarray(rows, dtype=np.intp)
        self._jac_cols = np.asarray(cols, dtype=np.intp)
        self._jac_vals = np.asarray(vals, dtype=float)
        self._pipe_slots = np.asarray(pipe_slots, dtype=np.intp)
        self._pipe_edges = np.flatnonzero(self.is_pipe)
        self._pipe_beta = self.beta[self._pipe_edges]

    def check_state(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(
                f"state has shape {x.shape}, expected ({self.dim},)"
            )
        return x

    def residual(self, x: np.ndarray, s: float) -> np.ndarray:
        phi = x[: self.ne]
        pi = x[self.ne :]
        head = pi[self.from_j] - pi[self.to_j]
        flow_term = self.beta * phi * np.abs(phi) ** s
        comp = self.gamma * pi[self.from_j] - pi[self.to_j]
        edge_rows = np.where(self.is_pipe, head - flow_term, comp)
        balance = self.incidence @ phi
        node_rows = np.where(self.slack, pi - self.pi_star, balance - self.q)
        return np.concatenate((edge_rows, node_rows))

    def jacobian(self, x: np.ndarray, s: float, eps: float) -> sparse.csc_matrix:
        vals = self._jac_vals.copy()
        phi = x[self._pipe_edges]
        # The analytic flow derivative (1+s)|phi|**s vanishes at phi = 0 for
        # s > 0; clamping |phi| below by eps keeps Newton steps defined
        # without touching the residual.
        vals[self._pipe_slots] = (
            -self._pipe_beta * (1.0 + s) * np.maximum(np.abs(phi), eps) ** s
        )
        return sparse.csc_matrix(
            (vals, (self._jac_rows, self._jac_cols)), shape=(self.dim, self.dim)
        )


_ASSEMBLY_CACHE: "weakref.WeakKeyDictionary[Network, SystemAssembly]" = (
    weakref.WeakKeyDictionary()
)


def assembly_for(network: Network) -> SystemAssembly:
    """Cached ``SystemAssembly`` for ``network``."""
    asm = _ASSEMBLY_CACHE.get(network)
    if asm is None:
        asm = SystemAssembly(network)
        _ASSEMBLY_CACHE[network] = asm
    return asm


def _check_s(s: float) -> float:
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"homotopy parameter s={s!r} outside [0, 1]")
    return s


def assemble_residual(network: Network, x: np.ndarray, s: float) -> np.ndarray:
    """Residual vector F(x, s) under the fixed unknown ordering."""
    asm = assembly_for(network)
    return asm.residual(asm.check_state(x), _check_s(s))


def assemble_jacobian(
    network: Network, x: np.ndarray, s: float, eps: float = 1e-12
) -> sparse.csc_matrix:
    """Sparse Jacobian dF/dx at (x, s), with flow-derivative regularization ``eps``."""
    if eps < 0.0:
        raise ValueError("regularization eps must be nonnegative")
    asm = assembly_for(network)
    return asm.jacobian(asm.check_state(x), _check_s(s), eps)
