"""Network data model, admissibility validation, and unknown ordering.

A network is a directed multigraph of junctions connected by pipes and
compressors.  Each junction is either a slack node (potential given,
net flow free) or a nonslack node (withdrawal given, potential free).
Pipes carry a resistance beta > 0; compressors carry a boost ratio
alpha >= 1, which acts on potentials as gamma = alpha**2.

``validate`` enforces the admissibility rules that make the steady-state
system well posed:

* at least one slack node, and one in every connected component;
* any path between two slack nodes contains at least one pipe;
* any cycle contains at least one pipe.

Equivalently, the compressor-only subgraph must be a forest holding at
most one slack node per component.  Self-loops are rejected (a pipe
self-loop is vacuous, a compressor self-loop is an all-compressor
cycle).  Parallel edges are allowed.

Compressor endpoints are conventionally co-located pieces of station
equipment; no geometry is modeled here, so that convention is not
checked.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Union

from .eos import EosParams, potential


class SchemaError(ValueError):
    """Malformed network description: bad structure, types, or field combinations."""


class ViolationCode(str, enum.Enum):
    NO_SLACK_NODE = "NoSlackNode"
    COMPRESSOR_ONLY_SLACK_PATH = "CompressorOnlySlackPath"
    COMPRESSOR_ONLY_CYCLE = "CompressorOnlyCycle"
    DANGLING_EDGE = "DanglingEdge"
    DUPLICATE_ID = "DuplicateId"
    NON_POSITIVE_RESISTANCE = "NonPositiveResistance"
    COMPRESSOR_RATIO_BELOW_ONE = "CompressorRatioBelowOne"
    DISCONNECTED_GRAPH = "DisconnectedGraph"
    SELF_LOOP = "SelfLoop"


@dataclass(frozen=True)
class Violation:
    code: ViolationCode
    message: str

    def __str__(self) -> str:
        return f"{self.code.value}: {self.message}"


class NetworkValidationError(ValueError):
    """Raised by ``validate`` with the complete list of violations found."""

    def __init__(self, violations: Iterable[Violation]):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class Junction:
    """A network node.

    Slack junctions carry a fixed potential; nonslack junctions carry a
    withdrawal q, defined as net delivery: inflow - outflow = q.
    """

    id: str
    slack: bool
    potential: float | None = None
    withdrawal: float | None = None

    def __post_init__(self) -> None:
        if self.slack:
            if self.potential is None or self.withdrawal is not None:
                raise ValueError(
                    f"slack junction {self.id!r} must carry exactly a potential"
                )
        else:
            if self.withdrawal is None or self.potential is not None:
                raise ValueError(
                    f"nonslack junction {self.id!r} must carry exactly a withdrawal"
                )


@dataclass(frozen=True)
class Pipe:
    """Resistive element: potential drop = beta * flow * |flow|."""

    beta: float


@dataclass(frozen=True)
class Compressor:
    """Boost element: outlet potential = gamma * inlet potential."""

    alpha: float

    @property
    def gamma(self) -> float:
        return self.alpha * self.alpha


Device = Union[Pipe, Compressor]


@dataclass(frozen=True)
class Edge:
    """Directed edge; flow is signed positive in the (from, to) direction."""

    from_id: str
    to_id: str
    device: Device

    @property
    def is_pipe(self) -> bool:
        return isinstance(self.device, Pipe)


@dataclass(frozen=True)
class Network:
    """Immutable network description.

    Construction performs no admissibility checks; pass instances
    through ``validate`` before solving.  Derived topology lookups are
    cached, so validated networks can be shared freely.
    """

    junctions: tuple[Junction, ...]
    edges: tuple[Edge, ...]
    eos: EosParams

    def __init__(self, junctions, edges, eos: EosParams):
        object.__setattr__(self, "junctions", tuple(junctions))
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "eos", eos)

    @property
    def num_junctions(self) -> int:
        return len(self.junctions)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def junction_positions(self) -> dict[str, int]:
        return {j.id: k for k, j in enumerate(self.junctions)}

    @cached_property
    def slack_positions(self) -> tuple[int, ...]:
        return tuple(k for k, j in enumerate(self.junctions) if j.slack)

    @cached_property
    def nonslack_positions(self) -> tuple[int, ...]:
        return tuple(k for k, j in enumerate(self.junctions) if not j.slack)

    @cached_property
    def incident_edges(self) -> tuple[tuple[int, ...], ...]:
        """Edge positions touching each junction, in edge input order."""
        inc: list[list[int]] = [[] for _ in self.junctions]
        pos = self.junction_positions
        for e, edge in enumerate(self.edges):
            inc[pos[edge.from_id]].append(e)
            if edge.to_id != edge.from_id:
                inc[pos[edge.to_id]].append(e)
        return tuple(tuple(v) for v in inc)

    def edge_endpoints(self, e: int) -> tuple[int, int]:
        """(from, to) junction positions of edge ``e``."""
        edge = self.edges[e]
        pos = self.junction_positions
        return pos[edge.from_id], pos[edge.to_id]


@dataclass(frozen=True)
class UnknownOrdering:
    """Assignment of unknowns to state-vector positions.

    Edge flows come first in edge input order, then junction potentials
    in junction input order.  Every module that touches state vectors
    (residual, Jacobian, bounds, solvers, output) uses this map.
    """

    num_edges: int
    num_junctions: int

    @property
    def dim(self) -> int:
        return self.num_edges + self.num_junctions

    def flow_index(self, edge_pos: int) -> int:
        if not 0 <= edge_pos < self.num_edges:
            raise IndexError(f"edge position {edge_pos} out of range")
        return edge_pos

    def potential_index(self, junction_pos: int) -> int:
        if not 0 <= junction_pos < self.num_junctions:
            raise IndexError(f"junction position {junction_pos} out of range")
        return self.num_edges + junction_pos


def ordering(network: Network) -> UnknownOrdering:
    """Unknown ordering for ``network`` (flows first, then potentials)."""
    return UnknownOrdering(network.num_edges, network.num_junctions)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


def validate(network: Network) -> Network:
    """Check admissibility and return the network unchanged.

    All violations are collected and reported together in a
    ``NetworkValidationError``; nothing is checked lazily, so a network
    that passes once passes always (validation is idempotent).
    """
    violations: list[Violation] = []
    junctions, edges = network.junctions, network.edges

    seen: dict[str, int] = {}
    for j in junctions:
        if j.id in seen:
            violations.append(
                Violation(ViolationCode.DUPLICATE_ID, f"junction id {j.id!r} repeats")
            )
        seen[j.id] = 1
    pos = {j.id: k for k, j in enumerate(junctions)}

    resolvable: list[tuple[int, int, Edge]] = []
    for e, edge in enumerate(edges):
        dangling = False
        for end in (edge.from_id, edge.to_id):
            if end not in pos:
                violations.append(
                    Violation(
                        ViolationCode.DANGLING_EDGE,
                        f"edge {e} references unknown junction {end!r}",
                    )
                )
                dangling = True
        if isinstance(edge.device, Pipe):
            if edge.device.beta <= 0.0:
                violations.append(
                    Violation(
                        ViolationCode.NON_POSITIVE_RESISTANCE,
                        f"pipe {edge.from_id!r}->{edge.to_id!r} has beta={edge.device.beta!r}",
                    )
                )
            if not dangling and edge.from_id == edge.to_id:
                violations.append(
                    Violation(
                        ViolationCode.SELF_LOOP,
                        f"pipe self-loop at junction {edge.from_id!r}",
                    )
                )
        else:
            if edge.device.alpha < 1.0:
                violations.append(
                    Violation(
                        ViolationCode.COMPRESSOR_RATIO_BELOW_ONE,
                        f"compressor {edge.from_id!r}->{edge.to_id!r} has "
                        f"alpha={edge.device.alpha!r}",
                    )
                )
        if not dangling:
            resolvable.append((pos[edge.from_id], pos[edge.to_id], edge))

    n = len(junctions)
    slack = [j.slack for j in junctions]
    if not any(slack):
        violations.append(
            Violation(ViolationCode.NO_SLACK_NODE, "network has no slack junction")
        )

    # Connectivity: every component must contain a slack node.
    if n > 0:
        uf_all = _UnionFind(n)
        for a, b, _ in resolvable:
            uf_all.union(a, b)
        roots = {uf_all.find(k) for k in range(n)}
        if len(roots) > 1:
            component_slack = {r: False for r in roots}
            for k in range(n):
                if slack[k]:
                    component_slack[uf_all.find(k)] = True
            for r, has in sorted(component_slack.items()):
                if not has:
                    violations.append(
                        Violation(
                            ViolationCode.DISCONNECTED_GRAPH,
                            f"component containing junction {junctions[r].id!r} "
                            "has no slack node",
                        )
                    )

        # Compressor-only subgraph must be a forest (no all-compressor
        # cycle) with at most one slack node per component (no
        # all-compressor path between slacks).
        uf_comp = _UnionFind(n)
        comp_slacks = [1 if slack[k] else 0 for k in range(n)]
        for a, b, edge in resolvable:
            if edge.is_pipe:
                continue
            ra, rb = uf_comp.find(a), uf_comp.find(b)
            if ra == rb:
                violations.append(
                    Violation(
                        ViolationCode.COMPRESSOR_ONLY_CYCLE,
                        f"compressor {edge.from_id!r}->{edge.to_id!r} closes an "
                        "all-compressor cycle",
                    )
                )
                continue
            if comp_slacks[ra] + comp_slacks[rb] > 1:
                violations.append(
                    Violation(
                        ViolationCode.COMPRESSOR_ONLY_SLACK_PATH,
                        f"compressor {edge.from_id!r}->{edge.to_id!r} links two "
                        "slack nodes through compressors only",
                    )
                )
            r = uf_comp.union(a, b)
            comp_slacks[r] = comp_slacks[ra] + comp_slacks[rb]

    if violations:
        raise NetworkValidationError(violations)
    return network


# ---------------------------------------------------------------------------
# JSON-shaped (de)serialization
# ---------------------------------------------------------------------------

def _require(obj: Mapping, key: str, context: str):
    if key not in obj:
        raise SchemaError(f"{context}: missing required key {key!r}")
    return obj[key]


def _number(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{context}: expected a number, got {value!r}")
    return float(value)


def network_from_dict(obj: Mapping) -> Network:
    """Build and validate a ``Network`` from a JSON-shaped mapping.

    Schema::

        {"eos": "ideal" | "cnga",
         "nodes": [{"id": str, "slack": bool,
                    "potential": num | "pressure": num   (slack only),
                    "withdrawal": num                    (nonslack only)}],
         "edges": [{"from": str, "to": str, "type": "pipe", "beta": num}
                 | {"from": str, "to": str, "type": "compressor", "alpha": num}]}

    A slack node's boundary may be given as a pressure instead of a
    potential; it is converted through the network's equation of state
    here, so downstream code only ever sees potentials.  Structural
    problems raise ``SchemaError``; admissibility problems raise
    ``NetworkValidationError``.
    """
    if not isinstance(obj, Mapping):
        raise SchemaError("network description must be a JSON object")
    eos_kind = _require(obj, "eos", "network")
    if eos_kind not in ("ideal", "cnga"):
        raise SchemaError(f"network: unknown eos {eos_kind!r}")
    eos = EosParams(kind=eos_kind)

    nodes = _require(obj, "nodes", "network")
    edges_obj = _require(obj, "edges", "network")
    if not isinstance(nodes, list) or not isinstance(edges_obj, list):
        raise SchemaError("network: 'nodes' and 'edges' must be arrays")

    junctions: list[Junction] = []
    for k, node in enumerate(nodes):
        if not isinstance(node, Mapping):
            raise SchemaError(f"node {k}: expected an object")
        node_id = _require(node, "id", f"node {k}")
        if not isinstance(node_id, str):
            raise SchemaError(f"node {k}: 'id' must be a string")
        is_slack = _require(node, "slack", f"node {node_id!r}")
        if not isinstance(is_slack, bool):
            raise SchemaError(f"node {node_id!r}: 'slack' must be a boolean")
        if is_slack:
            if "withdrawal" in node:
                raise SchemaError(f"slack node {node_id!r} must not carry a withdrawal")
            has_pi = "potential" in node
            has_p = "pressure" in node
            if has_pi == has_p:
                raise SchemaError(
                    f"slack node {node_id!r} needs exactly one of "
                    "'potential' or 'pressure'"
                )
            if has_pi:
                pi_star = _number(node["potential"], f"node {node_id!r}")
            else:
                pi_star = float(
                    potential(eos, _number(node["pressure"], f"node {node_id!r}"))
                )
            junctions.append(Junction(id=node_id, slack=True, potential=pi_star))
        else:
            if "potential" in node or "pressure" in node:
                raise SchemaError(
                    f"nonslack node {node_id!r} must not carry a potential or pressure"
                )
            q = _number(_require(node, "withdrawal", f"node {node_id!r}"), f"node {node_id!r}")
            junctions.append(Junction(id=node_id, slack=False, withdrawal=q))

    edges: list[Edge] = []
    for k, ed in enumerate(edges_obj):
        if not isinstance(ed, Mapping):
            raise SchemaError(f"edge {k}: expected an object")
        from_id = _require(ed, "from", f"edge {k}")
        to_id = _require(ed, "to", f"edge {k}")
        if not isinstance(from_id, str) or not isinstance(to_id, str):
            raise SchemaError(f"edge {k}: 'from' and 'to' must be strings")
        kind = _require(ed, "type", f"edge {k}")
        if kind == "pipe":
            device: Device = Pipe(beta=_number(_require(ed, "beta", f"edge {k}"), f"edge {k}"))
        elif kind == "compressor":
            device = Compressor(alpha=_number(_require(ed, "alpha", f"edge {k}"), f"edge {k}"))
        else:
            raise SchemaError(f"edge {k}: unknown type {kind!r}")
        edges.append(Edge(from_id=from_id, to_id=to_id, device=device))

    return validate(Network(junctions, edges, eos))


def network_to_dict(network: Network) -> dict:
    """Serialize a network back to the JSON schema (potentials, not pressures)."""
    nodes = []
    for j in network.junctions:
        if j.slack:
            nodes.append({"id": j.id, "slack": True, "potential": j.potential})
        else:
            nodes.append({"id": j.id, "slack": False, "withdrawal": j.withdrawal})
    edges = []
    for edge in network.edges:
        if edge.is_pipe:
            edges.append(
                {"from": edge.from_id, "to": edge.to_id, "type": "pipe",
                 "beta": edge.device.beta}
            )
        else:
            edges.append(
                {"from": edge.from_id, "to": edge.to_id, "type": "compressor",
                 "alpha": edge.device.alpha}
            )
    return {"eos": network.eos.kind, "nodes": nodes, "edges": edges}
