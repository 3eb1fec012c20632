"""Discrete Bayesian networks with exact rational inference.

A network is a DAG of named nodes, each with a finite alphabet and a
conditional probability table over its parents' product alphabet (rows in
lexicographic parent-value order, parents in their declared order). One
node is designated the query source; it carries no distribution of its
own, since leakage quantities are prior-free for full-support sources,
and inference always conditions on its value.

``BayesNet`` deliberately stores raw rational rows rather than validated
channel objects so that ``validate`` can report every defect of an
ill-formed file (bad row sums, arity mismatches, cycles) instead of
throwing at the first one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from .errors import CapacityError, LeakboundError
from .measures import ZERO, DiscreteChannel, Pmf, as_fraction

DEFAULT_MAX_STATES = 10**6


@dataclass(frozen=True)
class NodeSpec:
    """One node: alphabet, ordered parents, and raw CPT rows.

    ``rows`` has one row per parent configuration (lexicographic in the
    declared parent order); a parentless node has a single row, its
    prior. The source node may omit rows entirely (``rows = None``).
    """

    node_id: str
    alphabet: tuple[str, ...]
    parents: tuple[str, ...]
    rows: tuple[tuple[Fraction, ...], ...] | None

    @staticmethod
    def make(node_id, alphabet, parents=(), rows=None) -> "NodeSpec":
        if isinstance(alphabet, int):
            alphabet = tuple(str(i) for i in range(alphabet))
        else:
            alphabet = tuple(str(a) for a in alphabet)
        frozen = None
        if rows is not None:
            frozen = tuple(tuple(as_fraction(v) for v in row) for row in rows)
        return NodeSpec(str(node_id), alphabet, tuple(str(p) for p in parents), frozen)


class BayesNet:
    """Nodes in declaration order plus a designated source node."""

    def __init__(self, nodes: Sequence[NodeSpec], source: str):
        nodes = tuple(nodes)
        ids = [n.node_id for n in nodes]
        if len(set(ids)) != len(ids):
            raise LeakboundError("duplicate node ids")
        if source not in ids:
            raise LeakboundError(f"source {source!r} is not a node")
        self.nodes = nodes
        self.source = source
        self.by_id: Mapping[str, NodeSpec] = {n.node_id: n for n in nodes}

    def node_ids(self) -> list[str]:
        return [n.node_id for n in self.nodes]

    def parent_configs(self, node_id: str) -> list[tuple[str, ...]]:
        """Parent-value tuples in lexicographic declared-parent order."""
        node = self.by_id[node_id]
        alphabets = [self.by_id[p].alphabet for p in node.parents]
        return list(product(*alphabets)) if alphabets else [()]

    def cpt(self, node_id: str) -> DiscreteChannel:
        """The node's CPT as a channel; raises on structural defects."""
        node = self.by_id[node_id]
        if node.rows is None:
            raise LeakboundError(f"node {node_id!r} has no distribution rows")
        configs = self.parent_configs(node_id)
        if len(node.rows) != len(configs):
            raise LeakboundError(
                f"node {node_id!r} has {len(node.rows)} rows for "
                f"{len(configs)} parent configurations"
            )
        rows = [Pmf.from_values(r, node.alphabet) for r in node.rows]
        return DiscreteChannel(rows, configs)

    def with_source(self, source: str) -> "BayesNet":
        return BayesNet(self.nodes, source)


def validate(net: BayesNet) -> list[str]:
    """All structural violations, as human-readable strings; [] when ok."""
    problems: list[str] = []
    ids = set(net.node_ids())
    for node in net.nodes:
        for p in node.parents:
            if p not in ids:
                problems.append(f"node {node.node_id}: unknown parent {p!r}")
            if p == node.node_id:
                problems.append(f"node {node.node_id}: is its own parent")
        if len(set(node.parents)) != len(node.parents):
            problems.append(f"node {node.node_id}: duplicate parents")
        if not node.alphabet:
            problems.append(f"node {node.node_id}: empty alphabet")
        if len(set(node.alphabet)) != len(node.alphabet):
            problems.append(f"node {node.node_id}: duplicate alphabet symbols")

    src = net.by_id[net.source]
    if src.parents:
        problems.append(f"source {net.source} must not have parents")

    cycle = _find_cycle(net)
    if cycle:
        problems.append("cycle: " + " -> ".join(cycle))

    for node in net.nodes:
        if node.node_id == net.source:
            continue
        if node.rows is None:
            problems.append(f"node {node.node_id}: missing rows")
            continue
        if any(p not in ids for p in node.parents):
            continue  # row count is meaningless with unknown parents
        expected = 1
        for p in node.parents:
            expected *= len(net.by_id[p].alphabet)
        if len(node.rows) != expected:
            problems.append(
                f"node {node.node_id}: {len(node.rows)} rows, expected {expected}"
            )
        for r, row in enumerate(node.rows):
            if len(row) != len(node.alphabet):
                problems.append(
                    f"node {node.node_id} row {r}: {len(row)} entries for "
                    f"alphabet of size {len(node.alphabet)}"
                )
                continue
            if any(v < 0 or v > 1 for v in row):
                problems.append(f"node {node.node_id} row {r}: entry outside [0, 1]")
            total = sum(row, ZERO)
            if total != 1:
                problems.append(f"node {node.node_id} row {r}: sums to {total}")
    return problems


def _find_cycle(net: BayesNet) -> list[str] | None:
    ids = set(net.node_ids())
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def walk(u: str, stack: list[str]) -> list[str] | None:
        state[u] = 0
        stack.append(u)
        node = net.by_id[u]
        # Edges run parent -> child; walking parents finds the same cycles.
        for p in node.parents:
            if p not in ids:
                continue
            if state.get(p) == 0:
                return stack[stack.index(p):] + [p]
            if p not in state:
                found = walk(p, stack)
                if found:
                    return found
        stack.pop()
        state[u] = 1
        return None

    for nid in net.node_ids():
        if nid not in state:
            found = walk(nid, [])
            if found:
                return found
    return None


def topological_sort(net: BayesNet) -> list[str]:
    """Parents before children; ties broken by node id (deterministic)."""
    remaining = {n.node_id: set(n.parents) for n in net.nodes}
    order: list[str] = []
    while remaining:
        ready = sorted(nid for nid, deps in remaining.items() if not deps)
        if not ready:
            cycle = _find_cycle(net)
            raise LeakboundError(
                "graph has a cycle: " + " -> ".join(cycle or remaining)
            )
        for nid in ready:
            order.append(nid)
            del remaining[nid]
        for deps in remaining.values():
            deps.difference_update(ready)
    return order


def descendants(net: BayesNet, node_id: str) -> set[str]:
    children: dict[str, list[str]] = {nid: [] for nid in net.node_ids()}
    for node in net.nodes:
        for p in node.parents:
            if p in children:
                children[p].append(node.node_id)
    out: set[str] = set()
    frontier = [node_id]
    while frontier:
        u = frontier.pop()
        for c in children[u]:
            if c not in out:
                out.add(c)
                frontier.append(c)
    return out


def joint_distribution(
    net: BayesNet, source_value: str, max_states: int = DEFAULT_MAX_STATES
) -> Pmf:
    """Exact joint over all non-source nodes, given the source's value.

    The returned Pmf is over value tuples aligned with the non-source
    nodes in declaration order.
    """
    src = net.by_id[net.source]
    if source_value not in src.alphabet:
        raise LeakboundError(f"{source_value!r} not in the source alphabet")
    non_source = [n.node_id for n in net.nodes if n.node_id != net.source]

    total_states = 1
    for nid in non_source:
        total_states *= len(net.by_id[nid].alphabet)
        if total_states > max_states:
            raise CapacityError(total_states, max_states, "joint states")

    order = [nid for nid in topological_sort(net) if nid != net.source]
    cpts = {nid: net.cpt(nid) for nid in non_source}
    row_index = {
        nid: {cfg: k for k, cfg in enumerate(net.parent_configs(nid))}
        for nid in non_source
    }

    # Extend partial assignments (keyed in topo order) one node at a time;
    # zero-probability branches are pruned as they appear.
    partial: dict[tuple, Fraction] = {(): Fraction(1)}
    pos = {nid: k for k, nid in enumerate(order)}
    for nid in order:
        node = net.by_id[nid]
        cpt = cpts[nid]
        grown: dict[tuple, Fraction] = {}
        for assign, weight in partial.items():
            cfg = tuple(
                source_value if p == net.source else assign[pos[p]]
                for p in node.parents
            )
            row = cpt.row(row_index[nid][cfg])
            for value in row.support():
                grown[assign + (value,)] = weight * row[value]
        partial = grown

    # Re-map from topo order to declaration order.
    decl_pos = [pos[nid] for nid in non_source]
    mass = {}
    for assign, weight in partial.items():
        mass[tuple(assign[k] for k in decl_pos)] = weight
    alphabet = list(product(*(net.by_id[nid].alphabet for nid in non_source)))
    return Pmf(alphabet, mass)


def composite_channel(
    net: BayesNet,
    targets: Sequence[str],
    max_states: int = DEFAULT_MAX_STATES,
) -> DiscreteChannel:
    """P(targets | source): one row per source value, exact.

    Output symbols are value tuples over the target nodes sorted into
    declaration order (so the result is independent of the order the
    caller lists them in). The source itself may appear as a target; its
    coordinate is then a point mass at the conditioning value.
    """
    targets = list(dict.fromkeys(targets))
    for t in targets:
        if t not in net.by_id:
            raise LeakboundError(f"unknown target node {t!r}")
    decl = net.node_ids()
    ordered = [nid for nid in decl if nid in set(targets)]
    if not ordered:
        raise LeakboundError("empty target set")

    non_source = [nid for nid in decl if nid != net.source]
    ns_pos = {nid: k for k, nid in enumerate(non_source)}
    out_alphabet = list(product(*(net.by_id[nid].alphabet for nid in ordered)))

    rows = []
    for x in net.by_id[net.source].alphabet:
        joint = joint_distribution(net, x, max_states=max_states)
        mass: dict[tuple, Fraction] = {}
        for assign in joint.support():
            key = tuple(
                x if nid == net.source else assign[ns_pos[nid]] for nid in ordered
            )
            mass[key] = mass.get(key, ZERO) + joint[assign]
        rows.append(Pmf(out_alphabet, mass))
    return DiscreteChannel(rows, net.by_id[net.source].alphabet)
