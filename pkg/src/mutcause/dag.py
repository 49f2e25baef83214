"""Causal DAGs, path classification and back-door adjustment.

Graphs here are small (a handful of nodes), so path and adjustment-set
enumeration is done exhaustively. A node cap guards against accidental use
on large graphs.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from .errors import (
    CycleError,
    DuplicateEdge,
    GraphTooLarge,
    NotAdjacent,
    SelfLoop,
    UnknownNode,
)

MAX_NODES = 20


class Direction(enum.Enum):
    FORWARD = "->"
    BACKWARD = "<-"


class TripleKind(enum.Enum):
    CHAIN = "chain"
    FORK = "fork"
    COLLIDER = "collider"


@dataclass(frozen=True)
class TraversalPath:
    """A simple path in the skeleton, with the edge orientation of each step.

    ``directions[k]`` describes the edge between ``nodes[k]`` and
    ``nodes[k + 1]``: FORWARD for ``nodes[k] -> nodes[k+1]``.
    """

    nodes: tuple[str, ...]
    directions: tuple[Direction, ...]

    def __post_init__(self) -> None:
        if len(self.directions) != len(self.nodes) - 1:
            raise ValueError("a path of n nodes needs n-1 directions")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"path is not simple: {self.nodes}")

    def __str__(self) -> str:
        out = [self.nodes[0]]
        for d, n in zip(self.directions, self.nodes[1:]):
            out.append(d.value)
            out.append(n)
        return "".join(out)

    def __len__(self) -> int:
        return len(self.directions)

    def interior(self) -> Iterator[tuple[str, bool]]:
        """Yield ``(node, is_collider)`` for each interior node."""
        for j in range(1, len(self.nodes) - 1):
            into_from_left = self.directions[j - 1] is Direction.FORWARD
            into_from_right = self.directions[j] is Direction.BACKWARD
            yield self.nodes[j], into_from_left and into_from_right

    @property
    def starts_backward(self) -> bool:
        return bool(self.directions) and self.directions[0] is Direction.BACKWARD

    @property
    def is_directed(self) -> bool:
        return all(d is Direction.FORWARD for d in self.directions)


@dataclass(frozen=True)
class CausalDag:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]
    _children: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)
    _parents: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for a, b in self.edges:
            for n in (a, b):
                if n not in self.nodes:
                    raise UnknownNode(f"edge {a}->{b} references undeclared node {n!r}")
            if a == b:
                raise SelfLoop(f"self-loop on {a!r}")
        children: dict[str, list[str]] = {n: [] for n in self.nodes}
        parents: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            if (b, a) in self.edges and a < b:
                raise CycleError(f"two-cycle between {a!r} and {b!r}")
            children[a].append(b)
            parents[b].append(a)
        object.__setattr__(self, "_children", {k: tuple(sorted(v)) for k, v in children.items()})
        object.__setattr__(self, "_parents", {k: tuple(sorted(v)) for k, v in parents.items()})
        cycle = self._find_cycle()
        if cycle:
            raise CycleError("directed cycle: " + " -> ".join(cycle))

    def _find_cycle(self) -> list[str] | None:
        WHITE, GREY, BLACK = 0, 1, 2
        colour = dict.fromkeys(self.nodes, WHITE)
        stack: list[str] = []

        def visit(n: str) -> list[str] | None:
            colour[n] = GREY
            stack.append(n)
            for c in self._children[n]:
                if colour[c] == GREY:
                    return stack[stack.index(c):] + [c]
                if colour[c] == WHITE:
                    found = visit(c)
                    if found:
                        return found
            stack.pop()
            colour[n] = BLACK
            return None

        for n in sorted(self.nodes):
            if colour[n] == WHITE:
                found = visit(n)
                if found:
                    return found
        return None

    def _check(self, *names: str) -> None:
        for n in names:
            if n not in self.nodes:
                raise UnknownNode(f"unknown node {n!r}")

    def children(self, node: str) -> tuple[str, ...]:
        self._check(node)
        return self._children[node]

    def parents(self, node: str) -> tuple[str, ...]:
        self._check(node)
        return self._parents[node]

    def neighbours(self, node: str) -> list[tuple[str, Direction]]:
        self._check(node)
        out = [(c, Direction.FORWARD) for c in self._children[node]]
        out += [(p, Direction.BACKWARD) for p in self._parents[node]]
        return sorted(out, key=lambda t: t[0])

    def descendants(self, node: str) -> frozenset[str]:
        """Strict descendants of ``node`` (not including itself)."""
        self._check(node)
        seen: set[str] = set()
        todo = list(self._children[node])
        while todo:
            n = todo.pop()
            if n not in seen:
                seen.add(n)
                todo.extend(self._children[n])
        return frozenset(seen)

    def ancestors(self, node: str) -> frozenset[str]:
        self._check(node)
        seen: set[str] = set()
        todo = list(self._parents[node])
        while todo:
            n = todo.pop()
            if n not in seen:
                seen.add(n)
                todo.extend(self._parents[n])
        return frozenset(seen)

    def has_edge(self, a: str, b: str) -> bool:
        return (a, b) in self.edges

    def adjacent(self, a: str, b: str) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def to_edge_list(self) -> str:
        lines = [f"{a} -> {b}" for a, b in sorted(self.edges)]
        connected = {n for e in self.edges for n in e}
        lines += sorted(self.nodes - connected)
        return "\n".join(lines) + "\n"


def build_dag(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> CausalDag:
    """Validate and build a DAG.

    Raises ``DuplicateEdge``, ``SelfLoop``, ``UnknownNode`` or ``CycleError``.
    """
    node_list = list(nodes)
    if len(set(node_list)) != len(node_list):
        dup = sorted({n for n in node_list if node_list.count(n) > 1})
        raise ValueError(f"duplicate node names: {dup}")
    edge_list = [tuple(e) for e in edges]
    seen: set[tuple[str, str]] = set()
    for e in edge_list:
        if len(e) != 2:
            raise ValueError(f"edge must be a pair, got {e!r}")
        if e in seen:
            raise DuplicateEdge(f"duplicate edge {e[0]}->{e[1]}")
        seen.add(e)  # type: ignore[arg-type]
    return CausalDag(frozenset(node_list), frozenset(seen))


def parse_edge_list(text: str) -> CausalDag:
    """Parse ``A -> B`` lines; ``#`` starts a comment, bare names declare nodes.

    Chains such as ``A -> B -> C`` are accepted.
    """
    nodes: list[str] = []
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split("->")]
        if any(not p or any(ch.isspace() for ch in p) for p in parts):
            raise ValueError(f"line {lineno}: cannot parse {raw.strip()!r}")
        for p in parts:
            if p not in nodes:
                nodes.append(p)
        edges.extend(zip(parts, parts[1:]))
    return build_dag(nodes, edges)


def _check_size(dag: CausalDag, max_nodes: int) -> None:
    if len(dag.nodes) > max_nodes:
        raise GraphTooLarge(
            f"graph has {len(dag.nodes)} nodes; exhaustive enumeration is capped at {max_nodes}"
        )


def enumerate_paths(dag: CausalDag, x: str, y: str, *, max_nodes: int = MAX_NODES) -> list[TraversalPath]:
    """All simple paths between ``x`` and ``y`` in the skeleton, sorted by node sequence."""
    dag._check(x, y)
    if x == y:
        raise ValueError("x and y must differ")
    _check_size(dag, max_nodes)
    found: list[TraversalPath] = []
    nodes = [x]
    dirs: list[Direction] = []

    def walk(cur: str) -> None:
        for nxt, d in dag.neighbours(cur):
            if nxt in nodes:
                continue
            nodes.append(nxt)
            dirs.append(d)
            if nxt == y:
                found.append(TraversalPath(tuple(nodes), tuple(dirs)))
            else:
                walk(nxt)
            nodes.pop()
            dirs.pop()

    walk(x)
    found.sort(key=lambda p: p.nodes)
    return found


def classify_triple(dag: CausalDag, a: str, b: str, c: str) -> TripleKind:
    dag._check(a, b, c)
    if not (dag.adjacent(a, b) and dag.adjacent(b, c)):
        raise NotAdjacent(f"{a}-{b}-{c} is not a connected triple")
    into_b_from_a = dag.has_edge(a, b)
    into_b_from_c = dag.has_edge(c, b)
    if into_b_from_a and into_b_from_c:
        return TripleKind.COLLIDER
    if not into_b_from_a and not into_b_from_c:
        return TripleKind.FORK
    return TripleKind.CHAIN


def _validate_path(dag: CausalDag, path: TraversalPath) -> None:
    dag._check(*path.nodes)
    for (a, b), d in zip(zip(path.nodes, path.nodes[1:]), path.directions):
        edge = (a, b) if d is Direction.FORWARD else (b, a)
        if edge not in dag.edges:
            raise ValueError(f"path step {a}{d.value}{b} is not an edge of the graph")


def is_blocked(dag: CausalDag, path: TraversalPath, conditioning: Iterable[str] = ()) -> bool:
    """Whether ``path`` is blocked given the conditioning set.

    A non-collider in the set blocks; a collider blocks unless it or one of
    its descendants is in the set.
    """
    z = frozenset(conditioning)
    dag._check(*z)
    _validate_path(dag, path)
    for node, collider in path.interior():
        if collider:
            if node not in z and not (dag.descendants(node) & z):
                return True
        elif node in z:
            return True
    return False


def backdoor_paths(dag: CausalDag, treatment: str, outcome: str, *, max_nodes: int = MAX_NODES) -> list[TraversalPath]:
    """Paths from treatment to outcome that begin with an edge into the treatment."""
    return [p for p in enumerate_paths(dag, treatment, outcome, max_nodes=max_nodes) if p.starts_backward]


def d_separated(dag: CausalDag, x: str, y: str, given: Iterable[str] = (), *, max_nodes: int = MAX_NODES) -> bool:
    given = frozenset(given)
    if x in given or y in given:
        raise ValueError("x and y must not be in the conditioning set")
    return all(is_blocked(dag, p, given) for p in enumerate_paths(dag, x, y, max_nodes=max_nodes))


class AdjustmentSet(NamedTuple):
    nodes: frozenset[str]
    minimal: bool

    def __str__(self) -> str:
        return "{" + ", ".join(sorted(self.nodes)) + "}"


def adjustment_problems(dag: CausalDag, treatment: str, outcome: str, candidate: Iterable[str]) -> list[str]:
    """Reasons why ``candidate`` fails the back-door criterion (empty list: valid)."""
    z = frozenset(candidate)
    dag._check(treatment, outcome, *z)
    problems = []
    if treatment in z or outcome in z:
        problems.append("contains the treatment or the outcome")
    desc = sorted(dag.descendants(treatment) & z)
    if desc:
        problems.append(f"contains descendants of {treatment}: {', '.join(desc)}")
    for p in backdoor_paths(dag, treatment, outcome):
        if not is_blocked(dag, p, z - {treatment, outcome}):
            problems.append(f"leaves back-door path {p} open")
    return problems


def adjustment_sets(dag: CausalDag, treatment: str, outcome: str, *, max_nodes: int = MAX_NODES) -> list[AdjustmentSet]:
    """Every sufficient adjustment set, flagging those with no valid proper subset.

    Ordered by size, then by sorted member names.
    """
    dag._check(treatment, outcome)
    if treatment == outcome:
        raise ValueError("treatment and outcome must differ")
    _check_size(dag, max_nodes)
    bd = backdoor_paths(dag, treatment, outcome, max_nodes=max_nodes)
    pool = sorted(dag.nodes - {treatment, outcome} - dag.descendants(treatment))
    valid: list[frozenset[str]] = []
    for k in range(len(pool) + 1):
        for combo in itertools.combinations(pool, k):
            z = frozenset(combo)
            if all(is_blocked(dag, p, z) for p in bd):
                valid.append(z)
    out = []
    for z in valid:
        # valid sets are generated by increasing size, so any proper valid subset appears earlier
        minimal = not any(v < z for v in valid)
        out.append(AdjustmentSet(z, minimal))
    return out


def minimal_adjustment_sets(dag: CausalDag, treatment: str, outcome: str) -> list[frozenset[str]]:
    return [a.nodes for a in adjustment_sets(dag, treatment, outcome) if a.minimal]


def mutation_dag() -> CausalDag:
    """Cover drives Exec; both affect whether a mutant is killed."""
    return build_dag(
        ["Cover", "Exec", "Mutant"],
        [("Cover", "Exec"), ("Cover", "Mutant"), ("Exec", "Mutant")],
    )


def confounded_example_dag() -> CausalDag:
    """Treatment X, outcome Y, confounders T and W, mediator Z."""
    return build_dag(
        ["X", "T", "W", "Z", "Y"],
        [("T", "X"), ("T", "Y"), ("W", "X"), ("W", "Y"), ("X", "Z"), ("Z", "Y"), ("X", "Y")],
    )
