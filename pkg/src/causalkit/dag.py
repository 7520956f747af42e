"""Causal diagrams: DAG representation, path semantics and adjustment sets.

The central object is :class:`CausalDag`, an immutable directed acyclic graph
over named nodes with optional role annotations (treatment, outcome,
conditioned, latent).  On top of it this module implements

* simple-path enumeration with per-edge orientation (:func:`enumerate_paths`),
* the path-blocking rule with the descendant-aware collider criterion
  (:func:`path_open`),
* d-separation, implemented twice (by exhaustive path enumeration and by a
  Bayes-ball style reachability search) so the two can be checked against
  each other (:func:`d_separated_by_paths`, :func:`d_separated_by_reachability`),
* back-door path extraction and validity of adjustment sets, including
  forced (selection) nodes (:func:`is_valid_adjustment`),
* exhaustive minimal adjustment-set search (:func:`minimal_adjustment_sets`).

A collider on a path is opened by conditioning on the collider itself or on
any of its descendants; any other interior node is closed by conditioning on
it.  A path is open iff every interior node is open.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

from .errors import (
    CandidateViolation,
    CycleDetected,
    DagSyntaxError,
    DuplicateEdge,
    DuplicateNode,
    EndpointConditioned,
    GraphError,
    RoleViolation,
    SelfLoop,
    SemanticError,
    UnknownEdgeEndpoint,
    UnknownNode,
)

FORWARD = "forward"
BACKWARD = "backward"

ROLES = ("treatment", "outcome", "conditioned", "latent", "plain")


@dataclass(frozen=True)
class CausalDag:
    """A directed acyclic graph with named nodes and optional node roles."""

    nodes: Tuple[str, ...]
    edges: Tuple[Tuple[str, str], ...]
    roles: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple((p, c) for p, c in self.edges))
        object.__setattr__(self, "roles", dict(self.roles))

    # -- structure queries -------------------------------------------------

    def parents(self, node: str) -> Tuple[str, ...]:
        self._require(node)
        return tuple(p for p, c in self.edges if c == node)

    def children(self, node: str) -> Tuple[str, ...]:
        self._require(node)
        return tuple(c for p, c in self.edges if p == node)

    def descendants(self, node: str) -> FrozenSet[str]:
        """All strict descendants of ``node``."""
        self._require(node)
        seen: set = set()
        stack = [node]
        while stack:
            for child in self.children(stack.pop()):
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return frozenset(seen)

    def ancestors(self, node: str) -> FrozenSet[str]:
        """All strict ancestors of ``node``."""
        self._require(node)
        seen: set = set()
        stack = [node]
        while stack:
            for parent in self.parents(stack.pop()):
                if parent not in seen:
                    seen.add(parent)
                    stack.append(parent)
        return frozenset(seen)

    def role_of(self, node: str) -> str:
        return self.roles.get(node, "plain")

    def nodes_with_role(self, role: str) -> Tuple[str, ...]:
        return tuple(n for n in self.nodes if self.roles.get(n) == role)

    def _require(self, node: str) -> None:
        if node not in self.nodes:
            raise UnknownNode(node)

    # -- validation --------------------------------------------------------

    def validate(self) -> None:
        """Check all structural invariants, raising on the first violation.

        Raises :class:`DuplicateNode`, :class:`SelfLoop`,
        :class:`DuplicateEdge`, :class:`UnknownEdgeEndpoint`,
        :class:`CycleDetected` or :class:`RoleViolation`.
        """
        seen = set()
        for n in self.nodes:
            if n in seen:
                raise DuplicateNode(n)
            seen.add(n)
        seen_edges = set()
        for p, c in self.edges:
            if p == c:
                raise SelfLoop(p)
            for endpoint in (p, c):
                if endpoint not in seen:
                    raise UnknownEdgeEndpoint(endpoint)
            if (p, c) in seen_edges:
                raise DuplicateEdge((p, c))
            seen_edges.add((p, c))
        self._check_acyclic()
        for node, role in self.roles.items():
            if node not in seen:
                raise UnknownNode(node)
            if role not in ROLES:
                raise RoleViolation(f"unknown role {role!r} for node {node!r}")
        for role in ("treatment", "outcome"):
            tagged = self.nodes_with_role(role)
            if len(tagged) > 1:
                raise RoleViolation(
                    f"at most one {role} node allowed, got {list(tagged)}"
                )

    def _check_acyclic(self) -> None:
        # Iterative DFS with colouring; reports the offending cycle.
        WHITE, GREY, BLACK = 0, 1, 2
        colour = {n: WHITE for n in self.nodes}
        for root in self.nodes:
            if colour[root] != WHITE:
                continue
            stack = [(root, iter(self.children(root)))]
            colour[root] = GREY
            trail = [root]
            while stack:
                node, it = stack[-1]
                advanced = False
                for child in it:
                    if colour[child] == GREY:
                        raise CycleDetected(trail[trail.index(child):])
                    if colour[child] == WHITE:
                        colour[child] = GREY
                        trail.append(child)
                        stack.append((child, iter(self.children(child))))
                        advanced = True
                        break
                if not advanced:
                    colour[node] = BLACK
                    trail.pop()
                    stack.pop()

    def topological_order(self) -> Tuple[str, ...]:
        order: list = []
        indeg = {n: len(self.parents(n)) for n in self.nodes}
        ready = [n for n in self.nodes if indeg[n] == 0]
        while ready:
            node = ready.pop(0)
            order.append(node)
            for child in self.children(node):
                indeg[child] -= 1
                if indeg[child] == 0:
                    ready.append(child)
        if len(order) != len(self.nodes):
            raise CycleDetected([n for n in self.nodes if indeg[n] > 0])
        return tuple(order)


COLLIDER = "collider"
FORK = "fork"
CHAIN = "chain"


@dataclass(frozen=True)
class Path:
    """A simple path with the orientation of each traversed edge.

    ``directions[i]`` is ``forward`` when the edge between ``nodes[i]`` and
    ``nodes[i+1]`` points along the walk and ``backward`` when it points
    against it.  Interior-node classification is derived from the adjacent
    directions rather than stored.
    """

    nodes: Tuple[str, ...]
    directions: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "directions", tuple(self.directions))
        if len(self.nodes) < 2:
            raise ValueError("a path needs at least two nodes")
        if len(self.directions) != len(self.nodes) - 1:
            raise ValueError("direction count must be node count - 1")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("path nodes must be distinct")

    def classify(self, i: int) -> str:
        """Classify interior node ``nodes[i]`` as collider, fork or chain."""
        if not 0 < i < len(self.nodes) - 1:
            raise IndexError(f"node index {i} is not interior")
        before, after = self.directions[i - 1], self.directions[i]
        if before == FORWARD and after == BACKWARD:
            return COLLIDER
        if before == BACKWARD and after == FORWARD:
            return FORK
        return CHAIN

    def interior(self) -> Tuple[str, ...]:
        return self.nodes[1:-1]

    def is_backdoor(self) -> bool:
        """True when the first step leaves the source against an arrow."""
        return self.directions[0] == BACKWARD

    def is_causal(self) -> bool:
        """True when every edge is traversed along its arrow."""
        return all(d == FORWARD for d in self.directions)

    def reversed(self) -> "Path":
        flip = {FORWARD: BACKWARD, BACKWARD: FORWARD}
        return Path(
            tuple(reversed(self.nodes)),
            tuple(flip[d] for d in reversed(self.directions)),
        )

    def __str__(self) -> str:
        parts = [self.nodes[0]]
        for node, d in zip(self.nodes[1:], self.directions):
            parts.append(" -> " if d == FORWARD else " <- ")
            parts.append(node)
        return "".join(parts)


@dataclass(frozen=True)
class AdjustmentQuery:
    """An adjustment question: which sets block all bias between two nodes.

    ``forced`` holds nodes the data has already conditioned on by design
    (selection nodes); ``candidates`` the observable nodes an analyst may
    adjust for.  When ``candidates`` is None it defaults to every non-latent
    node other than the treatment, the outcome and the forced nodes.
    """

    treatment: str
    outcome: str
    forced: FrozenSet[str] = frozenset()
    candidates: Optional[FrozenSet[str]] = None

    def __post_init__(self):
        object.__setattr__(self, "forced", frozenset(self.forced))
        if self.candidates is not None:
            object.__setattr__(self, "candidates", frozenset(self.candidates))
        if self.treatment == self.outcome:
            raise ValueError("treatment and outcome must differ")
        if self.forced & {self.treatment, self.outcome}:
            raise ValueError("forced nodes may not include treatment or outcome")

    def resolved_candidates(self, dag: CausalDag) -> FrozenSet[str]:
        if self.candidates is not None:
            return self.candidates
        excluded = {self.treatment, self.outcome} | self.forced
        return frozenset(
            n
            for n in dag.nodes
            if n not in excluded and dag.role_of(n) != "latent"
        )


# ---------------------------------------------------------------------------
# Path-level operations


def enumerate_paths(dag: CausalDag, x: str, y: str) -> Tuple[Path, ...]:
    """All simple paths between ``x`` and ``y``, lexicographic by node sequence."""
    dag._require(x)
    dag._require(y)
    if x == y:
        raise ValueError("path endpoints must differ")
    neighbours: dict = {n: [] for n in dag.nodes}
    for p, c in dag.edges:
        neighbours[p].append((c, FORWARD))
        neighbours[c].append((p, BACKWARD))
    for n in neighbours:
        neighbours[n].sort()
    found: list = []

    def walk(node, trail, dirs, visited):
        for nxt, direction in neighbours[node]:
            if nxt == y:
                found.append(Path(tuple(trail + [nxt]), tuple(dirs + [direction])))
            elif nxt not in visited:
                visited.add(nxt)
                walk(nxt, trail + [nxt], dirs + [direction], visited)
                visited.remove(nxt)

    walk(x, [x], [], {x, y})
    found.sort(key=lambda p: p.nodes)
    return tuple(found)


def path_open(dag: CausalDag, path: Path, z: Iterable[str]) -> bool:
    """Apply the blocking rule to ``path`` under conditioning set ``z``.

    A chain or fork node is open iff it is not in ``z``; a collider is open
    iff it or at least one of its descendants is in ``z``.  The path is open
    iff every interior node is open.
    """
    z = frozenset(z)
    for node in z:
        dag._require(node)
    for endpoint in (path.nodes[0], path.nodes[-1]):
        if endpoint in z:
            raise EndpointConditioned(endpoint)
    for i in range(1, len(path.nodes) - 1):
        node = path.nodes[i]
        if path.classify(i) == COLLIDER:
            if node not in z and not (dag.descendants(node) & z):
                return False
        elif node in z:
            return False
    return True


def backdoor_paths(dag: CausalDag, treatment: str, outcome: str) -> Tuple[Path, ...]:
    """Paths between treatment and outcome whose first edge points into treatment."""
    return tuple(
        p for p in enumerate_paths(dag, treatment, outcome) if p.is_backdoor()
    )


# ---------------------------------------------------------------------------
# d-separation, twice


def d_separated_by_paths(dag: CausalDag, x: str, y: str, z: Iterable[str]) -> bool:
    """d-separation by brute force: every simple path must be closed."""
    z = frozenset(z)
    _check_dsep_args(dag, x, y, z)
    return all(not path_open(dag, p, z) for p in enumerate_paths(dag, x, y))


def d_separated_by_reachability(
    dag: CausalDag, x: str, y: str, z: Iterable[str]
) -> bool:
    """d-separation by a linear-time Bayes-ball style reachability search.

    States are (node, arrival) pairs where arrival is 'head' when the
    traversed edge points into the node and 'tail' when it points out of it.
    A node passes head-to-tail or tail-to-anything when unconditioned, and
    head-to-head (collider) when it is in ``z`` or has a descendant in ``z``.
    """
    z = frozenset(z)
    _check_dsep_args(dag, x, y, z)
    parents: dict = {n: [] for n in dag.nodes}
    children: dict = {n: [] for n in dag.nodes}
    for p, c in dag.edges:
        parents[c].append(p)
        children[p].append(c)
    # Nodes with a descendant in z (or in z themselves) open as colliders.
    opens_collider = set(z)
    stack = list(z)
    while stack:
        for p in parents[stack.pop()]:
            if p not in opens_collider:
                opens_collider.add(p)
                stack.append(p)

    seen = set()
    frontier = [(c, "head") for c in children[x]] + [(p, "tail") for p in parents[x]]
    while frontier:
        state = frontier.pop()
        if state in seen:
            continue
        seen.add(state)
        node, arrival = state
        if node == y:
            return False
        via_tail = via_head = False
        if arrival == "tail":
            via_tail = via_head = node not in z
        else:
            via_tail = node not in z
            via_head = node in opens_collider
        if via_tail:
            frontier.extend((c, "head") for c in children[node])
        if via_head:
            frontier.extend((p, "tail") for p in parents[node])
    return True


def d_separated(dag: CausalDag, x: str, y: str, z: Iterable[str] = ()) -> bool:
    """Whether ``x`` and ``y`` are d-separated given ``z`` (reachability route)."""
    return d_separated_by_reachability(dag, x, y, z)


def _check_dsep_args(dag, x, y, z):
    dag._require(x)
    dag._require(y)
    for node in z:
        dag._require(node)
    if x == y:
        raise ValueError("d-separation endpoints must differ")
    if x in z or y in z:
        raise EndpointConditioned(x if x in z else y)


# ---------------------------------------------------------------------------
# Adjustment validity and minimal sets


def is_valid_adjustment(
    dag: CausalDag, query: AdjustmentQuery, z: Iterable[str]
) -> bool:
    """Whether adjusting for ``z`` (on top of forced nodes) removes all bias.

    Valid iff (i) no member of ``z`` descends from the treatment, (ii) every
    non-causal path between treatment and outcome is closed under
    ``z | forced`` and (iii) no fully directed causal path is closed.  Forced
    nodes are exempt from rule (i): they are facts of the data collection,
    and the question is whether some ``z`` rescues identification given them.
    """
    z = frozenset(z)
    for node in z | query.forced:
        dag._require(node)
    candidates = query.resolved_candidates(dag)
    if not z <= candidates:
        raise CandidateViolation(z - candidates)
    if z & {query.treatment, query.outcome}:
        raise EndpointConditioned((z & {query.treatment, query.outcome}).pop())
    if z & dag.descendants(query.treatment):
        return False
    conditioned = z | query.forced
    for path in enumerate_paths(dag, query.treatment, query.outcome):
        opened = path_open(dag, path, conditioned)
        if path.is_causal():
            if not opened:
                return False
        elif opened:
            return False
    return True


def minimal_adjustment_sets(
    dag: CausalDag, query: AdjustmentQuery
) -> Tuple[FrozenSet[str], ...]:
    """All inclusion-minimal valid adjustment sets within the candidates.

    Exhaustive subset search, ordered by size then lexicographically; the
    graphs this package targets have at most a handful of candidate nodes.
    Returns ``(frozenset(),)`` when no adjustment is needed and ``()`` when
    no valid set exists.
    """
    dag.validate()
    candidates = sorted(query.resolved_candidates(dag))
    minimal: list = []
    for size in range(len(candidates) + 1):
        for subset in combinations(candidates, size):
            chosen = frozenset(subset)
            if any(found <= chosen for found in minimal):
                continue
            if is_valid_adjustment(dag, query, chosen):
                minimal.append(chosen)
    minimal.sort(key=lambda s: (len(s), sorted(s)))
    return tuple(minimal)


# ---------------------------------------------------------------------------
# Text format
#
# Line-based, UTF-8, '#' starts a comment.  Directives:
#   node <name>            declare a plain node (optional if it appears in an edge)
#   treatment <name>       declare a node with the given role
#   outcome <name>
#   conditioned <name>
#   latent <name>
#   edge <parent> <child>


def parse_dag_text(text: str) -> CausalDag:
    """Parse the line-based DAG format into a validated :class:`CausalDag`."""
    nodes: list = []
    roles: dict = {}
    edges: list = []

    def declare(name, line_no, role=None):
        if name not in nodes:
            nodes.append(name)
        if role is not None:
            if roles.get(name, role) != role:
                raise DagSyntaxError(
                    line_no, f"node {name!r} given conflicting roles"
                )
            roles[name] = role

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        keyword, args = tokens[0], tokens[1:]
        if keyword == "edge":
            if len(args) != 2:
                raise DagSyntaxError(line_no, "edge takes exactly two node names")
            parent, child = args
            if parent == child:
                raise DagSyntaxError(line_no, f"self-loop on node {parent!r}")
            declare(parent, line_no)
            declare(child, line_no)
            if (parent, child) in edges:
                raise DagSyntaxError(line_no, f"duplicate edge {parent} -> {child}")
            edges.append((parent, child))
        elif keyword in ("node", "treatment", "outcome", "conditioned", "latent"):
            if len(args) != 1:
                raise DagSyntaxError(line_no, f"{keyword} takes exactly one node name")
            declare(args[0], line_no, None if keyword == "node" else keyword)
        else:
            raise DagSyntaxError(line_no, f"unknown directive {keyword!r}")

    dag = CausalDag(tuple(nodes), tuple(edges), roles)
    try:
        dag.validate()
    except GraphError as exc:
        raise SemanticError(str(exc)) from exc
    return dag


def serialize_dag(dag: CausalDag) -> str:
    """Canonical text for ``dag``; parsing it back yields an equal graph."""
    lines = []
    for node in dag.nodes:
        role = dag.role_of(node)
        lines.append(f"node {node}" if role == "plain" else f"{role} {node}")
    for parent, child in dag.edges:
        lines.append(f"edge {parent} {child}")
    return "\n".join(lines) + "\n"
