import itertools

import pytest
from hypothesis import given, settings, strategies as st

from causalkit import fixtures
from causalkit.dag import (
    AdjustmentQuery,
    CausalDag,
    Path,
    backdoor_paths,
    d_separated,
    d_separated_by_paths,
    d_separated_by_reachability,
    enumerate_paths,
    is_valid_adjustment,
    minimal_adjustment_sets,
    parse_dag_text,
    path_open,
    serialize_dag,
)
from causalkit.errors import (
    CandidateViolation,
    CycleDetected,
    DagSyntaxError,
    DuplicateEdge,
    DuplicateNode,
    EndpointConditioned,
    RoleViolation,
    SelfLoop,
    SemanticError,
    UnknownEdgeEndpoint,
    UnknownNode,
)

T = fixtures.CHILDCARE
Y = fixtures.CONDUCT_SCHOOL
CE = fixtures.CONDUCT_ENTRY
E = fixtures.EDUCATION
P = fixtures.PLAYGROUP


# ---------------------------------------------------------------------------
# Structure and validation


def test_parents_children_descendants_ancestors():
    dag = fixtures.chain_dag()  # A -> C -> B
    assert dag.parents("C") == ("A",)
    assert dag.children("C") == ("B",)
    assert dag.descendants("A") == frozenset({"C", "B"})
    assert dag.ancestors("B") == frozenset({"A", "C"})
    assert dag.descendants("B") == frozenset()


def test_unknown_node_raises():
    with pytest.raises(UnknownNode):
        fixtures.chain_dag().parents("missing")


@pytest.mark.parametrize(
    "nodes, edges, error",
    [
        (("A", "A"), (), DuplicateNode),
        (("A",), (("A", "A"),), SelfLoop),
        (("A", "B"), (("A", "B"), ("A", "B")), DuplicateEdge),
        (("A",), (("A", "B"),), UnknownEdgeEndpoint),
        (("A", "B"), (("A", "B"), ("B", "A")), CycleDetected),
    ],
)
def test_validate_rejects_malformed_graphs(nodes, edges, error):
    with pytest.raises(error):
        CausalDag(nodes, edges).validate()


def test_validate_rejects_bad_roles():
    with pytest.raises(RoleViolation):
        CausalDag(("A", "B"), (("A", "B"),), {"A": "exposure"}).validate()
    with pytest.raises(RoleViolation):
        CausalDag(
            ("A", "B"), (), {"A": "treatment", "B": "treatment"}
        ).validate()


def test_cycle_detected_reports_the_cycle():
    dag = CausalDag(("A", "B", "C"), (("A", "B"), ("B", "C"), ("C", "A")))
    with pytest.raises(CycleDetected) as exc_info:
        dag.validate()
    assert set(exc_info.value.cycle) == {"A", "B", "C"}


def test_topological_order_respects_edges():
    dag = fixtures.case_study_dag()
    order = dag.topological_order()
    position = {n: i for i, n in enumerate(order)}
    assert set(order) == set(dag.nodes)
    for parent, child in dag.edges:
        assert position[parent] < position[child]


# ---------------------------------------------------------------------------
# Paths


def test_path_classification_and_repr():
    path = Path(("A", "C", "B"), ("forward", "backward"))
    assert path.classify(1) == "collider"
    assert str(path) == "A -> C <- B"
    assert not path.is_backdoor()
    assert not path.is_causal()
    rev = path.reversed()
    assert rev.nodes == ("B", "C", "A")
    assert rev.classify(1) == "collider"


def test_path_rejects_malformed_inputs():
    with pytest.raises(ValueError):
        Path(("A",), ())
    with pytest.raises(ValueError):
        Path(("A", "B"), ("forward", "forward"))
    with pytest.raises(ValueError):
        Path(("A", "B", "A"), ("forward", "forward"))


def test_enumerate_paths_case_study_counts():
    dag = fixtures.case_study_dag()
    paths = enumerate_paths(dag, T, Y)
    assert len(paths) == 11
    assert [p.nodes for p in paths] == sorted(p.nodes for p in paths)
    assert sum(p.is_causal() for p in paths) == 1  # only the direct edge


def test_backdoor_paths_case_study():
    dag = fixtures.case_study_dag()
    bd = backdoor_paths(dag, T, Y)
    assert len(bd) == 5
    assert all(p.is_backdoor() for p in bd)
    assert all(p.nodes[1] == CE for p in bd)  # all enter through the confounder
    assert str(bd[2]) == "childcare <- conduct_entry -> conduct_school"


def test_path_open_blocking_rules():
    dag = fixtures.case_study_dag()
    fork = Path(("A", "C", "B"), ("backward", "forward"))
    chain = Path(("A", "C", "B"), ("forward", "forward"))
    collider = Path(("A", "C", "B"), ("forward", "backward"))
    small = CausalDag(("A", "B", "C", "D"), (("A", "C"), ("B", "C"), ("C", "D")))
    assert path_open(small, fork, set()) is True
    assert path_open(small, fork, {"C"}) is False
    assert path_open(small, chain, {"C"}) is False
    assert path_open(small, collider, set()) is False
    assert path_open(small, collider, {"C"}) is True
    # A collider is also opened by conditioning on a descendant.
    assert path_open(small, collider, {"D"}) is True
    with pytest.raises(EndpointConditioned):
        path_open(small, collider, {"A"})
    del dag


def test_path_open_requires_known_conditioning_nodes():
    dag = fixtures.fork_dag()
    path = enumerate_paths(dag, "A", "B")[0]
    with pytest.raises(UnknownNode):
        path_open(dag, path, {"missing"})


# ---------------------------------------------------------------------------
# d-separation


def test_dsep_building_blocks():
    fork = fixtures.fork_dag()
    assert not d_separated(fork, "A", "B", ())
    assert d_separated(fork, "A", "B", {"C"})
    collider = fixtures.collider_dag()
    assert d_separated(collider, "A", "B", ())
    assert not d_separated(collider, "A", "B", {"C"})
    chain = fixtures.chain_dag()
    assert not d_separated(chain, "A", "B", ())
    assert d_separated(chain, "A", "B", {"C"})
    assert d_separated(fixtures.disconnected_pair_dag(), "A", "B", ())


def test_dsep_collider_descendant_opens():
    dag = CausalDag(("A", "B", "C", "D"), (("A", "C"), ("B", "C"), ("C", "D")))
    assert d_separated(dag, "A", "B", ())
    assert not d_separated(dag, "A", "B", {"D"})


def test_dsep_is_symmetric_on_fixtures():
    for dag in fixtures.builtin_dags().values():
        nodes = dag.nodes
        for x, y in itertools.combinations(nodes, 2):
            rest = [n for n in nodes if n not in (x, y)]
            for z in itertools.chain.from_iterable(
                itertools.combinations(rest, k) for k in range(len(rest) + 1)
            ):
                assert d_separated(dag, x, y, z) == d_separated(dag, y, x, z)


def test_dsep_argument_checks():
    dag = fixtures.fork_dag()
    with pytest.raises(ValueError):
        d_separated(dag, "A", "A", ())
    with pytest.raises(EndpointConditioned):
        d_separated(dag, "A", "B", {"A"})
    with pytest.raises(UnknownNode):
        d_separated(dag, "A", "B", {"missing"})


def _random_dag(node_count, edge_bits):
    # Nodes n0..n{k-1}; only forward edges (i < j), so acyclic by construction.
    names = tuple(f"n{i}" for i in range(node_count))
    pairs = list(itertools.combinations(range(node_count), 2))
    edges = tuple(
        (names[i], names[j])
        for bit, (i, j) in enumerate(pairs)
        if (edge_bits >> bit) & 1
    )
    return CausalDag(names, edges)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=3, max_value=6),
    st.integers(min_value=0, max_value=2**15 - 1),
    st.data(),
)
def test_dsep_implementations_agree_on_random_dags(node_count, edge_bits, data):
    dag = _random_dag(node_count, edge_bits)
    dag.validate()
    x, y = data.draw(
        st.permutations(dag.nodes).map(lambda p: (p[0], p[1]))
    )
    rest = [n for n in dag.nodes if n not in (x, y)]
    z = frozenset(data.draw(st.sets(st.sampled_from(rest))) if rest else ())
    assert d_separated_by_paths(dag, x, y, z) == d_separated_by_reachability(
        dag, x, y, z
    )


def test_dsep_monotone_in_ancestors_for_chains():
    # Conditioning on any node of a directed chain separates its endpoints.
    names = tuple("abcdef")
    edges = tuple((names[i], names[i + 1]) for i in range(len(names) - 1))
    dag = CausalDag(names, edges)
    assert not d_separated(dag, "a", "f", ())
    for mid in names[1:-1]:
        assert d_separated(dag, "a", "f", {mid})


# ---------------------------------------------------------------------------
# Adjustment sets


def test_adjustment_query_defaults_and_checks():
    dag = fixtures.case_study_dag()
    query = AdjustmentQuery(T, Y)
    assert query.resolved_candidates(dag) == frozenset(dag.nodes) - {T, Y}
    with pytest.raises(ValueError):
        AdjustmentQuery(T, T)
    with pytest.raises(ValueError):
        AdjustmentQuery(T, Y, forced=frozenset({T}))


def test_latent_nodes_are_not_candidates():
    dag = CausalDag(
        ("U", "A", "B"),
        (("U", "A"), ("U", "B"), ("A", "B")),
        {"U": "latent", "A": "treatment", "B": "outcome"},
    )
    query = AdjustmentQuery("A", "B")
    assert query.resolved_candidates(dag) == frozenset()
    with pytest.raises(CandidateViolation):
        is_valid_adjustment(dag, query, {"U"})
    assert minimal_adjustment_sets(dag, query) == ()


def test_is_valid_adjustment_case_study():
    dag = fixtures.case_study_dag()
    query = AdjustmentQuery(T, Y)
    assert is_valid_adjustment(dag, query, {CE})
    assert is_valid_adjustment(dag, query, {CE, E})
    assert not is_valid_adjustment(dag, query, set())
    # Descendants of the treatment are never valid adjusters.
    assert not is_valid_adjustment(dag, query, {CE, P})


def test_is_valid_adjustment_must_keep_causal_paths_open():
    # Adjusting for a pure mediator blocks the causal path: invalid.
    dag = CausalDag(
        ("A", "M", "B"), (("A", "M"), ("M", "B")),
        {"A": "treatment", "B": "outcome"},
    )
    query = AdjustmentQuery("A", "B", candidates=frozenset({"M"}))
    assert not is_valid_adjustment(dag, query, {"M"})
    assert is_valid_adjustment(dag, query, set())


def test_minimal_adjustment_sets_case_study():
    dag = fixtures.case_study_dag()
    assert minimal_adjustment_sets(dag, AdjustmentQuery(T, Y)) == (
        frozenset({CE}),
    )
    # Under selection on the playgroup collider, the confounder alone no
    # longer suffices: parent education must be added.
    forced = AdjustmentQuery(T, Y, forced=frozenset({P}))
    assert minimal_adjustment_sets(dag, forced) == (frozenset({CE, E}),)


def test_minimal_adjustment_sets_trivial_and_empty():
    dag = fixtures.single_edge_dag()
    dag = CausalDag(dag.nodes, dag.edges, {"A": "treatment", "B": "outcome"})
    assert minimal_adjustment_sets(dag, AdjustmentQuery("A", "B")) == (
        frozenset(),
    )


def test_minimal_sets_are_minimal_and_valid():
    for dag in (fixtures.case_study_dag(), fixtures.structural_quality_dag()):
        t = dag.nodes_with_role("treatment")[0]
        y = dag.nodes_with_role("outcome")[0]
        query = AdjustmentQuery(t, y)
        for chosen in minimal_adjustment_sets(dag, query):
            assert is_valid_adjustment(dag, query, chosen)
            for node in chosen:
                assert not is_valid_adjustment(dag, query, chosen - {node})


# ---------------------------------------------------------------------------
# Text format


def test_parse_serialize_round_trip():
    for dag in fixtures.builtin_dags().values():
        parsed = parse_dag_text(serialize_dag(dag))
        assert parsed.nodes == dag.nodes
        assert parsed.edges == dag.edges
        assert dict(parsed.roles) == {
            n: r for n, r in dag.roles.items() if r != "plain"
        }


def test_parse_dag_text_comments_and_implicit_nodes():
    dag = parse_dag_text(
        """
        # demo graph
        edge A B   # implicit declarations
        treatment A
        outcome B
        """
    )
    assert dag.nodes == ("A", "B")
    assert dag.role_of("A") == "treatment"


@pytest.mark.parametrize(
    "text, line_no",
    [
        ("edge A", 1),
        ("edge A A", 1),
        ("node A\nedge A B\nedge A B", 3),
        ("node A B", 1),
        ("arrow A B", 1),
        ("treatment A\noutcome A", 2),
    ],
)
def test_parse_dag_text_syntax_errors(text, line_no):
    with pytest.raises(DagSyntaxError) as exc_info:
        parse_dag_text(text)
    assert exc_info.value.line_no == line_no


def test_parse_dag_text_semantic_errors():
    with pytest.raises(SemanticError):
        parse_dag_text("edge A B\nedge B A")
    with pytest.raises(SemanticError):
        parse_dag_text("treatment A\ntreatment B")


def test_bundled_case_study_dag_file_matches_fixture():
    from importlib import resources

    text = (resources.files("causalkit") / "data" / "case_study.dag").read_text()
    assert text == serialize_dag(fixtures.case_study_dag())
