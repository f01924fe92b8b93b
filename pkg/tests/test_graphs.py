"""Directed graphs, skew products, graph correspondences and graph IO."""
from itertools import permutations
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from corrkit.fdalg import FiniteGroup, make_cyclic_group
from corrkit.graphs import (DirectedGraph, EdgeLabeling, GraphAction, GraphFormatError, graph_action_lift,
                            graph_correspondence, graph_from_dot, graph_from_json, graph_from_json_text,
                            graph_katsura_ideal, graph_regularity_report, graph_to_dot, graph_to_json,
                            graph_to_json_text, ideal_compatibility_check, katsura_agreement, labeling_grading,
                            random_instance, skew_product, skw_fixture, verify_graph_product_isomorphism)
from corrkit.hilbmod import verify_corr_grading
from corrkit.twist import PreconditionError

from conftest import seeds

Z2 = make_cyclic_group(2)
LOOP = DirectedGraph.from_edges(["v"], [("e", "v", "v")])
EDGE = DirectedGraph.from_edges(["v0", "v1"], [("e", "v0", "v1")])
ISOLATED = DirectedGraph.from_edges(["v"], [])


def brute_skew(E, alpha, F, delta):
    """Oracle: edge list of the skew product straight from the definition."""
    out = set()
    for e in range(E.n_edges):
        for f in range(F.n_edges):
            sv = alpha.vertex_perms[delta.labels[f], E.src[e]]
            out.add((f"{E.edges[e]}x{F.edges[f]}",
                     f"{E.vertices[sv]}x{F.vertices[F.src[f]]}",
                     f"{E.vertices[E.dst[e]]}x{F.vertices[F.dst[f]]}"))
    return out


def edge_triples(G):
    return {(G.edges[k], G.vertices[G.src[k]], G.vertices[G.dst[k]]) for k in range(G.n_edges)}


graph_names = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=6)


@st.composite
def small_graphs(draw):
    verts = draw(st.lists(graph_names, min_size=1, max_size=4, unique=True))
    n_edges = draw(st.integers(0, 5))
    names = draw(st.lists(graph_names, min_size=n_edges, max_size=n_edges, unique=True))
    edges = [(name, draw(st.sampled_from(verts)), draw(st.sampled_from(verts))) for name in names]
    return DirectedGraph.from_edges(verts, edges)


# ---------------------------------------------------------------- graphs


def test_graph_validation():
    with pytest.raises(ValueError, match="duplicate vertex"):
        DirectedGraph.from_edges(["v", "v"], [])
    with pytest.raises(ValueError, match="duplicate edge"):
        DirectedGraph.from_edges(["v"], [("e", "v", "v"), ("e", "v", "v")])
    with pytest.raises(ValueError, match="not a declared vertex"):
        DirectedGraph.from_edges(["v"], [("e", "v", "w")])


def test_degrees_and_acyclicity():
    E, *_ = skw_fixture()
    assert [E.receives(v) for v in range(2)] == [1, 1]
    assert not E.is_acyclic()
    assert EDGE.is_acyclic() and ISOLATED.is_acyclic()
    assert not LOOP.is_acyclic()
    assert EDGE.emits(0) == 1 and EDGE.emits(1) == 0


def test_graph_action_verification():
    E, alpha, _, _ = skw_fixture()
    assert alpha.verify().passed
    # swapping the vertices but not the edges breaks source/range compatibility
    bad = GraphAction(Z2, E, [[0, 1], [1, 0]], [[0, 1], [0, 1]])
    assert {"source", "range"} <= set(bad.verify().failures)


def test_generator_must_generate():
    with pytest.raises(PreconditionError):
        GraphAction.from_generator(make_cyclic_group(4), ISOLATED, 2, [0], [])


def test_labeling_validation():
    with pytest.raises(ValueError, match="total"):
        EdgeLabeling(Z2, EDGE, ())
    with pytest.raises(ValueError, match="outside"):
        EdgeLabeling(Z2, EDGE, (2,))


# ---------------------------------------------------------------- skew products


def test_skw_skew_product():
    EF = skew_product(*skw_fixture())
    # hand-derived: each edge of the 2-cycle becomes a loop
    assert EF.vertices == ("v0xw", "v1xw")
    assert edge_triples(EF) == {("axe", "v1xw", "v1xw"), ("bxe", "v0xw", "v0xw")}


@pytest.mark.parametrize("n", [2, 3])
@given(seed=seeds)
def test_skew_product_matches_definition(n, seed):
    inst = random_instance(np.random.default_rng(seed), make_cyclic_group(n))
    assert edge_triples(skew_product(*inst)) == brute_skew(*inst)


def test_trivial_labeling_gives_cartesian_product():
    E, alpha, F, _ = skw_fixture()
    delta = EdgeLabeling.trivial(Z2, F)
    EF = skew_product(E, alpha, F, delta)
    assert edge_triples(EF) == {("axe", "v0xw", "v1xw"), ("bxe", "v1xw", "v0xw")}


def test_skew_product_group_mismatch():
    E, alpha, F, _ = skw_fixture()
    with pytest.raises(PreconditionError):
        skew_product(E, alpha, F, EdgeLabeling.trivial(make_cyclic_group(3), F))


# ---------------------------------------------------------------- correspondences


def test_action_lift_and_labeling_grading():
    E, alpha, F, delta = skw_fixture()
    act = graph_action_lift(alpha)
    # chi_a -> chi_{alpha_1(a)} = chi_b
    np.testing.assert_allclose(act.apply(1, np.eye(2)[0]), np.eye(2)[1])
    grad = labeling_grading(delta)
    assert verify_corr_grading(grad).passed
    assert grad.support == [1]


def test_lift_rejects_nonabelian_group():
    perms = list(permutations(range(3)))
    idx = {p: i for i, p in enumerate(perms)}
    s3 = FiniteGroup(perms, [[idx[tuple(p[q[k]] for k in range(3))] for q in perms] for p in perms])
    with pytest.raises(PreconditionError, match="abelian"):
        graph_action_lift(GraphAction.trivial(s3, LOOP))


def test_lift_rejects_invalid_action():
    E, *_ = skw_fixture()
    bad = GraphAction(Z2, E, [[0, 1], [1, 0]], [[0, 1], [0, 1]])
    with pytest.raises(PreconditionError, match="verification"):
        graph_action_lift(bad)


@pytest.mark.parametrize("E", [LOOP, EDGE, ISOLATED, skw_fixture()[0]], ids=["loop", "edge", "isolated", "cycle"])
def test_katsura_agreement(E):
    assert katsura_agreement(E).passed
    J = graph_katsura_ideal(E)
    assert J.vertices == [v for v in range(E.n_vertices) if E.receives(v)]


@pytest.mark.parametrize("E, nondeg, full, proper", [
    (LOOP, True, True, []),
    (EDGE, False, False, ["v0"]),
    (ISOLATED, True, False, []),
], ids=["loop", "edge", "isolated"])
def test_regularity_cases(E, nondeg, full, proper):
    r = graph_regularity_report(E)
    assert r.report.passed
    assert r.is_katsura_nondegenerate is nondeg
    assert r.is_full is full
    assert r.proper_sources == proper
    assert r.infinite_receivers == []


def test_graph_product_isomorphism_skw():
    rep = verify_graph_product_isomorphism(*skw_fixture())
    assert rep.passed, rep.failures
    assert rep.info["dims"] == {"vertices": 2, "edges": 2}


def test_graph_product_isomorphism_trivial_labeling():
    E, alpha, F, _ = skw_fixture()
    assert verify_graph_product_isomorphism(E, alpha, F, EdgeLabeling.trivial(Z2, F)).passed


def test_ideal_compatibility_skw():
    rep = ideal_compatibility_check(*skw_fixture())
    assert rep.passed
    assert rep.info["dim"] == 2


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("seed", [0, 1])
def test_random_graph_products(n, seed):
    rng = np.random.default_rng(seed)
    g = make_cyclic_group(n)
    for _ in range(5):
        inst = random_instance(rng, g)
        E, _, F, _ = inst
        assert E.n_vertices <= 4 and E.n_edges <= 6 and F.n_vertices <= 4 and F.n_edges <= 6
        assert verify_graph_product_isomorphism(*inst).passed
        assert ideal_compatibility_check(*inst).passed


def test_wrong_identification_is_caught():
    from corrkit.graphs import graph_product
    from corrkit.hilbmod import verify_correspondence_isomorphism
    E, alpha, F, delta = skw_fixture()
    tc = graph_product(E, alpha, F, delta)
    XEF = graph_correspondence(skew_product(E, alpha, F, delta))
    # send chi_{a x e} to chi_b [x] chi_e and vice versa
    images = np.array([tc.elementary(np.eye(2)[1], [1]), tc.elementary(np.eye(2)[0], [1])])
    phi = np.array([tc.algebra.elementary(np.eye(2)[v], [1]) for v in range(2)]).T
    assert not verify_correspondence_isomorphism(XEF, tc.abstract, images, phi, phi).passed


# ---------------------------------------------------------------- IO


@given(G=small_graphs())
def test_json_roundtrip(G):
    H, lab = graph_from_json_text(graph_to_json_text(G))
    assert H == G and lab is None


@given(G=small_graphs())
def test_dot_roundtrip(G):
    H, labels = graph_from_dot(graph_to_dot(G))
    assert H.edges == G.edges
    assert edge_triples(H) == edge_triples(G)
    assert set(H.vertices) == set(G.vertices)
    assert labels == [None] * G.n_edges


def test_labels_roundtrip():
    _, _, F, delta = skw_fixture()
    H, labels = graph_from_dot(graph_to_dot(F, delta))
    assert labels == ["1"]
    G, lab = graph_from_json(graph_to_json(F, delta), Z2)
    assert lab.labels == (1,)


def test_dot_quoting():
    G = DirectedGraph.from_edges(['a "b"', "c\\d"], [("x y", 'a "b"', "c\\d")])
    text = graph_to_dot(G)
    assert '"a \\"b\\""' in text
    assert graph_from_dot(text)[0] == G


@pytest.mark.parametrize("text, line", [
    ("graph G {\n}\n", 1),
    ('digraph G {\n  "a" => "b";\n}\n', 2),
    ('digraph G {\n  "a";\n', 2),
    ('digraph G {\n}\n"a";\n', 3),
])
def test_dot_errors_name_the_line(text, line):
    with pytest.raises(GraphFormatError) as err:
        graph_from_dot(text)
    assert err.value.line == line


@pytest.mark.parametrize("text", [
    "{not json",
    '{"vertices": ["v"]}',
    '{"vertices": ["v"], "edges": [{"name": "e", "src": "v"}]}',
    '{"vertices": ["v"], "edges": [{"name": "e", "src": "v", "dst": "w"}]}',
])
def test_json_errors(text):
    with pytest.raises(GraphFormatError):
        graph_from_json_text(text)


def test_json_unknown_label():
    data = {"vertices": ["v"], "edges": [{"name": "e", "src": "v", "dst": "v", "label": 7}]}
    with pytest.raises(GraphFormatError, match="unknown group label"):
        graph_from_json(data, Z2)


# ---------------------------------------------------------------- documented examples

TWO_CYCLE = skw_fixture()[0]
DATA = Path(__file__).parent / "data"


def test_identity_labeled_loop_is_a_unit():
    E, alpha, F, _ = skw_fixture()
    EF = skew_product(E, alpha, F, EdgeLabeling.trivial(Z2, F))
    # e x f -> e, v x w -> v is a graph isomorphism
    strip = {(e[:-2], s[:-2], r[:-2]) for e, s, r in edge_triples(EF)}
    assert strip == edge_triples(E)
    assert verify_graph_product_isomorphism(E, alpha, F, EdgeLabeling.trivial(Z2, F)).passed


def test_skw_product_has_two_loops():
    EF = skew_product(*skw_fixture())
    assert EF.n_vertices == 2
    assert all(EF.src[k] == EF.dst[k] for k in range(EF.n_edges)) and EF.n_edges == 2


def test_graph_correspondence_examples():
    X = graph_correspondence(LOOP)
    assert X.dim == 1 and X.algebra.dim == 1
    np.testing.assert_allclose(X.ip([1], [1]), [1])
    np.testing.assert_allclose(X.phi([1]), [[1]])
    Y = graph_correspondence(EDGE)
    np.testing.assert_allclose(Y.ip([1], [1]), [1, 0])
    Z = graph_correspondence(TWO_CYCLE)
    # phi(chi_v1) keeps exactly the edges ending at v1, here a
    np.testing.assert_allclose(Z.phi([0, 1]), np.diag([1, 0]))


def test_lift_examples():
    act = graph_action_lift(GraphAction.trivial(Z2, TWO_CYCLE))
    for s in range(2):
        np.testing.assert_allclose(act.gammas[s], np.eye(2))
    act = graph_action_lift(skw_fixture()[1])
    np.testing.assert_allclose(act.gammas[1] @ act.gammas[1], np.eye(2))


def test_labeling_examples():
    grad = labeling_grading(EdgeLabeling.trivial(Z2, TWO_CYCLE))
    assert grad.support == [0]
    two_loops = DirectedGraph.from_edges(["v"], [("e", "v", "v"), ("f", "v", "v")])
    grad = labeling_grading(EdgeLabeling(Z2, two_loops, (0, 1)))
    assert verify_corr_grading(grad).passed
    assert [grad.component(s).shape[1] for s in (0, 1)] == [1, 1]


def test_graph_katsura_examples():
    assert graph_katsura_ideal(LOOP).vertices == [0]
    assert graph_katsura_ideal(EDGE).vertices == [1]
    assert graph_katsura_ideal(ISOLATED).vertices == []


def test_regularity_examples():
    r = graph_regularity_report(TWO_CYCLE)
    assert r.sinks == [] and r.proper_sources == []
    assert r.is_katsura_nondegenerate and r.is_full
    r = graph_regularity_report(EDGE)
    assert r.sinks == ["v1"] and r.sources == ["v0"]
    r = graph_regularity_report(ISOLATED)
    assert r.sinks == ["v"] and r.proper_sources == []


def test_ideal_compatibility_examples():
    alpha = GraphAction.trivial(Z2, EDGE)
    rep = ideal_compatibility_check(EDGE, alpha, LOOP, EdgeLabeling.trivial(Z2, LOOP))
    assert rep.passed and rep.info["dim"] == 1
    rep = ideal_compatibility_check(EDGE, alpha, ISOLATED, EdgeLabeling.trivial(Z2, ISOLATED))
    assert rep.passed and rep.info["dim"] == 0


@pytest.mark.parametrize("seed", range(4))
def test_random_three_vertex_z3(seed):
    inst = random_instance(np.random.default_rng(seed), make_cyclic_group(3), max_vertices=3)
    assert inst[0].n_vertices <= 3
    assert verify_graph_product_isomorphism(*inst).passed
    assert ideal_compatibility_check(*inst).passed


def test_empty_graph_io():
    G = DirectedGraph.from_edges([], [])
    assert graph_from_json(graph_to_json(G))[0] == G
    text = graph_to_dot(G)
    assert text == 'digraph "G" {\n}\n'
    assert graph_from_dot(text)[0] == G


def test_labeled_product_export_matches_golden():
    E, alpha, F, delta = skw_fixture()
    EF = skew_product(E, alpha, F, delta)
    # e x f carries the label of f
    lab = EdgeLabeling(Z2, EF, [delta.labels[k % F.n_edges] for k in range(EF.n_edges)])
    assert graph_to_dot(EF, lab, name="ExF") == (DATA / "skw_product_labeled.dot").read_text()
