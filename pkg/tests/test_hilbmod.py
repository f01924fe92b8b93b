"""Hilbert modules, correspondences, compacts, linking algebras and Katsura ideals."""
import numpy as np
import pytest
from hypothesis import given

from corrkit.fdalg import (AlgElement, AlgGrading, FDAlgebra, classify, function_algebra, group_algebra,
                           make_cyclic_group, operator_norm)
from corrkit.graphs import DirectedGraph, graph_correspondence
from corrkit.hilbmod import (CorrAction, CorrGrading, Correspondence, GeneratingSystem, HilbertModule,
                             NotAdjointable, adjoint_of, is_full, is_katsura_nondegenerate, katsura_ideal,
                             linking_algebra, nondegeneracy_dims, theta, theta_coefficients, theta_matrix,
                             verify_corr_action, verify_corr_grading, verify_correspondence,
                             verify_correspondence_isomorphism, verify_generating_system, verify_module,
                             zero_correspondence)

from conftest import block_dims, random_complex, seeds

TWO_CYCLE = DirectedGraph.from_edges(["v0", "v1"], [("a", "v0", "v1"), ("b", "v1", "v0")])
EDGE = DirectedGraph.from_edges(["v0", "v1"], [("e", "v0", "v1")])
MIXED = DirectedGraph.from_edges(["u", "v", "w"], [("p", "u", "v"), ("q", "u", "v"), ("r", "v", "v")])


def transpose_coords(n):
    T = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            T[j * n + i, i * n + j] = 1
    return T


# ---------------------------------------------------------------- modules


@pytest.mark.parametrize("dims", [[1], [2], [1, 2], [2, 1, 1]])
def test_algebra_over_itself(dims):
    X = Correspondence.over_itself(FDAlgebra(dims))
    rep = verify_correspondence(X)
    assert rep.passed, rep.failures
    assert is_full(X.module)
    assert is_katsura_nondegenerate(X)


@given(dims=block_dims, seed=seeds)
def test_inner_product_is_a_star_b(dims, seed):
    rng = np.random.default_rng(seed)
    A = FDAlgebra(dims)
    X = Correspondence.over_itself(A)
    x, y = random_complex(rng, A.dim), random_complex(rng, A.dim)
    want = A.to_matrix(x).conj().T @ A.to_matrix(y)
    np.testing.assert_allclose(A.to_matrix(X.ip(x, y)), want, atol=1e-10)
    # <x, y b> = <x, y> b
    b = random_complex(rng, A.dim)
    np.testing.assert_allclose(X.ip(x, X.act_right(y, b)), A.product(X.ip(x, y), b), atol=1e-9)


@pytest.mark.parametrize("E", [TWO_CYCLE, EDGE, MIXED], ids=["cycle", "edge", "mixed"])
def test_graph_correspondence_structure(E):
    X = graph_correspondence(E)
    assert verify_correspondence(X).passed
    chi_e, chi_v = np.eye(E.n_edges), np.eye(E.n_vertices)
    for e in range(E.n_edges):
        for f in range(E.n_edges):
            want = chi_v[E.src[e]] if e == f else np.zeros(E.n_vertices)
            np.testing.assert_allclose(X.ip(chi_e[e], chi_e[f]), want)
        for v in range(E.n_vertices):
            want = chi_e[e] if E.dst[e] == v else 0 * chi_e[e]
            np.testing.assert_allclose(X.act_left(chi_v[v], chi_e[e]), want)
            want = chi_e[e] if E.src[e] == v else 0 * chi_e[e]
            np.testing.assert_allclose(X.act_right(chi_e[e], chi_v[v]), want)


def test_module_rejects_dependent_vectors():
    A = FDAlgebra([1])
    with pytest.raises(ValueError, match="dependent"):
        HilbertModule.from_realization(A, np.ones((2, 1, 1)))


def test_module_rejects_unclosed_span():
    A = FDAlgebra([2])
    # a single column vector is not closed under right multiplication by M_2
    v = np.zeros((1, 2, 2))
    v[0, 0, 0] = 1
    with pytest.raises(ValueError, match="closed"):
        HilbertModule.from_realization(A, v)


def test_non_hermitian_inner_product_fails():
    A = FDAlgebra([1])
    right = np.ones((1, 2, 2)) * np.eye(2)
    inner = np.array([[[1.0], [1.0]], [[0.0], [1.0]]])
    rep = verify_module(HilbertModule(A, right, inner))
    assert "hermitian" in rep.failures


# ---------------------------------------------------------------- compacts and adjoints


@given(seed=seeds)
def test_theta_acts_as_rank_one(seed):
    rng = np.random.default_rng(seed)
    X = graph_correspondence(MIXED)
    d = X.dim
    x, y, z = (random_complex(rng, d) for _ in range(3))
    np.testing.assert_allclose(theta_matrix(X.module, x, y) @ z, X.act_right(x, X.ip(y, z)), atol=1e-10)
    t = theta(X.module, x, y)
    np.testing.assert_allclose(t.adjoint.matrix, theta_matrix(X.module, y, x), atol=1e-12)


@given(seed=seeds)
def test_left_multiplication_adjoint(seed):
    rng = np.random.default_rng(seed)
    A = FDAlgebra([2, 1])
    X = Correspondence.over_itself(A)
    a = random_complex(rng, A.dim)
    op = adjoint_of(X.module, X.phi(a))
    np.testing.assert_allclose(op.adjoint.matrix, X.phi(A.star(a)), atol=1e-9)


def test_transpose_is_not_adjointable():
    X = Correspondence.over_itself(FDAlgebra([2]))
    with pytest.raises(NotAdjointable):
        adjoint_of(X.module, transpose_coords(2))


@given(seed=seeds)
def test_theta_coefficients_reconstruct(seed):
    rng = np.random.default_rng(seed)
    X = graph_correspondence(MIXED)
    c = random_complex(rng, (X.dim, X.dim))
    eye = np.eye(X.dim)
    T = sum(c[i, j] * theta_matrix(X.module, eye[i], eye[j]) for i in range(X.dim) for j in range(X.dim))
    c2 = theta_coefficients(X.module, T)
    T2 = sum(c2[i, j] * theta_matrix(X.module, eye[i], eye[j]) for i in range(X.dim) for j in range(X.dim))
    np.testing.assert_allclose(T2, T, atol=1e-9)


def test_theta_coefficients_reject_non_compact():
    X = Correspondence.over_itself(FDAlgebra([2]))
    with pytest.raises(NotAdjointable):
        theta_coefficients(X.module, transpose_coords(2))


# ---------------------------------------------------------------- linking algebra


@pytest.mark.parametrize("n", [1, 2, 3])
def test_linking_algebra_of_matrix_algebra(n):
    X = Correspondence.over_itself(FDAlgebra([n]))
    link, rep = linking_algebra(X.module)
    assert rep.passed, rep.failures
    # oracle: the compacts on M_n + M_n form M_2n
    assert classify(link.algebra).blocks == (2 * n,)


def test_linking_algebra_of_graph_module():
    X = graph_correspondence(EDGE)
    link, rep = linking_algebra(X.module)
    assert rep.passed
    # K(X + A) for one edge out of v0: v0 and the edge pair into M_2, v1 stays C
    assert classify(link.algebra).blocks == (1, 2)


# ---------------------------------------------------------------- Katsura ideal


@pytest.mark.parametrize("E, receivers", [(TWO_CYCLE, [0, 1]), (EDGE, [1]), (MIXED, [1])],
                         ids=["cycle", "edge", "mixed"])
def test_katsura_ideal_of_graphs(E, receivers):
    J = katsura_ideal(graph_correspondence(E))
    assert J.blocks == tuple(receivers)
    assert J.dim == len(receivers)


def test_katsura_ideal_of_zero_correspondence():
    X = zero_correspondence(FDAlgebra([1, 1]))
    J = katsura_ideal(X)
    assert J.dim == 0
    assert J.kernel.shape[1] == 2
    assert is_katsura_nondegenerate(X)


def test_nondegeneracy_counts():
    dims = nondegeneracy_dims(graph_correspondence(EDGE))
    # X = span{chi_e}, J = span{chi_v1}; J acts on the left but chi_e chi_v1 = 0
    assert dims == {"dim": 1, "J.X": 1, "X.J": 0}
    assert not is_katsura_nondegenerate(graph_correspondence(EDGE))


def test_fullness():
    assert is_full(graph_correspondence(TWO_CYCLE).module)
    assert not is_full(graph_correspondence(EDGE).module)


# ---------------------------------------------------------------- actions and gradings


@pytest.mark.parametrize("n", [2, 3])
def test_translation_lifts_to_correspondence(n):
    c0, lam = function_algebra(make_cyclic_group(n))
    X = Correspondence.over_itself(c0)
    assert verify_corr_action(CorrAction.on_algebra(lam, X)).passed


def test_broken_corr_action_detected():
    g = make_cyclic_group(2)
    c0, lam = function_algebra(g)
    X = Correspondence.over_itself(c0)
    act = CorrAction(g, X, [np.eye(2), np.eye(2)], lam)  # gamma ignores alpha
    assert not verify_corr_action(act).passed


@pytest.mark.parametrize("n", [2, 3, 4])
def test_group_algebra_corr_grading(n):
    ga = group_algebra(make_cyclic_group(n))
    Y = Correspondence.over_itself(ga.algebra)
    grad = CorrGrading.on_algebra(ga.grading, Y)
    assert verify_corr_grading(grad).passed
    assert grad.degree_of(np.eye(n)[n - 1]) == n - 1
    with pytest.raises(ValueError, match="homogeneous"):
        grad.degree_of(np.ones(n))


def test_misplaced_corr_grading_detected():
    g = make_cyclic_group(2)
    A = FDAlgebra([1, 1])
    X = Correspondence.over_itself(A)
    # coefficients have degree 0 but X_1 * A would have to stay in X_1
    grad = CorrGrading(g, X, {0: [np.array([1, 1])], 1: [np.array([1, -1])]}, AlgGrading.trivial(g, A))
    assert not verify_corr_grading(grad).passed


# ---------------------------------------------------------------- generating systems and isomorphisms


def test_standard_generating_system():
    X = graph_correspondence(MIXED)
    rep = verify_generating_system(X, GeneratingSystem.standard(X))
    assert rep.passed
    assert rep.info["set_closed"]


def test_generating_system_must_span():
    X = graph_correspondence(MIXED)
    sys = GeneratingSystem(np.eye(3), np.eye(3)[:2], np.eye(3))
    assert "X0_spans" in verify_generating_system(X, sys).failures


def test_isomorphism_of_relabelled_graph():
    E = MIXED
    # reverse vertex order and edge order
    F = DirectedGraph.from_edges(["w", "v", "u"], [("r", "v", "v"), ("q", "u", "v"), ("p", "u", "v")])
    X, Y = graph_correspondence(E), graph_correspondence(F)
    images = np.eye(3)[[2, 1, 0]]
    phi = np.eye(3)[:, [2, 1, 0]]
    rep = verify_correspondence_isomorphism(X, Y, images, phi, phi)
    assert rep.passed, rep.failures


def test_isomorphism_rejects_wrong_images():
    X = graph_correspondence(MIXED)
    images = np.eye(3)[[2, 1, 0]]  # r has a different source than p
    rep = verify_correspondence_isomorphism(X, X, images, np.eye(3), np.eye(3))
    assert not rep.passed
    assert rep.witnesses


def test_isomorphism_needs_matching_dimensions():
    X, Y = graph_correspondence(EDGE), graph_correspondence(TWO_CYCLE)
    rep = verify_correspondence_isomorphism(X, Y, np.eye(2)[:1], np.eye(2), np.eye(2))
    assert "bijective" in rep.failures


# ---------------------------------------------------------------- documented examples

LOOP = DirectedGraph.from_edges(["v"], [("e", "v", "v")])


def test_theta_examples():
    X = graph_correspondence(TWO_CYCLE)
    assert np.all(theta_matrix(X.module, np.zeros(2), np.array([1, 0])) == 0)
    C = Correspondence.over_itself(FDAlgebra([1]))
    np.testing.assert_allclose(theta_matrix(C.module, [1], [1]), [[1]])
    E = graph_correspondence(EDGE)
    P = theta_matrix(E.module, [1], [1])
    np.testing.assert_allclose(P @ P, P)
    np.testing.assert_allclose(P, [[1]])


@given(seed=seeds)
def test_theta_composition(seed):
    rng = np.random.default_rng(seed)
    X = graph_correspondence(MIXED)
    x, y, z, w = (random_complex(rng, X.dim) for _ in range(4))
    lhs = theta_matrix(X.module, x, y) @ theta_matrix(X.module, z, w)
    # Theta_{x,y} Theta_{z,w} = Theta_{x <y,z>, w}
    rhs = theta_matrix(X.module, X.act_right(x, X.ip(y, z)), w)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_adjoint_examples():
    X = graph_correspondence(MIXED)
    eye = np.eye(X.dim)
    np.testing.assert_allclose(adjoint_of(X.module, eye).adjoint_matrix, eye, atol=1e-12)
    x, y = np.array([1, 2j, 0]), np.array([0, 1, -1])
    adj = adjoint_of(X.module, theta_matrix(X.module, x, y)).adjoint_matrix
    np.testing.assert_allclose(adj, theta_matrix(X.module, y, x), atol=1e-10)


@given(seed=seeds)
def test_every_operator_on_a_loop_is_adjointable(seed):
    # a single loop gives C over C, where the adjoint is complex conjugation
    rng = np.random.default_rng(seed)
    X = graph_correspondence(LOOP)
    t = random_complex(rng, (1, 1))
    np.testing.assert_allclose(adjoint_of(X.module, t).adjoint_matrix, t.conj(), atol=1e-12)


def test_linking_examples():
    X = zero_correspondence(FDAlgebra([2]))
    link, rep = linking_algebra(X.module)
    assert rep.passed
    assert classify(link.algebra).blocks == (2,)
    C = Correspondence.over_itself(FDAlgebra([1]))
    link, rep = linking_algebra(C.module)
    assert rep.passed and classify(link.algebra).blocks == (2,)
    link, rep = linking_algebra(graph_correspondence(LOOP).module)
    assert rep.passed and rep.residuals["inner_product"] <= 1e-12


def test_katsura_examples():
    # phi injective: J is everything
    X = Correspondence.over_itself(FDAlgebra([1, 2]))
    assert katsura_ideal(X).dim == X.left_algebra.dim
    # phi = 0: J = 0
    A = FDAlgebra([1, 1])
    module = Correspondence.over_itself(A).module
    Z = Correspondence(module, A, np.zeros((A.dim, module.dim, module.dim)))
    assert katsura_ideal(Z).dim == 0
    assert katsura_ideal(graph_correspondence(EDGE)).blocks == (1,)


def test_nondegeneracy_and_fullness_examples():
    assert is_katsura_nondegenerate(graph_correspondence(LOOP))
    assert not is_katsura_nondegenerate(graph_correspondence(EDGE))
    assert is_katsura_nondegenerate(zero_correspondence(FDAlgebra([1])))
    assert is_full(Correspondence.over_itself(FDAlgebra([1])).module)
    assert not is_full(graph_correspondence(EDGE).module)
    assert is_full(graph_correspondence(LOOP).module)


def test_isomorphism_examples():
    X = graph_correspondence(MIXED)
    eye = np.eye(3)
    assert verify_correspondence_isomorphism(X, X, eye, eye, eye).passed
    scaled = eye.copy()
    scaled[0, 0] = 2
    rep = verify_correspondence_isomorphism(X, X, scaled, eye, eye)
    assert "inner_product" in rep.failures
    w = next(w for w in rep.witnesses if w["identity"] == "inner_product")
    assert 0 in w["at"]


@given(seed=seeds)
def test_norm_and_cauchy_schwarz(seed):
    rng = np.random.default_rng(seed)
    X = graph_correspondence(MIXED)
    x, y = random_complex(rng, X.dim), random_complex(rng, X.dim)
    alg = X.module.algebra
    n_ip = lambda v: operator_norm(AlgElement(alg, alg.to_matrix(v)))
    assert X.module.norm(x) ** 2 == pytest.approx(n_ip(X.ip(x, x)), rel=1e-10)
    assert n_ip(X.ip(x, y)) <= X.module.norm(x) * X.module.norm(y) + 1e-10


@pytest.mark.parametrize("E", [TWO_CYCLE, EDGE, MIXED], ids=["cycle", "edge", "mixed"])
def test_katsura_ideal_is_two_sided(E):
    X = graph_correspondence(E)
    J = katsura_ideal(X)
    A = X.left_algebra
    for k in J.basis.T:
        for a in np.eye(A.dim):
            for prod in (A.product(a, k), A.product(k, a)):
                coef = np.linalg.lstsq(J.basis, prod, rcond=None)[0]
                np.testing.assert_allclose(J.basis @ coef, prod, atol=1e-10)
