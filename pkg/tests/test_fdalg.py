"""Groups, block algebras, actions, gradings and the Wedderburn classifier."""
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from corrkit.fdalg import (AlgAction, AlgElement, AlgGrading, FDAlgebra, FiniteGroup, MatrixAlgebra,
                           classify, direct_product_group, function_algebra, group_algebra,
                           homogeneous_decomposition, involution, make_cyclic_group, multiply,
                           operator_norm, tensor_algebra, verify_action, verify_grading)

from conftest import block_dims, random_complex, random_element, seeds


def s3():
    perms = list(permutations(range(3)))
    idx = {p: i for i, p in enumerate(perms)}
    mult = [[idx[tuple(p[q[k]] for k in range(3))] for q in perms] for p in perms]
    return FiniteGroup(perms, mult)


def conjugacy_classes(g):
    seen, classes = set(), 0
    for x in range(g.order):
        if x in seen:
            continue
        classes += 1
        seen |= {g.prod(s, x, g.inv(s)) for s in range(g.order)}
    return classes


# ---------------------------------------------------------------- groups


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_cyclic_group_table(n):
    g = make_cyclic_group(n)
    assert g.order == n
    assert g.identity == 0
    for s in range(n):
        assert g.mul(s, g.inv(s)) == 0
        for t in range(n):
            assert g.mul(s, t) == (s + t) % n
    assert g.is_abelian


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_cyclic_group_rejects_bad_order(bad):
    with pytest.raises(ValueError):
        make_cyclic_group(bad)


def test_group_table_validation():
    with pytest.raises(ValueError, match="identity"):
        FiniteGroup([0, 1], [[0, 0], [0, 0]])
    # a Latin square that is not associative
    with pytest.raises(ValueError):
        FiniteGroup(range(3), [[0, 1, 2], [1, 0, 2], [2, 2, 0]])
    with pytest.raises(ValueError, match="distinct"):
        FiniteGroup(["a", "a"], [[0, 1], [1, 0]])


def test_nonabelian_group():
    g = s3()
    assert g.order == 6
    assert not g.is_abelian
    assert conjugacy_classes(g) == 3


def test_direct_product_group():
    g = direct_product_group(make_cyclic_group(2), make_cyclic_group(3))
    assert g.order == 6 and g.is_abelian
    a, b = g.index((1, 0)), g.index((0, 1))
    assert g.mul(a, b) == g.index((1, 1))
    # Z2 x Z3 is cyclic: (1,1) has order 6
    x, k = g.index((1, 1)), 1
    y = x
    while y != g.identity:
        y, k = g.mul(y, x), k + 1
    assert k == 6


# ---------------------------------------------------------------- elements


@given(dims=block_dims, seed=seeds)
def test_product_and_star_are_blockwise(dims, seed):
    rng = np.random.default_rng(seed)
    alg = FDAlgebra(dims)
    blocks_a = [random_complex(rng, (d, d)) for d in dims]
    blocks_b = [random_complex(rng, (d, d)) for d in dims]
    a, b = alg.from_blocks(blocks_a), alg.from_blocks(blocks_b)
    for got, want_a, want_b in zip(multiply(a, b).blocks, blocks_a, blocks_b):
        np.testing.assert_allclose(got, want_a @ want_b, atol=1e-12)
    for got, want in zip(involution(a).blocks, blocks_a):
        np.testing.assert_allclose(got, want.conj().T, atol=1e-12)


@given(dims=block_dims, seed=seeds)
def test_cstar_identity_and_norm(dims, seed):
    rng = np.random.default_rng(seed)
    alg = FDAlgebra(dims)
    a = AlgElement(alg, random_element(alg, rng))
    b = AlgElement(alg, random_element(alg, rng))
    na = operator_norm(a)
    # oracle: largest singular value of the whole block-diagonal matrix
    assert na == pytest.approx(np.linalg.svd(a.matrix, compute_uv=False)[0], rel=1e-10)
    assert operator_norm(a.star() @ a) == pytest.approx(na ** 2, rel=1e-10)
    assert operator_norm(a @ b) <= na * operator_norm(b) * (1 + 1e-12)
    assert (a @ b).star().close_to(b.star() @ a.star(), 1e-10)


@given(dims=block_dims, seed=seeds)
def test_associativity(dims, seed):
    rng = np.random.default_rng(seed)
    alg = FDAlgebra(dims)
    a, b, c = (AlgElement(alg, random_element(alg, rng)) for _ in range(3))
    assert ((a @ b) @ c).close_to(a @ (b @ c), 1e-9)


def test_from_blocks_shape_errors():
    alg = FDAlgebra([1, 2])
    with pytest.raises(ValueError):
        alg.from_blocks([np.eye(1)])
    with pytest.raises(ValueError):
        alg.from_blocks([np.eye(1), np.eye(3)])
    with pytest.raises(ValueError):
        FDAlgebra([])


def test_element_membership_is_checked():
    alg = FDAlgebra([1, 1])
    with pytest.raises(ValueError, match="does not lie"):
        AlgElement(alg, np.array([[0, 1], [0, 0]]))


@given(seed=seeds, n=st.integers(1, 5))
def test_coords_roundtrip_in_group_algebra(seed, n):
    rng = np.random.default_rng(seed)
    alg = group_algebra(make_cyclic_group(n)).algebra
    u = random_complex(rng, alg.dim)
    np.testing.assert_allclose(alg.coords(alg.to_matrix(u)), u, atol=1e-10)


def test_dependent_basis_rejected():
    e = np.eye(2)
    with pytest.raises(ValueError, match="dependent"):
        MatrixAlgebra(np.array([e, 2 * e]))


# ---------------------------------------------------------------- actions


@pytest.mark.parametrize("n", [2, 3, 4])
def test_translation_action(n):
    g = make_cyclic_group(n)
    c0, lam = function_algebra(g)
    assert verify_action(lam).passed
    chi = np.eye(n)
    for s in range(n):
        for h in range(n):
            np.testing.assert_allclose(lam.apply(s, chi[h]), chi[(s + h) % n])


def test_action_from_automorphisms_swaps_blocks():
    g = make_cyclic_group(2)
    alg = FDAlgebra([2, 2])
    act = AlgAction.from_automorphisms(g, alg, {1: ([1, 0], None)})
    assert verify_action(act).passed
    a = alg.from_blocks([np.array([[1, 2], [3, 4]]), np.zeros((2, 2))])
    swapped = act(1, a)
    np.testing.assert_allclose(swapped.blocks[1], [[1, 2], [3, 4]])
    with pytest.raises(ValueError):
        AlgAction.from_automorphisms(g, FDAlgebra([1, 2]), {1: ([1, 0], None)})


def test_non_multiplicative_map_fails_verification():
    g = make_cyclic_group(2)
    alg = FDAlgebra([2])
    # transpose is an anti-automorphism, not an automorphism
    T = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            T[j * 2 + i, i * 2 + j] = 1
    rep = verify_action(AlgAction(g, alg, [np.eye(4), T]))
    assert not rep.passed
    assert "multiplicative" in rep.failures


def test_action_homomorphism_failure():
    g = make_cyclic_group(3)
    alg = FDAlgebra([1, 1, 1])
    P = np.eye(3)[[1, 0, 2]]  # order 2, cannot represent a generator of Z3
    rep = verify_action(AlgAction(g, alg, [np.eye(3), P, P]))
    assert "homomorphism" in rep.failures


# ---------------------------------------------------------------- gradings


@pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
def test_group_algebra_grading(n):
    ga = group_algebra(make_cyclic_group(n))
    assert verify_grading(ga.grading).passed
    for s, u in enumerate(ga.u):
        assert (u @ u.star()).close_to(ga.u[0])


def test_bad_grading_detected():
    alg = FDAlgebra([2])
    g = make_cyclic_group(2)
    # diagonal units put in degree 1 violate A_1 A_1 in A_0
    e = np.eye(4)
    grading = AlgGrading(g, alg, {0: [e[1], e[2]], 1: [e[0], e[3]]})
    rep = verify_grading(grading)
    assert not rep.passed


def test_vertex_degree_grading():
    g = make_cyclic_group(3)
    alg = FDAlgebra([3])
    grading = AlgGrading.from_vertex_degrees(g, alg, [0, 1, 2])
    assert verify_grading(grading).passed
    assert sorted(grading.support) == [0, 1, 2]
    assert all(grading.component(s).shape[1] == 3 for s in range(3))


@given(seed=seeds)
def test_homogeneous_decomposition_sums_back(seed):
    rng = np.random.default_rng(seed)
    ga = group_algebra(make_cyclic_group(4))
    a = AlgElement(ga.algebra, random_element(ga.algebra, rng))
    parts = homogeneous_decomposition(ga.grading, a)
    total = sum((p.matrix for _, p in parts), np.zeros_like(a.matrix))
    np.testing.assert_allclose(total, a.matrix, atol=1e-10)
    for s, p in parts:
        # each part is a multiple of lambda_s
        np.testing.assert_allclose(p.matrix, p.matrix[s, 0] * ga.u[s].matrix, atol=1e-10)


def test_decomposition_drops_zero_parts():
    ga = group_algebra(make_cyclic_group(3))
    parts = homogeneous_decomposition(ga.grading, ga.u[2])
    assert [s for s, _ in parts] == [2]


# ---------------------------------------------------------------- classification


@pytest.mark.parametrize("dims", [[1], [2], [1, 1], [1, 2], [3, 1, 2], [2, 2]])
def test_classify_block_algebras(dims):
    sig = classify(FDAlgebra(dims))
    assert sig.dim == sum(d * d for d in dims)
    assert sig.center_dim == len(dims)
    assert sig.blocks == tuple(sorted(dims))


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_classify_commutative_group_algebra(n):
    sig = classify(group_algebra(make_cyclic_group(n)).algebra)
    assert sig.blocks == (1,) * n


def test_classify_nonabelian_group_algebra():
    g = s3()
    sig = classify(group_algebra(g).algebra)
    # oracle: one block per conjugacy class, squares summing to |G|
    assert sig.center_dim == conjugacy_classes(g)
    assert sum(b * b for b in sig.blocks) == g.order
    assert sig.blocks == (1, 1, 2)


def test_classify_hidden_conjugate():
    rng = np.random.default_rng(7)
    U, _ = np.linalg.qr(random_complex(rng, (3, 3)))
    alg = FDAlgebra([1, 2])
    hidden = MatrixAlgebra(np.einsum("ab,kbc,dc->kad", U, alg.basis, U.conj()))
    assert classify(hidden) == classify(alg)


def test_tensor_algebra_signature():
    t = tensor_algebra(FDAlgebra([2]), FDAlgebra([1, 1]))
    sig = classify(t)
    assert (sig.dim, sig.blocks) == (8, (2, 2))


# ---------------------------------------------------------------- documented examples


def naive_matmul(a, b):
    n, m, p = a.shape[0], a.shape[1], b.shape[1]
    out = np.zeros((n, p), dtype=complex)
    for i in range(n):
        for j in range(p):
            for k in range(m):
                out[i, j] += a[i, k] * b[k, j]
    return out


def test_cyclic_examples():
    assert make_cyclic_group(1).order == 1
    z2 = make_cyclic_group(2)
    assert z2.mul(1, 1) == 0
    z4 = make_cyclic_group(4)
    assert z4.mul(3, 2) == (3 + 2) % 4 == 1


def test_multiply_examples():
    C2 = FDAlgebra([1, 1])
    a = C2.from_blocks([[[2]], [[3]]])
    b = C2.from_blocks([[[5]], [[7]]])
    np.testing.assert_allclose(multiply(a, b).matrix, np.diag([10, 21]))
    M = FDAlgebra([2, 1])
    x = M.from_blocks([[[1, 2j], [3, 4]], [[5]]])
    assert multiply(AlgElement(M, np.eye(3)), x).close_to(x)


@given(seed=seeds)
def test_multiply_against_triple_loop(seed):
    rng = np.random.default_rng(seed)
    M = FDAlgebra([2])
    a, b = random_complex(rng, (2, 2)), random_complex(rng, (2, 2))
    got = multiply(M.from_blocks([a]), M.from_blocks([b])).matrix
    np.testing.assert_allclose(got, naive_matmul(a, b), atol=1e-12)


@given(seed=seeds)
def test_involution_examples(seed):
    C2 = FDAlgebra([1, 1])
    np.testing.assert_allclose(involution(C2.from_blocks([[[1j]], [[2]]])).matrix, np.diag([-1j, 2]))
    rng = np.random.default_rng(seed)
    M = FDAlgebra([2])
    h = random_complex(rng, (2, 2))
    h = h + h.conj().T
    assert involution(M.from_blocks([h])).close_to(M.from_blocks([h]))
    a = random_complex(rng, (2, 2))
    star = involution(M.from_blocks([a])).matrix
    for i in range(2):
        for j in range(2):
            assert star[i, j] == np.conj(a[j, i])
    assert involution(involution(M.from_blocks([a]))).close_to(M.from_blocks([a]))


@given(seed=seeds)
def test_operator_norm_examples(seed):
    M = FDAlgebra([2, 2])
    assert operator_norm(M.zero()) == 0
    assert operator_norm(M.from_blocks([np.diag([2, 0]), np.diag([0, 3])])) == pytest.approx(3)
    rng = np.random.default_rng(seed)
    a = random_complex(rng, (2, 2))
    # oracle: square root of the top eigenvalue of a^* a
    want = np.sqrt(np.linalg.eigvalsh(a.conj().T @ a).max())
    assert operator_norm(FDAlgebra([2]).from_blocks([a])) == pytest.approx(want, rel=1e-10)


def test_group_algebra_examples():
    triv = group_algebra(make_cyclic_group(1))
    assert triv.algebra.dim == 1 and triv.grading.support == [0]
    z2 = group_algebra(make_cyclic_group(2))
    np.testing.assert_allclose(z2.u[1].matrix, [[0, 1], [1, 0]])
    assert (z2.u[1] @ z2.u[1]).close_to(z2.u[0])
    z3 = group_algebra(make_cyclic_group(3))
    assert (z3.u[1] @ z3.u[2]).close_to(z3.u[0])
    # oracle: compose the permutations h -> 1 + h and h -> 2 + h by hand
    perm = [(1 + (2 + h)) % 3 for h in range(3)]
    assert perm == [0, 1, 2]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_group_algebra_is_faithful_and_multiplicative(n):
    g = make_cyclic_group(n)
    ga = group_algebra(g)
    flat = np.array([u.matrix.ravel() for u in ga.u])
    assert np.linalg.matrix_rank(flat) == n
    for s in range(n):
        for t in range(n):
            assert (ga.u[s] @ ga.u[t]).close_to(ga.u[g.mul(s, t)])


def test_function_algebra_examples():
    c0, lam = function_algebra(make_cyclic_group(1))
    assert c0.dim == 1 and verify_action(lam).passed
    c0, lam = function_algebra(make_cyclic_group(2))
    np.testing.assert_allclose(lam.apply(1, [1, 0]), [0, 1])
    np.testing.assert_allclose(lam.apply(1, [0, 1]), [1, 0])


def test_verify_action_examples():
    g = make_cyclic_group(2)
    C2 = FDAlgebra([1, 1])
    swap = AlgAction.from_automorphisms(g, C2, {1: ([1, 0], None)})
    assert verify_action(swap).passed
    # alpha_1 = 2 * id is linear and bijective but not unital
    rep = verify_action(AlgAction(g, C2, [np.eye(2), 2 * np.eye(2)]))
    assert "unital" in rep.failures
    assert any(w["identity"] == "unital" for w in rep.witnesses)


def test_verify_grading_examples():
    g = make_cyclic_group(2)
    C2 = FDAlgebra([1, 1])
    assert verify_grading(group_algebra(g).grading).passed
    assert verify_grading(AlgGrading.trivial(g, C2)).passed
    both_odd = AlgGrading(g, C2, {1: [[1, 0], [0, 1]]})
    rep = verify_grading(both_odd)
    assert "multiplicative" in rep.failures


@given(seed=seeds)
def test_action_is_isometric(seed):
    rng = np.random.default_rng(seed)
    g = make_cyclic_group(2)
    M = FDAlgebra([2, 2])
    u = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    act = AlgAction.from_automorphisms(g, M, {1: ([1, 0], [u, u])})
    assert verify_action(act).passed
    a = AlgElement(M, random_element(M, rng))
    assert operator_norm(act(1, a)) == pytest.approx(operator_norm(a), rel=1e-10)


def test_decomposition_examples():
    z2 = group_algebra(make_cyclic_group(2))
    parts = homogeneous_decomposition(z2.grading, z2.u[1])
    assert [s for s, _ in parts] == [1] and parts[0][1].close_to(z2.u[1])
    parts = homogeneous_decomposition(z2.grading, z2.u[0] + z2.u[1])
    assert [s for s, _ in parts] == [0, 1]
    assert parts[0][1].close_to(z2.u[0]) and parts[1][1].close_to(z2.u[1])


@given(seed=seeds)
def test_decomposition_is_a_projection_family(seed):
    rng = np.random.default_rng(seed)
    z3 = group_algebra(make_cyclic_group(3))
    c = random_complex(rng, 3)
    a = AlgElement(z3.algebra, sum(c[s] * z3.u[s].matrix for s in range(3)))
    parts = dict(homogeneous_decomposition(z3.grading, a))
    # oracle: solve for the u_s coefficients directly
    flat = np.array([u.matrix.ravel() for u in z3.u]).T
    coef = np.linalg.lstsq(flat, a.matrix.ravel(), rcond=None)[0]
    for s, part in parts.items():
        np.testing.assert_allclose(part.matrix, coef[s] * z3.u[s].matrix, atol=1e-10)
        again = homogeneous_decomposition(z3.grading, part)
        assert len(again) == 1 and again[0][0] == s and again[0][1].close_to(part)
