"""Tensor powers, Toeplitz representations and the representation lemmas.

Representations take values in full matrix algebras M_k.  Two sources are
provided: the truncated Fock module (exact below the truncation level)
and Cuntz-Krieger families of finite acyclic graphs on path spaces
(exact everywhere and Cuntz-Pimsner covariant).  Products of
representations live in the concrete model of the twisted product of
their targets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from itertools import product as iproduct
from typing import Sequence

import numpy as np

from ._linalg import independent_columns, maxabs, opnorm, rank, same_span, span_residual
from .balanced import DualGrading
from .fdalg import AlgAction, AlgGrading, FDAlgebra, MatrixAlgebra
from .graphs import DirectedGraph, EdgeLabeling, GraphAction, graph_correspondence
from .hilbmod import (CorrAction, Correspondence, CorrGrading, HilbertModule, ideal_unit,
                      katsura_ideal, theta_coefficients, theta_matrix)
from .report import DEFAULT_TOL, Report
from .twist import PreconditionError, TwistedAlgebra, TwistedCorrespondence

GRAM_TOL = 1e-9


class ValidityError(PreconditionError):
    """A level lies outside the domain where a representation is exact."""


class FactorizationError(PreconditionError):
    """An element does not factor through the Katsura ideal."""


# ---------------------------------------------------------------- tensor powers


@dataclass
class TensorPower:
    """X^{(x) n} as a correspondence, with its basis words."""

    n: int
    corr: Correspondence
    words: list  # tuples of X-basis indices (n >= 1); A-basis indices for n = 0
    _pairs: dict = field(default_factory=dict, repr=False)  # (i, word of level n-1) -> realized block

    @property
    def dim(self) -> int:
        return self.corr.dim


def _gram_factor(K: np.ndarray, tol: float = GRAM_TOL) -> np.ndarray:
    """R with R^* R = K for a positive semidefinite K, rows = numerical rank."""
    K = (K + K.conj().T) / 2
    w, U = np.linalg.eigh(K)
    top = max(1.0, float(w.max(initial=0.0)))
    keep = w > tol * top
    return (np.sqrt(w[keep])[:, None] * U[:, keep].conj().T)


def _next_level(X: Correspondence, prev_vectors: np.ndarray, prev_phi: np.ndarray, prev_words: list):
    """Realize X (x)_A P from a realized previous level P."""
    A = X.left_algebra
    d, N = X.dim, A.size
    p = prev_vectors.shape[0]
    # K[(i,u),(j,v)] = W_u^* Phi(<x_i, x_j>) W_v
    phi_ip = np.tensordot(X.module.inner, prev_phi, axes=([2], [0]))  # (d, d, r, r)
    K = np.einsum("uan,ijab,vbm->iunjvm", prev_vectors.conj(), phi_ip, prev_vectors, optimize=True)
    K = K.reshape(d * p * N, d * p * N)
    R = _gram_factor(K)
    r = R.shape[0]
    blocks = R.reshape(r, d, p, N).transpose(1, 2, 0, 3)  # [i, u] -> r x N
    flat = blocks.reshape(d * p, r * N).T
    keep = independent_columns(flat)
    words = [(i,) + tuple(prev_words[u]) for i, u in iproduct(range(d), range(p))]
    vectors = blocks.reshape(d * p, r, N)[keep]
    # left action: a . (x_i (x) u) = (a x_i) (x) u
    Rp = np.linalg.pinv(R)
    phi = np.array([R @ np.kron(np.kron(X.left[k], np.eye(p)), np.eye(N)) @ Rp for k in range(A.dim)])
    return vectors, phi, [words[k] for k in keep], blocks


def tensor_power(X: Correspondence, n: int) -> TensorPower:
    """Internal tensor power with the inner product <x (x) xi, y (x) eta> = <xi, phi(<x, y>) eta>.

    Null vectors are removed by the Gram rank; basis words are chosen
    greedily in lexicographic order.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    A = X.left_algebra
    if not isinstance(A, MatrixAlgebra):
        raise PreconditionError("tensor powers need a matrix coefficient algebra")
    if n == 0:
        return TensorPower(0, Correspondence.over_itself(A, name="A"), list(range(A.dim)))
    N = A.size
    vectors = np.eye(N, dtype=complex)[None]
    phi = A.basis
    words: list = [()]
    blocks = None
    for _ in range(n):
        if len(vectors) == 0:
            break
        vectors, phi, words, blocks = _next_level(X, vectors, phi, words)
    if len(vectors) == 0:
        vectors = np.zeros((0, 0, N))
        phi = np.zeros((A.dim, 0, 0))
        words = []
    mod = HilbertModule.from_realization(A, vectors)
    corr = Correspondence.from_realization(A, mod, phi, name=f"X^{n}")
    return TensorPower(n, corr, words, {"blocks": blocks})


# ---------------------------------------------------------------- representations


@dataclass
class ToeplitzRep:
    """(psi, pi) with values in the full matrix algebra M_k.

    ``psi[i]`` and ``pi[k]`` are the images of the basis vectors of X and
    A.  ``truncation`` is None when the identities hold everywhere, and N
    for a Fock representation truncated at level N; ``level_rows`` then
    gives the ambient rows of each level.
    """

    corr: Correspondence
    psi: np.ndarray
    pi: np.ndarray
    truncation: int | None = None
    level_rows: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    _powers: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return self.pi.shape[1]

    @property
    def target(self) -> FDAlgebra:
        return FDAlgebra([self.size], name="M_k")

    def compression(self, n: int = 1) -> np.ndarray:
        """Projection onto the rows where level-n identities are exact."""
        k = self.size
        if self.truncation is None:
            return np.eye(k)
        P = np.zeros((k, k))
        for lvl, rows in enumerate(self.level_rows):
            if lvl <= self.truncation - n:
                idx = np.arange(k)[rows]
                P[idx, idx] = 1.0
        return P

    def psi_of(self, x) -> np.ndarray:
        return np.tensordot(np.asarray(x, dtype=complex), self.psi, axes=1)

    def pi_of(self, a) -> np.ndarray:
        return np.tensordot(np.asarray(a, dtype=complex), self.pi, axes=1)

    def power(self, n: int) -> TensorPower:
        if n not in self._powers:
            if n == 1:
                self._powers[1] = TensorPower(1, self.corr, [(i,) for i in range(self.corr.dim)])
            else:
                self._powers[n] = tensor_power(self.corr, n)
        return self._powers[n]


def toeplitz_report(rep: ToeplitzRep, tol: float = DEFAULT_TOL) -> Report:
    """The three Toeplitz identities and multiplicativity of pi on the validity domain."""
    r = Report("toeplitz", tol)
    X = rep.corr
    A, B = X.left_algebra, X.algebra
    P = rep.compression(1)
    eyeX, eyeA, eyeB = np.eye(X.dim), np.eye(A.dim), np.eye(B.dim)
    for i in range(X.dim):
        for k in range(B.dim):
            lhs = rep.psi_of(X.act_right(eyeX[i], eyeB[k]))
            r.residual("right", maxabs((lhs - rep.psi[i] @ rep.pi[k]) @ P), (i, k))
        for k in range(A.dim):
            lhs = rep.psi_of(X.act_left(eyeA[k], eyeX[i]))
            r.residual("left", maxabs((lhs - rep.pi[k] @ rep.psi[i]) @ P), (k, i))
        for j in range(X.dim):
            lhs = rep.psi[i].conj().T @ rep.psi[j]
            r.residual("inner", maxabs(P @ (lhs - rep.pi_of(X.ip(eyeX[i], eyeX[j]))) @ P), (i, j))
    for k in range(B.dim):
        r.residual("pi_star", maxabs(rep.pi_of(B.star(eyeB[k])) - rep.pi[k].conj().T), k)
        for l in range(B.dim):
            r.residual("pi_multiplicative", maxabs(rep.pi_of(B.product(eyeB[k], eyeB[l]))
                                                   - rep.pi[k] @ rep.pi[l]), (k, l))
    return r


def truncation_defect(rep: ToeplitzRep) -> float:
    """max ||P_N (psi(x)^* psi(y) - pi<x, y>) P_N|| over basis pairs, P_N the top level."""
    if rep.truncation is None:
        return 0.0
    k = rep.size
    P = np.zeros((k, k))
    idx = np.arange(k)[rep.level_rows[rep.truncation]]
    P[idx, idx] = 1.0
    X = rep.corr
    eye = np.eye(X.dim)
    out = 0.0
    for i, j in iproduct(range(X.dim), range(X.dim)):
        d = rep.psi[i].conj().T @ rep.psi[j] - rep.pi_of(X.ip(eye[i], eye[j]))
        out = max(out, opnorm(P @ d @ P))
    return out


def _theta_representative(vectors: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """sum c_ij V_i V_j^*."""
    return np.einsum("ij,iab,jcb->ac", coeffs, vectors, vectors.conj(), optimize=True)


@dataclass
class TruncatedFock:
    X: Correspondence
    N: int
    levels: list
    module: HilbertModule
    offsets: list  # coordinate offset per level
    row_slices: list

    @property
    def dim(self) -> int:
        return self.module.dim


def truncated_fock(X: Correspondence, N: int) -> TruncatedFock:
    """A (+) X (+) ... (+) X^{(x) N}, levels stacked in orthogonal row blocks."""
    if N < 1:
        raise ValueError("truncation level must be at least 1")
    A = X.left_algebra
    levels = [tensor_power(X, n) for n in range(N + 1)]
    heights = [lv.corr.realization.shape[0] if lv.dim else 0 for lv in levels]
    total = sum(heights)
    vecs, offsets, rows = [], [], []
    row = 0
    for lv, h in zip(levels, heights):
        offsets.append(len(vecs))
        rows.append(slice(row, row + h))
        for v in (lv.corr.realization.vectors if lv.dim else []):
            big = np.zeros((total, A.size), dtype=complex)
            big[row:row + h] = v
            vecs.append(big)
        row += h
    mod = HilbertModule.from_realization(A, np.array(vecs))
    return TruncatedFock(X, N, levels, mod, offsets, rows)


def _creation_matrix(F: TruncatedFock, i: int) -> np.ndarray:
    """Coordinate matrix of xi -> x_i (x) xi, zero on the top level."""
    X = F.X
    A = X.left_algebra
    T = np.zeros((F.dim, F.dim), dtype=complex)
    for n in range(F.N):
        src, dst = F.levels[n], F.levels[n + 1]
        if src.dim == 0 or dst.dim == 0:
            continue
        if n == 0:
            for k in range(A.dim):
                img = X.act_right(np.eye(X.dim)[i], np.eye(A.dim)[k])
                T[F.offsets[1]:F.offsets[1] + dst.dim, F.offsets[0] + k] = _level1_coords(F, img)
            continue
        blocks = dst._pairs["blocks"]  # [i, u] realized over the level-n basis
        for u in range(src.dim):
            T[F.offsets[n + 1]:F.offsets[n + 1] + dst.dim, F.offsets[n] + u] = \
                dst.corr.realization.coords(blocks[i, u])
    return T


def _level1_coords(F: TruncatedFock, x) -> np.ndarray:
    """Coordinates in the level-one basis of an element of X (given in X coordinates)."""
    lv = F.levels[1]
    blocks = lv._pairs["blocks"][:, 0]  # realized x_i
    return lv.corr.realization.coords(np.tensordot(np.asarray(x, dtype=complex), blocks, axes=1))


def fock_toeplitz_rep(X: Correspondence, N: int) -> ToeplitzRep:
    """Creation operators and the diagonal left action on the truncated Fock module.

    Operators are turned into ambient matrices through their Theta
    expansions, so matrix adjoints are module adjoints.
    """
    F = truncated_fock(X, N)
    A = X.left_algebra
    W = F.module.realization.vectors
    psi = np.array([_theta_representative(W, theta_coefficients(F.module, _creation_matrix(F, i)))
                    for i in range(X.dim)]) if X.dim else np.zeros((0, W.shape[1], W.shape[1]))
    pis = []
    for k in range(A.dim):
        L = np.zeros((F.dim, F.dim), dtype=complex)
        for n, lv in enumerate(F.levels):
            o = F.offsets[n]
            L[o:o + lv.dim, o:o + lv.dim] = lv.corr.left[k]
        pis.append(_theta_representative(W, theta_coefficients(F.module, L)))
    rep = ToeplitzRep(X, psi, np.array(pis), N, F.row_slices, {"fock_dims": [lv.dim for lv in F.levels]})
    rep.info["fock"] = F
    return rep


# ---------------------------------------------------------------- psi^n and psi^(n)


def _word_image(rep: ToeplitzRep, word) -> np.ndarray:
    return reduce(np.matmul, [rep.psi[i] for i in word], np.eye(rep.size))


def _check_level(rep: ToeplitzRep, n: int) -> None:
    if rep.truncation is not None and n > rep.truncation:
        raise ValidityError(f"level {n} exceeds the truncation level {rep.truncation}")


def psi_n(rep: ToeplitzRep, n: int, xi) -> np.ndarray:
    """psi^n on X^{(x) n} coordinates; psi^0 = pi and psi^1 = psi."""
    _check_level(rep, n)
    xi = np.asarray(xi, dtype=complex)
    if n == 0:
        return rep.pi_of(xi)
    tp = rep.power(n)
    out = np.zeros((rep.size, rep.size), dtype=complex)
    for c, w in zip(xi, tp.words):
        if c != 0:
            out += c * _word_image(rep, w)
    return out


def psi_elementary(rep: ToeplitzRep, factors: Sequence) -> np.ndarray:
    """psi(x_1) ... psi(x_n) for an elementary tensor given by X-coordinate factors."""
    return reduce(np.matmul, [rep.psi_of(x) for x in factors], np.eye(rep.size))


def psi_paren_n(rep: ToeplitzRep, n: int, coeffs) -> np.ndarray:
    """psi^(n)(sum c_pq Theta_{xi_p, xi_q}) = sum c_pq psi^n(xi_p) psi^n(xi_q)^*."""
    _check_level(rep, n)
    coeffs = np.asarray(coeffs, dtype=complex)
    if n == 0:
        # K(A) = A: Theta_{a, b} = a b^*
        A = rep.corr.left_algebra
        eye = np.eye(A.dim)
        return sum((coeffs[p, q] * rep.pi_of(A.product(eye[p], A.star(eye[q])))
                    for p, q in zip(*np.nonzero(coeffs))), np.zeros((rep.size, rep.size), dtype=complex))
    tp = rep.power(n)
    imgs = [_word_image(rep, w) for w in tp.words]
    out = np.zeros((rep.size, rep.size), dtype=complex)
    for p, q in zip(*np.nonzero(coeffs)):
        out += coeffs[p, q] * imgs[p] @ imgs[q].conj().T
    return out


def psi_paren_op(rep: ToeplitzRep, n: int, op) -> np.ndarray:
    """psi^(n) of a coordinate operator on X^{(x) n}, through its Theta expansion."""
    mod = rep.power(n).corr.module if n else rep.power(0).corr.module
    return psi_paren_n(rep, n, theta_coefficients(mod, op))


def psi_paren_report(rep: ToeplitzRep, n: int = 1, tol: float = DEFAULT_TOL) -> Report:
    """Module properties of psi^(n) and multiplicativity on Theta-basis products."""
    r = Report(f"psi_paren_{n}", tol)
    tp = rep.power(n)
    mod, d = tp.corr.module, tp.dim
    A = tp.corr.left_algebra
    P = rep.compression(n)
    eye, eyeA = np.eye(d), np.eye(A.dim)
    ops = {(p, q): theta_matrix(mod, eye[p], eye[q]) for p, q in iproduct(range(d), range(d))}
    for (p, q), op in ops.items():
        c = np.zeros((d, d), dtype=complex)
        c[p, q] = 1.0
        img = psi_paren_n(rep, n, c)
        for k in range(A.dim):
            lhs = rep.pi[k] @ img
            rhs = psi_paren_op(rep, n, tp.corr.left[k] @ op)
            r.residual("left_module", maxabs(lhs - rhs), (k, p, q))
        for j in range(d):
            lhs = img @ psi_n(rep, n, eye[j])
            rhs = psi_n(rep, n, op @ eye[j])
            r.residual("compact_action", maxabs((lhs - rhs) @ P), (p, q, j))
        for (p2, q2), op2 in ops.items():
            c2 = np.zeros((d, d), dtype=complex)
            c2[p2, q2] = 1.0
            lhs = psi_paren_op(rep, n, op @ op2)
            r.residual("multiplicative", maxabs(P @ (lhs - img @ psi_paren_n(rep, n, c2)) @ P))
    return r


def cp_covariance_defect(rep: ToeplitzRep, J: np.ndarray | None = None) -> float:
    """max over an ideal basis of ||psi^(1)(phi(a)) - pi(a)|| on the validity domain."""
    X = rep.corr
    if J is None:
        J = katsura_ideal(X).basis
    J = np.asarray(J, dtype=complex)
    P = rep.compression(1)
    out = 0.0
    for a in J.T:
        if X.dim:
            lhs = psi_paren_n(rep, 1, theta_coefficients(X.module, X.phi(a)))
        else:
            lhs = np.zeros((rep.size, rep.size))
        out = max(out, opnorm(P @ (lhs - rep.pi_of(a)) @ P))
    return out


# ---------------------------------------------------------------- Cuntz-Krieger families


def _paths(E: DirectedGraph) -> list[tuple]:
    """Paths (e_1, ..., e_k), s(e_i) = r(e_{i+1}), whose source does not receive.

    Length-zero paths are recorded as ('v', vertex index).
    """
    if not E.is_acyclic():
        raise PreconditionError("Cuntz-Krieger path model needs an acyclic graph")
    out = [("v", v) for v in range(E.n_vertices) if E.receives(v) == 0]
    frontier = list(out)
    while frontier:
        nxt = []
        for mu in frontier:
            r_mu = mu[1] if mu[0] == "v" else E.dst[mu[0]]
            for e in range(E.n_edges):
                if E.src[e] == r_mu:
                    path = (e,) if mu[0] == "v" else (e,) + mu
                    nxt.append(path)
        out.extend(nxt)
        frontier = nxt
    return out


def _path_range(E: DirectedGraph, mu) -> int:
    return mu[1] if mu[0] == "v" else E.dst[mu[0]]


def _path_length(mu) -> int:
    return 0 if mu[0] == "v" else len(mu)


def ck_representation(E: DirectedGraph) -> ToeplitzRep:
    """Cuntz-Krieger family on the path space of an acyclic graph.

    pi(chi_v) projects onto paths with range v; psi(chi_e) prepends e.
    """
    paths = _paths(E)
    idx = {mu: k for k, mu in enumerate(paths)}
    k = len(paths)
    X = graph_correspondence(E)
    pi = np.zeros((E.n_vertices, k, k))
    for mu, j in idx.items():
        pi[_path_range(E, mu), j, j] = 1.0
    psi = np.zeros((E.n_edges, k, k))
    for mu, j in idx.items():
        r_mu = _path_range(E, mu)
        for e in range(E.n_edges):
            if E.src[e] == r_mu:
                new = (e,) if mu[0] == "v" else (e,) + mu
                psi[e, idx[new], j] = 1.0
    return ToeplitzRep(X, psi.astype(complex), pi.astype(complex), None, [],
                       {"paths": paths, "graph": E, "lengths": [_path_length(mu) for mu in paths]})


def _path_image(alpha: GraphAction, s: int, mu) -> tuple:
    if mu[0] == "v":
        return ("v", int(alpha.vertex_perms[s][mu[1]]))
    return tuple(int(alpha.edge_perms[s][e]) for e in mu)


def ck_action(rep: ToeplitzRep, alpha: GraphAction) -> AlgAction:
    """gamma'_s(c) = U_s c U_s^* with U_s e_mu = e_{alpha_{s^-1} mu}."""
    g = alpha.group
    paths = rep.info["paths"]
    idx = {mu: k for k, mu in enumerate(paths)}
    us = []
    for s in range(g.order):
        U = np.zeros((len(paths), len(paths)))
        for mu, j in idx.items():
            U[idx[_path_image(alpha, g.inv(s), mu)], j] = 1.0
        us.append(U)
    return AlgAction.from_unitaries(g, rep.target, us)


def ck_grading(rep: ToeplitzRep, delta: EdgeLabeling) -> AlgGrading:
    """E_{mu, nu} has degree delta(mu) delta(nu)^{-1}, delta of a path the product of its labels."""
    g = delta.group
    degs = []
    for mu in rep.info["paths"]:
        d = g.identity
        if mu[0] != "v":
            for e in mu:
                d = g.mul(d, delta.labels[e])
        degs.append(d)
    return AlgGrading.from_vertex_degrees(g, rep.target, degs)


def gauge_grading(rep: ToeplitzRep) -> DualGrading:
    """Integer grading of the target by |mu| - |nu| on matrix units E_{mu, nu}."""
    lengths = rep.info["lengths"]
    C = rep.target
    comps: dict[int, list] = {}
    for k, (r, c) in enumerate(zip(C._rows, C._cols)):
        comps.setdefault(lengths[r] - lengths[c], []).append(np.eye(C.dim)[k])
    return DualGrading(C, comps, None)


def gauge_report(rep: ToeplitzRep, max_level: int, tol: float = DEFAULT_TOL) -> Report:
    """psi^n(xi) psi^m(eta)^* is homogeneous of degree n - m, and products of
    at most three generators stay in the span of such elements."""
    r = Report("gauge_grading", tol)
    gr = gauge_grading(rep)
    C = rep.target
    spans = []
    for n, m in iproduct(range(max_level + 1), range(max_level + 1)):
        dn, dm = rep.power(n).dim, rep.power(m).dim
        comp = gr.component(n - m)
        for p, q in iproduct(range(dn), range(dm)):
            el = psi_n(rep, n, np.eye(dn)[p]) @ psi_n(rep, m, np.eye(dm)[q]).conj().T
            v = C.coords(el)
            spans.append(v)
            r.residual("homogeneous", span_residual(comp, v[:, None]) if comp.shape[1] else maxabs(v), (n, m))
    S = np.array(spans).T
    gens = [p for p in rep.psi] + [p.conj().T for p in rep.psi] + list(rep.pi)
    for k in range(1, 4):
        for combo in iproduct(range(len(gens)), repeat=k):
            prod = reduce(np.matmul, [gens[c] for c in combo])
            r.residual("spanning", span_residual(S, C.coords(prod)[:, None]), combo)
    r.info["span_dim"] = rank(S)
    return r


# ---------------------------------------------------------------- product representations


@dataclass
class ProductRep:
    rep: ToeplitzRep           # the representation of X [x] Y (concrete model) in C [x] D
    twisted: TwistedCorrespondence
    target: TwistedAlgebra     # C [x] D
    repX: ToeplitzRep
    repY: ToeplitzRep
    report: Report


def _equivariance(repX: ToeplitzRep, act: CorrAction, gammaC: AlgAction,
                  repY: ToeplitzRep, grad: CorrGrading, sigmaD: AlgGrading, tol: float) -> Report:
    r = Report("equivariance", tol)
    g = act.group
    C = repX.target
    eyeX, eyeA = np.eye(repX.corr.dim), np.eye(repX.corr.left_algebra.dim)
    for s in range(g.order):
        for i in range(repX.corr.dim):
            lhs = repX.psi_of(act.apply(s, eyeX[i]))
            rhs = C.to_matrix(gammaC.apply(s, C.coords(repX.psi[i])))
            r.residual("psi_X", maxabs(lhs - rhs), (g.label(s), i))
        for k in range(len(eyeA)):
            lhs = repX.pi_of(act.alpha.apply(s, eyeA[k]))
            rhs = C.to_matrix(gammaC.apply(s, C.coords(repX.pi[k])))
            r.residual("pi_X", maxabs(lhs - rhs), (g.label(s), k))
    D = repY.target
    for s in grad.support:
        comp = sigmaD.component(s)
        for y in grad.component(s).T:
            v = D.coords(repY.psi_of(y))
            r.residual("psi_Y", span_residual(comp, v[:, None]) if comp.shape[1] else maxabs(v), grad.group.label(s))
    ag = grad.algebra_grading
    for s in ag.support:
        comp = sigmaD.component(s)
        for b in ag.component(s).T:
            v = D.coords(repY.pi_of(b))
            r.residual("pi_Y", span_residual(comp, v[:, None]) if comp.shape[1] else maxabs(v), grad.group.label(s))
    return r


def product_representation(repX: ToeplitzRep, act: CorrAction, gammaC: AlgAction,
                           repY: ToeplitzRep, grad: CorrGrading, sigmaD: AlgGrading,
                           tol: float = DEFAULT_TOL) -> ProductRep:
    """psi = psi_X [x] psi_Y and pi = pi_X [x] pi_Y in C [x] D."""
    if repX.truncation is not None or repY.truncation is not None:
        raise ValidityError("product representations need factors that are exact everywhere")
    pre = _equivariance(repX, act, gammaC, repY, grad, sigmaD, tol)
    if not pre.passed:
        raise PreconditionError("factor representations are not equivariant", pre.failures)
    tc = TwistedCorrespondence(repX.corr, act, repY.corr, grad, check=True, tol=tol)
    C, D = repX.target, repY.target
    T = TwistedAlgebra(C, gammaC, D, sigmaD, check=True, tol=tol)
    K = T.concrete
    HY, HB = grad.hom_basis, grad.algebra_grading.hom_basis
    psi = [K.to_matrix(T.elementary(C.coords(repX.psi[i]), D.coords(repY.psi_of(HY[:, j]))))
           for i in range(repX.corr.dim) for j in range(repY.corr.dim)]
    pi = [K.to_matrix(T.elementary(C.coords(repX.pi[k]), D.coords(repY.pi_of(HB[:, l]))))
          for k in range(repX.corr.left_algebra.dim) for l in range(repY.corr.left_algebra.dim)]
    size = K.size
    psi = np.array(psi) if psi else np.zeros((0, size, size))
    rep = ToeplitzRep(tc.concrete, psi, np.array(pi), None, [], {})
    report = Report("product_representation", tol)
    report.merge(pre)
    report.merge(toeplitz_report(rep, tol))
    return ProductRep(rep, tc, T, repX, repY, report)


def _ambient_compact(tc: TwistedCorrespondence, S: np.ndarray, Tm: np.ndarray) -> np.ndarray:
    """Coordinate operator of k(S [x] T) on the concrete X [x] Y.

    S is a Theta-coefficient matrix on the X basis and Tm one on the
    homogeneous Y basis.
    """
    X, Y, g = tc.X, tc.Y, tc.group
    VX = X.realization
    VY = Y.realization.to_matrix(tc.grad.hom_basis.T) if Y.dim else np.zeros((0,) + Y.realization.shape)
    n = g.order
    MX, MY = VX.shape[0], Y.realization.shape[0]
    eyeX = np.eye(X.dim)
    K = np.zeros((MX * MY * n, MX * MY * n), dtype=complex)
    lam = tc.algebra.heisenberg.lam
    m = tc.algebra.heisenberg.m
    for h in range(n):
        G = np.array([VX.to_matrix(tc.act.apply(g.inv(h), eyeX[i])) for i in range(X.dim)])
        Sh = _theta_representative(G, S)
        for p, q in zip(*np.nonzero(Tm)):
            s = g.mul(tc.degrees[p], g.inv(tc.degrees[q]))
            Tpq = Tm[p, q] * VY[p] @ VY[q].conj().T
            K += np.kron(np.kron(Sh, Tpq), m[h] @ lam[s])
    V = tc.concrete.realization.vectors
    return tc.concrete.realization.coords(np.matmul(K[None], V)).T


def compacts_product_check(prod: ProductRep, S, Tm, tol: float = DEFAULT_TOL) -> Report:
    """psi^(1)(k(S [x] T)) = psi_X^(1)(S) [x] psi_Y^(1)(T), plus the Theta twist formula.

    ``S`` and ``Tm`` are Theta-coefficient matrices on the bases of X and
    of the homogeneous basis of Y.
    """
    r = Report("compacts_product", tol)
    tc, rep, T = prod.twisted, prod.rep, prod.target
    S, Tm = np.asarray(S, dtype=complex), np.asarray(Tm, dtype=complex)
    Kop = _ambient_compact(tc, S, Tm)
    lhs = psi_paren_n(rep, 1, theta_coefficients(tc.concrete.module, Kop))
    sx = psi_paren_n(prod.repX, 1, S)
    HY = tc.grad.hom_basis
    modY = tc.Y.module
    # Tm lives on the homogeneous basis; move it to Y coordinates
    Tcoords = np.zeros((tc.Y.dim, tc.Y.dim), dtype=complex)
    for p, q in zip(*np.nonzero(Tm)):
        Tcoords += Tm[p, q] * theta_matrix(modY, HY[:, p], HY[:, q])
    ty = psi_paren_n(prod.repY, 1, theta_coefficients(modY, Tcoords))
    rhs = T.concrete.to_matrix(T.elementary(prod.repX.target.coords(sx), prod.repY.target.coords(ty)))
    r.residual("compacts_product", maxabs(lhs - rhs))
    # the twisted Theta formula for rank-one pieces
    g = tc.group
    eyeX = np.eye(tc.X.dim)
    eyeY = np.eye(tc.Y.dim)
    twisted = False
    for i, j in zip(*np.nonzero(S)):
        for p, q in zip(*np.nonzero(Tm)):
            s, t = tc.degrees[p], tc.degrees[q]
            op = _ambient_compact(tc, _unit(S.shape, i, j), _unit(Tm.shape, p, q))
            w1 = tc.elementary(eyeX[i], HY[:, p])
            w2 = tc.elementary(tc.act.apply(g.mul(t, g.inv(s)), eyeX[j]), HY[:, q])
            r.residual("theta_twist", maxabs(op - theta_matrix(tc.concrete.module, w1, w2)), (i, j, p, q))
            twisted |= g.mul(t, g.inv(s)) != g.identity
    r.info["twist_exercised"] = bool(twisted)
    return r


def _unit(shape, i, j) -> np.ndarray:
    u = np.zeros(shape, dtype=complex)
    u[i, j] = 1.0
    return u


def ideal_compatible(tc: TwistedCorrespondence, tol: float = DEFAULT_TOL) -> tuple[bool, np.ndarray]:
    """J_{X [x] Y} = J_X [x] J_Y; returns the verdict and a basis of J_X [x] J_Y."""
    JX, JY = katsura_ideal(tc.X).basis, katsura_ideal(tc.Y).basis
    T = tc.algebra
    cols = [T.elementary(a, b) for a in JX.T for b in JY.T]
    prod = np.array(cols).T if cols else np.zeros((T.dim, 0))
    J = katsura_ideal(tc.concrete).basis
    ok = J.shape[1] == prod.shape[1] and (prod.shape[1] == 0 or same_span(J, prod) <= tol)
    return ok, prod


def cp_product_check(prod: ProductRep, tol: float = DEFAULT_TOL) -> Report:
    """Covariant factors and ideal compatibility give a covariant product."""
    r = Report("cp_product", tol)
    dX, dY = cp_covariance_defect(prod.repX), cp_covariance_defect(prod.repY)
    r.info["factor_defects"] = (dX, dY)
    ok, J = ideal_compatible(prod.twisted, tol)
    if dX > tol or dY > tol:
        raise PreconditionError("factor representations are not Cuntz-Pimsner covariant",
                                {"defect_X": dX, "defect_Y": dY})
    if not ok:
        raise PreconditionError("the correspondences are not ideal compatible")
    r.residual("covariance_defect", cp_covariance_defect(prod.rep, J))
    return r


# ---------------------------------------------------------------- main-proof generators


def _degree(grad: CorrGrading, ys: Sequence) -> int:
    g = grad.group
    return reduce(g.mul, [grad.degree_of(y) for y in ys], g.identity)


def _twisted_word(prod: ProductRep, xs: Sequence, ys: Sequence, shift: int) -> np.ndarray:
    """psi^k(x [x] y) for x = x_1 (x) ... (x) x_k and y likewise.

    Factor i is psi(gamma_{p_i^-1 shift}(x_i) [x] y_i), where p_i is the
    degree of y_1 ... y_{i-1}; the gammas undo the commutation of each x_i
    past the earlier y factors.
    """
    tc, rep = prod.twisted, prod.rep
    g = tc.group
    out = np.eye(rep.size, dtype=complex)
    prefix = g.identity
    for x, y in zip(xs, ys):
        gx = tc.act.apply(g.mul(g.inv(prefix), shift), x)
        out = out @ rep.psi_of(tc.elementary(gx, y))
        prefix = g.mul(prefix, tc.grad.degree_of(y))
    return out


def generator_factorization_check(prod: ProductRep, xs: Sequence, xps, ys: Sequence, yps: Sequence,
                                  tol: float = DEFAULT_TOL) -> Report:
    """Evaluate both sides of the factorization of a generator of S_1.

    ``xs`` lists n + 1 vectors of X, ``ys`` lists m + 1 homogeneous vectors
    of Y, ``yps`` lists m homogeneous vectors, and ``xps`` lists n vectors
    of X (n >= 1) or is one element of A (n = 0).  Supported: n <= m with
    l = m - n in {0, 1}.
    """
    tc, rep, T = prod.twisted, prod.rep, prod.target
    repX, repY = prod.repX, prod.repY
    g = tc.group
    A = tc.X.left_algebra
    n, m = len(xs) - 1, len(ys) - 1
    if len(yps) != m:
        raise PreconditionError("y' must have one factor fewer than y")
    l = m - n
    if l not in (0, 1):
        raise PreconditionError("only n <= m <= n + 1 is implemented", {"n": n, "m": m})
    r = Report("generator_factorization", tol)
    r.info.update({"n": n, "m": m})
    J = katsura_ideal(tc.X).basis
    p = ideal_unit(A, J)
    # x = x_0 a with a = p_J in J_X
    last = xs[-1]
    err = maxabs(tc.X.act_right(last, p) - last)
    if err > tol:
        raise FactorizationError("x does not lie in X . J_X", {"factor": n, "residual": err})
    if n == 0:
        xp_alg = np.asarray(xps, dtype=complex)
        err = maxabs(A.product(xp_alg, p) - xp_alg)
        if err > tol:
            raise FactorizationError("x' does not lie in A . J_X", {"residual": err})
    else:
        if len(xps) != n:
            raise PreconditionError("x' must have n factors")
        err = maxabs(tc.X.act_right(xps[-1], p) - xps[-1])
        if err > tol:
            raise FactorizationError("x' does not lie in X . J_X", {"factor": n - 1, "residual": err})
    s1, s2 = _degree(tc.grad, ys[:n + 1]), _degree(tc.grad, ys[n + 1:])
    t1, t2 = _degree(tc.grad, yps[:n]), _degree(tc.grad, yps[n:])
    s, t = g.mul(s1, s2), g.mul(t1, t2)
    C, D = repX.target, repY.target

    # left side: k^{n+1}(x) k^n(x')^* [x] k^{m+1}(y) k^m(y')^*
    kx = psi_elementary(repX, xs)
    kxp = repX.pi_of(xp_alg) if n == 0 else psi_elementary(repX, xps)
    ky = psi_elementary(repY, ys)
    kyp = psi_elementary(repY, yps)
    lhs = T.concrete.to_matrix(T.elementary(C.coords(kx @ kxp.conj().T), D.coords(ky @ kyp.conj().T)))

    # first factor: psi^{n+1}(x_0 [x] y^(1))
    first = _twisted_word(prod, xs, ys[:n + 1], g.identity)
    # middle: psi^(1)(phi_X(c) [x] Theta_{y2, y2'}) with c = alpha_{s1^-1}(a) alpha_{s2 s^-1}(a')^*
    al = tc.act.alpha
    c = A.product(al.apply(g.inv(s1), p), A.star(al.apply(g.mul(s2, g.inv(s)), p)))
    if l == 0:
        unitB = tc.Y.left_algebra.unit()
        middle = rep.pi_of(tc.algebra.elementary(c, unitB))
    else:
        HY = tc.grad.hom_basis
        y2, y2p = ys[n + 1], yps[n]
        Scoef = theta_coefficients(tc.X.module, tc.X.phi(c))
        cy, cyp = tc.grad.hom_coords(y2), tc.grad.hom_coords(y2p)
        Tm = np.outer(cy, cyp.conj())  # Theta_{y2, y2'} on the homogeneous basis
        Kop = _ambient_compact(tc, Scoef, Tm)
        middle = psi_paren_n(rep, 1, theta_coefficients(tc.concrete.module, Kop))
    # last: psi^n(alpha_{t s^-1}(x_0') [x] y'^(1))^*
    shift = g.mul(t, g.inv(s))
    if n == 0:
        unitB = tc.Y.left_algebra.unit()
        third = rep.pi_of(tc.algebra.elementary(al.apply(shift, xp_alg), unitB))
    else:
        third = _twisted_word(prod, xps, yps[:n], shift)
    rhs = first @ middle @ third.conj().T
    r.residual("factorization", maxabs(lhs - rhs))
    r.info["degrees"] = {"s1": g.label(s1), "s2": g.label(s2), "t1": g.label(t1), "t2": g.label(t2)}
    r.info["lhs_norm"] = opnorm(lhs)
    return r
