"""Finite-dimensional Hilbert modules and C*-correspondences.

A module of dimension d over B is stored by structure tensors against a
fixed basis x_1..x_d:

* ``right[k]``  d x d matrix of x -> x . b_k
* ``inner[i, j]`` coordinates of <x_i, x_j> in B (conjugate linear in i)
* ``left[k]``   d x d matrix of x -> phi(a_k) x   (correspondences)

Modules built from a realization also keep the M x N matrices V_i with
x . b = V b, <x, y> = V_x^* V_y and phi(a) acting by an M x M matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Mapping, Sequence

import numpy as np

from ._linalg import RANK_TOL, independent_columns, maxabs, null_space, rank, same_span, span_residual
from .fdalg import (AlgAction, AlgGrading, FDAlgebra, FiniteGroup, MatrixAlgebra,
                    StructureAlgebra, verify_action, verify_grading)
from .report import DEFAULT_TOL, Report

Algebra = MatrixAlgebra | StructureAlgebra


class NotAdjointable(ValueError):
    pass


def _alg_product(alg: Algebra, u, v) -> np.ndarray:
    return alg.product(u, v)


def _alg_norm(alg: Algebra, u) -> float:
    """C*-norm of an element; uses the matrix realization when available."""
    if isinstance(alg, MatrixAlgebra):
        m = alg.to_matrix(u)
        return float(np.linalg.norm(m, 2)) if m.size else 0.0
    # ||u||^2 = spectral radius of u*u acting on the algebra
    op = alg.left_operator(alg.product(alg.star(u), u))
    return float(np.sqrt(max(np.abs(np.linalg.eigvals(op)).max(initial=0.0), 0.0)))


# ---------------------------------------------------------------- realizations


@dataclass
class Realization:
    """Module vectors as M x N matrices, coefficients acting on the right."""

    vectors: np.ndarray  # (d, M, N)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=complex)
        d, M, N = self.vectors.shape
        self._flat = self.vectors.reshape(d, M * N).T
        self._pinv = np.linalg.pinv(self._flat) if d else np.zeros((0, M * N))

    @property
    def shape(self) -> tuple[int, int]:
        return self.vectors.shape[1], self.vectors.shape[2]

    def to_matrix(self, x) -> np.ndarray:
        return np.tensordot(np.asarray(x, dtype=complex), self.vectors, axes=([-1], [0]))

    def coords(self, mats) -> np.ndarray:
        mats = np.asarray(mats, dtype=complex)
        lead = mats.shape[:-2]
        return mats.reshape(lead + (mats.shape[-2] * mats.shape[-1],)) @ self._pinv.T

    def residual(self, mats) -> float:
        mats = np.asarray(mats, dtype=complex)
        return maxabs(self.to_matrix(self.coords(mats)) - mats)


# ---------------------------------------------------------------- modules


class HilbertModule:
    def __init__(self, algebra: Algebra, right, inner, realization: Realization | None = None):
        self.algebra = algebra
        self.right = np.asarray(right, dtype=complex)
        self.inner = np.asarray(inner, dtype=complex)
        self.realization = realization
        d = self.inner.shape[0]
        if self.right.shape != (algebra.dim, d, d) or self.inner.shape != (d, d, algebra.dim):
            raise ValueError("structure tensors do not match dimensions")

    @classmethod
    def from_realization(cls, algebra: MatrixAlgebra, vectors, tol: float = 1e-8) -> "HilbertModule":
        real = Realization(vectors)
        V = real.vectors
        d = V.shape[0]
        if d and rank(real._flat) != d:
            raise ValueError("module vectors are linearly dependent")
        acted = np.matmul(V[None], algebra.basis[:, None])
        res = real.residual(acted)
        if res > tol:
            raise ValueError(f"span of module vectors is not closed under the right action ({res:.2e})")
        right = real.coords(acted).transpose(0, 2, 1)
        gram = np.matmul(V.conj().transpose(0, 2, 1)[:, None], V[None])
        inner = algebra.coords(gram)
        if d and algebra.membership_residual(gram.reshape(-1, algebra.size, algebra.size)) > tol:
            raise ValueError("inner products leave the coefficient algebra")
        return cls(algebra, right, inner, real)

    @property
    def dim(self) -> int:
        return self.inner.shape[0]

    def act_right(self, x, b) -> np.ndarray:
        return np.tensordot(np.asarray(b, dtype=complex), self.right, axes=1) @ np.asarray(x, dtype=complex)

    def right_operator(self, b) -> np.ndarray:
        return np.tensordot(np.asarray(b, dtype=complex), self.right, axes=1)

    def ip(self, x, y) -> np.ndarray:
        return np.tensordot(np.conj(x), np.tensordot(np.asarray(y, dtype=complex), self.inner, axes=([0], [1])), axes=1)

    def norm(self, x) -> float:
        return float(np.sqrt(_alg_norm(self.algebra, self.ip(x, x))))

    def zero(self) -> np.ndarray:
        return np.zeros(self.dim, dtype=complex)


class Correspondence:
    """A Hilbert module with a left action phi of ``left_algebra``."""

    def __init__(self, module: HilbertModule, left_algebra: Algebra, left,
                 phi_ambient=None, name: str | None = None):
        self.module = module
        self.left_algebra = left_algebra
        self.left = np.asarray(left, dtype=complex)
        if self.left.shape != (left_algebra.dim, module.dim, module.dim):
            raise ValueError("left action tensor does not match dimensions")
        self.phi_ambient = None if phi_ambient is None else np.asarray(phi_ambient, dtype=complex)
        self.name = name

    @classmethod
    def from_realization(cls, left_algebra: MatrixAlgebra, module: HilbertModule, phi,
                         tol: float = 1e-8, name: str | None = None) -> "Correspondence":
        if module.realization is None:
            raise ValueError("module has no realization")
        phi = np.asarray(phi, dtype=complex)
        V = module.realization.vectors
        acted = np.matmul(phi[:, None], V[None])
        res = module.realization.residual(acted) if module.dim else 0.0
        if res > tol:
            raise ValueError(f"left action leaves the module ({res:.2e})")
        left = module.realization.coords(acted).transpose(0, 2, 1)
        return cls(module, left_algebra, left, phi, name)

    @classmethod
    def over_itself(cls, algebra: MatrixAlgebra, name: str | None = None) -> "Correspondence":
        """A as an A-A correspondence with <a, b> = a^* b."""
        mod = HilbertModule.from_realization(algebra, algebra.basis)
        return cls.from_realization(algebra, mod, algebra.basis, name=name)

    # conveniences
    @property
    def dim(self) -> int:
        return self.module.dim

    @property
    def algebra(self) -> Algebra:
        return self.module.algebra

    @property
    def realization(self) -> Realization | None:
        return self.module.realization

    def phi(self, a) -> np.ndarray:
        return np.tensordot(np.asarray(a, dtype=complex), self.left, axes=1)

    def act_left(self, a, x) -> np.ndarray:
        return self.phi(a) @ np.asarray(x, dtype=complex)

    def act_right(self, x, b) -> np.ndarray:
        return self.module.act_right(x, b)

    def ip(self, x, y) -> np.ndarray:
        return self.module.ip(x, y)


def zero_correspondence(algebra: MatrixAlgebra, left_algebra: MatrixAlgebra | None = None) -> Correspondence:
    left_algebra = left_algebra or algebra
    mod = HilbertModule.from_realization(algebra, np.zeros((0, 0, algebra.size)))
    return Correspondence.from_realization(left_algebra, mod, np.zeros((left_algebra.dim, 0, 0)))


def verify_module(module: HilbertModule, tol: float = DEFAULT_TOL) -> Report:
    """Hermitian symmetry, B-linearity and positive definiteness of the inner product."""
    rep = Report("verify_module", tol)
    alg, d = module.algebra, module.dim
    eye = np.eye(d)
    for i, j in iproduct(range(d), range(d)):
        rep.residual("hermitian", maxabs(alg.star(module.inner[i, j]) - module.inner[j, i]), (i, j))
        for k in range(alg.dim):
            lhs = module.ip(eye[i], module.right[k] @ eye[j])
            rhs = alg.product(module.inner[i, j], np.eye(alg.dim)[k])
            rep.residual("linear", maxabs(lhs - rhs), (i, j, k))
    if isinstance(alg, MatrixAlgebra) and d:
        N = alg.size
        big = alg.to_matrix(module.inner).transpose(0, 2, 1, 3).reshape(d * N, d * N)
        ev = np.linalg.eigvalsh((big + big.conj().T) / 2)
        rep.residual("positive", max(0.0, -float(ev.min())))
        # definiteness: a nonzero x has <x,x> != 0
        nul = null_space(np.einsum("ijk->ikj", module.inner).reshape(d, -1).T)
        rep.condition("definite", nul.shape[1] == 0)
    return rep


def verify_correspondence(corr: Correspondence, tol: float = DEFAULT_TOL) -> Report:
    """Module axioms plus phi a *-homomorphism by adjointable maps."""
    rep = Report("verify_correspondence", tol)
    rep.merge(verify_module(corr.module, tol), "module")
    A = corr.left_algebra
    eye_a, eye_x = np.eye(A.dim), np.eye(corr.dim)
    for k in range(A.dim):
        phik, phistar = corr.left[k], corr.phi(A.star(eye_a[k]))
        for i, j in iproduct(range(corr.dim), range(corr.dim)):
            rep.residual("adjointable", maxabs(corr.ip(phik @ eye_x[i], eye_x[j])
                                               - corr.ip(eye_x[i], phistar @ eye_x[j])), (k, i, j))
        for l in range(A.dim):
            rep.residual("multiplicative", maxabs(corr.phi(A.product(eye_a[k], eye_a[l]))
                                                  - phik @ corr.left[l]), (k, l))
        for m in range(corr.algebra.dim):
            rep.residual("bimodule", maxabs(phik @ corr.module.right[m] - corr.module.right[m] @ phik), (k, m))
    return rep


# ---------------------------------------------------------------- operators


@dataclass
class ModuleOperator:
    """An operator on module coordinates, with its adjoint when certified."""

    module: HilbertModule
    matrix: np.ndarray
    adjoint_matrix: np.ndarray | None = None

    @property
    def adjointable(self) -> bool:
        return self.adjoint_matrix is not None

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=complex)

    @property
    def adjoint(self) -> "ModuleOperator":
        if self.adjoint_matrix is None:
            raise NotAdjointable("operator has no certified adjoint")
        return ModuleOperator(self.module, self.adjoint_matrix, self.matrix)

    def __matmul__(self, other: "ModuleOperator") -> "ModuleOperator":
        adj = None
        if self.adjointable and other.adjointable:
            adj = other.adjoint_matrix @ self.adjoint_matrix
        return ModuleOperator(self.module, self.matrix @ other.matrix, adj)


def theta_matrix(module: HilbertModule, x, y) -> np.ndarray:
    """Coordinate matrix of z -> x <y, z>."""
    c = np.einsum("i,ijk->jk", np.conj(y), module.inner)  # <y, e_j> per column j
    return np.einsum("jk,kab,b->aj", c, module.right, np.asarray(x, dtype=complex))


def theta(module: HilbertModule, x, y) -> ModuleOperator:
    return ModuleOperator(module, theta_matrix(module, x, y), theta_matrix(module, y, x))


def adjoint_of(module: HilbertModule, T, tol: float = DEFAULT_TOL) -> ModuleOperator:
    """Solve <S e_i, e_j> = <e_i, T e_j> for S; raise when no solution exists."""
    T = np.asarray(T, dtype=complex)
    d, nb = module.dim, module.algebra.dim
    if d == 0:
        return ModuleOperator(module, T, T.copy())
    # column i of conj(S) solves  sum_l inner[l, j, :] s_l = sum_l T_lj inner[i, l, :]
    G = module.inner.transpose(1, 2, 0).reshape(d * nb, d)
    rhs = np.einsum("lj,ilk->jki", T, module.inner).reshape(d * nb, d)
    sol, *_ = np.linalg.lstsq(G, rhs, rcond=None)
    res = maxabs(G @ sol - rhs)
    if res > tol * max(1.0, maxabs(rhs)):
        raise NotAdjointable(f"not adjointable (residual {res:.3e})")
    return ModuleOperator(module, T, sol.conj())


def theta_coefficients(module: HilbertModule, T, tol: float = 1e-8) -> np.ndarray:
    """Coefficients c with T = sum_ij c_ij Theta_{x_i, x_j} on module coordinates.

    In finite dimensions every adjointable operator is compact; a least
    squares solve recovers the expansion.
    """
    d = module.dim
    if d == 0:
        return np.zeros((0, 0), dtype=complex)
    eye = np.eye(d)
    thetas = np.array([theta_matrix(module, eye[i], eye[j]) for i in range(d) for j in range(d)])
    A = thetas.reshape(d * d, -1).T
    c, *_ = np.linalg.lstsq(A, np.asarray(T, dtype=complex).reshape(-1), rcond=None)
    res = maxabs(A @ c - np.asarray(T).reshape(-1))
    if res > tol:
        raise NotAdjointable(f"operator is not in the span of the Theta basis ({res:.3e})")
    return c.reshape(d, d)


# ---------------------------------------------------------------- linking algebra


@dataclass
class LinkingAlgebra:
    algebra: MatrixAlgebra
    module: HilbertModule
    p: np.ndarray
    q: np.ndarray

    @property
    def M(self) -> int:
        return self.module.realization.shape[0]

    def embed_x(self, x) -> np.ndarray:
        M, N = self.module.realization.shape
        out = np.zeros((M + N, M + N), dtype=complex)
        out[:M, M:] = self.module.realization.to_matrix(x)
        return out

    def embed_b(self, b) -> np.ndarray:
        M = self.M
        out = np.zeros_like(self.p)
        out[M:, M:] = self.module.algebra.to_matrix(b)
        return out

    def embed_k(self, km) -> np.ndarray:
        """Corner embedding of an M x M ambient operator."""
        out = np.zeros_like(self.p)
        out[:self.M, :self.M] = km
        return out

    def k_coords(self, corner: np.ndarray) -> np.ndarray:
        """Module-coordinate matrix of an operator given by its corner."""
        real = self.module.realization
        return real.coords(np.einsum("ab,ibn->ian", corner, real.vectors)).T


def linking_algebra(module: HilbertModule, tol: float = DEFAULT_TOL) -> tuple[LinkingAlgebra, Report]:
    """L(X) = K(X + B) inside M_{M+N}, with identities (1)-(3) certified."""
    if module.realization is None or not isinstance(module.algebra, MatrixAlgebra):
        raise ValueError("linking algebra needs a realized module over a matrix algebra")
    real, B = module.realization, module.algebra
    M, N = real.shape
    d = module.dim
    S = M + N
    cands = []
    V = real.vectors
    for i, j in iproduct(range(d), range(d)):
        m = np.zeros((S, S), dtype=complex)
        m[:M, :M] = V[i] @ V[j].conj().T
        cands.append(m)
    for i in range(d):
        m = np.zeros((S, S), dtype=complex)
        m[:M, M:] = V[i]
        cands.append(m)
        cands.append(m.conj().T)
    for b in B.basis:
        m = np.zeros((S, S), dtype=complex)
        m[M:, M:] = b
        cands.append(m)
    cands = np.array(cands)
    keep = independent_columns(cands.reshape(len(cands), -1).T)
    alg = MatrixAlgebra(cands[keep], name="L(X)")
    p = np.zeros((S, S), dtype=complex)
    p[:M, :M] = np.eye(M)
    q = np.eye(S) - p
    link = LinkingAlgebra(alg, module, p, q)

    rep = Report("linking_algebra", tol)
    eye_x, eye_b = np.eye(d), np.eye(B.dim)
    for i in range(d):
        for k in range(B.dim):
            lhs = link.embed_x(eye_x[i]) @ link.embed_b(eye_b[k])
            rhs = link.embed_x(module.act_right(eye_x[i], eye_b[k]))
            rep.residual("right_action", maxabs(lhs - rhs), (i, k))
        for j in range(d):
            xi, xj = link.embed_x(eye_x[i]), link.embed_x(eye_x[j])
            rep.residual("inner_product", maxabs(xi.conj().T @ xj - link.embed_b(module.ip(eye_x[i], eye_x[j]))), (i, j))
            corner = (xi @ xj.conj().T)[:M, :M]
            rep.residual("theta", maxabs(link.k_coords(corner) - theta_matrix(module, eye_x[i], eye_x[j])), (i, j))
    rep.residual("projections", maxabs(p @ p - p) + maxabs(q @ q - q) + maxabs(p @ q))
    prods = np.matmul(alg.basis[:, None], alg.basis[None]).reshape(-1, S, S)
    rep.residual("closed", alg.membership_residual(prods) if len(prods) else 0.0)
    return link, rep


# ---------------------------------------------------------------- Katsura ideal


@dataclass
class KatsuraIdeal:
    basis: np.ndarray            # columns: coordinates in the left algebra
    kernel: np.ndarray           # columns spanning ker(phi)
    blocks: tuple[int, ...] | None = None

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def annihilator(alg: Algebra, ideal: np.ndarray) -> np.ndarray:
    """Columns spanning {a : a k = k a = 0 for all k in ideal}."""
    n = alg.dim
    eye = np.eye(n)
    if ideal.shape[1] == 0:
        return eye.astype(complex)
    rows = []
    for k in ideal.T:
        rows.append(np.array([alg.product(eye[i], k) for i in range(n)]).T)
        rows.append(np.array([alg.product(k, eye[i]) for i in range(n)]).T)
    return null_space(np.vstack(rows))


def katsura_ideal(corr: Correspondence) -> KatsuraIdeal:
    """J_X = (ker phi)^perp; for an FDAlgebra also the blocks it occupies."""
    A = corr.left_algebra
    phimap = corr.left.reshape(A.dim, -1).T
    kernel = null_space(phimap) if corr.dim else np.eye(A.dim, dtype=complex)
    blocks = None
    if isinstance(A, FDAlgebra):
        blocks = []
        for b in range(len(A.block_dims)):
            idx = A.block_basis_indices(b)
            if rank(phimap[:, idx]) == len(idx):
                blocks.append(b)
        blocks = tuple(blocks)
        idx = [i for b in blocks for i in A.block_basis_indices(b)]
        basis = np.eye(A.dim, dtype=complex)[:, idx]
    else:
        basis = annihilator(A, kernel)
    return KatsuraIdeal(basis, kernel, blocks)


def ideal_unit(alg: Algebra, basis: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """The unit of a finite-dimensional ideal (a central projection)."""
    n, r = basis.shape
    if r == 0:
        return np.zeros(n, dtype=complex)
    prods = np.array([[alg.product(basis[:, k], basis[:, j]) for k in range(r)] for j in range(r)])
    lhs = prods.transpose(0, 2, 1).reshape(r * n, r)
    rhs = basis.T.reshape(-1)
    c, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    if maxabs(lhs @ c - rhs) > tol:
        raise ValueError("ideal has no unit")
    return basis @ c


def nondegeneracy_dims(corr: Correspondence, ideal: KatsuraIdeal | None = None) -> dict[str, int]:
    """dim span{phi(j) x} and dim span{x j} over the Katsura ideal."""
    ideal = ideal or katsura_ideal(corr)
    d = corr.dim
    if d == 0:
        return {"dim": 0, "J.X": 0, "X.J": 0}
    left = [corr.phi(j) for j in ideal.basis.T]
    right = [corr.module.right_operator(j) for j in ideal.basis.T]
    lspan = np.hstack(left) if left else np.zeros((d, 0))
    rspan = np.hstack(right) if right else np.zeros((d, 0))
    return {"dim": d, "J.X": rank(lspan), "X.J": rank(rspan)}


def is_katsura_nondegenerate(corr: Correspondence) -> bool:
    """X . J_X = X.

    The right-hand form is the one the graph criterion (no proper
    sources) and the factorisation x = x0 a, a in J_X, rely on; the
    left-hand count is available from ``nondegeneracy_dims``.
    """
    dims = nondegeneracy_dims(corr)
    return dims["X.J"] == dims["dim"]


def is_full(module: HilbertModule) -> bool:
    d = module.dim
    if module.algebra.dim == 0:
        return True
    if d == 0:
        return False
    return rank(module.inner.reshape(d * d, -1).T) == module.algebra.dim


# ---------------------------------------------------------------- actions and gradings


class CorrAction:
    """Action (gamma, alpha) of a finite group on an A-A correspondence."""

    def __init__(self, group: FiniteGroup, corr: Correspondence, gammas, alpha: AlgAction):
        self.group = group
        self.corr = corr
        self.gammas = np.asarray(gammas, dtype=complex)
        self.alpha = alpha
        if self.gammas.shape != (group.order, corr.dim, corr.dim):
            raise ValueError("need one d x d map per group element")

    @classmethod
    def trivial(cls, group: FiniteGroup, corr: Correspondence) -> "CorrAction":
        return cls(group, corr, [np.eye(corr.dim)] * group.order,
                   AlgAction.trivial(group, corr.left_algebra))

    @classmethod
    def on_algebra(cls, alpha: AlgAction, corr: Correspondence) -> "CorrAction":
        """gamma = alpha for A viewed as a correspondence over itself."""
        return cls(alpha.group, corr, alpha.maps, alpha)

    def apply(self, s: int, x) -> np.ndarray:
        return self.gammas[s] @ np.asarray(x, dtype=complex)


def verify_corr_action(act: CorrAction, tol: float = DEFAULT_TOL) -> Report:
    rep = Report("verify_corr_action", tol)
    rep.merge(verify_action(act.alpha, tol), "alpha")
    corr, g, al = act.corr, act.group, act.alpha
    d, n = corr.dim, corr.algebra.dim
    eye_x, eye_a = np.eye(d), np.eye(n)
    for s in range(g.order):
        G = act.gammas[s]
        rep.condition("bijective", rank(G) == d if d else True, {"s": g.label(s)})
        for k in range(n):
            ak = al.apply(s, eye_a[k])
            rep.residual("right_covariant", maxabs(G @ corr.module.right[k] - corr.module.right_operator(ak) @ G),
                         {"s": g.label(s), "k": k})
            rep.residual("left_covariant", maxabs(G @ corr.left[k] - corr.phi(ak) @ G), {"s": g.label(s), "k": k})
        for i, j in iproduct(range(d), range(d)):
            rep.residual("inner_covariant", maxabs(corr.ip(G[:, i], G[:, j]) - al.apply(s, corr.module.inner[i, j])),
                         {"s": g.label(s), "pair": (i, j)})
        for t in range(g.order):
            rep.residual("homomorphism", maxabs(G @ act.gammas[t] - act.gammas[g.mul(s, t)]),
                         {"s": g.label(s), "t": g.label(t)})
    return rep


class CorrGrading:
    """Grading Y = sum_s Y_s of a B-B correspondence compatible with a grading of B."""

    def __init__(self, group: FiniteGroup, corr: Correspondence, components: Mapping[int, Sequence],
                 algebra_grading: AlgGrading):
        self.group = group
        self.corr = corr
        self.algebra_grading = algebra_grading
        comps: dict[int, np.ndarray] = {}
        for s in sorted(components):
            vecs = [np.asarray(v, dtype=complex) for v in components[s]]
            if vecs:
                comps[int(s)] = np.array(vecs).T
        self.components = comps
        self.degrees = [s for s, v in comps.items() for _ in range(v.shape[1])]
        self.hom_basis = (np.concatenate(list(comps.values()), axis=1) if comps
                          else np.zeros((corr.dim, 0), dtype=complex))
        self._hpinv = np.linalg.pinv(self.hom_basis) if self.hom_basis.size else self.hom_basis.T

    @classmethod
    def trivial(cls, group: FiniteGroup, corr: Correspondence) -> "CorrGrading":
        return cls(group, corr, {group.identity: list(np.eye(corr.dim))},
                   AlgGrading.trivial(group, corr.algebra))

    @classmethod
    def on_algebra(cls, grading: AlgGrading, corr: Correspondence) -> "CorrGrading":
        """Y = B over itself, graded like B."""
        return cls(grading.group, corr, {s: list(v.T) for s, v in grading.components.items()}, grading)

    @property
    def support(self) -> list[int]:
        return list(self.components)

    def component(self, s: int) -> np.ndarray:
        return self.components.get(s, np.zeros((self.corr.dim, 0), dtype=complex))

    def hom_coords(self, y) -> np.ndarray:
        return self._hpinv @ np.asarray(y, dtype=complex)

    def decompose(self, y) -> dict[int, np.ndarray]:
        c = self.hom_coords(y)
        out, pos = {}, 0
        for s, v in self.components.items():
            k = v.shape[1]
            out[s] = v @ c[pos:pos + k]
            pos += k
        return out

    def degree_of(self, y, tol: float = DEFAULT_TOL) -> int:
        """Degree of a homogeneous element; ValueError otherwise."""
        parts = {s: v for s, v in self.decompose(y).items() if maxabs(v) > tol}
        if len(parts) != 1:
            raise ValueError(f"element is not homogeneous (components in degrees {sorted(parts)})")
        return next(iter(parts))


def verify_corr_grading(grad: CorrGrading, tol: float = DEFAULT_TOL) -> Report:
    rep = Report("verify_corr_grading", tol)
    ag = grad.algebra_grading
    rep.merge(verify_grading(ag, tol), "algebra")
    corr, g = grad.corr, grad.group
    d = corr.dim
    h = grad.hom_basis
    rep.condition("direct_sum", h.shape[1] == d and (d == 0 or rank(h) == d),
                  {"count": h.shape[1], "dim": d})
    empty = np.zeros((d, 0))

    def resid(target: int, vecs: np.ndarray) -> float:
        return span_residual(grad.components.get(target, empty), vecs)

    for s in grad.support:
        Xs = grad.component(s)
        for t in ag.support:
            At = ag.component(t)
            vecs = np.array([corr.act_right(x, a) for x in Xs.T for a in At.T]).T
            rep.residual("right_graded", resid(g.mul(s, t), vecs), {"s": g.label(s), "t": g.label(t)})
            vecs = np.array([corr.act_left(a, x) for x in Xs.T for a in At.T]).T
            rep.residual("left_graded", resid(g.mul(t, s), vecs), {"s": g.label(t), "t": g.label(s)})
        for t in grad.support:
            ips = np.array([corr.ip(x, y) for x in Xs.T for y in grad.component(t).T]).T
            target = g.mul(g.inv(s), t)
            rep.residual("inner_graded", span_residual(ag.components.get(target, np.zeros((ag.algebra.dim, 0))), ips),
                         {"s": g.label(s), "t": g.label(t)})
    return rep


# ---------------------------------------------------------------- generating systems


@dataclass
class GeneratingSystem:
    """Finite lists of coordinates for A0, X0, B0."""

    A0: np.ndarray  # (k, dim A)
    X0: np.ndarray  # (m, d)
    B0: np.ndarray  # (l, dim B)

    def __post_init__(self):
        self.A0 = np.atleast_2d(np.asarray(self.A0, dtype=complex))
        self.X0 = np.atleast_2d(np.asarray(self.X0, dtype=complex))
        self.B0 = np.atleast_2d(np.asarray(self.B0, dtype=complex))

    @classmethod
    def standard(cls, corr: Correspondence) -> "GeneratingSystem":
        return cls(np.eye(corr.left_algebra.dim), np.eye(corr.dim), np.eye(corr.algebra.dim))


def _scalar_member(vec: np.ndarray, pool: np.ndarray, tol: float) -> bool:
    """Is vec a scalar multiple of some pool row (or zero)?"""
    if maxabs(vec) <= tol:
        return True
    for p in pool:
        if maxabs(p) <= tol:
            continue
        c = np.vdot(p, vec) / np.vdot(p, p)
        if maxabs(vec - c * p) <= tol:
            return True
    return False


def verify_generating_system(corr: Correspondence, sys: GeneratingSystem, tol: float = DEFAULT_TOL) -> Report:
    """Spans and span-closure of X0 under A0 and B0.

    Closure up to scalars (the stricter set-level reading) is reported in
    ``info['set_closed']`` without affecting the verdict.
    """
    rep = Report("generating_system", tol)
    A, B, d = corr.left_algebra, corr.algebra, corr.dim
    rep.condition("A0_spans", rank(sys.A0.T) == A.dim if A.dim else True)
    rep.condition("B0_spans", rank(sys.B0.T) == B.dim if B.dim else True)
    rep.condition("X0_spans", (rank(sys.X0.T) == d) if d else True)
    set_closed = True
    X0T = sys.X0.T
    for x in sys.X0:
        for a in sys.A0:
            v = corr.act_left(a, x)
            rep.residual("left_closed", span_residual(X0T, v[:, None]))
            set_closed &= _scalar_member(v, sys.X0, tol)
        for b in sys.B0:
            v = corr.act_right(x, b)
            rep.residual("right_closed", span_residual(X0T, v[:, None]))
            set_closed &= _scalar_member(v, sys.X0, tol)
    rep.info["set_closed"] = bool(set_closed)
    return rep


def _check_algebra_iso(rep: Report, key: str, src: Algebra, dst: Algebra, phi: np.ndarray) -> None:
    n = src.dim
    eye = np.eye(n)
    rep.condition(f"{key}_bijective", phi.shape == (dst.dim, n) and rank(phi) == n if n else dst.dim == 0)
    if phi.shape != (dst.dim, n):
        return
    for i in range(n):
        rep.residual(f"{key}_star", maxabs(phi @ src.star(eye[i]) - dst.star(phi[:, i])), i)
        for j in range(n):
            rep.residual(f"{key}_multiplicative",
                         maxabs(phi @ src.product(eye[i], eye[j]) - dst.product(phi[:, i], phi[:, j])), (i, j))


def _gram(inner: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """[i, j, :] = <vecs_i, vecs_j> for coordinate rows ``vecs``."""
    return np.einsum("ia,jb,abk->ijk", vecs.conj(), vecs, inner, optimize=True)


def _record(rep: Report, key: str, errs: np.ndarray) -> None:
    pos = np.unravel_index(int(np.argmax(errs)), errs.shape)
    rep.residual(key, float(errs[pos]), tuple(int(p) for p in pos))


def verify_correspondence_isomorphism(X: Correspondence, Y: Correspondence, images,
                                      phi_A, phi_B, sys_X: GeneratingSystem | None = None,
                                      sys_Y: GeneratingSystem | None = None,
                                      tol: float = DEFAULT_TOL) -> Report:
    """Certify that X0 -> images extends to a correspondence isomorphism X -> Y.

    ``phi_A`` and ``phi_B`` are coordinate matrices of the coefficient maps.
    """
    rep = Report("verify_correspondence_isomorphism", tol)
    sys_X = sys_X or GeneratingSystem.standard(X)
    images = np.atleast_2d(np.asarray(images, dtype=complex))
    phi_A = np.asarray(phi_A, dtype=complex)
    phi_B = np.asarray(phi_B, dtype=complex)
    rep.condition("generator_count", images.shape[0] == sys_X.X0.shape[0])
    if sys_Y is not None:
        hit = [int(np.argmin([maxabs(im - y) for y in sys_Y.X0])) for im in images]
        ok = all(maxabs(im - sys_Y.X0[h]) <= tol for im, h in zip(images, hit))
        rep.condition("bijection_on_generators", ok and len(set(hit)) == len(hit) == sys_Y.X0.shape[0])
    _check_algebra_iso(rep, "phi_A", X.left_algebra, Y.left_algebra, phi_A)
    _check_algebra_iso(rep, "phi_B", X.algebra, Y.algebra, phi_B)
    if rep.failures and "generator_count" in rep.failures:
        return rep
    # linear extension; residual measures well-definedness
    Phi = images.T @ np.linalg.pinv(sys_X.X0.T) if X.dim else np.zeros((Y.dim, 0))
    rep.residual("well_defined", maxabs(Phi @ sys_X.X0.T - images.T) if X.dim else 0.0)
    rep.condition("bijective", rank(Phi) == X.dim == Y.dim if X.dim else Y.dim == 0,
                  {"rank": rank(Phi), "dim_X": X.dim, "dim_Y": Y.dim})
    X0, A0, B0 = sys_X.X0, sys_X.A0, sys_X.B0
    if X0.shape[0] and X.dim:
        # all generator pairs at once; the witness is the worst pair
        gx = _gram(X.module.inner, X0) @ phi_B.T
        gy = _gram(Y.module.inner, images)
        _record(rep, "inner_product", np.abs(gy - gx).max(axis=-1))
        if A0.shape[0]:
            lx = np.einsum("kij,nj->kni", np.tensordot(A0, X.left, axes=1), X0) @ Phi.T
            ly = np.einsum("kij,nj->kni", np.tensordot(A0 @ phi_A.T, Y.left, axes=1), images)
            _record(rep, "left_action", np.abs(lx - ly).max(axis=-1))
        if B0.shape[0]:
            rx = np.einsum("kij,nj->nki", np.tensordot(B0, X.module.right, axes=1), X0) @ Phi.T
            ry = np.einsum("kij,nj->nki", np.tensordot(B0 @ phi_B.T, Y.module.right, axes=1), images)
            _record(rep, "right_action", np.abs(rx - ry).max(axis=-1))
    rep.info["dims"] = {"X": X.dim, "Y": Y.dim}
    return rep
