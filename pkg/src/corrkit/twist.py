"""Discrete-group twisted tensor products A [x] B and X [x] Y.

Two synchronized models are built for each product:

* concrete: matrices inside A (x) B (x) M_|G| generated by
  i_A(a) = sum_g alpha_{g^-1}(a) (x) 1 (x) E_gg  and
  i_B(b_s) = 1 (x) b_s (x) lambda_s;
* abstract: the vector space A (x) B with structure constants read off
  from (a [x] b_s)(a' [x] b) = a alpha_s(a') [x] b_s b and
  (a [x] b_s)^* = alpha_{s^-1}(a)^* [x] b_s^*.

Both use the coordinates e_i [x] f_j (A basis times the homogeneous basis
of B), so the intertwiner is the identity on coordinates and model
equivalence is an entrywise comparison of structure tensors.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from typing import Sequence

import numpy as np

from ._linalg import independent_columns, maxabs, rank, same_span
from .fdalg import (AlgAction, AlgGrading, FDAlgebra, FiniteGroup, MatrixAlgebra, Signature,
                    StructureAlgebra, classify, function_algebra, group_algebra, make_cyclic_group,
                    regular_matrices, tensor_algebra, verify_action, verify_grading)
from .hilbmod import (CorrAction, Correspondence, CorrGrading, GeneratingSystem, HilbertModule,
                      verify_corr_action, verify_corr_grading, verify_correspondence,
                      verify_correspondence_isomorphism, verify_generating_system)
from .report import DEFAULT_TOL, Report


class PreconditionError(ValueError):
    """An input fails a hypothesis; ``witness`` names the offending data."""

    def __init__(self, msg: str, witness=None):
        super().__init__(msg)
        self.witness = witness


# ---------------------------------------------------------------- Heisenberg pair


@dataclass
class HeisenbergModel:
    group: FiniteGroup
    m: np.ndarray    # m(chi_g) = E_gg
    lam: np.ndarray  # lambda(s) e_h = e_{sh}

    def covariance_report(self, tol: float = DEFAULT_TOL) -> Report:
        rep = Report("heisenberg_model", tol)
        g = self.group
        for s, h in iproduct(range(g.order), range(g.order)):
            lhs = self.lam[s].conj().T @ self.m[h] @ self.lam[s]
            # (chi_h o lambda_s)(k) = chi_h(sk), i.e. chi_{s^-1 h}
            rhs = self.m[g.mul(g.inv(s), h)]
            rep.residual("covariance", maxabs(lhs - rhs), (g.label(s), g.label(h)))
        for s, t in iproduct(range(g.order), range(g.order)):
            rep.residual("representation", maxabs(self.lam[s] @ self.lam[t] - self.lam[g.mul(s, t)]))
            rep.residual("unitary", maxabs(self.lam[s] @ self.lam[s].conj().T - np.eye(g.order)))
        return rep


def heisenberg_model(group: FiniteGroup) -> HeisenbergModel:
    n = group.order
    m = np.zeros((n, n, n))
    m[np.arange(n), np.arange(n), np.arange(n)] = 1.0
    return HeisenbergModel(group, m, regular_matrices(group))


def _shift_unit(group: FiniteGroup, s: int) -> np.ndarray:
    """E_gg lambda_s summed over g is lambda_s; this returns the pieces E_{g, s^-1 g}."""
    n = group.order
    out = np.zeros((n, n, n))
    for g in range(n):
        out[g, g, group.mul(group.inv(s), g)] = 1.0
    return out


def _homogeneous_structure(alg, hom: np.ndarray) -> np.ndarray:
    """Structure constants of ``alg`` against the homogeneous basis ``hom``."""
    n = hom.shape[1]
    hp = np.linalg.pinv(hom)
    out = np.empty((n, n, n), dtype=complex)
    for i, j in iproduct(range(n), range(n)):
        out[i, j] = hp @ alg.product(hom[:, i], hom[:, j])
    return out


# ---------------------------------------------------------------- algebras


class TwistedAlgebra:
    """A [x] B for an action alpha on A and a grading of B by the same finite group."""

    def __init__(self, A: MatrixAlgebra, alpha: AlgAction, B: MatrixAlgebra, grading: AlgGrading,
                 check: bool = True, tol: float = DEFAULT_TOL):
        if alpha.group != grading.group:
            raise PreconditionError("action and grading use different groups")
        if alpha.algebra is not A or grading.algebra is not B:
            if alpha.algebra.dim != A.dim or grading.algebra.dim != B.dim:
                raise PreconditionError("action/grading do not live on the given algebras")
        if check:
            ra, rg = verify_action(alpha, tol), verify_grading(grading, tol)
            if not ra.passed:
                raise PreconditionError("action fails verification", ra.failures)
            if not rg.passed:
                raise PreconditionError("grading fails verification", rg.failures)
        self.A, self.alpha, self.B, self.grading = A, alpha, B, grading
        self.group = alpha.group
        self.heisenberg = heisenberg_model(self.group)
        self.degrees = list(grading.degrees)
        self.hom_mats = B.to_matrix(grading.hom_basis.T)  # f_j as matrices
        self._concrete: MatrixAlgebra | None = None
        self._abstract: StructureAlgebra | None = None

    # sizes
    @property
    def dim(self) -> int:
        return self.A.dim * self.B.dim

    @property
    def ambient(self) -> int:
        return self.A.size * self.B.size * self.group.order

    # embeddings
    def i_A(self, a_mat) -> np.ndarray:
        g = self.group
        out = np.zeros((self.ambient, self.ambient), dtype=complex)
        eyeB = np.eye(self.B.size)
        for h in range(g.order):
            out += np.kron(np.kron(self.alpha.apply_matrix(g.inv(h), a_mat), eyeB), self.heisenberg.m[h])
        return out

    def i_B(self, b_mat) -> np.ndarray:
        out = np.zeros((self.ambient, self.ambient), dtype=complex)
        eyeA = np.eye(self.A.size)
        for s, part in self.grading.decompose(self.B.coords(b_mat)).items():
            out += np.kron(np.kron(eyeA, self.B.to_matrix(part)), self.heisenberg.lam[s])
        return out

    def elementary_matrix(self, i: int, j: int) -> np.ndarray:
        """i_A(e_i) i_B(f_j) without forming either factor."""
        g = self.group
        shift = _shift_unit(g, self.degrees[j])
        out = np.zeros((self.ambient, self.ambient), dtype=complex)
        for h in range(g.order):
            out += np.kron(np.kron(self.alpha.apply_matrix(g.inv(h), self.A.basis[i]), self.hom_mats[j]), shift[h])
        return out

    @property
    def concrete(self) -> MatrixAlgebra:
        if self._concrete is None:
            basis = [self.elementary_matrix(i, j) for i in range(self.A.dim) for j in range(self.B.dim)]
            self._concrete = MatrixAlgebra(np.array(basis), name="A[x]B")
        return self._concrete

    def elementary(self, a, b) -> np.ndarray:
        """Coordinates of a [x] b (a, b given as coordinates in A and B)."""
        return np.kron(np.asarray(a, dtype=complex), self.grading.hom_coords(b))

    def to_matrix(self, u) -> np.ndarray:
        return self.concrete.to_matrix(u)

    @property
    def abstract(self) -> StructureAlgebra:
        if self._abstract is None:
            self._abstract = self._formula_structure()
        return self._abstract

    def _formula_structure(self) -> StructureAlgebra:
        A, g = self.A, self.group
        nA, nB = A.dim, self.B.dim
        eyeA = np.eye(nA)
        mB = _homogeneous_structure(self.B, self.grading.hom_basis)
        # a alpha_s(a') for each degree s in use
        mA = {}
        for s in set(self.degrees):
            imgs = A.to_matrix(self.alpha.maps[s].T)
            mA[s] = A.coords(np.einsum("iab,kbc->ikac", A.basis, imgs))
        mult = np.zeros((nA, nB, nA, nB, nA, nB), dtype=complex)
        for j in range(nB):
            s = self.degrees[j]
            mult[:, j, :, :, :, :] = np.einsum("ikp,lq->iklpq", mA[s], mB[j])
        mult = mult.reshape(nA * nB, nA * nB, nA * nB)
        hp = np.linalg.pinv(self.grading.hom_basis)
        starB = np.array([hp @ self.B.star(self.grading.hom_basis[:, j]) for j in range(nB)]).T
        star = np.zeros((nA, nB, nA, nB), dtype=complex)
        for i, j in iproduct(range(nA), range(nB)):
            s_inv = g.inv(self.degrees[j])
            a_img = A.star(self.alpha.apply(s_inv, eyeA[i]))
            # the star is conjugate linear; store coordinates of (e_i [x] f_j)^*
            star[:, :, i, j] = np.outer(a_img, starB[:, j])
        star = star.reshape(nA * nB, nA * nB)
        return StructureAlgebra(mult, star, name="A[x]B formulas")

    def signature(self) -> Signature:
        return classify(self.abstract)


def twisted_algebra(A: MatrixAlgebra, alpha: AlgAction, B: MatrixAlgebra, grading: AlgGrading,
                    tol: float = DEFAULT_TOL) -> TwistedAlgebra:
    return TwistedAlgebra(A, alpha, B, grading, check=True, tol=tol)


def formula_report(T: TwistedAlgebra, tol: float = DEFAULT_TOL) -> Report:
    """Product, star and commutation identities on homogeneous generator pairs.

    The commutation check uses i_B(b_s) i_A(a) = i_A(alpha_s(a)) i_B(b_s),
    the form consistent with the product formula; the residual of the
    variant with alpha_{s^-1} is kept in ``info`` for comparison.
    """
    rep = Report("twisted_formulas", tol)
    A, B, g = T.A, T.B, T.group
    iA = [T.i_A(e) for e in A.basis]
    iB = [T.i_B(f) for f in T.hom_mats]
    iB_full = [T.i_B(f) for f in B.basis]
    alt = 0.0
    for j, f in enumerate(T.hom_mats):
        s = T.degrees[j]
        for i, e in enumerate(A.basis):
            lhs_c = iB[j] @ iA[i]
            rhs_c = T.i_A(T.alpha.apply_matrix(s, e)) @ iB[j]
            rep.residual("commutation", maxabs(lhs_c - rhs_c), {"a": i, "b_s": j, "s": g.label(s)})
            alt = max(alt, maxabs(lhs_c - T.i_A(T.alpha.apply_matrix(g.inv(s), e)) @ iB[j]))
            left = iA[i] @ iB[j]
            star_rhs = T.i_A(T.alpha.apply_matrix(g.inv(s), e).conj().T) @ T.i_B(f.conj().T)
            rep.residual("star", maxabs(left.conj().T - star_rhs), {"a": i, "b_s": j})
            for k, e2 in enumerate(A.basis):
                for l, fb in enumerate(B.basis):
                    prod = left @ (iA[k] @ iB_full[l])
                    rhs = T.i_A(e @ T.alpha.apply_matrix(s, e2)) @ T.i_B(f @ fb)
                    rep.residual("product", maxabs(prod - rhs), {"a": i, "b_s": j, "a'": k, "b": l})
    rep.info["commutation_inverse_variant"] = alt
    return rep


def model_equivalence_report(T: TwistedAlgebra, tol: float = DEFAULT_TOL) -> Report:
    """Abstract and concrete structure constants agree entrywise."""
    rep = Report("model_equivalence", tol)
    conc = T.concrete.structure()
    ab = T.abstract
    rep.residual("product_constants", maxabs(conc.mult - ab.mult))
    rep.residual("star_constants", maxabs(conc.star_matrix - ab.star_matrix))
    # associativity of the abstract product on generator triples
    m = ab.mult
    left = np.einsum("ijp,pkq->ijkq", m, m)
    right = np.einsum("jkp,ipq->ijkq", m, m)
    rep.residual("abstract_associative", maxabs(left - right))
    return rep


# ---------------------------------------------------------------- correspondences


class TwistedCorrespondence:
    """X [x] Y over A [x] B, carried in both models."""

    def __init__(self, X: Correspondence, act: CorrAction, Y: Correspondence, grad: CorrGrading,
                 check: bool = True, tol: float = DEFAULT_TOL):
        if act.group != grad.group:
            raise PreconditionError("action and grading use different groups")
        if X.realization is None or Y.realization is None:
            raise PreconditionError("both factors need a matrix realization")
        if check:
            ra, rg = verify_corr_action(act, tol), verify_corr_grading(grad, tol)
            if not ra.passed:
                raise PreconditionError("correspondence action fails verification", ra.failures)
            if not rg.passed:
                raise PreconditionError("correspondence grading fails verification", rg.failures)
        self.X, self.act, self.Y, self.grad = X, act, Y, grad
        self.group = act.group
        self.algebra = TwistedAlgebra(X.left_algebra, act.alpha, Y.left_algebra, grad.algebra_grading,
                                      check=False)
        self.degrees = list(grad.degrees)
        self._concrete: Correspondence | None = None
        self._abstract: Correspondence | None = None

    @property
    def dim(self) -> int:
        return self.X.dim * self.Y.dim

    def elementary(self, x, y) -> np.ndarray:
        return np.kron(np.asarray(x, dtype=complex), self.grad.hom_coords(y))

    # concrete corner model
    def module_matrix(self, i: int, j: int) -> np.ndarray:
        g = self.group
        shift = _shift_unit(g, self.degrees[j])
        VX = self.X.realization
        yj = self.Y.realization.to_matrix(self.grad.hom_basis[:, j])
        eye = np.eye(self.X.dim)
        out = None
        for h in range(g.order):
            term = np.kron(np.kron(VX.to_matrix(self.act.apply(g.inv(h), eye[i])), yj), shift[h])
            out = term if out is None else out + term
        return out

    def left_matrix(self, k: int, l: int) -> np.ndarray:
        g, T = self.group, self.algebra
        shift = _shift_unit(g, T.degrees[l])
        eyeA = np.eye(T.A.dim)
        phiY = np.tensordot(T.grading.hom_basis[:, l], self.Y.phi_ambient, axes=1)
        out = None
        for h in range(g.order):
            a = self.act.alpha.apply(g.inv(h), eyeA[k])
            phiX = np.tensordot(a, self.X.phi_ambient, axes=1)
            term = np.kron(np.kron(phiX, phiY), shift[h])
            out = term if out is None else out + term
        return out

    @property
    def concrete(self) -> Correspondence:
        if self._concrete is None:
            V = np.array([self.module_matrix(i, j) for i in range(self.X.dim) for j in range(self.Y.dim)])
            if self.dim == 0:
                MX, MY = self.X.realization.shape[0], self.Y.realization.shape[0]
                V = np.zeros((0, MX * MY * self.group.order, self.algebra.ambient))
            mod = HilbertModule.from_realization(self.algebra.concrete, V)
            nA, nB = self.algebra.A.dim, self.algebra.B.dim
            phi = np.array([self.left_matrix(k, l) for k in range(nA) for l in range(nB)])
            self._concrete = Correspondence.from_realization(self.algebra.concrete, mod, phi, name="X[x]Y")
        return self._concrete

    @property
    def abstract(self) -> Correspondence:
        if self._abstract is None:
            self._abstract = self._formula_correspondence()
        return self._abstract

    def _formula_correspondence(self) -> Correspondence:
        X, Y, T, g = self.X, self.Y, self.algebra, self.group
        dX, dY, nA, nB = X.dim, Y.dim, T.A.dim, T.B.dim
        eyeA = np.eye(nA)
        H, Hp = self.grad.hom_basis, (np.linalg.pinv(self.grad.hom_basis) if dY else np.zeros((0, 0)))
        HB = T.grading.hom_basis
        HBp = np.linalg.pinv(HB)
        # Y structure in homogeneous coordinates
        rightY = np.array([Hp @ Y.module.right_operator(HB[:, l]) @ H for l in range(nB)])
        leftY = np.array([Hp @ Y.phi(HB[:, l]) @ H for l in range(nB)])
        innerY = np.einsum("ai,bj,abk->ijk", H.conj(), H, Y.module.inner) @ HBp.T
        right = np.zeros((nA, nB, dX, dY, dX, dY), dtype=complex)
        left = np.zeros_like(right)
        inner = np.zeros((dX, dY, dX, dY, nA, nB), dtype=complex)
        for j in range(dY):
            s = self.degrees[j]
            for k in range(nA):
                Rk = X.module.right_operator(self.act.alpha.apply(s, eyeA[k]))
                # (x_i [x] y_j)(e_k [x] f_l) = x_i alpha_s(e_k) [x] y_j f_l
                right[k, :, :, :, :, j] = np.einsum("pi,lq->lpqi", Rk, rightY[:, :, j])
            for i, i2 in iproduct(range(dX), range(dX)):
                a = self.act.alpha.apply(g.inv(s), X.module.inner[i, i2])
                inner[i, j, i2, :, :, :] = np.einsum("a,lb->lab", a, innerY[j])
        for l in range(nB):
            t = T.degrees[l]
            G = self.act.gammas[t]
            for k in range(nA):
                # (e_k [x] f_l)(x_i [x] y_j) = e_k gamma_t(x_i) [x] f_l y_j
                left[k, l] = np.einsum("pi,qj->pqij", X.left[k] @ G, leftY[l])
        right = right.reshape(nA * nB, dX * dY, dX * dY)
        left = left.reshape(nA * nB, dX * dY, dX * dY)
        inner = inner.reshape(dX * dY, dX * dY, nA * nB)
        mod = HilbertModule(T.abstract, right, inner)
        return Correspondence(mod, T.abstract, left, name="X[x]Y formulas")


def twisted_correspondence(X: Correspondence, act: CorrAction, Y: Correspondence, grad: CorrGrading,
                           tol: float = DEFAULT_TOL) -> TwistedCorrespondence:
    return TwistedCorrespondence(X, act, Y, grad, check=True, tol=tol)


def correspondence_equivalence_report(tc: TwistedCorrespondence, tol: float = DEFAULT_TOL) -> Report:
    """Formula model against the concrete corner model, entrywise."""
    rep = Report("correspondence_model_equivalence", tol)
    rep.merge(model_equivalence_report(tc.algebra, tol), "algebra")
    c, a = tc.concrete, tc.abstract
    rep.residual("right_action", maxabs(c.module.right - a.module.right))
    rep.residual("inner_product", maxabs(c.module.inner - a.module.inner))
    rep.residual("left_action", maxabs(c.left - a.left))
    rep.merge(verify_correspondence(c, tol), "concrete")
    return rep


def compacts_report(tc: TwistedCorrespondence, tol: float = DEFAULT_TOL) -> Report:
    """K(X [x] Y) and K(X) [x] K(Y) span the same subalgebra of the ambient matrices."""
    rep = Report("compacts_product", tol)
    X, Y, g = tc.X, tc.Y, tc.group
    VX, VY = X.realization.vectors, tc.Y.realization.to_matrix(tc.grad.hom_basis.T)
    dX, dY = X.dim, Y.dim
    if dX * dY == 0:
        rep.info["dims"] = (0, 0)
        return rep
    KX = np.array([VX[i] @ VX[j].conj().T for i in range(dX) for j in range(dX)])
    keepX = independent_columns(KX.reshape(len(KX), -1).T)
    KXalg = MatrixAlgebra(KX[keepX])
    eye = np.eye(dX)
    maps = []
    for s in range(g.order):
        Gm = X.realization.to_matrix(tc.act.gammas[s].T)  # gamma_s(x_i)
        imgs = np.array([Gm[i] @ Gm[j].conj().T for i in range(dX) for j in range(dX)])[keepX]
        maps.append(KXalg.coords(imgs).T)
    gammaK = AlgAction(g, KXalg, maps)
    KY, degs = [], []
    for i, j in iproduct(range(dY), range(dY)):
        KY.append(VY[i] @ VY[j].conj().T)
        degs.append(g.mul(tc.degrees[i], g.inv(tc.degrees[j])))
    KY = np.array(KY)
    keepY = independent_columns(KY.reshape(len(KY), -1).T)
    KYalg = MatrixAlgebra(KY[keepY])
    comps: dict[int, list] = {}
    for pos, k in enumerate(keepY):
        comps.setdefault(degs[k], []).append(np.eye(len(keepY))[pos])
    gradK = AlgGrading(g, KYalg, comps)
    rep.merge(verify_action(gammaK, tol), "gamma_on_K(X)")
    rep.merge(verify_grading(gradK, tol), "grading_on_K(Y)")
    KT = TwistedAlgebra(KXalg, gammaK, KYalg, gradK, check=False)
    conc = tc.concrete
    V = conc.realization.vectors
    KXY = np.array([V[p] @ V[q].conj().T for p in range(tc.dim) for q in range(tc.dim)])
    lhs = KXY.reshape(len(KXY), -1).T
    rhs = KT.concrete.basis.reshape(KT.concrete.dim, -1).T
    rep.residual("span_equality", same_span(lhs, rhs))
    rep.info["dims"] = (rank(lhs), KT.concrete.dim)
    rep.condition("dimension", rank(lhs) == KT.concrete.dim)
    return rep


def twisted_generating_system(tc: TwistedCorrespondence, X0, A0, Y0, B0,
                              tol: float = DEFAULT_TOL) -> tuple[GeneratingSystem, Report]:
    """Elementary tensors of generators, after checking stability and homogeneity."""
    X0, A0 = np.atleast_2d(np.asarray(X0, dtype=complex)), np.atleast_2d(np.asarray(A0, dtype=complex))
    Y0, B0 = np.atleast_2d(np.asarray(Y0, dtype=complex)), np.atleast_2d(np.asarray(B0, dtype=complex))
    g = tc.group

    def member(v, pool):
        return any(maxabs(v - p) <= tol for p in pool)

    for s in range(g.order):
        for i, x in enumerate(X0):
            if not member(tc.act.apply(s, x), X0):
                raise PreconditionError("X0 is not stable under the action", {"s": g.label(s), "x": i})
        for i, a in enumerate(A0):
            if not member(tc.act.alpha.apply(s, a), A0):
                raise PreconditionError("A0 is not stable under the action", {"s": g.label(s), "a": i})
    for i, y in enumerate(Y0):
        try:
            tc.grad.degree_of(y, tol)
        except ValueError as err:
            raise PreconditionError("Y0 has a non-homogeneous element", {"y": i, "detail": str(err)})
    for i, b in enumerate(B0):
        parts = {s for s, v in tc.algebra.grading.decompose(b).items() if maxabs(v) > tol}
        if len(parts) > 1:
            raise PreconditionError("B0 has a non-homogeneous element", {"b": i, "degrees": sorted(parts)})
    T = tc.algebra
    sysXY = GeneratingSystem(
        np.array([T.elementary(a, b) for a in A0 for b in B0]),
        np.array([tc.elementary(x, y) for x in X0 for y in Y0]),
        np.array([T.elementary(a, b) for a in A0 for b in B0]),
    )
    rep = verify_generating_system(tc.concrete, sysXY, tol)
    return sysXY, rep


# ---------------------------------------------------------------- Z_2 graded tensor products


def _sign_action(grading: AlgGrading) -> AlgAction:
    """The Z_2 action (-1)^deg associated to a Z_2 grading of an algebra."""
    g = grading.group
    H = grading.hom_basis
    signs = np.array([1.0 if d == g.identity else -1.0 for d in grading.degrees])
    flip = H @ np.diag(signs) @ np.linalg.pinv(H)
    return AlgAction(g, grading.algebra, [np.eye(grading.algebra.dim), flip] if g.identity == 0
                     else [flip, np.eye(grading.algebra.dim)])


def grading_action(grad: CorrGrading) -> CorrAction:
    """Action (gamma, alpha) of Z_2 induced by a Z_2 grading of a correspondence."""
    g = grad.group
    if g.order != 2:
        raise PreconditionError("graded tensor products need Z_2 gradings")
    alpha = _sign_action(grad.algebra_grading)
    H = grad.hom_basis
    signs = np.array([1.0 if d == g.identity else -1.0 for d in grad.degrees])
    flip = H @ np.diag(signs) @ np.linalg.pinv(H)
    eye = np.eye(grad.corr.dim)
    gammas = [eye, flip] if g.identity == 0 else [flip, eye]
    return CorrAction(g, grad.corr, gammas, alpha)


@dataclass
class GradedTensorResult:
    graded: Correspondence            # X (x)^ Y with Koszul signs
    twisted: TwistedCorrespondence    # X [x] Y from the induced action and grading
    phi: np.ndarray                   # algebra isomorphism, coordinates
    images: np.ndarray                # x (x)^ y -> x [x] y on the homogeneous generators
    report: Report


def _parity(grading, g: FiniteGroup) -> np.ndarray:
    return np.array([0 if d == g.identity else 1 for d in grading.degrees])


def graded_tensor_product(X: Correspondence, gradX: CorrGrading, Y: Correspondence, gradY: CorrGrading,
                          tol: float = DEFAULT_TOL) -> GradedTensorResult:
    """Koszul-signed X (x)^ Y and its certified identification with X [x] Y."""
    g = gradX.group
    if g.order != 2 or gradY.group.order != 2:
        raise PreconditionError("graded tensor products need Z_2 gradings")
    for r in (verify_corr_grading(gradX, tol), verify_corr_grading(gradY, tol)):
        if not r.passed:
            raise PreconditionError("grading fails verification", r.failures)
    A, B = X.left_algebra, Y.left_algebra
    gA, gB = gradX.algebra_grading, gradY.algebra_grading
    HA, HB, HX, HY = gA.hom_basis, gB.hom_basis, gradX.hom_basis, gradY.hom_basis
    pA, pB, pX, pY = _parity(gA, g), _parity(gB, g), _parity(gradX, g), _parity(gradY, g)
    mA, mB = _homogeneous_structure(A, HA), _homogeneous_structure(B, HB)
    nA, nB, dX, dY = A.dim, B.dim, X.dim, Y.dim
    HAp, HBp = np.linalg.pinv(HA), np.linalg.pinv(HB)
    HXp = np.linalg.pinv(HX) if dX else HX.T
    HYp = np.linalg.pinv(HY) if dY else HY.T

    # algebra: (a (x) b)(a' (x) b') = (-1)^{|b||a'|} aa' (x) bb'
    sign_ab = (-1.0) ** np.outer(pB, pA)  # [j, k] = |b_j||a_k|
    mult = np.einsum("ikp,jlq,jk->ijklpq", mA, mB, sign_ab).reshape(nA * nB, nA * nB, nA * nB)
    starA = np.array([HAp @ A.star(HA[:, i]) for i in range(nA)]).T
    starB = np.array([HBp @ B.star(HB[:, j]) for j in range(nB)]).T
    star = np.einsum("pi,qj,ij->pqij", starA, starB, (-1.0) ** np.outer(pA, pB)).reshape(nA * nB, nA * nB)
    Ahat = StructureAlgebra(mult, star, "A(x)^B")

    # module pieces in homogeneous coordinates
    rX = np.array([HXp @ X.module.right_operator(HA[:, k]) @ HX for k in range(nA)])
    rY = np.array([HYp @ Y.module.right_operator(HB[:, l]) @ HY for l in range(nB)])
    lX = np.array([HXp @ X.phi(HA[:, k]) @ HX for k in range(nA)])
    lY = np.array([HYp @ Y.phi(HB[:, l]) @ HY for l in range(nB)])
    iX = np.einsum("ai,bj,abk->ijk", HX.conj(), HX, X.module.inner) @ HAp.T
    iY = np.einsum("ai,bj,abk->ijk", HY.conj(), HY, Y.module.inner) @ HBp.T
    # right: (x (x) y)(a (x) b) = (-1)^{|y||a|} xa (x) yb
    right = np.einsum("kpi,lqj,jk->klpqij", rX, rY, (-1.0) ** np.outer(pY, pA))
    # left: (a (x) b)(x (x) y) = (-1)^{|b||x|} ax (x) by
    left = np.einsum("kpi,lqj,li->klpqij", lX, lY, (-1.0) ** np.outer(pB, pX))
    # inner: (-1)^{|y1|(|x1|+|x2|)} <x1,x2> (x) <y1,y2>
    sgn = (-1.0) ** (pY[None, :, None, None] * (pX[:, None, None, None] + pX[None, None, :, None]))
    inner = np.einsum("ikp,jlq,ijkl->ijklpq", iX, iY, np.broadcast_to(sgn, (dX, dY, dX, dY)))
    right = right.reshape(nA * nB, dX * dY, dX * dY)
    left = left.reshape(nA * nB, dX * dY, dX * dY)
    inner = inner.reshape(dX * dY, dX * dY, nA * nB)
    graded = Correspondence(HilbertModule(Ahat, right, inner), Ahat, left, name="X(x)^Y")

    act = grading_action(gradX)
    tc = TwistedCorrespondence(X, act, Y, gradY, check=True, tol=tol)
    # x (x)^ y -> x [x] y: homogeneous basis of X (in X coordinates) times homogeneous basis of Y
    images = np.array([np.kron(HX[:, i], np.eye(dY)[j]) for i in range(dX) for j in range(dY)])
    phi = np.array([np.kron(HA[:, i], np.eye(nB)[j]) for i in range(nA) for j in range(nB)]).T
    rep = Report("graded_tensor_product", tol)
    for label, target in (("abstract", tc.abstract), ("concrete", tc.concrete)):
        rep.merge(verify_correspondence_isomorphism(graded, target, images, phi, phi, tol=tol), label)
    rep.info["signature"] = classify(Ahat).blocks
    return GradedTensorResult(graded, tc, phi, images, rep)


def koszul_sign_report(res: GradedTensorResult, gradX: CorrGrading, gradY: CorrGrading,
                       tol: float = DEFAULT_TOL) -> Report:
    """Check the displayed inner-product sign directly on all odd/odd generator pairs."""
    rep = Report("koszul_signs", tol)
    g = gradX.group
    pX, pY = _parity(gradX, g), _parity(gradY, g)
    dX, dY = len(pX), len(pY)
    T = res.twisted.algebra
    conc = res.twisted.concrete
    gA = res.twisted.algebra.grading  # B side grading
    HX, HY = gradX.hom_basis, gradY.hom_basis
    X, Y = res.twisted.X, res.twisted.Y
    n_odd = 0
    for i1, j1, i2, j2 in iproduct(range(dX), range(dY), range(dX), range(dY)):
        x1, x2, y1, y2 = HX[:, i1], HX[:, i2], HY[:, j1], HY[:, j2]
        lhs = conc.ip(np.kron(x1, np.eye(dY)[j1]), np.kron(x2, np.eye(dY)[j2]))
        sign = (-1.0) ** (pY[j1] * (pX[i1] + pX[i2]))
        rhs = sign * T.elementary(X.ip(x1, x2), Y.ip(y1, y2))
        rep.residual("inner_sign", maxabs(lhs - rhs), (i1, j1, i2, j2))
        if pY[j1] and (pX[i1] + pX[i2]) % 2:
            n_odd += 1
    rep.info["sign_flipping_pairs"] = n_odd
    return rep


# ---------------------------------------------------------------- Clifford fixtures


def clifford_one() -> tuple[Correspondence, CorrGrading]:
    """Cl_1 = C + C e, e odd self-adjoint unitary, realized as diag blocks; a correspondence over itself."""
    z2 = make_cyclic_group(2)
    alg = FDAlgebra([1, 1], name="Cl1")
    one, e = np.eye(2), np.diag([1.0, -1.0])
    grading = AlgGrading(z2, alg, {0: [one], 1: [e]})
    corr = Correspondence.over_itself(alg, name="Cl1")
    return corr, CorrGrading.on_algebra(grading, corr)


# ---------------------------------------------------------------- crossed products


@dataclass
class CrossedProduct:
    twisted: TwistedCorrespondence
    report: Report


def crossed_by_action(X: Correspondence, act: CorrAction, tol: float = DEFAULT_TOL) -> CrossedProduct:
    """X [x] C*(G); generators x [x] u_s satisfy the crossed-product relations."""
    g = act.group
    ga = group_algebra(g)
    CG = Correspondence.over_itself(ga.algebra, name="C*(G)")
    grad = CorrGrading.on_algebra(ga.grading, CG)
    tc = TwistedCorrespondence(X, act, CG, grad, check=True, tol=tol)
    rep = Report("crossed_by_action", tol)
    conc, T = tc.concrete, tc.algebra
    eyeX, eyeA, eyeG = np.eye(X.dim), np.eye(X.left_algebra.dim), np.eye(g.order)
    u = lambda s: eyeG[s]  # u_s in group-algebra coordinates
    for s, t in iproduct(range(g.order), range(g.order)):
        for i in range(X.dim):
            xs = tc.elementary(eyeX[i], u(s))
            for k in range(X.left_algebra.dim):
                # (x [x] u_s)(a [x] u_t) = x alpha_s(a) [x] u_st
                lhs = conc.act_right(xs, T.elementary(eyeA[k], u(t)))
                rhs = tc.elementary(X.act_right(eyeX[i], act.alpha.apply(s, eyeA[k])), u(g.mul(s, t)))
                rep.residual("right_action", maxabs(lhs - rhs), (i, k, g.label(s), g.label(t)))
                # (a [x] u_s)(x [x] u_t) = a gamma_s(x) [x] u_st
                lhs = conc.act_left(T.elementary(eyeA[k], u(s)), tc.elementary(eyeX[i], u(t)))
                rhs = tc.elementary(X.act_left(eyeA[k], act.apply(s, eyeX[i])), u(g.mul(s, t)))
                rep.residual("left_action", maxabs(lhs - rhs), (k, i, g.label(s), g.label(t)))
            for j in range(X.dim):
                # <x [x] u_s, y [x] u_t> = alpha_{s^-1}(<x,y>) [x] u_{s^-1 t}
                lhs = conc.ip(xs, tc.elementary(eyeX[j], u(t)))
                rhs = T.elementary(act.alpha.apply(g.inv(s), X.ip(eyeX[i], eyeX[j])), u(g.mul(g.inv(s), t)))
                rep.residual("inner_product", maxabs(lhs - rhs), (i, j, g.label(s), g.label(t)))
    return CrossedProduct(tc, rep)


def crossed_by_coaction(Y: Correspondence, grad: CorrGrading, tol: float = DEFAULT_TOL) -> CrossedProduct:
    """c0(G) [x] Y, read with reversed generators y_s [x] f := i(y_s) i(f).

    Commutation turns y_s [x] f into lambda_s(f) [x] y_s, so the product is
    carried as the twisted correspondence of c0(G) (with translation) and Y.
    """
    g = grad.group
    c0, lam = function_algebra(g)
    C0 = Correspondence.over_itself(c0, name="c0(G)")
    act = CorrAction.on_algebra(lam, C0)
    tc = TwistedCorrespondence(C0, act, Y, grad, check=True, tol=tol)
    rep = Report("crossed_by_coaction", tol)
    conc, T = tc.concrete, tc.algebra
    ag = grad.algebra_grading
    eyeF = np.eye(g.order)

    def gen(y, s, f):
        return tc.elementary(lam.apply(s, f), y)

    def agen(a, s, f):
        return T.elementary(lam.apply(s, f), a)

    for s in grad.support:
        for y in grad.component(s).T:
            for t in ag.support:
                for a in ag.component(t).T:
                    for f, h in iproduct(range(g.order), range(g.order)):
                        F, H = eyeF[f], eyeF[h]
                        # (y_s [x] f)(a_t [x] h) = y_s a_t [x] lambda_{t^-1}(f) h
                        lhs = conc.act_right(gen(y, s, F), agen(a, t, H))
                        rhs = gen(Y.act_right(y, a), g.mul(s, t), lam.apply(g.inv(t), F) * H)
                        rep.residual("right_action", maxabs(lhs - rhs), (g.label(s), g.label(t), f, h))
                        # (a_t [x] f)(y_s [x] h) = a_t y_s [x] lambda_{s^-1}(f) h
                        lhs = conc.act_left(agen(a, t, F), gen(y, s, H))
                        rhs = gen(Y.act_left(a, y), g.mul(t, s), lam.apply(g.inv(s), F) * H)
                        rep.residual("left_action", maxabs(lhs - rhs), (g.label(t), g.label(s), f, h))
            for t in grad.support:
                for y2 in grad.component(t).T:
                    for f, h in iproduct(range(g.order), range(g.order)):
                        F, H = eyeF[f], eyeF[h]
                        # <y_s [x] f, y_t [x] h> = <y_s, y_t> [x] lambda_{t^-1 s}(conj f) h
                        lhs = conc.ip(gen(y, s, F), gen(y2, t, H))
                        rhs = agen(Y.ip(y, y2), g.mul(g.inv(s), t), lam.apply(g.mul(g.inv(t), s), F.conj()) * H)
                        rep.residual("inner_product", maxabs(lhs - rhs), (g.label(s), g.label(t), f, h))
    return CrossedProduct(tc, rep)


# ---------------------------------------------------------------- sigma_23 flip


def _leg_permutation(dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Permutation matrix P with P (v_0 (x) v_1 (x) ...) = v_order[0] (x) v_order[1] (x) ..."""
    total = int(np.prod(dims))
    idx = np.arange(total).reshape(dims)
    perm = idx.transpose(order).reshape(-1)
    P = np.zeros((total, total))
    P[np.arange(total), perm] = 1.0
    return P


def flip_sigma23(A: MatrixAlgebra, alpha: AlgAction, B: MatrixAlgebra, grading: AlgGrading,
                 C: MatrixAlgebra, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, Report]:
    """Certify sigma_23: A [x] (B (x) C) -> (A (x) C) [x] B.

    Returns the coordinate matrix of the map and a report.
    """
    g = alpha.group
    BC = tensor_algebra(B, C)
    eC = np.eye(C.dim)
    compsBC = {s: [np.kron(v, eC[c]) for v in grading.component(s).T for c in range(C.dim)]
               for s in grading.support}
    gradBC = AlgGrading(g, BC, compsBC)
    AC = tensor_algebra(A, C)
    alphaAC = AlgAction(g, AC, [np.kron(alpha.maps[s], np.eye(C.dim)) for s in range(g.order)])
    T1 = TwistedAlgebra(A, alpha, BC, gradBC, check=True, tol=tol)
    T2 = TwistedAlgebra(AC, alphaAC, B, grading, check=True, tol=tol)
    P = _leg_permutation([A.size, B.size, C.size, g.order], [0, 2, 1, 3])
    rep = Report("flip_sigma23", tol)
    K1, K2 = T1.concrete, T2.concrete
    imgs = np.einsum("ab,kbc,dc->kad", P, K1.basis, P)
    rep.residual("image_in_target", K2.membership_residual(imgs))
    M = K2.coords(imgs).T  # coordinate matrix T1 -> T2
    rep.condition("bijective", rank(M) == K1.dim == K2.dim)
    eA, eB = np.eye(A.dim), np.eye(B.dim)
    for i, j, c in iproduct(range(A.dim), range(B.dim), range(C.dim)):
        src = T1.elementary(eA[i], np.kron(eB[j], eC[c]))
        dst = T2.elementary(np.kron(eA[i], eC[c]), eB[j])
        rep.residual("elementary", maxabs(M @ src - dst), (i, j, c))
    S1, S2 = K1.structure(), K2.structure()
    eye = np.eye(K1.dim)
    for p in range(K1.dim):
        rep.residual("star", maxabs(M @ S1.star(eye[p]) - S2.star(M[:, p])))
        for q in range(K1.dim):
            rep.residual("multiplicative", maxabs(M @ S1.product(eye[p], eye[q]) - S2.product(M[:, p], M[:, q])))
    rep.info["dim"] = K1.dim
    return M, rep
