"""Z-balanced twisted tensor products for compact abelian Z.

Z is either a finite cyclic group Z_n (dual group Z_n, characters
z -> exp(2 pi i k z / n)) or the circle (dual group Z, characters
z -> z^k for a unit complex z).  A grading by the dual group determines
the phase action mu_z = sum_k chi_k(z) P_k, so no separate action data is
needed.  Haar integrals become finite averages: over all of Z_n, or over
enough roots of unity to separate the finitely many degrees in use.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Iterable, Mapping

import numpy as np

from ._linalg import maxabs, rank, same_span, span_residual
from .fdalg import AlgAction, AlgGrading, FiniteGroup, MatrixAlgebra, _as_coords
from .report import DEFAULT_TOL, Report
from .twist import PreconditionError, TwistedAlgebra


class DualGrading:
    """Finitely supported grading of an algebra by the dual of Z.

    ``modulus`` is n for Z = Z_n and None for Z = T (integer degrees).
    """

    def __init__(self, algebra, components: Mapping[int, Iterable], modulus: int | None = None):
        self.algebra = algebra
        self.modulus = modulus
        comps: dict[int, np.ndarray] = {}
        for k in sorted(components):
            key = int(k) % modulus if modulus else int(k)
            vecs = [_as_coords(algebra, x) if isinstance(algebra, MatrixAlgebra) else np.asarray(x, dtype=complex)
                    for x in components[k]]
            if vecs:
                block = np.array(vecs, dtype=complex).T
                comps[key] = np.concatenate([comps[key], block], axis=1) if key in comps else block
        self.components = dict(sorted(comps.items()))
        self.degrees = [k for k, v in self.components.items() for _ in range(v.shape[1])]
        self.hom_basis = (np.concatenate(list(self.components.values()), axis=1) if self.components
                          else np.zeros((algebra.dim, 0), dtype=complex))
        self._hpinv = np.linalg.pinv(self.hom_basis) if self.hom_basis.size else self.hom_basis.T

    @classmethod
    def from_grading(cls, grading: AlgGrading) -> "DualGrading":
        """Reinterpret a grading by Z_n (group index = residue) as a dual grading."""
        g = grading.group
        n = g.order
        for s in range(n):
            for t in range(n):
                if g.mul(s, t) != (s + t) % n:
                    raise PreconditionError("grading group is not Z_n with index = residue")
        return cls(grading.algebra, {s: list(v.T) for s, v in grading.components.items()}, n)

    @classmethod
    def trivial(cls, algebra, modulus: int | None = None) -> "DualGrading":
        return cls(algebra, {0: list(np.eye(algebra.dim))}, modulus)

    @property
    def support(self) -> list[int]:
        return list(self.components)

    def add(self, k: int, l: int) -> int:
        return (k + l) % self.modulus if self.modulus else k + l

    def neg(self, k: int) -> int:
        return (-k) % self.modulus if self.modulus else -k

    def component(self, k: int) -> np.ndarray:
        return self.components.get(k, np.zeros((self.algebra.dim, 0), dtype=complex))

    def projector(self, k: int) -> np.ndarray:
        mask = np.array([d == k for d in self.degrees])
        if not mask.any():
            return np.zeros((self.algebra.dim, self.algebra.dim), dtype=complex)
        return self.hom_basis[:, mask] @ self._hpinv[mask, :]

    def character(self, k: int, z) -> complex:
        if self.modulus:
            return complex(np.exp(2j * np.pi * k * int(z) / self.modulus))
        return complex(z) ** k

    def phase(self, z) -> np.ndarray:
        """Coordinate matrix of the associated action mu_z."""
        out = np.zeros((self.algebra.dim, self.algebra.dim), dtype=complex)
        for k in self.support:
            out += self.character(k, z) * self.projector(k)
        return out

    def inverse_point(self, z):
        return (-int(z)) % self.modulus if self.modulus else 1 / complex(z)

    def associated_action(self, group: FiniteGroup) -> AlgAction:
        """mu as an AlgAction of Z_n (finite modulus only)."""
        if not self.modulus or group.order != self.modulus:
            raise PreconditionError("associated action needs a finite modulus matching the group")
        return AlgAction(group, self.algebra, [self.phase(z) for z in range(self.modulus)])

    def verify(self, tol: float = DEFAULT_TOL) -> Report:
        rep = Report("dual_grading", tol)
        alg = self.algebra
        rep.condition("direct_sum", rank(self.hom_basis) == alg.dim == self.hom_basis.shape[1],
                      {"rank": rank(self.hom_basis), "dim": alg.dim})
        for k, l in iproduct(self.support, self.support):
            target = self.component(self.add(k, l))
            for a in self.component(k).T:
                for b in self.component(l).T:
                    p = alg.product(a, b)
                    rep.residual("multiplicative", span_residual(target, p[:, None]) if target.shape[1]
                                 else maxabs(p), (k, l))
        for k in self.support:
            target = self.component(self.neg(k))
            for a in self.component(k).T:
                s = alg.star(a)
                rep.residual("star", span_residual(target, s[:, None]) if target.shape[1] else maxabs(s), k)
        return rep


def sample_points(*gradings: DualGrading) -> list:
    """Points of Z whose average separates every degree difference in use."""
    mods = {g.modulus for g in gradings}
    if len(mods) != 1:
        raise PreconditionError("dual gradings use different groups")
    mod = mods.pop()
    if mod:
        return list(range(mod))
    span = max([abs(d) for g in gradings for d in g.support] + [0])
    n = 2 * span + 1
    return [complex(np.exp(2j * np.pi * j / n)) for j in range(n)]


def _check_compatible(T: TwistedAlgebra, gA: DualGrading, gB: DualGrading, tol: float) -> Report:
    """mu commutes with alpha and nu preserves the G-grading, so lambda is well defined."""
    rep = Report("balanced_compatibility", tol)
    rep.merge(gA.verify(tol), "A")
    rep.merge(gB.verify(tol), "B")
    for k in gA.support:
        P = gA.projector(k)
        for s in range(T.group.order):
            M = T.alpha.maps[s]
            rep.residual("mu_commutes_alpha", maxabs(P @ M - M @ P), (k, T.group.label(s)))
    for k in gB.support:
        P = gB.projector(k)
        for s in T.grading.support:
            Q = T.grading.projector(s)
            rep.residual("nu_preserves_grading", maxabs(P @ Q - Q @ P), (k, T.group.label(s)))
    return rep


def _b_in_hom(T: TwistedAlgebra, M: np.ndarray) -> np.ndarray:
    H = T.grading.hom_basis
    return np.linalg.pinv(H) @ M @ H


def lambda_matrix(T: TwistedAlgebra, gA: DualGrading, gB: DualGrading, z) -> np.ndarray:
    """lambda_z = mu_z [x] nu_{z^-1} on twisted-product coordinates."""
    return np.kron(gA.phase(z), _b_in_hom(T, gB.phase(gB.inverse_point(z))))


def lambda_action(T: TwistedAlgebra, gA: DualGrading, gB: DualGrading, z, d) -> np.ndarray:
    d = np.asarray(d, dtype=complex)
    if d.shape != (T.dim,):
        raise PreconditionError("element has the wrong number of coordinates", {"shape": d.shape})
    return lambda_matrix(T, gA, gB, z) @ d


def expectation_matrix(T: TwistedAlgebra, gA: DualGrading, gB: DualGrading) -> np.ndarray:
    """Upsilon = sum_chi P^A_chi (x) P^B_chi."""
    out = np.zeros((T.dim, T.dim), dtype=complex)
    for k in gA.support:
        if k in gB.components:
            out += np.kron(gA.projector(k), _b_in_hom(T, gB.projector(k)))
    return out


def averaged_expectation(T: TwistedAlgebra, gA: DualGrading, gB: DualGrading) -> np.ndarray:
    """The Haar average of lambda_z, as an exact finite sum."""
    pts = sample_points(gA, gB)
    return sum(lambda_matrix(T, gA, gB, z) for z in pts) / len(pts)


def conditional_expectation(T: TwistedAlgebra, gA: DualGrading, gB: DualGrading, d) -> np.ndarray:
    return expectation_matrix(T, gA, gB) @ np.asarray(d, dtype=complex)


@dataclass
class BalancedAlgebra:
    parent: TwistedAlgebra
    gA: DualGrading
    gB: DualGrading
    components: dict = field(default_factory=dict)  # chi -> columns of S_chi (twisted coordinates)
    report: Report | None = None

    @property
    def basis(self) -> np.ndarray:
        cols = [v for v in self.components.values()]
        return np.concatenate(cols, axis=1) if cols else np.zeros((self.parent.dim, 0), dtype=complex)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def support(self) -> list[int]:
        return list(self.components)

    def contains(self, d) -> float:
        """Distance-type residual of d from the balanced subalgebra."""
        d = np.asarray(d, dtype=complex)
        return span_residual(self.basis, d[:, None]) if self.dim else maxabs(d)


def balanced_subalgebra(T: TwistedAlgebra, gA: DualGrading, gB: DualGrading,
                        tol: float = DEFAULT_TOL) -> BalancedAlgebra:
    rep = _check_compatible(T, gA, gB, tol)
    if not rep.passed:
        raise PreconditionError("dual gradings are not compatible with the twisted product", rep.failures)
    comps = {}
    for k in gA.support:
        if k not in gB.components:
            continue
        cols = [T.elementary(a, b) for a in gA.component(k).T for b in gB.component(k).T]
        comps[k] = np.array(cols).T
    bal = BalancedAlgebra(T, gA, gB, comps, rep)
    S = T.abstract
    basis = bal.basis
    for p in range(bal.dim):
        u = basis[:, p]
        rep.residual("star_closed", bal.contains(S.star(u)))
        for q in range(bal.dim):
            rep.residual("product_closed", bal.contains(S.product(u, basis[:, q])))
    for z in sample_points(gA, gB):
        L = lambda_matrix(T, gA, gB, z)
        rep.residual("fixed_by_lambda", maxabs(L @ basis - basis) if bal.dim else 0.0)
    E = expectation_matrix(T, gA, gB)
    # fixed-point characterization: the fixed space of all lambda_z has the same dimension
    rep.condition("fixed_point_dimension", rank(E) == bal.dim, {"rank": rank(E), "dim": bal.dim})
    return bal


def expectation_report(bal: BalancedAlgebra, tol: float = DEFAULT_TOL, samples: int = 5, seed: int = 0) -> Report:
    """Idempotent projection onto span S, matching the averaged integral."""
    T, gA, gB = bal.parent, bal.gA, bal.gB
    rep = Report("conditional_expectation", tol)
    E = expectation_matrix(T, gA, gB)
    rep.residual("matches_average", maxabs(E - averaged_expectation(T, gA, gB)))
    rep.residual("idempotent", maxabs(E @ E - E))
    basis = bal.basis
    if bal.dim:
        rep.residual("identity_on_balanced", maxabs(E @ basis - basis))
    rep.residual("image", same_span(E, basis) if bal.dim else maxabs(E))
    S = T.abstract
    for p, q in iproduct(range(bal.dim), range(bal.dim)):
        x, y = basis[:, p], basis[:, q]
        for r in range(T.dim):
            d = np.eye(T.dim)[r]
            lhs = E @ S.product(S.product(x, d), y)
            rhs = S.product(S.product(x, E @ d), y)
            rep.residual("bimodule", maxabs(lhs - rhs))
    rng = np.random.default_rng(seed)
    conc = T.concrete
    for _ in range(samples):
        d = rng.normal(size=T.dim) + 1j * rng.normal(size=T.dim)
        n_in = np.linalg.norm(conc.to_matrix(d), 2)
        n_out = np.linalg.norm(conc.to_matrix(E @ d), 2)
        rep.residual("contractive", max(0.0, n_out - n_in))
    return rep


def lambda_report(T: TwistedAlgebra, gA: DualGrading, gB: DualGrading, tol: float = DEFAULT_TOL) -> Report:
    """lambda is an action by *-automorphisms of the twisted product."""
    rep = Report("lambda_action", tol)
    S = T.abstract
    pts = sample_points(gA, gB)
    eye = np.eye(T.dim)
    for z in pts:
        L = lambda_matrix(T, gA, gB, z)
        for i in range(T.dim):
            rep.residual("star", maxabs(L @ S.star(eye[i]) - S.star(L[:, i])))
            for j in range(T.dim):
                rep.residual("multiplicative", maxabs(L @ S.product(eye[i], eye[j]) - S.product(L[:, i], L[:, j])))
    for z, w in iproduct(pts[:4], pts[:4]):
        zw = (z + w) % gA.modulus if gA.modulus else z * w
        rep.residual("composition", maxabs(lambda_matrix(T, gA, gB, z) @ lambda_matrix(T, gA, gB, w)
                                           - lambda_matrix(T, gA, gB, zw)))
    return rep


def induced_action_check(bal: BalancedAlgebra, tol: float = DEFAULT_TOL, points=None) -> Report:
    """gamma_z = mu_z [x] id = id [x] nu_z on the S_chi basis, plus the exchange identity."""
    T, gA, gB = bal.parent, bal.gA, bal.gB
    rep = Report("induced_action", tol)
    pts = points if points is not None else sample_points(gA, gB)
    if not gA.modulus:
        pts = list(pts) + [complex(np.exp(0.7j))]  # one generic point of T
    IA, IB = np.eye(T.A.dim), np.eye(T.dim // T.A.dim)
    for z in pts:
        MU = np.kron(gA.phase(z), IB)
        NU = np.kron(IA, _b_in_hom(T, gB.phase(z)))
        for k, cols in bal.components.items():
            gamma = gA.character(k, z) * cols
            rep.residual("mu_x_id", maxabs(MU @ cols - gamma), k)
            rep.residual("id_x_nu", maxabs(NU @ cols - gamma), k)
            for a in gA.component(k).T:
                for b in gB.component(k).T:
                    lhs = T.elementary(gA.phase(z) @ a, b)
                    rhs = T.elementary(a, gB.phase(z) @ b)
                    rep.residual("exchange", maxabs(lhs - rhs), k)
    return rep


def _span_of_products(alg, U: np.ndarray, V: np.ndarray) -> np.ndarray:
    cols = [alg.product(u, v) for u in U.T for v in V.T]
    return np.array(cols).T if cols else np.zeros((alg.dim, 0))


def _saturation(rep: Report, key: str, alg, grading: DualGrading) -> bool:
    ok = True
    for k, l in iproduct(grading.support, grading.support):
        prods = _span_of_products(alg, grading.component(k), grading.component(l))
        target = grading.component(grading.add(k, l))
        r, t = rank(prods), target.shape[1]
        good = r == t and (t == 0 or same_span(prods, target) <= rep.tolerance)
        if not good:
            ok = False
            rep.witnesses.append({"key": key, "pair": (k, l), "rank": r, "target_dim": t})
    return ok


def saturation_check(bal: BalancedAlgebra, tol: float = DEFAULT_TOL) -> Report:
    """Factor saturation, and if it holds, saturation of the S_chi grading."""
    T, gA, gB = bal.parent, bal.gA, bal.gB
    rep = Report("saturation", tol)
    a_ok = _saturation(rep, "A", T.A, gA)
    b_ok = _saturation(rep, "B", T.B, gB)
    rep.condition("A_saturated", a_ok)
    rep.condition("B_saturated", b_ok)
    dims = {}
    conclusion = True
    S = T.abstract
    for k, l in iproduct(bal.support, bal.support):
        prods = _span_of_products(S, bal.components[k], bal.components[l])
        m = gA.add(k, l)
        target = bal.components.get(m, np.zeros((T.dim, 0)))
        dims[(k, l)] = (rank(prods), target.shape[1])
        good = rank(prods) == target.shape[1] and (target.shape[1] == 0 or same_span(prods, target) <= tol)
        conclusion &= bool(good)
    rep.info["pair_dims"] = dims
    rep.info["balanced_saturated"] = conclusion
    if a_ok and b_ok:
        rep.condition("balanced_saturated", conclusion)
    return rep
