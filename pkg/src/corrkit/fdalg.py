"""Finite groups, finite-dimensional C*-algebras, actions and gradings.

Every algebra is a *-subalgebra of some M_N(C).  Elements are carried as
N x N matrices, and linear maps between algebras as coordinate matrices
against a fixed basis.  ``FDAlgebra`` is the block-diagonal special case
with a basis of matrix units.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

from ._linalg import RANK_TOL, independent_columns, maxabs, null_space, rank
from .report import DEFAULT_TOL, Report

# ---------------------------------------------------------------- groups


class FiniteGroup:
    """A finite group given by its multiplication table over indices."""

    def __init__(self, elements: Sequence, mult, identity: int | None = None,
                 inverse: Sequence[int] | None = None, check: bool = True):
        self.elements = tuple(elements)
        self.mult = np.asarray(mult, dtype=int)
        n = len(self.elements)
        if n == 0:
            raise ValueError("a group needs at least one element")
        if self.mult.shape != (n, n):
            raise ValueError(f"multiplication table must be {n}x{n}")
        if self.mult.min() < 0 or self.mult.max() >= n:
            raise ValueError("multiplication table has out-of-range entries")
        if identity is None:
            ids = [e for e in range(n) if np.array_equal(self.mult[e], np.arange(n))]
            if not ids:
                raise ValueError("no identity element in table")
            identity = ids[0]
        self.identity = int(identity)
        if inverse is None:
            inverse = []
            for g in range(n):
                hits = np.flatnonzero(self.mult[g] == self.identity)
                if len(hits) == 0:
                    raise ValueError(f"element {self.elements[g]!r} has no inverse")
                inverse.append(int(hits[0]))
        self.inverse = np.asarray(inverse, dtype=int)
        self._index = {lab: i for i, lab in enumerate(self.elements)}
        if len(self._index) != n:
            raise ValueError("group element labels must be distinct")
        if check:
            self._check()

    def _check(self) -> None:
        m, e = self.mult, self.identity
        n = self.order
        if not (np.array_equal(m[e], np.arange(n)) and np.array_equal(m[:, e], np.arange(n))):
            raise ValueError("identity is not two-sided")
        if not np.all(m[np.arange(n), self.inverse] == e):
            raise ValueError("inverse table is wrong")
        # (gh)k == g(hk) over all triples
        left = m[m[:, :, None], np.arange(n)[None, None, :]]
        right = m[np.arange(n)[:, None, None], m[None, :, :]]
        if not np.array_equal(left, right):
            raise ValueError("multiplication is not associative")

    @property
    def order(self) -> int:
        return len(self.elements)

    def mul(self, s: int, t: int) -> int:
        return int(self.mult[s, t])

    def inv(self, s: int) -> int:
        return int(self.inverse[s])

    def prod(self, *elems: int) -> int:
        out = self.identity
        for s in elems:
            out = int(self.mult[out, s])
        return out

    def index(self, label) -> int:
        if label in self._index:
            return self._index[label]
        raise KeyError(f"unknown group element {label!r}")

    def label(self, s: int):
        return self.elements[s]

    @property
    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mult, self.mult.T))

    def __eq__(self, other) -> bool:
        return (isinstance(other, FiniteGroup) and self.elements == other.elements
                and np.array_equal(self.mult, other.mult))

    def __hash__(self) -> int:
        return hash((self.elements, self.mult.tobytes()))

    def __repr__(self) -> str:
        return f"FiniteGroup(order={self.order})"


def make_cyclic_group(n: int) -> FiniteGroup:
    """Z_n with labels 0..n-1 and addition mod n."""
    if int(n) != n or n < 1:
        raise ValueError("cyclic group order must be a positive integer")
    n = int(n)
    idx = np.arange(n)
    return FiniteGroup(list(range(n)), (idx[:, None] + idx[None, :]) % n, 0,
                       (-idx) % n, check=False)


def direct_product_group(g: FiniteGroup, h: FiniteGroup) -> FiniteGroup:
    """G x H with index (i, j) -> i*|H| + j."""
    n, m = g.order, h.order
    labels = [(a, b) for a in g.elements for b in h.elements]
    mult = np.empty((n * m, n * m), dtype=int)
    for i, j, k, l in iproduct(range(n), range(m), range(n), range(m)):
        mult[i * m + j, k * m + l] = g.mult[i, k] * m + h.mult[j, l]
    return FiniteGroup(labels, mult, g.identity * m + h.identity, check=False)


# ---------------------------------------------------------------- algebras


class StructureAlgebra:
    """Abstract *-algebra given by structure constants.

    ``mult[i, j, k]`` is the coefficient of e_k in e_i e_j and column i of
    ``star`` holds the coordinates of e_i^*.  The star is conjugate linear.
    """

    def __init__(self, mult, star, name: str | None = None):
        self.mult = np.asarray(mult, dtype=complex)
        self.star_matrix = np.asarray(star, dtype=complex)
        self.name = name

    @property
    def dim(self) -> int:
        return self.mult.shape[0]

    def product(self, u, v) -> np.ndarray:
        return np.tensordot(v, np.tensordot(u, self.mult, axes=1), axes=1)

    def star(self, u) -> np.ndarray:
        return self.star_matrix @ np.conj(u)

    def left_operator(self, u) -> np.ndarray:
        """Matrix of v -> u v in coordinates."""
        return np.einsum("i,ijk->kj", u, self.mult)

    def right_operator(self, u) -> np.ndarray:
        return np.einsum("j,ijk->ki", u, self.mult)


def _gram_cholesky(flat: np.ndarray, tol: float = 1e-10):
    """Cholesky factor of F^* F, or None when the columns of F are dependent."""
    gram = flat.conj().T @ flat
    try:
        c = scipy.linalg.cho_factor(gram)
    except np.linalg.LinAlgError:
        return None
    d = np.abs(np.diag(c[0])) ** 2
    if d.min() <= tol * max(1.0, d.max()):
        return None
    return c


class MatrixAlgebra:
    """A *-subalgebra of M_N spanned by the given basis matrices."""

    def __init__(self, basis, name: str | None = None):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise ValueError("basis must be an array of square matrices")
        self.basis = basis
        self.name = name
        n, N, _ = basis.shape
        self._flat = basis.reshape(n, N * N).T
        self._chol = _gram_cholesky(self._flat) if n else None
        if n and self._chol is None:
            raise ValueError("basis matrices are linearly dependent")
        self._structure: StructureAlgebra | None = None

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def size(self) -> int:
        """Side length N of the ambient matrix algebra."""
        return self.basis.shape[1]

    # coordinates <-> matrices
    def to_matrix(self, u) -> np.ndarray:
        return np.tensordot(np.asarray(u, dtype=complex), self.basis, axes=([-1], [0]))

    def coords(self, mats) -> np.ndarray:
        mats = np.asarray(mats, dtype=complex)
        lead = mats.shape[:-2]
        flat = mats.reshape(lead + (self.size * self.size,))
        if self.dim == 0:
            return np.zeros(lead + (0,), dtype=complex)
        rhs = self._flat.conj().T @ flat.reshape(-1, self.size * self.size).T
        return scipy.linalg.cho_solve(self._chol, rhs).T.reshape(lead + (self.dim,))

    def membership_residual(self, mats) -> float:
        mats = np.asarray(mats, dtype=complex)
        return maxabs(self.to_matrix(self.coords(mats)) - mats)

    def product(self, u, v) -> np.ndarray:
        return self.coords(self.to_matrix(u) @ self.to_matrix(v))

    def star(self, u) -> np.ndarray:
        return self.coords(self.to_matrix(u).conj().T)

    def unit(self) -> np.ndarray | None:
        """Coordinates of the unit of the algebra (not always the ambient identity)."""
        n = self.dim
        if n == 0:
            return np.zeros(0, dtype=complex)
        # solve sum_k c_k B_k B_j = B_j for all j
        prods = np.matmul(self.basis[None], self.basis[:, None])
        lhs = prods.reshape(n, n, -1).transpose(0, 2, 1).reshape(-1, n)
        rhs = self.basis.reshape(n, -1).reshape(-1)
        c, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
        if maxabs(lhs @ c - rhs) > 1e-8:
            return None
        return c

    def unit_matrix(self) -> np.ndarray:
        u = self.unit()
        if u is None:
            raise ValueError("algebra has no unit")
        return self.to_matrix(u)

    def structure(self) -> StructureAlgebra:
        if self._structure is None:
            n = self.dim
            prods = np.matmul(self.basis[:, None], self.basis[None])
            mult = self.coords(prods)
            star = self.coords(self.basis.conj().transpose(0, 2, 1)).T
            self._structure = StructureAlgebra(mult.reshape(n, n, n), star, self.name)
        return self._structure

    def element(self, matrix) -> "AlgElement":
        return AlgElement(self, matrix)

    def from_coords(self, u) -> "AlgElement":
        return AlgElement(self, self.to_matrix(u), check=False)

    def zero(self) -> "AlgElement":
        return AlgElement(self, np.zeros((self.size, self.size)), check=False)

    def one(self) -> "AlgElement":
        return AlgElement(self, self.unit_matrix(), check=False)

    def basis_elements(self) -> list["AlgElement"]:
        return [AlgElement(self, b, check=False) for b in self.basis]

    def __repr__(self) -> str:
        return f"MatrixAlgebra(dim={self.dim}, N={self.size})"


class FDAlgebra(MatrixAlgebra):
    """Direct sum of full matrix blocks M_{n_1} + ... + M_{n_k}.

    The basis is the list of matrix units, block by block, row-major.
    """

    def __init__(self, block_dims: Sequence[int], block_labels: Sequence | None = None,
                 name: str | None = None):
        dims = [int(d) for d in block_dims]
        if not dims or any(d < 1 for d in dims):
            raise ValueError("block_dims must be a nonempty list of positive integers")
        if block_labels is not None and len(block_labels) != len(dims):
            raise ValueError("one label per block")
        self.block_dims = tuple(dims)
        self.block_labels = tuple(block_labels) if block_labels is not None else tuple(range(len(dims)))
        self.offsets = tuple(int(x) for x in np.concatenate([[0], np.cumsum(dims)[:-1]]))
        N = sum(dims)
        basis = []
        self._rows, self._cols = [], []
        for off, d in zip(self.offsets, dims):
            for r in range(d):
                for c in range(d):
                    m = np.zeros((N, N))
                    m[off + r, off + c] = 1.0
                    basis.append(m)
                    self._rows.append(off + r)
                    self._cols.append(off + c)
        self._rows = np.array(self._rows)
        self._cols = np.array(self._cols)
        self.basis = np.asarray(basis, dtype=complex)
        self.name = name
        self._structure = None

    # matrix units make coordinates a gather
    def coords(self, mats) -> np.ndarray:
        mats = np.asarray(mats, dtype=complex)
        return mats[..., self._rows, self._cols]

    def to_matrix(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        out = np.zeros(u.shape[:-1] + (self.size, self.size), dtype=complex)
        out[..., self._rows, self._cols] = u
        return out

    @property
    def size(self) -> int:
        return sum(self.block_dims)

    def unit(self) -> np.ndarray:
        return self.coords(np.eye(self.size))

    def block_slice(self, i: int) -> slice:
        return slice(self.offsets[i], self.offsets[i] + self.block_dims[i])

    def block_basis_indices(self, i: int) -> list[int]:
        start = sum(d * d for d in self.block_dims[:i])
        return list(range(start, start + self.block_dims[i] ** 2))

    def from_blocks(self, blocks: Sequence) -> "AlgElement":
        if len(blocks) != len(self.block_dims):
            raise ValueError(f"expected {len(self.block_dims)} blocks, got {len(blocks)}")
        m = np.zeros((self.size, self.size), dtype=complex)
        for i, b in enumerate(blocks):
            b = np.atleast_2d(np.asarray(b, dtype=complex))
            d = self.block_dims[i]
            if b.shape != (d, d):
                raise ValueError(f"block {i} has shape {b.shape}, expected {(d, d)}")
            sl = self.block_slice(i)
            m[sl, sl] = b
        return AlgElement(self, m, check=False)

    def blocks_of(self, m) -> list[np.ndarray]:
        return [np.array(m[self.block_slice(i), self.block_slice(i)]) for i in range(len(self.block_dims))]

    def __repr__(self) -> str:
        return f"FDAlgebra(block_dims={list(self.block_dims)})"


def tensor_algebra(a: MatrixAlgebra, b: MatrixAlgebra) -> MatrixAlgebra:
    """Spatial tensor product; basis e_i (x) f_j with index i*dim(b)+j."""
    basis = np.einsum("iab,jcd->ijacbd", a.basis, b.basis)
    n, N = a.dim * b.dim, a.size * b.size
    return MatrixAlgebra(basis.reshape(n, N, N))


# ---------------------------------------------------------------- elements


class AlgElement:
    """An element of a MatrixAlgebra, stored as its ambient matrix."""

    __slots__ = ("algebra", "matrix")

    def __init__(self, algebra: MatrixAlgebra, matrix, check: bool = True):
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (algebra.size, algebra.size):
            raise ValueError(f"matrix shape {m.shape} does not fit ambient size {algebra.size}")
        if check and algebra.membership_residual(m) > 1e-8:
            raise ValueError("matrix does not lie in the algebra")
        self.algebra = algebra
        self.matrix = m

    @property
    def blocks(self) -> list[np.ndarray]:
        if isinstance(self.algebra, FDAlgebra):
            return self.algebra.blocks_of(self.matrix)
        return [self.matrix]

    @property
    def coords(self) -> np.ndarray:
        return self.algebra.coords(self.matrix)

    def _same(self, other: "AlgElement") -> None:
        if not isinstance(other, AlgElement):
            raise TypeError("expected an AlgElement")
        if other.algebra is not self.algebra and other.matrix.shape != self.matrix.shape:
            raise ValueError("elements belong to different algebras")

    def __add__(self, other: "AlgElement") -> "AlgElement":
        self._same(other)
        return AlgElement(self.algebra, self.matrix + other.matrix, check=False)

    def __sub__(self, other: "AlgElement") -> "AlgElement":
        self._same(other)
        return AlgElement(self.algebra, self.matrix - other.matrix, check=False)

    def __neg__(self) -> "AlgElement":
        return AlgElement(self.algebra, -self.matrix, check=False)

    def __mul__(self, c) -> "AlgElement":
        if isinstance(c, AlgElement):
            return multiply(self, c)
        return AlgElement(self.algebra, c * self.matrix, check=False)

    __rmul__ = __mul__

    def __matmul__(self, other: "AlgElement") -> "AlgElement":
        return multiply(self, other)

    def star(self) -> "AlgElement":
        return involution(self)

    def norm(self) -> float:
        return operator_norm(self)

    def close_to(self, other: "AlgElement", tol: float = DEFAULT_TOL) -> bool:
        return maxabs(self.matrix - other.matrix) <= tol

    def __repr__(self) -> str:
        return f"AlgElement({self.algebra!r}, blocks={[b.tolist() for b in self.blocks]})"


def multiply(a: AlgElement, b: AlgElement) -> AlgElement:
    """Blockwise product."""
    a._same(b)
    return AlgElement(a.algebra, a.matrix @ b.matrix, check=False)


def involution(a: AlgElement) -> AlgElement:
    """Blockwise conjugate transpose."""
    return AlgElement(a.algebra, a.matrix.conj().T, check=False)


def operator_norm(a: AlgElement) -> float:
    """C*-norm: the largest singular value over all blocks."""
    return max((float(np.linalg.norm(b, 2)) for b in a.blocks if b.size), default=0.0)


# ---------------------------------------------------------------- actions


def _as_coords(algebra: MatrixAlgebra, x) -> np.ndarray:
    if isinstance(x, AlgElement):
        return algebra.coords(x.matrix)
    x = np.asarray(x, dtype=complex)
    if x.ndim == 2:
        return algebra.coords(x)
    if x.shape != (algebra.dim,):
        raise ValueError("coordinate vector has the wrong length")
    return x


class AlgAction:
    """Action of a finite group by linear maps on an algebra.

    ``maps[s]`` is the coordinate matrix of alpha_s.  When the action comes
    from unitary conjugation, ``unitaries[s]`` holds W_s with
    alpha_s(a) = W_s a W_s^*.
    """

    def __init__(self, group: FiniteGroup, algebra: MatrixAlgebra, maps,
                 unitaries=None):
        self.group = group
        self.algebra = algebra
        self.maps = np.asarray(maps, dtype=complex)
        if self.maps.shape != (group.order, algebra.dim, algebra.dim):
            raise ValueError("need one dim x dim coordinate map per group element")
        self.unitaries = None if unitaries is None else np.asarray(unitaries, dtype=complex)

    @classmethod
    def from_unitaries(cls, group: FiniteGroup, algebra: MatrixAlgebra,
                       unitaries: Mapping[int, np.ndarray] | Sequence) -> "AlgAction":
        N = algebra.size
        if isinstance(unitaries, Mapping):
            ws = [np.asarray(unitaries.get(s, np.eye(N)), dtype=complex) for s in range(group.order)]
        else:
            ws = [np.asarray(w, dtype=complex) for w in unitaries]
        maps = []
        for w in ws:
            imgs = np.einsum("ab,kbc,dc->kad", w, algebra.basis, w.conj())
            maps.append(algebra.coords(imgs).T)
        return cls(group, algebra, maps, ws)

    @classmethod
    def from_automorphisms(cls, group: FiniteGroup, algebra: FDAlgebra,
                           data: Mapping[int, tuple]) -> "AlgAction":
        """Build from (block permutation, per-block unitaries) per element.

        Block i of a is sent to block perm[i] as U_i a_i U_i^*.  Elements
        missing from ``data`` act trivially.
        """
        N = algebra.size
        ws = []
        for s in range(group.order):
            if s not in data:
                ws.append(np.eye(N))
                continue
            perm, us = data[s]
            w = np.zeros((N, N), dtype=complex)
            for i, d in enumerate(algebra.block_dims):
                j = int(perm[i])
                if algebra.block_dims[j] != d:
                    raise ValueError(f"block permutation maps block {i} to a block of different size")
                u = np.eye(d) if us is None or us[i] is None else np.asarray(us[i], dtype=complex)
                w[algebra.block_slice(j), algebra.block_slice(i)] = u
            ws.append(w)
        return cls.from_unitaries(group, algebra, ws)

    @classmethod
    def trivial(cls, group: FiniteGroup, algebra: MatrixAlgebra) -> "AlgAction":
        N = algebra.size
        return cls(group, algebra, [np.eye(algebra.dim)] * group.order,
                   [np.eye(N)] * group.order)

    def apply(self, s: int, u) -> np.ndarray:
        """alpha_s on coordinates."""
        return self.maps[s] @ _as_coords(self.algebra, u)

    def apply_matrix(self, s: int, m) -> np.ndarray:
        m = np.asarray(m, dtype=complex)
        if self.unitaries is not None:
            w = self.unitaries[s]
            return w @ m @ w.conj().T
        return self.algebra.to_matrix(self.maps[s] @ self.algebra.coords(m))

    def __call__(self, s: int, a: AlgElement) -> AlgElement:
        return AlgElement(a.algebra, self.apply_matrix(s, a.matrix), check=False)


def verify_action(alpha: AlgAction, tol: float = DEFAULT_TOL) -> Report:
    """Automorphism and homomorphism identities over the basis."""
    rep = Report("verify_action", tol)
    g, alg = alpha.group, alpha.algebra
    basis = alg.basis
    n = alg.dim
    unit = alg.unit()
    for s in range(g.order):
        imgs = alg.to_matrix(alpha.maps[s].T)  # alpha_s(e_k) as matrices
        prods = np.matmul(imgs[:, None], imgs[None])
        direct = alg.to_matrix(np.einsum("ab,ijb->ija", alpha.maps[s],
                                         alg.coords(np.matmul(basis[:, None], basis[None]))))
        # images must stay inside the algebra for the maps to mean anything
        rep.residual("multiplicative", maxabs(direct - prods), {"s": g.label(s)})
        star_img = alg.to_matrix(np.einsum("ab,kb->ka", alpha.maps[s],
                                           alg.coords(basis.conj().transpose(0, 2, 1))))
        rep.residual("star", maxabs(star_img - imgs.conj().transpose(0, 2, 1)), {"s": g.label(s)})
        rep.condition("bijective", rank(alpha.maps[s]) == n, {"s": g.label(s)})
        if unit is not None:
            rep.residual("unital", maxabs(alpha.maps[s] @ unit - unit), {"s": g.label(s)})
        for t in range(g.order):
            st = g.mul(s, t)
            rep.residual("homomorphism", maxabs(alpha.maps[s] @ alpha.maps[t] - alpha.maps[st]),
                         {"s": g.label(s), "t": g.label(t)})
    rep.residual("identity", maxabs(alpha.maps[g.identity] - np.eye(n)))
    return rep


# ---------------------------------------------------------------- gradings


class AlgGrading:
    """A grading A = sum_s A_s by a finite group.

    ``components`` maps a group index to a list of basis elements of A_s
    (AlgElements, ambient matrices or coordinate vectors).  The homogeneous
    basis is the concatenation in increasing degree index, keeping the
    insertion order inside each component.
    """

    def __init__(self, group: FiniteGroup, algebra: MatrixAlgebra,
                 components: Mapping[int, Iterable]):
        self.group = group
        self.algebra = algebra
        comps: dict[int, np.ndarray] = {}
        for s in sorted(components):
            vecs = [_as_coords(algebra, x) for x in components[s]]
            if vecs:
                comps[int(s)] = np.array(vecs, dtype=complex).T
        self.components = comps
        self.degrees: list[int] = [s for s, v in comps.items() for _ in range(v.shape[1])]
        self.hom_basis = (np.concatenate(list(comps.values()), axis=1) if comps
                          else np.zeros((algebra.dim, 0), dtype=complex))
        self._hpinv = np.linalg.pinv(self.hom_basis) if self.hom_basis.size else self.hom_basis.T

    @classmethod
    def trivial(cls, group: FiniteGroup, algebra: MatrixAlgebra) -> "AlgGrading":
        return cls(group, algebra, {group.identity: list(np.eye(algebra.dim))})

    @classmethod
    def from_vertex_degrees(cls, group: FiniteGroup, algebra: FDAlgebra,
                            degrees: Sequence[int]) -> "AlgGrading":
        """Matrix-unit grading: E_ij has degree d(i) d(j)^{-1}."""
        comps: dict[int, list] = {}
        for k, (r, c) in enumerate(zip(algebra._rows, algebra._cols)):
            s = group.mul(int(degrees[r]), group.inv(int(degrees[c])))
            comps.setdefault(s, []).append(np.eye(algebra.dim)[k])
        return cls(group, algebra, comps)

    @property
    def support(self) -> list[int]:
        return list(self.components)

    def component(self, s: int) -> np.ndarray:
        """Columns spanning A_s (coordinates); empty when A_s = 0."""
        return self.components.get(s, np.zeros((self.algebra.dim, 0), dtype=complex))

    def component_matrices(self, s: int) -> np.ndarray:
        return self.algebra.to_matrix(self.component(s).T)

    def hom_coords(self, u) -> np.ndarray:
        """Coordinates against the homogeneous basis."""
        return self._hpinv @ _as_coords(self.algebra, u)

    def decompose(self, u) -> dict[int, np.ndarray]:
        c = self.hom_coords(u)
        out: dict[int, np.ndarray] = {}
        pos = 0
        for s, v in self.components.items():
            k = v.shape[1]
            out[s] = v @ c[pos:pos + k]
            pos += k
        return out

    def projector(self, s: int) -> np.ndarray:
        """Coordinate matrix of the projection onto A_s along the other components."""
        mask = np.array([d == s for d in self.degrees])
        return (self.hom_basis[:, mask] @ self._hpinv[mask, :]) if mask.any() else \
            np.zeros((self.algebra.dim, self.algebra.dim), dtype=complex)


def verify_grading(grading: AlgGrading, tol: float = DEFAULT_TOL) -> Report:
    """Direct-sum spanning, A_s A_t in A_st and A_s^* = A_{s^-1}."""
    rep = Report("verify_grading", tol)
    g, alg = grading.group, grading.algebra
    n = alg.dim
    h = grading.hom_basis
    rep.condition("direct_sum", h.shape[1] == n and rank(h) == n,
                  {"count": h.shape[1], "rank": rank(h), "dim": n})
    mats = {s: grading.component_matrices(s) for s in grading.support}
    flat = {s: m.reshape(len(m), -1).T for s, m in mats.items()}
    from ._linalg import span_residual

    def resid(target: int, prods: np.ndarray) -> float:
        vecs = prods.reshape(len(prods), -1).T
        if target not in flat:
            return maxabs(vecs)
        return span_residual(flat[target], vecs)

    for s, t in iproduct(grading.support, grading.support):
        prods = np.matmul(mats[s][:, None], mats[t][None]).reshape(-1, alg.size, alg.size)
        rep.residual("multiplicative", resid(g.mul(s, t), prods),
                     {"s": g.label(s), "t": g.label(t)})
    for s in grading.support:
        stars = mats[s].conj().transpose(0, 2, 1)
        rep.residual("star", resid(g.inv(s), stars), {"s": g.label(s)})
    return rep


def homogeneous_decomposition(grading: AlgGrading, a: AlgElement,
                              tol: float = DEFAULT_TOL) -> list[tuple[int, AlgElement]]:
    """Split ``a`` into its homogeneous components, dropping zero ones."""
    alg = grading.algebra
    parts = grading.decompose(a)
    total = sum((alg.to_matrix(v) for v in parts.values()), np.zeros_like(a.matrix))
    res = maxabs(total - a.matrix)
    if res > tol * max(1.0, maxabs(a.matrix)):
        raise ValueError(f"grading does not span the element (residual {res:.3e})")
    out = []
    for s, v in parts.items():
        m = alg.to_matrix(v)
        if maxabs(m) > tol:
            out.append((s, AlgElement(alg, m, check=False)))
    return out


# ---------------------------------------------------------------- standard algebras


@dataclass(frozen=True)
class GroupAlgebra:
    algebra: MatrixAlgebra
    grading: AlgGrading
    u: tuple[AlgElement, ...]


def regular_matrices(group: FiniteGroup) -> np.ndarray:
    """Left-regular permutation matrices: lambda_s e_h = e_{sh}."""
    n = group.order
    out = np.zeros((n, n, n))
    for s in range(n):
        out[s, group.mult[s], np.arange(n)] = 1.0
    return out


def group_algebra(group: FiniteGroup) -> GroupAlgebra:
    """C*(G) inside M_|G| via the left-regular representation."""
    lam = regular_matrices(group)
    alg = MatrixAlgebra(lam, name="C*(G)")
    grading = AlgGrading(group, alg, {s: [np.eye(group.order)[s]] for s in range(group.order)})
    return GroupAlgebra(alg, grading, tuple(AlgElement(alg, m, check=False) for m in lam))


def function_algebra(group: FiniteGroup) -> tuple[FDAlgebra, AlgAction]:
    """c_0(G) as diagonal matrices with left translation lambda_s(chi_g) = chi_{sg}."""
    alg = FDAlgebra([1] * group.order, group.elements, name="c0(G)")
    act = AlgAction.from_unitaries(group, alg, regular_matrices(group))
    return alg, act


# ---------------------------------------------------------------- classification


@dataclass(frozen=True)
class Signature:
    """Isomorphism invariants of a semisimple algebra."""

    dim: int
    center_dim: int
    blocks: tuple[int, ...]

    @property
    def is_full_matrix_algebra(self) -> bool:
        return len(self.blocks) == 1


def classify(alg: StructureAlgebra | MatrixAlgebra, tol: float = 1e-7) -> Signature:
    """Wedderburn block sizes computed from structure constants alone.

    The center is the common kernel of ad(e_i); a generic central element
    has one eigenvalue per block on the left regular representation, with
    eigenspace of dimension n_i^2.
    """
    st = alg.structure() if isinstance(alg, MatrixAlgebra) else alg
    n = st.dim
    if n == 0:
        return Signature(0, 0, ())
    eye = np.eye(n)
    ads = [st.left_operator(eye[i]) - st.right_operator(eye[i]) for i in range(n)]
    center = null_space(np.vstack(ads), RANK_TOL)
    k = center.shape[1]
    weights = np.sqrt(np.array([2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] * (k // 12 + 1))[:k])
    z = center @ (weights + 0.1j * weights[::-1])
    # make z normal so its left-multiplication operator is diagonalisable
    z = z + st.star(z)
    lz = st.left_operator(z)
    vals = np.linalg.eigvals(lz)
    clusters: list[list[complex]] = []
    for v in sorted(vals, key=lambda c: (round(c.real, 6), round(c.imag, 6))):
        for cl in clusters:
            if abs(cl[0] - v) < tol * max(1.0, abs(v)) * 1e3:
                cl.append(v)
                break
        else:
            clusters.append([v])
    sizes = []
    for cl in clusters:
        r = int(round(np.sqrt(len(cl))))
        if r * r != len(cl):
            raise ValueError("eigenspace dimension is not a square; algebra not semisimple?")
        sizes.append(r)
    return Signature(n, k, tuple(sorted(sizes)))
