"""Finite directed graphs, their correspondences and skew products.

Conventions: the left action goes through the range map and inner
products land on the source,

    chi_v . chi_e = [r(e) = v] chi_e,   chi_e . chi_v = [s(e) = v] chi_e,
    <chi_e, chi_f> = [e = f] chi_{s(e)}.

The module is realized by chi_e = E_{e, s(e)} (|E^1| x |E^0| matrices).
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Sequence

import numpy as np

from ._linalg import maxabs, rank, same_span
from .fdalg import AlgAction, AlgGrading, FDAlgebra, FiniteGroup
from .hilbmod import (CorrAction, Correspondence, CorrGrading, HilbertModule, is_full,
                      is_katsura_nondegenerate, katsura_ideal, nondegeneracy_dims,
                      verify_corr_action, verify_correspondence_isomorphism)
from .report import DEFAULT_TOL, Report
from .twist import PreconditionError, TwistedCorrespondence


class GraphFormatError(ValueError):
    """Malformed graph text; ``line`` is 1-based when known."""

    def __init__(self, msg: str, line: int | None = None):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


@dataclass(frozen=True)
class DirectedGraph:
    vertices: tuple
    edges: tuple
    src: tuple  # vertex index per edge
    dst: tuple

    def __post_init__(self):
        n = len(self.vertices)
        if len(set(self.vertices)) != n:
            raise ValueError("duplicate vertex labels")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edge labels")
        if not (len(self.edges) == len(self.src) == len(self.dst)):
            raise ValueError("edge endpoint lists have the wrong length")
        for e, s, r in zip(self.edges, self.src, self.dst):
            if not (0 <= s < n and 0 <= r < n):
                raise ValueError(f"edge {e!r} has an undeclared endpoint")

    @classmethod
    def from_edges(cls, vertices: Sequence, edges: Sequence[tuple]) -> "DirectedGraph":
        """``edges`` holds (label, source label, range label) triples."""
        vertices = tuple(vertices)
        idx = {v: i for i, v in enumerate(vertices)}
        try:
            src = tuple(idx[s] for _, s, _ in edges)
            dst = tuple(idx[r] for _, _, r in edges)
        except KeyError as err:
            raise ValueError(f"edge endpoint {err.args[0]!r} is not a declared vertex") from None
        return cls(vertices, tuple(e for e, _, _ in edges), src, dst)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def vertex_index(self, label) -> int:
        return self.vertices.index(label)

    def edge_index(self, label) -> int:
        return self.edges.index(label)

    def receives(self, v: int) -> int:
        return sum(1 for r in self.dst if r == v)

    def emits(self, v: int) -> int:
        return sum(1 for s in self.src if s == v)

    def is_acyclic(self) -> bool:
        indeg = [self.receives(v) for v in range(self.n_vertices)]
        stack = [v for v in range(self.n_vertices) if indeg[v] == 0]
        seen = 0
        while stack:
            v = stack.pop()
            seen += 1
            for e in range(self.n_edges):
                if self.src[e] == v:
                    indeg[self.dst[e]] -= 1
                    if indeg[self.dst[e]] == 0:
                        stack.append(self.dst[e])
        return seen == self.n_vertices


@dataclass
class GraphAction:
    group: FiniteGroup
    graph: DirectedGraph
    vertex_perms: np.ndarray  # [s, v] -> alpha_s(v)
    edge_perms: np.ndarray    # [s, e] -> alpha_s(e)

    def __post_init__(self):
        self.vertex_perms = np.asarray(self.vertex_perms, dtype=int).reshape(self.group.order, self.graph.n_vertices)
        self.edge_perms = np.asarray(self.edge_perms, dtype=int).reshape(self.group.order, self.graph.n_edges)

    @classmethod
    def trivial(cls, group: FiniteGroup, graph: DirectedGraph) -> "GraphAction":
        return cls(group, graph, np.tile(np.arange(graph.n_vertices), (group.order, 1)),
                   np.tile(np.arange(graph.n_edges), (group.order, 1)))

    @classmethod
    def from_generator(cls, group: FiniteGroup, graph: DirectedGraph, gen: int,
                       vperm: Sequence[int], eperm: Sequence[int]) -> "GraphAction":
        """Action of a cyclic group from the permutations of a generator."""
        vp = [np.arange(graph.n_vertices)]
        ep = [np.arange(graph.n_edges)]
        powers = {group.identity: 0}
        s = gen
        k = 1
        while s != group.identity:
            powers[s] = k
            vp.append(np.asarray(vperm)[vp[-1]])
            ep.append(np.asarray(eperm)[ep[-1]])
            s = group.mul(s, gen)
            k += 1
        if len(powers) != group.order:
            raise PreconditionError("generator does not generate the group")
        return cls(group, graph, [vp[powers[s]] for s in range(group.order)],
                   [ep[powers[s]] for s in range(group.order)])

    def verify(self) -> Report:
        rep = Report("graph_action", 0.0)
        g, E = self.group, self.graph
        for s in range(g.order):
            vp, ep = self.vertex_perms[s], self.edge_perms[s]
            rep.condition("bijective", sorted(vp) == list(range(E.n_vertices))
                          and sorted(ep) == list(range(E.n_edges)), g.label(s))
            for e in range(E.n_edges):
                rep.condition("source", E.src[ep[e]] == vp[E.src[e]], (g.label(s), E.edges[e]))
                rep.condition("range", E.dst[ep[e]] == vp[E.dst[e]], (g.label(s), E.edges[e]))
            for t in range(g.order):
                st = g.mul(s, t)
                rep.condition("homomorphism", np.array_equal(vp[self.vertex_perms[t]], self.vertex_perms[st])
                              and np.array_equal(ep[self.edge_perms[t]], self.edge_perms[st]),
                              (g.label(s), g.label(t)))
        rep.condition("identity", np.array_equal(self.vertex_perms[g.identity], np.arange(E.n_vertices)))
        return rep


@dataclass
class EdgeLabeling:
    group: FiniteGroup
    graph: DirectedGraph
    labels: tuple  # group index per edge

    def __post_init__(self):
        self.labels = tuple(int(x) for x in self.labels)
        if len(self.labels) != self.graph.n_edges:
            raise ValueError("labeling must be total on edges")
        if any(not 0 <= x < self.group.order for x in self.labels):
            raise ValueError("label outside the group")

    @classmethod
    def trivial(cls, group: FiniteGroup, graph: DirectedGraph) -> "EdgeLabeling":
        return cls(group, graph, (group.identity,) * graph.n_edges)


# ---------------------------------------------------------------- constructions


def _pair_label(a, b) -> str:
    return f"{a}x{b}"


def skew_product(E: DirectedGraph, alpha: GraphAction, F: DirectedGraph, delta: EdgeLabeling) -> DirectedGraph:
    """Vertices E0 x F0, edges E1 x F1,
    s(e x f) = alpha_{delta(f)}(s(e)) x s(f), r(e x f) = r(e) x r(f)."""
    if alpha.group != delta.group:
        raise PreconditionError("action and labeling use different groups")
    nF = F.n_vertices
    verts = tuple(_pair_label(v, w) for v in E.vertices for w in F.vertices)
    edges, src, dst = [], [], []
    for e, f in iproduct(range(E.n_edges), range(F.n_edges)):
        edges.append(_pair_label(E.edges[e], F.edges[f]))
        src.append(int(alpha.vertex_perms[delta.labels[f], E.src[e]]) * nF + F.src[f])
        dst.append(E.dst[e] * nF + F.dst[f])
    return DirectedGraph(verts, tuple(edges), tuple(src), tuple(dst))


def vertex_algebra(E: DirectedGraph) -> FDAlgebra:
    """c0(E^0) as diagonal matrices."""
    return FDAlgebra([1] * E.n_vertices, block_labels=E.vertices, name="c0(E0)")


def graph_correspondence(E: DirectedGraph) -> Correspondence:
    A = vertex_algebra(E)
    nV, nE = E.n_vertices, E.n_edges
    V = np.zeros((nE, nE, nV))
    for e in range(nE):
        V[e, e, E.src[e]] = 1.0
    phi = np.zeros((nV, nE, nE))
    for e in range(nE):
        phi[E.dst[e], e, e] = 1.0
    mod = HilbertModule.from_realization(A, V)
    return Correspondence.from_realization(A, mod, phi, name="X(E)")


def _vertex_perm_matrix(perm: np.ndarray) -> np.ndarray:
    n = len(perm)
    P = np.zeros((n, n))
    P[perm, np.arange(n)] = 1.0
    return P


def graph_action_lift(alpha: GraphAction, X: Correspondence | None = None,
                      tol: float = DEFAULT_TOL) -> CorrAction:
    """chi_v -> chi_{alpha_{s^-1} v} on c0(E0) and chi_e -> chi_{alpha_{s^-1} e} on X(E).

    This composes as a right action, so it is an action only for abelian G.
    """
    g = alpha.group
    if not g.is_abelian:
        raise PreconditionError("the lift f -> f o alpha_s is an action only for abelian groups")
    vrep = alpha.verify()
    if not vrep.passed:
        raise PreconditionError("graph action fails verification", vrep.failures)
    X = X or graph_correspondence(alpha.graph)
    A = X.left_algebra
    maps = [_vertex_perm_matrix(alpha.vertex_perms[g.inv(s)]) for s in range(g.order)]
    gammas = [_vertex_perm_matrix(alpha.edge_perms[g.inv(s)]) for s in range(g.order)]
    act = CorrAction(g, X, gammas, AlgAction(g, A, maps))
    rep = verify_corr_action(act, tol)
    if not rep.passed:
        raise PreconditionError("lifted action fails verification", rep.failures)
    return act


def labeling_grading(delta: EdgeLabeling, Y: Correspondence | None = None) -> CorrGrading:
    """Y_s = span{chi_f : delta(f) = s}; the coefficient algebra sits in degree e."""
    g, F = delta.group, delta.graph
    Y = Y or graph_correspondence(F)
    eye = np.eye(F.n_edges)
    comps: dict[int, list] = {}
    for f, s in enumerate(delta.labels):
        comps.setdefault(s, []).append(eye[f])
    return CorrGrading(g, Y, comps, AlgGrading.trivial(g, Y.left_algebra))


@dataclass
class GraphIdeal:
    vertices: list[int]
    basis: np.ndarray  # columns, coordinates in c0(E0)


def graph_katsura_ideal(E: DirectedGraph) -> GraphIdeal:
    """Span of chi_v over vertices receiving at least one edge."""
    verts = [v for v in range(E.n_vertices) if E.receives(v) > 0]
    eye = np.eye(E.n_vertices)
    basis = eye[:, verts] if verts else np.zeros((E.n_vertices, 0))
    return GraphIdeal(verts, basis)


def katsura_agreement(E: DirectedGraph, tol: float = DEFAULT_TOL) -> Report:
    """The vertex description agrees with the general finite-dimensional computation."""
    rep = Report("katsura_agreement", tol)
    gi = graph_katsura_ideal(E)
    ki = katsura_ideal(graph_correspondence(E))
    rep.condition("dimension", gi.basis.shape[1] == ki.dim, {"graph": gi.basis.shape[1], "general": ki.dim})
    if gi.basis.shape[1] and ki.dim:
        rep.residual("span", same_span(gi.basis, ki.basis))
    return rep


@dataclass
class RegularityReport:
    sinks: list
    sources: list
    proper_sources: list
    infinite_receivers: list
    is_katsura_nondegenerate: bool
    is_full: bool
    report: Report = field(repr=False, default=None)

    def as_dict(self) -> dict:
        return {"sinks": self.sinks, "sources": self.sources, "proper_sources": self.proper_sources,
                "infinite_receivers": self.infinite_receivers,
                "is_katsura_nondegenerate": self.is_katsura_nondegenerate, "is_full": self.is_full}


def graph_regularity_report(E: DirectedGraph) -> RegularityReport:
    """Graph criteria, cross-checked against the module-level computations.

    Finite graphs have no infinite receivers, so that clause is vacuous.
    """
    sinks = [E.vertices[v] for v in range(E.n_vertices) if E.emits(v) == 0]
    sources = [E.vertices[v] for v in range(E.n_vertices) if E.receives(v) == 0]
    proper = [E.vertices[v] for v in range(E.n_vertices) if E.receives(v) == 0 and E.emits(v) > 0]
    nondeg, full = not proper, not sinks
    X = graph_correspondence(E)
    rep = Report("graph_regularity", 0.0)
    rep.condition("nondegeneracy_matches_module", nondeg == is_katsura_nondegenerate(X))
    rep.condition("fullness_matches_module", full == is_full(X.module))
    rep.info["module_dims"] = nondegeneracy_dims(X)
    return RegularityReport(sinks, sources, proper, [], nondeg, full, rep)


def graph_product(E: DirectedGraph, alpha: GraphAction, F: DirectedGraph, delta: EdgeLabeling,
                  tol: float = DEFAULT_TOL) -> TwistedCorrespondence:
    """X(E) [x] X(F) from the lifted action and the labeling grading."""
    X, Y = graph_correspondence(E), graph_correspondence(F)
    return TwistedCorrespondence(X, graph_action_lift(alpha, X, tol), Y, labeling_grading(delta, Y),
                                 check=True, tol=tol)


def ideal_compatibility_check(E: DirectedGraph, alpha: GraphAction, F: DirectedGraph, delta: EdgeLabeling,
                              tol: float = DEFAULT_TOL) -> Report:
    """J_{X(E x F)} equals J_{X(E)} [x] J_{X(F)} under chi_{v x w} -> chi_v (x) chi_w."""
    rep = Report("ideal_compatibility", tol)
    EF = skew_product(E, alpha, F, delta)
    J_EF = graph_katsura_ideal(EF).basis  # chi_{v x w} has index v |F0| + w, i.e. kron coordinates
    JE, JF = graph_katsura_ideal(E).basis, graph_katsura_ideal(F).basis
    tc = graph_product(E, alpha, F, delta, tol)
    T = tc.algebra
    prod = [T.elementary(a, b) for a in JE.T for b in JF.T]
    J_prod = np.array(prod).T if prod else np.zeros((T.dim, 0))
    rep.condition("dimension", J_EF.shape[1] == J_prod.shape[1], {"skew": J_EF.shape[1], "product": J_prod.shape[1]})
    if J_EF.shape[1] and J_prod.shape[1]:
        rep.residual("span", same_span(J_EF, J_prod))
    # the ideal of the twisted correspondence itself, computed from scratch
    J_tw = katsura_ideal(tc.abstract)
    rep.condition("twisted_dimension", J_tw.dim == J_prod.shape[1], {"twisted": J_tw.dim})
    if J_tw.dim and J_prod.shape[1]:
        rep.residual("twisted_span", same_span(J_tw.basis, J_prod))
    rep.info["dim"] = J_prod.shape[1]
    return rep


def verify_graph_product_isomorphism(E: DirectedGraph, alpha: GraphAction, F: DirectedGraph,
                                     delta: EdgeLabeling, tol: float = DEFAULT_TOL,
                                     concrete: bool = True) -> Report:
    """chi_{e x f} -> chi_e [x] chi_f with chi_{v x w} -> chi_v (x) chi_w."""
    rep = Report("graph_product_isomorphism", tol)
    EF = skew_product(E, alpha, F, delta)
    XEF = graph_correspondence(EF)
    tc = graph_product(E, alpha, F, delta, tol)
    eE, eF = np.eye(E.n_edges), np.eye(F.n_edges)
    images = np.array([tc.elementary(eE[e], eF[f]) for e in range(E.n_edges) for f in range(F.n_edges)])
    if images.size == 0:
        images = np.zeros((0, tc.dim))
    vE, vF = np.eye(E.n_vertices), np.eye(F.n_vertices)
    phi = np.array([tc.algebra.elementary(vE[v], vF[w])
                    for v in range(E.n_vertices) for w in range(F.n_vertices)]).T
    targets = [("abstract", tc.abstract)] + ([("concrete", tc.concrete)] if concrete else [])
    for label, target in targets:
        rep.merge(verify_correspondence_isomorphism(XEF, target, images, phi, phi, tol=tol), label)
    rep.info["dims"] = {"vertices": EF.n_vertices, "edges": EF.n_edges}
    return rep


# ---------------------------------------------------------------- random instances


def random_instance(rng: np.random.Generator, group: FiniteGroup, max_vertices: int = 4,
                    max_edges: int = 6) -> tuple[DirectedGraph, GraphAction, DirectedGraph, EdgeLabeling]:
    """A G-symmetric graph E (built from vertex and edge orbits) and a labeled graph F.

    ``group`` must be cyclic of prime order with generator index 1.
    """
    n = group.order
    # vertex orbits: free orbits of size n, or fixed points
    orbits: list[list[int]] = []
    nv = 0
    target = int(rng.integers(1, max_vertices + 1))
    while nv < target:
        if nv + n <= target and rng.random() < 0.6:
            orbits.append(list(range(nv, nv + n)))
            nv += n
        else:
            orbits.append([nv])
            nv += 1
    gen_v = np.arange(nv)
    for orb in orbits:
        if len(orb) == n:
            gen_v[orb] = np.roll(orb, -1)
    edges, eperm = [], []
    attempts = 0
    while attempts < 20:
        attempts += 1
        u, v = int(rng.integers(nv)), int(rng.integers(nv))
        fixed = gen_v[u] == u and gen_v[v] == v
        size = 1 if fixed and rng.random() < 0.5 else n
        if len(edges) + size > max_edges:
            continue
        base = len(edges)
        uu, vv = u, v
        for k in range(size):
            edges.append((uu, vv))
            eperm.append(base + (k + 1) % size)
            uu, vv = int(gen_v[uu]), int(gen_v[vv])
        if rng.random() < 0.3:
            break
    verts = [f"v{i}" for i in range(nv)]
    E = DirectedGraph(tuple(verts), tuple(f"e{i}" for i in range(len(edges))),
                      tuple(s for s, _ in edges), tuple(r for _, r in edges))
    alpha = GraphAction.from_generator(group, E, 1 % n if n > 1 else 0, gen_v, eperm)
    nw = int(rng.integers(1, max_vertices + 1))
    nf = int(rng.integers(0, max_edges + 1))
    F = DirectedGraph(tuple(f"w{i}" for i in range(nw)), tuple(f"f{i}" for i in range(nf)),
                      tuple(int(x) for x in rng.integers(nw, size=nf)),
                      tuple(int(x) for x in rng.integers(nw, size=nf)))
    delta = EdgeLabeling(group, F, tuple(int(x) for x in rng.integers(n, size=nf)))
    return E, alpha, F, delta


# ---------------------------------------------------------------- IO


def graph_to_json(E: DirectedGraph, labeling: EdgeLabeling | None = None) -> dict:
    edges = []
    for k, e in enumerate(E.edges):
        item = {"name": e, "src": E.vertices[E.src[k]], "dst": E.vertices[E.dst[k]]}
        if labeling is not None:
            item["label"] = labeling.group.label(labeling.labels[k])
        edges.append(item)
    return {"vertices": list(E.vertices), "edges": edges}


def graph_from_json(data: dict, group: FiniteGroup | None = None) -> tuple[DirectedGraph, EdgeLabeling | None]:
    if not isinstance(data, dict) or "vertices" not in data or "edges" not in data:
        raise GraphFormatError("graph object needs 'vertices' and 'edges'")
    try:
        E = DirectedGraph.from_edges(data["vertices"], [(e["name"], e["src"], e["dst"]) for e in data["edges"]])
    except (KeyError, TypeError) as err:
        raise GraphFormatError(f"malformed edge entry ({err})") from None
    except ValueError as err:
        raise GraphFormatError(str(err)) from None
    lab = None
    if group is not None and any("label" in e for e in data["edges"]):
        try:
            lab = EdgeLabeling(group, E, [group.index(e.get("label", group.label(group.identity)))
                                          for e in data["edges"]])
        except KeyError as err:
            raise GraphFormatError(f"unknown group label {err.args[0]!r}") from None
    return E, lab


def _q(x) -> str:
    return '"' + str(x).replace("\\", "\\\\").replace('"', '\\"') + '"'


def graph_to_dot(E: DirectedGraph, labeling: EdgeLabeling | None = None, name: str = "G") -> str:
    lines = [f"digraph {_q(name)} {{"]
    for v in E.vertices:
        lines.append(f"  {_q(v)};")
    for k, e in enumerate(E.edges):
        attrs = [f"id={_q(e)}"]
        if labeling is not None:
            attrs.append(f"label={_q(labeling.group.label(labeling.labels[k]))}")
        lines.append(f"  {_q(E.vertices[E.src[k]])} -> {_q(E.vertices[E.dst[k]])} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


_STR = r'"((?:[^"\\]|\\.)*)"'
_NODE = re.compile(rf"^\s*{_STR}\s*;?\s*$")
_EDGE = re.compile(rf"^\s*{_STR}\s*->\s*{_STR}\s*(?:\[(.*)\])?\s*;?\s*$")
_ATTR = re.compile(rf"(\w+)\s*=\s*{_STR}")
_HEAD = re.compile(rf"^\s*digraph\s*(?:{_STR}|\w+)?\s*\{{\s*$")


def _unq(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s)


def graph_from_dot(text: str) -> tuple[DirectedGraph, list]:
    """Parse the DOT subset written by ``graph_to_dot``.

    Returns the graph and the per-edge ``label`` attribute (None when absent).
    """
    verts: list = []
    edges: list = []
    labels: list = []
    state = "head"
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("//"):
            continue
        if state == "head":
            if not _HEAD.match(line):
                raise GraphFormatError("expected 'digraph NAME {'", no)
            state = "body"
            continue
        if state == "done":
            raise GraphFormatError("content after closing brace", no)
        if line == "}":
            state = "done"
            continue
        m = _EDGE.match(line)
        if m:
            attrs = {k: _unq(v) for k, v in _ATTR.findall(m.group(3) or "")}
            s, r = _unq(m.group(1)), _unq(m.group(2))
            for v in (s, r):
                if v not in verts:
                    verts.append(v)
            edges.append((attrs.get("id", f"e{len(edges)}"), s, r))
            labels.append(attrs.get("label"))
            continue
        m = _NODE.match(line)
        if m:
            v = _unq(m.group(1))
            if v not in verts:
                verts.append(v)
            continue
        raise GraphFormatError(f"cannot parse {line!r}", no)
    if state != "done":
        raise GraphFormatError("missing closing brace", len(text.splitlines()) or None)
    try:
        return DirectedGraph.from_edges(verts, edges), labels
    except ValueError as err:
        raise GraphFormatError(str(err)) from None


def graph_to_json_text(E: DirectedGraph, labeling: EdgeLabeling | None = None) -> str:
    return json.dumps(graph_to_json(E, labeling), indent=2, sort_keys=True) + "\n"


def graph_from_json_text(text: str, group: FiniteGroup | None = None):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise GraphFormatError(err.msg, err.lineno) from None
    return graph_from_json(data, group)


# ---------------------------------------------------------------- fixtures


def skw_fixture():
    """E = 2-cycle v0 -a-> v1 -b-> v0 with the Z_2 swap; F = one vertex, one loop labeled 1."""
    from .fdalg import make_cyclic_group
    z2 = make_cyclic_group(2)
    E = DirectedGraph.from_edges(["v0", "v1"], [("a", "v0", "v1"), ("b", "v1", "v0")])
    alpha = GraphAction.from_generator(z2, E, 1, [1, 0], [1, 0])
    F = DirectedGraph.from_edges(["w"], [("e", "w", "w")])
    delta = EdgeLabeling(z2, F, (1,))
    return E, alpha, F, delta
