"""File-driven front end: ``corrkit run``, ``corrkit export-dot`` and ``corrkit demo``.

A spec file is a JSON document with the sections groups, algebras,
gradings, actions, graphs, labelings and tasks.  Every task names one
registered operation (``module.op``) and its arguments.  Exit codes: 0
when every task passes, 1 on a verification failure, 2 on input errors.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable

import jsonschema
import numpy as np

from . import balanced as bal
from . import fdalg, fock, graphs, hilbmod, twist
from .report import DEFAULT_TOL, Report

REPORT_SCHEMA = "corrkit-report/1"
ZERO_FLOOR = 1e-13
DEMOS = ("skw", "clifford", "crossed-z2")


class InputError(Exception):
    """A problem with the spec file; ``pointer`` is a JSON pointer into it."""

    def __init__(self, pointer: str, msg: str):
        super().__init__(f"{pointer or '/'}: {msg}")
        self.pointer = pointer or "/"
        self.msg = msg


def _ptr(*parts) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


# ---------------------------------------------------------------- schema

_complex = {"oneOf": [{"type": "number"},
                      {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}
_matrix = {"type": "array", "items": {"type": "array", "items": _complex}}
_name = {"type": "string", "minLength": 1}
_label = {"type": ["string", "integer"]}

SPEC_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["tasks"],
    "properties": {
        "description": {"type": "string"},
        "groups": {"type": "object", "additionalProperties": {
            "type": "object",
            "oneOf": [
                {"required": ["cyclic"], "properties": {"cyclic": {"type": "integer", "minimum": 1}},
                 "additionalProperties": False},
                {"required": ["elements", "table"], "additionalProperties": False, "properties": {
                    "elements": {"type": "array", "items": _label, "minItems": 1},
                    "table": {"type": "array", "items": {"type": "array", "items": _label}}}},
            ]}},
        "algebras": {"type": "object", "additionalProperties": {
            "type": "object", "minProperties": 1, "maxProperties": 1, "properties": {
                "blocks": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "group_algebra": _name,
                "function_algebra": _name,
                "vertex_algebra": _name},
            "additionalProperties": False}},
        "gradings": {"type": "object", "additionalProperties": {
            "type": "object", "required": ["kind"], "properties": {
                "kind": {"enum": ["canonical", "trivial", "components", "vertex_degrees", "dual"]},
                "group": _name, "algebra": _name, "from": _name,
                "modulus": {"type": ["integer", "null"], "minimum": 1},
                "degrees": {"type": "array", "items": _label},
                "components": {"type": "object", "additionalProperties": {"type": "array", "items": _matrix}}},
            "additionalProperties": False}},
        "actions": {"type": "object", "additionalProperties": {
            "type": "object", "required": ["kind", "group"], "properties": {
                "kind": {"enum": ["translation", "trivial", "unitaries", "dual", "sign", "graph"]},
                "group": _name, "algebra": _name, "graph": _name, "grading": _name,
                "generator": _label,
                "unitaries": {"type": "object", "additionalProperties": _matrix},
                "vertices": {"type": "object", "additionalProperties": _label},
                "edges": {"type": "object", "additionalProperties": _label}},
            "additionalProperties": False}},
        "graphs": {"type": "object", "additionalProperties": {
            "type": "object",
            "oneOf": [
                {"required": ["vertices", "edges"], "additionalProperties": False, "properties": {
                    "vertices": {"type": "array", "items": _label},
                    "edges": {"type": "array", "items": {
                        "type": "object", "required": ["name", "src", "dst"], "additionalProperties": False,
                        "properties": {"name": _label, "src": _label, "dst": _label}}}}},
                {"required": ["skew_product"], "additionalProperties": False, "properties": {
                    "skew_product": {"type": "object", "required": ["action", "labeling"],
                                     "additionalProperties": False,
                                     "properties": {"action": _name, "labeling": _name}}}},
            ]}},
        "labelings": {"type": "object", "additionalProperties": {
            "type": "object", "required": ["group", "graph", "labels"], "additionalProperties": False,
            "properties": {"group": _name, "graph": _name,
                           "labels": {"type": "object", "additionalProperties": _label}}}},
        "tasks": {"type": "array", "items": {
            "type": "object", "required": ["op"], "additionalProperties": False, "properties": {
                "name": {"type": "string"},
                "op": {"type": "string", "pattern": "^[a-z_]+\\.[a-z_0-9]+$"},
                "args": {"type": "object"},
                "expect": {"type": "object"}}}},
    },
}


def validate_spec(data) -> None:
    """Raise InputError for the first schema violation (deepest pointer first)."""
    validator = jsonschema.Draft202012Validator(SPEC_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (-len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        raise InputError(_ptr(*err.absolute_path), err.message)


# ---------------------------------------------------------------- spec context


def _complex_value(v):
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def _matrix_value(m, pointer: str) -> np.ndarray:
    try:
        arr = np.array([[_complex_value(v) for v in row] for row in m], dtype=complex)
    except (TypeError, ValueError, IndexError):
        raise InputError(pointer, "not a matrix of numbers or [re, im] pairs") from None
    if arr.ndim != 2 or (arr.size and len({len(r) for r in m}) != 1):
        raise InputError(pointer, "matrix rows must have equal length")
    return arr


class Context:
    """Objects defined in a spec file, built eagerly so references fail early."""

    def __init__(self, data: dict):
        self.data = data
        self.groups: dict[str, fdalg.FiniteGroup] = {}
        self.algebras: dict[str, fdalg.MatrixAlgebra] = {}
        self.group_algebras: dict[str, fdalg.GroupAlgebra] = {}
        self.function_actions: dict[str, fdalg.AlgAction] = {}
        self.gradings: dict[str, Any] = {}
        self.actions: dict[str, Any] = {}
        self.graphs: dict[str, graphs.DirectedGraph] = {}
        self.labelings: dict[str, graphs.EdgeLabeling] = {}
        self._build()

    # lookups with pointers
    def _get(self, table: dict, kind: str, name, pointer: str):
        if not isinstance(name, str) or name not in table:
            raise InputError(pointer, f"unknown {kind} {name!r}")
        return table[name]

    def group(self, name, pointer):
        return self._get(self.groups, "group", name, pointer)

    def algebra(self, name, pointer):
        return self._get(self.algebras, "algebra", name, pointer)

    def grading(self, name, pointer):
        return self._get(self.gradings, "grading", name, pointer)

    def action(self, name, pointer):
        return self._get(self.actions, "action", name, pointer)

    def graph(self, name, pointer):
        return self._get(self.graphs, "graph", name, pointer)

    def labeling(self, name, pointer):
        return self._get(self.labelings, "labeling", name, pointer)

    def element(self, g: fdalg.FiniteGroup, label, pointer: str) -> int:
        for i, e in enumerate(g.elements):
            if e == label or str(e) == str(label):
                return i
        raise InputError(pointer, f"{label!r} is not an element of the group")

    # construction in dependency order
    def _build(self) -> None:
        d = self.data
        for name, spec in d.get("groups", {}).items():
            self.groups[name] = self._make_group(spec, _ptr("groups", name))
        pending = {}
        for name, spec in d.get("graphs", {}).items():
            if "skew_product" in spec:
                pending[name] = spec["skew_product"]
                continue
            p = _ptr("graphs", name)
            try:
                self.graphs[name] = graphs.DirectedGraph.from_edges(
                    spec["vertices"], [(e["name"], e["src"], e["dst"]) for e in spec["edges"]])
            except ValueError as err:
                raise InputError(p, str(err)) from None
        for name, spec in d.get("algebras", {}).items():
            self.algebras[name] = self._make_algebra(name, spec, _ptr("algebras", name))
        grads = d.get("gradings", {})
        for name, spec in grads.items():
            if spec["kind"] != "dual":
                self.gradings[name] = self._make_grading(spec, _ptr("gradings", name))
        for name, spec in grads.items():
            if spec["kind"] == "dual":
                self.gradings[name] = self._make_dual(spec, _ptr("gradings", name))
        for name, spec in d.get("actions", {}).items():
            self.actions[name] = self._make_action(spec, _ptr("actions", name))
        for name, spec in d.get("labelings", {}).items():
            p = _ptr("labelings", name)
            g = self.group(spec["group"], p + "/group")
            E = self.graph(spec["graph"], p + "/graph")
            labels = []
            for e in E.edges:
                if str(e) not in {str(k) for k in spec["labels"]}:
                    raise InputError(p + "/labels", f"edge {e!r} has no label")
                val = next(v for k, v in spec["labels"].items() if str(k) == str(e))
                labels.append(self.element(g, val, _ptr("labelings", name, "labels", e)))
            extra = {str(k) for k in spec["labels"]} - {str(e) for e in E.edges}
            if extra:
                raise InputError(p + "/labels", f"unknown edge {sorted(extra)[0]!r}")
            self.labelings[name] = graphs.EdgeLabeling(g, E, tuple(labels))
        for name, sp in pending.items():
            p = _ptr("graphs", name, "skew_product")
            alpha = self.action(sp["action"], p + "/action")
            if not isinstance(alpha, graphs.GraphAction):
                raise InputError(p + "/action", "not a graph action")
            delta = self.labeling(sp["labeling"], p + "/labeling")
            if alpha.group != delta.group:
                raise InputError(p, "action and labeling use different groups")
            self.graphs[name] = graphs.skew_product(alpha.graph, alpha, delta.graph, delta)

    def _make_group(self, spec, p) -> fdalg.FiniteGroup:
        if "cyclic" in spec:
            return fdalg.make_cyclic_group(spec["cyclic"])
        elems = spec["elements"]
        idx = {str(e): i for i, e in enumerate(elems)}
        try:
            table = [[idx[str(v)] for v in row] for row in spec["table"]]
        except KeyError as err:
            raise InputError(p + "/table", f"unknown element {err.args[0]!r}") from None
        try:
            return fdalg.FiniteGroup(elems, table)
        except ValueError as err:
            raise InputError(p + "/table", str(err)) from None

    def _make_algebra(self, name, spec, p):
        if "blocks" in spec:
            return fdalg.FDAlgebra(spec["blocks"], name=name)
        if "group_algebra" in spec:
            ga = fdalg.group_algebra(self.group(spec["group_algebra"], p + "/group_algebra"))
            self.group_algebras[name] = ga
            return ga.algebra
        if "function_algebra" in spec:
            alg, lam = fdalg.function_algebra(self.group(spec["function_algebra"], p + "/function_algebra"))
            self.function_actions[name] = lam
            return alg
        return graphs.vertex_algebra(self.graph(spec["vertex_algebra"], p + "/vertex_algebra"))

    def _need(self, spec, key, p):
        if key not in spec:
            raise InputError(p, f"missing '{key}'")
        return spec[key]

    def _make_grading(self, spec, p):
        kind = spec["kind"]
        alg_name = self._need(spec, "algebra", p)
        alg = self.algebra(alg_name, p + "/algebra")
        if kind == "canonical":
            if alg_name not in self.group_algebras:
                raise InputError(p + "/algebra", "canonical gradings need a group algebra")
            return self.group_algebras[alg_name].grading
        g = self.group(self._need(spec, "group", p), p + "/group")
        if kind == "trivial":
            return fdalg.AlgGrading.trivial(g, alg)
        if kind == "vertex_degrees":
            if not isinstance(alg, fdalg.FDAlgebra):
                raise InputError(p + "/algebra", "vertex degrees need a block algebra")
            degs = self._need(spec, "degrees", p)
            if len(degs) != alg.size:
                raise InputError(p + "/degrees", f"need {alg.size} degrees")
            return fdalg.AlgGrading.from_vertex_degrees(
                g, alg, [self.element(g, x, f"{p}/degrees/{i}") for i, x in enumerate(degs)])
        comps = {}
        for lab, mats in self._need(spec, "components", p).items():
            q = f"{p}/components/{lab}"
            s = self.element(g, lab, q)
            comps[s] = [self._algebra_matrix(alg, m, f"{q}/{i}") for i, m in enumerate(mats)]
        grading = fdalg.AlgGrading(g, alg, comps)
        rep = fdalg.verify_grading(grading)
        if not rep.passed:
            raise InputError(p, "components do not form a grading: " + ",".join(rep.failures))
        return grading

    def _algebra_matrix(self, alg, m, p) -> np.ndarray:
        mat = _matrix_value(m, p)
        if mat.shape != (alg.size, alg.size):
            raise InputError(p, f"expected a {alg.size}x{alg.size} matrix")
        if alg.membership_residual(mat) > 1e-9:
            raise InputError(p, "matrix is not in the algebra")
        return mat

    def _make_dual(self, spec, p):
        if "from" in spec:
            base = self.grading(spec["from"], p + "/from")
            try:
                return bal.DualGrading.from_grading(base)
            except twist.PreconditionError as err:
                raise InputError(p + "/from", str(err)) from None
        alg = self.algebra(self._need(spec, "algebra", p), p + "/algebra")
        comps = {}
        for lab, mats in self._need(spec, "components", p).items():
            q = f"{p}/components/{lab}"
            try:
                k = int(lab)
            except ValueError:
                raise InputError(q, "dual degrees are integers") from None
            comps[k] = [self._algebra_matrix(alg, m, f"{q}/{i}") for i, m in enumerate(mats)]
        dg = bal.DualGrading(alg, comps, spec.get("modulus"))
        rep = dg.verify()
        if not rep.passed:
            raise InputError(p, "components do not form a grading: " + ",".join(rep.failures))
        return dg

    def _make_action(self, spec, p):
        kind = spec["kind"]
        g = self.group(spec["group"], p + "/group")
        if kind == "graph":
            E = self.graph(self._need(spec, "graph", p), p + "/graph")
            gen = self.element(g, self._need(spec, "generator", p), p + "/generator")
            vmap, emap = spec.get("vertices", {}), spec.get("edges", {})
            vidx = {str(v): i for i, v in enumerate(E.vertices)}
            eidx = {str(e): i for i, e in enumerate(E.edges)}

            def perm(table, index, key):
                out = list(range(len(index)))
                for a, b in table.items():
                    if str(a) not in index:
                        raise InputError(f"{p}/{key}/{a}", f"unknown {key[:-1]} {a!r}")
                    if str(b) not in index:
                        raise InputError(f"{p}/{key}/{a}", f"unknown {key[:-1]} {b!r}")
                    out[index[str(a)]] = index[str(b)]
                return out

            act = graphs.GraphAction.from_generator(g, E, gen, perm(vmap, vidx, "vertices"),
                                                    perm(emap, eidx, "edges"))
            rep = act.verify()
            if not rep.passed:
                raise InputError(p, "permutations do not define a graph action: " + ",".join(rep.failures))
            return act
        if kind == "sign":
            gr = self.grading(self._need(spec, "grading", p), p + "/grading")
            if gr.group.order != 2:
                raise InputError(p + "/grading", "sign actions need a Z_2 grading")
            return twist._sign_action(gr)
        if kind == "dual":
            dg = self.grading(self._need(spec, "grading", p), p + "/grading")
            if not isinstance(dg, bal.DualGrading):
                raise InputError(p + "/grading", "not a dual grading")
            try:
                return dg.associated_action(g)
            except (ValueError, twist.PreconditionError) as err:
                raise InputError(p, str(err)) from None
        alg_name = self._need(spec, "algebra", p)
        alg = self.algebra(alg_name, p + "/algebra")
        if kind == "trivial":
            return fdalg.AlgAction.trivial(g, alg)
        if kind == "translation":
            if alg_name not in self.function_actions or self.function_actions[alg_name].group != g:
                raise InputError(p + "/algebra", "translation needs the function algebra of the same group")
            return self.function_actions[alg_name]
        us = {}
        for lab, m in self._need(spec, "unitaries", p).items():
            q = f"{p}/unitaries/{lab}"
            u = _matrix_value(m, q)
            if u.shape != (alg.size, alg.size) or not np.allclose(u @ u.conj().T, np.eye(alg.size), atol=1e-9):
                raise InputError(q, "expected a unitary of the ambient size")
            us[self.element(g, lab, q)] = u
        act = fdalg.AlgAction.from_unitaries(g, alg, us)
        rep = fdalg.verify_action(act)
        if not rep.passed:
            raise InputError(p, "unitaries do not define an action: " + ",".join(rep.failures))
        return act


# ---------------------------------------------------------------- task helpers


@dataclass
class TaskEnv:
    ctx: Context
    args: dict
    pointer: str
    tol: float
    rng: np.random.Generator
    details: dict = field(default_factory=dict)

    def arg(self, key, default=...):
        if key not in self.args:
            if default is ...:
                raise InputError(self.pointer, f"missing argument '{key}'")
            return default
        return self.args[key]

    def at(self, *parts) -> str:
        return self.pointer + _ptr(*parts)


@dataclass
class CorrData:
    corr: hilbmod.Correspondence
    action: hilbmod.CorrAction | None = None
    grading: hilbmod.CorrGrading | None = None
    graph: graphs.DirectedGraph | None = None
    graph_action: graphs.GraphAction | None = None
    labeling: graphs.EdgeLabeling | None = None


def _corr(env: TaskEnv, key: str) -> CorrData:
    """Resolve {"over_itself": A} or {"graph": E}, with an optional action, grading or labeling."""
    spec = env.arg(key)
    p = env.at(key)
    if not isinstance(spec, dict):
        raise InputError(p, "correspondence must be an object")
    ctx = env.ctx
    if "graph" in spec:
        E = ctx.graph(spec["graph"], p + "/graph")
        out = CorrData(graphs.graph_correspondence(E), graph=E)
    elif "over_itself" in spec:
        out = CorrData(hilbmod.Correspondence.over_itself(ctx.algebra(spec["over_itself"], p + "/over_itself")))
    else:
        raise InputError(p, "expected 'graph' or 'over_itself'")
    if "action" in spec:
        act = ctx.action(spec["action"], p + "/action")
        if isinstance(act, graphs.GraphAction):
            if out.graph is None or act.graph != out.graph:
                raise InputError(p + "/action", "graph action does not act on this graph")
            try:
                out.action = graphs.graph_action_lift(act, out.corr, env.tol)
            except twist.PreconditionError as err:
                raise InputError(p + "/action", str(err)) from None
            out.graph_action = act
        else:
            if act.algebra is not out.corr.left_algebra and act.algebra.dim != out.corr.left_algebra.dim:
                raise InputError(p + "/action", "action is on a different algebra")
            out.action = hilbmod.CorrAction.on_algebra(act, out.corr)
    if "grading" in spec:
        gr = ctx.grading(spec["grading"], p + "/grading")
        if not isinstance(gr, fdalg.AlgGrading) or gr.algebra.dim != out.corr.left_algebra.dim:
            raise InputError(p + "/grading", "grading is not on the coefficient algebra")
        out.grading = hilbmod.CorrGrading.on_algebra(gr, out.corr)
    if "labeling" in spec:
        delta = ctx.labeling(spec["labeling"], p + "/labeling")
        if out.graph is None or delta.graph != out.graph:
            raise InputError(p + "/labeling", "labeling is for a different graph")
        out.grading = graphs.labeling_grading(delta, out.corr)
        out.labeling = delta
    return out


def _need_action(env, cd: CorrData, key):
    if cd.action is None:
        raise InputError(env.at(key), "needs an 'action'")
    return cd.action


def _need_grading(env, cd: CorrData, key):
    if cd.grading is None:
        raise InputError(env.at(key), "needs a 'grading' or 'labeling'")
    return cd.grading


def _vector(env: TaskEnv, cd: CorrData, value, pointer: str) -> np.ndarray:
    """A module element: an edge name (graph modules), a basis index or a coordinate list."""
    d = cd.corr.dim
    if isinstance(value, str):
        if cd.graph is None or value not in [str(e) for e in cd.graph.edges]:
            raise InputError(pointer, f"unknown edge {value!r}")
        return np.eye(d)[[str(e) for e in cd.graph.edges].index(value)]
    if isinstance(value, int):
        if not 0 <= value < d:
            raise InputError(pointer, "basis index out of range")
        return np.eye(d)[value]
    try:
        v = np.array([_complex_value(c) for c in value], dtype=complex)
    except (TypeError, ValueError, IndexError):
        raise InputError(pointer, "not a module element") from None
    if v.shape != (d,):
        raise InputError(pointer, f"expected {d} coordinates")
    return v


def _alg_element(env: TaskEnv, alg, value, pointer: str, graph=None) -> np.ndarray:
    """An algebra element: a matrix, or {"vertices": [...]} for vertex algebras."""
    if isinstance(value, dict) and "vertices" in value:
        if graph is None:
            raise InputError(pointer, "vertex sums need a graph algebra")
        out = np.zeros(alg.dim, dtype=complex)
        names = [str(v) for v in graph.vertices]
        for i, v in enumerate(value["vertices"]):
            if str(v) not in names:
                raise InputError(f"{pointer}/vertices/{i}", f"unknown vertex {v!r}")
            out[names.index(str(v))] += 1
        return out
    return alg.coords(env.ctx._algebra_matrix(alg, value, pointer))


def _rep(env: TaskEnv, key: str = "rep") -> fock.ToeplitzRep:
    spec = env.arg(key)
    p = env.at(key)
    if isinstance(spec, dict) and "ck" in spec:
        E = env.ctx.graph(spec["ck"], p + "/ck")
        try:
            return fock.ck_representation(E)
        except twist.PreconditionError as err:
            raise InputError(p + "/ck", str(err)) from None
    if isinstance(spec, dict) and "fock" in spec:
        sub = TaskEnv(env.ctx, spec, p, env.tol, env.rng)
        cd = _corr(sub, "fock")
        level = spec.get("level", 3)
        if not isinstance(level, int) or level < 1:
            raise InputError(p + "/level", "level must be a positive integer")
        return fock.fock_toeplitz_rep(cd.corr, level)
    raise InputError(p, "expected {'ck': graph} or {'fock': correspondence, 'level': N}")


def _twisted(env: TaskEnv) -> twist.TwistedAlgebra:
    act = env.ctx.action(env.arg("action"), env.at("action"))
    gr = env.ctx.grading(env.arg("grading"), env.at("grading"))
    if isinstance(act, graphs.GraphAction) or not isinstance(gr, fdalg.AlgGrading):
        raise InputError(env.pointer, "needs an algebra action and a group grading")
    if act.group != gr.group:
        raise InputError(env.pointer, "action and grading use different groups")
    return twist.TwistedAlgebra(act.algebra, act, gr.algebra, gr, check=True, tol=env.tol)


def _graph_pair(env: TaskEnv):
    alpha = env.ctx.action(env.arg("action"), env.at("action"))
    if not isinstance(alpha, graphs.GraphAction):
        raise InputError(env.at("action"), "not a graph action")
    delta = env.ctx.labeling(env.arg("labeling"), env.at("labeling"))
    if alpha.group != delta.group:
        raise InputError(env.pointer, "action and labeling use different groups")
    return alpha.graph, alpha, delta.graph, delta


def _signature(sig) -> dict:
    return {"dim": sig.dim, "center_dim": sig.center_dim, "blocks": list(sig.blocks)}


# ---------------------------------------------------------------- registry

Handler = Callable[[TaskEnv], Report]
REGISTRY: dict[str, Handler] = {}


def task(name: str):
    def deco(fn: Handler) -> Handler:
        REGISTRY[name] = fn
        return fn
    return deco


# fdalg

@task("fdalg.make_cyclic_group")
def _t_cyclic(env):
    n = env.arg("n")
    if not isinstance(n, int) or n < 1:
        raise InputError(env.at("n"), "order must be a positive integer")
    g = fdalg.make_cyclic_group(n)
    fdalg.FiniteGroup(g.elements, g.mult)  # full axiom check
    env.details.update(order=g.order, abelian=g.is_abelian)
    return Report("make_cyclic_group", env.tol)


def _elements(env, *keys):
    alg = env.ctx.algebra(env.arg("algebra"), env.at("algebra"))
    return alg, [fdalg.AlgElement(alg, env.ctx._algebra_matrix(alg, env.arg(k), env.at(k))) for k in keys]


@task("fdalg.multiply")
def _t_multiply(env):
    alg, (a, b) = _elements(env, "a", "b")
    c = fdalg.multiply(a, b)
    r = Report("multiply", env.tol)
    r.residual("closure", alg.membership_residual(c.matrix))
    env.details["product"] = c.matrix
    return r


@task("fdalg.involution")
def _t_involution(env):
    alg, (a,) = _elements(env, "a")
    s = fdalg.involution(a)
    r = Report("involution", env.tol)
    r.residual("involutive", float(np.abs(fdalg.involution(s).matrix - a.matrix).max(initial=0)))
    env.details["star"] = s.matrix
    return r


@task("fdalg.operator_norm")
def _t_norm(env):
    alg, (a,) = _elements(env, "a")
    n = fdalg.operator_norm(a)
    r = Report("operator_norm", env.tol)
    # C*-identity ||a^* a|| = ||a||^2
    r.residual("c_star_identity", abs(fdalg.operator_norm(fdalg.multiply(fdalg.involution(a), a)) - n * n))
    env.details["norm"] = n
    return r


@task("fdalg.group_algebra")
def _t_group_algebra(env):
    g = env.ctx.group(env.arg("group"), env.at("group"))
    ga = fdalg.group_algebra(g)
    env.details.update(dim=ga.algebra.dim, signature=_signature(fdalg.classify(ga.algebra)))
    return fdalg.verify_grading(ga.grading, env.tol)


@task("fdalg.function_algebra")
def _t_function_algebra(env):
    g = env.ctx.group(env.arg("group"), env.at("group"))
    alg, lam = fdalg.function_algebra(g)
    env.details["dim"] = alg.dim
    return fdalg.verify_action(lam, env.tol)


@task("fdalg.verify_action")
def _t_verify_action(env):
    act = env.ctx.action(env.arg("action"), env.at("action"))
    if isinstance(act, graphs.GraphAction):
        return act.verify()
    return fdalg.verify_action(act, env.tol)


@task("fdalg.verify_grading")
def _t_verify_grading(env):
    gr = env.ctx.grading(env.arg("grading"), env.at("grading"))
    if isinstance(gr, bal.DualGrading):
        return gr.verify(env.tol)
    return fdalg.verify_grading(gr, env.tol)


@task("fdalg.homogeneous_decomposition")
def _t_decompose(env):
    gr = env.ctx.grading(env.arg("grading"), env.at("grading"))
    if not isinstance(gr, fdalg.AlgGrading):
        raise InputError(env.at("grading"), "needs a group grading")
    a = fdalg.AlgElement(gr.algebra, env.ctx._algebra_matrix(gr.algebra, env.arg("a"), env.at("a")))
    parts = fdalg.homogeneous_decomposition(gr, a, env.tol)
    r = Report("homogeneous_decomposition", env.tol)
    total = sum((p.matrix for _, p in parts), np.zeros_like(a.matrix))
    r.residual("reconstruction", float(np.abs(total - a.matrix).max(initial=0)))
    env.details["degrees"] = [gr.group.label(s) for s, _ in parts]
    return r


# hilbmod

@task("hilbmod.verify_correspondence")
def _t_verify_corr(env):
    cd = _corr(env, "corr")
    env.details["dim"] = cd.corr.dim
    return hilbmod.verify_correspondence(cd.corr, env.tol)


@task("hilbmod.theta")
def _t_theta(env):
    cd = _corr(env, "corr")
    x = _vector(env, cd, env.arg("x"), env.at("x"))
    y = _vector(env, cd, env.arg("y"), env.at("y"))
    mod = cd.corr.module
    th = hilbmod.theta(mod, x, y)
    adj = hilbmod.adjoint_of(mod, th.matrix, env.tol)
    r = Report("theta", env.tol)
    r.residual("adjoint", float(np.abs(adj.adjoint_matrix - hilbmod.theta_matrix(mod, y, x)).max(initial=0)))
    for k, z in enumerate(np.eye(mod.dim)):
        r.residual("rank_one", float(np.abs(th(z) - mod.act_right(x, mod.ip(y, z))).max(initial=0)), k)
    env.details["theta"] = th.matrix
    return r


@task("hilbmod.adjoint_of")
def _t_adjoint(env):
    cd = _corr(env, "corr")
    T = _matrix_value(env.arg("operator"), env.at("operator"))
    if T.shape != (cd.corr.dim, cd.corr.dim):
        raise InputError(env.at("operator"), f"expected a {cd.corr.dim}x{cd.corr.dim} matrix")
    r = Report("adjoint_of", env.tol)
    try:
        op = hilbmod.adjoint_of(cd.corr.module, T, env.tol)
        env.details.update(adjointable=True, adjoint=op.adjoint_matrix)
    except hilbmod.NotAdjointable as err:
        env.details.update(adjointable=False, reason=str(err))
    return r


@task("hilbmod.linking_algebra")
def _t_linking(env):
    cd = _corr(env, "corr")
    L, rep = hilbmod.linking_algebra(cd.corr.module, env.tol)
    env.details.update(dim=L.algebra.dim, signature=_signature(fdalg.classify(L.algebra)))
    return rep


@task("hilbmod.katsura_ideal")
def _t_katsura(env):
    cd = _corr(env, "corr")
    J = hilbmod.katsura_ideal(cd.corr)
    env.details.update(dim=J.dim, kernel_dim=int(J.kernel.shape[1]))
    return Report("katsura_ideal", env.tol)


@task("hilbmod.is_katsura_nondegenerate")
def _t_nondeg(env):
    cd = _corr(env, "corr")
    env.details.update(value=hilbmod.is_katsura_nondegenerate(cd.corr),
                       dims=hilbmod.nondegeneracy_dims(cd.corr))
    return Report("is_katsura_nondegenerate", env.tol)


@task("hilbmod.is_full")
def _t_full(env):
    cd = _corr(env, "corr")
    env.details["value"] = hilbmod.is_full(cd.corr.module)
    return Report("is_full", env.tol)


@task("hilbmod.verify_correspondence_isomorphism")
def _t_iso(env):
    X, Yd = _corr(env, "X").corr, _corr(env, "Y")
    Y = Yd.corr
    if "images" in env.args:
        images = np.array([_vector(env, Yd, v, env.at("images", i))
                           for i, v in enumerate(env.arg("images"))])
    else:
        images = np.eye(Y.dim)[:X.dim]
    if images.shape[0] != X.dim:
        raise InputError(env.at("images"), f"need {X.dim} images")
    nA, nB = X.left_algebra.dim, X.algebra.dim
    if (nA, nB) != (Y.left_algebra.dim, Y.algebra.dim):
        raise InputError(env.pointer, "coefficient algebras differ in dimension")
    return hilbmod.verify_correspondence_isomorphism(X, Y, images, np.eye(nA), np.eye(nB), tol=env.tol)


# twist

@task("twist.heisenberg_model")
def _t_heis(env):
    g = env.ctx.group(env.arg("group"), env.at("group"))
    return twist.heisenberg_model(g).covariance_report(env.tol)


@task("twist.twisted_algebra")
def _t_twisted_algebra(env):
    T = _twisted(env)
    r = Report("twisted_algebra", env.tol)
    f = twist.formula_report(T, env.tol)
    r.merge(f)
    r.merge(twist.model_equivalence_report(T, env.tol))
    env.details.update(dim=T.dim, signature=_signature(T.signature()))
    if "commutation_inverse_variant" in f.info:
        env.details["commutation_inverse_variant"] = f.info["commutation_inverse_variant"]
    return r


def _tc(env) -> tuple[twist.TwistedCorrespondence, CorrData, CorrData]:
    X, Y = _corr(env, "X"), _corr(env, "Y")
    act, gr = _need_action(env, X, "X"), _need_grading(env, Y, "Y")
    if act.group != gr.group:
        raise InputError(env.pointer, "action and grading use different groups")
    return twist.TwistedCorrespondence(X.corr, act, Y.corr, gr, check=True, tol=env.tol), X, Y


@task("twist.twisted_correspondence")
def _t_tc(env):
    tc, _, _ = _tc(env)
    r = Report("twisted_correspondence", env.tol)
    r.merge(twist.correspondence_equivalence_report(tc, env.tol))
    r.merge(twist.compacts_report(tc, env.tol))
    env.details["dim"] = tc.dim
    return r


@task("twist.twisted_generating_system")
def _t_tgs(env):
    tc, _, _ = _tc(env)
    X0, A0 = np.eye(tc.X.dim), np.eye(tc.X.left_algebra.dim)
    Y0, B0 = tc.grad.hom_basis.T, tc.grad.algebra_grading.hom_basis.T
    sys_, rep = twist.twisted_generating_system(tc, X0, A0, Y0, B0, env.tol)
    env.details["generators"] = int(sys_.X0.shape[0])
    return rep


def _graded_pair(env):
    X, Y = _corr(env, "X"), _corr(env, "Y")
    return X.corr, _need_grading(env, X, "X"), Y.corr, _need_grading(env, Y, "Y")


@task("twist.graded_tensor_product")
def _t_graded(env):
    X, gX, Y, gY = _graded_pair(env)
    try:
        res = twist.graded_tensor_product(X, gX, Y, gY, tol=env.tol)
    except twist.PreconditionError as err:
        raise InputError(env.pointer, str(err)) from None
    r = Report("graded_tensor_product", env.tol)
    r.merge(res.report)
    r.merge(twist.koszul_sign_report(res, gX, gY, env.tol))
    env.details["signature"] = _signature(res.twisted.algebra.signature())
    return r


@task("twist.crossed_by_action")
def _t_cross_action(env):
    X = _corr(env, "X")
    cp = twist.crossed_by_action(X.corr, _need_action(env, X, "X"), env.tol)
    env.details["signature"] = _signature(cp.twisted.algebra.signature())
    return cp.report


@task("twist.crossed_by_coaction")
def _t_cross_coaction(env):
    Y = _corr(env, "Y")
    cp = twist.crossed_by_coaction(Y.corr, _need_grading(env, Y, "Y"), env.tol)
    env.details["signature"] = _signature(cp.twisted.algebra.signature())
    return cp.report


@task("twist.flip_sigma23")
def _t_flip(env):
    T = _twisted(env)
    C = env.ctx.algebra(env.arg("C"), env.at("C"))
    M, rep = twist.flip_sigma23(T.A, T.alpha, T.B, T.grading, C, env.tol)
    env.details["dim"] = int(M.shape[0])
    return rep


# balanced

def _balanced_data(env):
    T = _twisted(env)
    gA = env.ctx.grading(env.arg("dual_A"), env.at("dual_A"))
    gB = env.ctx.grading(env.arg("dual_B"), env.at("dual_B"))
    for k, g in (("dual_A", gA), ("dual_B", gB)):
        if not isinstance(g, bal.DualGrading):
            raise InputError(env.at(k), "not a dual grading")
    if gA.algebra.dim != T.A.dim or gB.algebra.dim != T.B.dim:
        raise InputError(env.pointer, "dual gradings are on different algebras")
    return T, gA, gB


def _balanced(env):
    T, gA, gB = _balanced_data(env)
    try:
        return bal.balanced_subalgebra(T, gA, gB, env.tol)
    except twist.PreconditionError as err:
        raise InputError(env.pointer, str(err)) from None


@task("balanced.lambda_action")
def _t_lambda(env):
    T, gA, gB = _balanced_data(env)
    return bal.lambda_report(T, gA, gB, env.tol)


@task("balanced.conditional_expectation")
def _t_expect(env):
    b = _balanced(env)
    env.details["dim"] = b.dim
    return bal.expectation_report(b, env.tol, seed=int(env.rng.integers(2**31)))


@task("balanced.balanced_subalgebra")
def _t_balanced(env):
    b = _balanced(env)
    env.details.update(dim=b.dim, support=list(b.support))
    return b.report


@task("balanced.induced_action_check")
def _t_induced(env):
    return bal.induced_action_check(_balanced(env), env.tol)


@task("balanced.saturation_check")
def _t_saturation(env):
    r = bal.saturation_check(_balanced(env), env.tol)
    if "balanced_saturated" in r.info:
        env.details["balanced_saturated"] = r.info["balanced_saturated"]
    return r


# graphs

@task("graphs.skew_product")
def _t_skew(env):
    E, alpha, F, delta = _graph_pair(env)
    EF = graphs.skew_product(E, alpha, F, delta)
    env.details.update(vertices=list(EF.vertices), edges=[[e, EF.vertices[s], EF.vertices[t]]
                                                           for e, s, t in zip(EF.edges, EF.src, EF.dst)])
    return Report("skew_product", env.tol)


@task("graphs.graph_correspondence")
def _t_graph_corr(env):
    E = env.ctx.graph(env.arg("graph"), env.at("graph"))
    X = graphs.graph_correspondence(E)
    env.details["dim"] = X.dim
    return hilbmod.verify_correspondence(X, env.tol)


@task("graphs.graph_action_lift")
def _t_lift(env):
    alpha = env.ctx.action(env.arg("action"), env.at("action"))
    if not isinstance(alpha, graphs.GraphAction):
        raise InputError(env.at("action"), "not a graph action")
    try:
        act = graphs.graph_action_lift(alpha, tol=env.tol)
    except twist.PreconditionError as err:
        raise InputError(env.at("action"), str(err)) from None
    return hilbmod.verify_corr_action(act, env.tol)


@task("graphs.labeling_grading")
def _t_labeling(env):
    delta = env.ctx.labeling(env.arg("labeling"), env.at("labeling"))
    return hilbmod.verify_corr_grading(graphs.labeling_grading(delta), env.tol)


@task("graphs.graph_katsura_ideal")
def _t_graph_katsura(env):
    E = env.ctx.graph(env.arg("graph"), env.at("graph"))
    J = graphs.graph_katsura_ideal(E)
    env.details["vertices"] = [E.vertices[v] for v in J.vertices]
    return graphs.katsura_agreement(E, env.tol)


@task("graphs.graph_regularity_report")
def _t_regularity(env):
    E = env.ctx.graph(env.arg("graph"), env.at("graph"))
    rr = graphs.graph_regularity_report(E)
    env.details.update(rr.as_dict())
    return rr.report


@task("graphs.ideal_compatibility_check")
def _t_compat(env):
    return graphs.ideal_compatibility_check(*_graph_pair(env), tol=env.tol)


@task("graphs.verify_graph_product_isomorphism")
def _t_graph_iso(env):
    if "random" not in env.args:
        return graphs.verify_graph_product_isomorphism(*_graph_pair(env), tol=env.tol)
    spec = env.arg("random")
    p = env.at("random")
    g = env.ctx.group(spec.get("group"), p + "/group")
    count = spec.get("count", 25)
    if not isinstance(count, int) or count < 0:
        raise InputError(p + "/count", "count must be a non-negative integer")
    r = Report("graph_product_isomorphism_random", env.tol)
    for k in range(count):
        inst = graphs.random_instance(env.rng, g)
        r.merge(graphs.verify_graph_product_isomorphism(*inst, tol=env.tol), prefix="isomorphism")
        r.merge(graphs.ideal_compatibility_check(*inst, tol=env.tol), prefix="compatibility")
    env.details["instances"] = count
    return r


@task("graphs.graph_io")
def _t_io(env):
    E = env.ctx.graph(env.arg("graph"), env.at("graph"))
    delta = env.ctx.labeling(env.args["labeling"], env.at("labeling")) if "labeling" in env.args else None
    r = Report("graph_io", env.tol)
    E2, d2 = graphs.graph_from_json_text(graphs.graph_to_json_text(E, delta), delta.group if delta else None)
    r.condition("json_roundtrip", E2 == E and (delta is None or d2.labels == delta.labels))
    dot = graphs.graph_to_dot(E, delta)
    E3, labels = graphs.graph_from_dot(dot)
    r.condition("dot_roundtrip", E3 == E)
    if delta is not None:
        r.condition("dot_labels", [str(x) for x in labels] == [str(delta.group.label(s)) for s in delta.labels])
    env.details["dot"] = dot
    return r


# fock

@task("fock.tensor_power")
def _t_tensor_power(env):
    cd = _corr(env, "corr")
    n = env.arg("n")
    if not isinstance(n, int) or n < 0:
        raise InputError(env.at("n"), "n must be a non-negative integer")
    tp = fock.tensor_power(cd.corr, n)
    env.details["dim"] = tp.dim
    return hilbmod.verify_correspondence(tp.corr, env.tol)


@task("fock.fock_toeplitz_rep")
def _t_fock(env):
    cd = _corr(env, "corr")
    level = env.arg("level", 3)
    if not isinstance(level, int) or level < 1:
        raise InputError(env.at("level"), "level must be a positive integer")
    rep = fock.fock_toeplitz_rep(cd.corr, level)
    env.details.update(fock_dims=rep.info["fock_dims"], truncation_defect=fock.truncation_defect(rep),
                       covariance_defect=fock.cp_covariance_defect(rep))
    return fock.toeplitz_report(rep, env.tol)


def _level(env, rep):
    n = env.arg("n", 1)
    if not isinstance(n, int) or n < 0:
        raise InputError(env.at("n"), "n must be a non-negative integer")
    if rep.truncation is not None and n > rep.truncation:
        raise InputError(env.at("n"), f"level {n} exceeds the truncation level {rep.truncation}")
    return n


@task("fock.psi_n")
def _t_psi_n(env):
    rep = _rep(env)
    n = _level(env, rep)
    tp = rep.power(n)
    P = rep.compression(n)
    r = Report("psi_n", env.tol)
    eye = np.eye(tp.dim)
    imgs = [fock.psi_n(rep, n, v) for v in eye]
    for i, j in np.ndindex(tp.dim, tp.dim):
        ip = tp.corr.ip(eye[i], eye[j])
        r.residual("inner", float(np.abs(P @ (imgs[i].conj().T @ imgs[j] - rep.pi_of(ip)) @ P).max(initial=0)), (i, j))
    env.details["dim"] = tp.dim
    return r


@task("fock.psi_paren_n")
def _t_psi_paren(env):
    rep = _rep(env)
    return fock.psi_paren_report(rep, _level(env, rep), env.tol)


@task("fock.cp_covariance_defect")
def _t_defect(env):
    rep = _rep(env)
    env.details["defect"] = fock.cp_covariance_defect(rep)
    return Report("cp_covariance_defect", env.tol)


@task("fock.ck_representation")
def _t_ck(env):
    E = env.ctx.graph(env.arg("graph"), env.at("graph"))
    try:
        rep = fock.ck_representation(E)
    except twist.PreconditionError as err:
        raise InputError(env.at("graph"), str(err)) from None
    r = fock.toeplitz_report(rep, env.tol)
    r.residual("covariance_defect", fock.cp_covariance_defect(rep))
    r.merge(fock.gauge_report(rep, env.arg("gauge_level", 1), env.tol))
    env.details["size"] = rep.size
    return r


def _product(env) -> tuple[fock.ProductRep, CorrData, CorrData]:
    X, Y = _corr(env, "X"), _corr(env, "Y")
    if X.graph_action is None or Y.labeling is None:
        raise InputError(env.pointer, "X needs a graph with an action and Y a graph with a labeling")
    try:
        rX, rY = fock.ck_representation(X.graph), fock.ck_representation(Y.graph)
    except twist.PreconditionError as err:
        raise InputError(env.pointer, str(err)) from None
    prod = fock.product_representation(rX, X.action, fock.ck_action(rX, X.graph_action),
                                       rY, Y.grading, fock.ck_grading(rY, Y.labeling), env.tol)
    return prod, X, Y


@task("fock.product_representation")
def _t_product(env):
    prod, _, _ = _product(env)
    env.details["size"] = prod.rep.size
    return prod.report


def _theta_pairs(env, cd: CorrData, key: str, hom: hilbmod.CorrGrading | None = None) -> np.ndarray:
    d = cd.corr.dim
    out = np.zeros((d, d), dtype=complex)
    for i, pair in enumerate(env.arg(key)):
        p = env.at(key, i)
        if not isinstance(pair, list) or len(pair) != 2:
            raise InputError(p, "expected an [x, y] pair")
        x, y = (_vector(env, cd, v, f"{p}/{k}") for k, v in enumerate(pair))
        if hom is not None:
            x, y = hom.hom_coords(x), hom.hom_coords(y)
        out += np.outer(x, y.conj())
    return out


@task("fock.compacts_product_check")
def _t_compacts(env):
    prod, X, Y = _product(env)
    S = _theta_pairs(env, X, "S")
    T = _theta_pairs(env, Y, "T", Y.grading)
    r = fock.compacts_product_check(prod, S, T, env.tol)
    env.details["twist_exercised"] = r.info["twist_exercised"]
    return r


@task("fock.cp_product_check")
def _t_cp_product(env):
    prod, _, _ = _product(env)
    return fock.cp_product_check(prod, env.tol)


@task("fock.generator_factorization_check")
def _t_factor(env):
    prod, X, Y = _product(env)
    vec = lambda cd, key: [_vector(env, cd, v, env.at(key, i)) for i, v in enumerate(env.arg(key))]
    xs, ys, yps = vec(X, "x"), vec(Y, "y"), vec(Y, "y_prime")
    xp = env.arg("x_prime")
    if isinstance(xp, dict):
        xps = _alg_element(env, X.corr.left_algebra, xp, env.at("x_prime"), X.graph)
    else:
        xps = vec(X, "x_prime")
    r = fock.generator_factorization_check(prod, xs, xps, ys, yps, env.tol)
    env.details.update(n=r.info["n"], m=r.info["m"])
    return r


@task("fock.gauge_grading")
def _t_gauge(env):
    rep = _rep(env)
    r = fock.gauge_report(rep, env.arg("level", 2), env.tol)
    env.details["span_dim"] = r.info["span_dim"]
    return r


# ---------------------------------------------------------------- running


def _round(x: float) -> float:
    if not math.isfinite(x):
        return x
    if abs(x) < ZERO_FLOOR:
        return 0.0
    return float(f"{x:.3g}")


def jsonable(v):
    """Deterministic JSON form: floats to 3 significant digits, complex as [re, im]."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        x = _round(float(v))
        return x if math.isfinite(x) else str(x)
    if isinstance(v, (complex, np.complexfloating)):
        if abs(v.imag) < ZERO_FLOOR:
            return jsonable(v.real)
        return [jsonable(v.real), jsonable(v.imag)]
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if v is None or isinstance(v, str):
        return v
    return str(v)


def _compare(expected, actual, tol: float) -> bool:
    if isinstance(expected, bool) or isinstance(expected, str) or expected is None:
        return expected == actual
    try:
        a = np.asarray(jsonable(actual), dtype=float)
        e = np.asarray(expected, dtype=float)
    except (TypeError, ValueError):
        return expected == jsonable(actual)
    # reported floats carry 3 significant digits
    return a.shape == e.shape and bool(np.all(np.abs(a - e) <= tol + 5e-3 * np.abs(e)))


def run_task(ctx: Context, index: int, spec: dict, tol: float, seed: int, timing: bool) -> dict:
    op = spec["op"]
    pointer = _ptr("tasks", index)
    if op not in REGISTRY:
        raise InputError(pointer + "/op", f"unknown operation {op!r}")
    env = TaskEnv(ctx, spec.get("args", {}), pointer + "/args", tol, np.random.default_rng([seed, index]))
    start = time.perf_counter()
    error = None
    try:
        rep = REGISTRY[op](env)
    except InputError:
        raise
    except twist.PreconditionError as err:
        rep = Report(op, tol)
        error = str(err)
        rep.condition("precondition", False, getattr(err, "witness", None))
    elapsed = time.perf_counter() - start
    for key, want in spec.get("expect", {}).items():
        if key not in env.details:
            raise InputError(pointer + "/expect/" + key, f"operation does not report {key!r}")
        rep.condition(f"expect.{key}", _compare(want, env.details[key], tol),
                      {"expected": want, "actual": jsonable(env.details[key])})
    out = {
        "task": spec.get("name", f"{index}:{op}"),
        "op": op,
        "passed": rep.passed,
        "max_residual": rep.max_residual,
        "residuals": dict(sorted(rep.residuals.items())),
        "conditions": dict(sorted(rep.conditions.items())),
        "failures": rep.failures,
        "witnesses": rep.witnesses,
        "details": env.details,
    }
    if error:
        out["error"] = error
    if timing:
        out["seconds"] = round(elapsed, 4)
    return jsonable(out)


def load_spec(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise InputError("/", f"invalid JSON at line {err.lineno}: {err.msg}") from None
    validate_spec(data)
    return data


def run_spec(data: dict, tol: float = DEFAULT_TOL, seed: int = 0, parallel: bool = False,
             timing: bool = False, source: str | None = None) -> dict:
    """Validate, build and run every task; raises InputError on bad input."""
    validate_spec(data)
    ctx = Context(data)
    tasks = data["tasks"]
    for i, t in enumerate(tasks):
        if t["op"] not in REGISTRY:
            raise InputError(_ptr("tasks", i, "op"), f"unknown operation {t['op']!r}")
    if parallel and len(tasks) > 1:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda it: run_task(ctx, it[0], it[1], tol, seed, timing), enumerate(tasks)))
    else:
        results = [run_task(ctx, i, t, tol, seed, timing) for i, t in enumerate(tasks)]
    report = {
        "schema": REPORT_SCHEMA,
        "source": source,
        "tolerance": tol,
        "seed": seed,
        "passed": all(r["passed"] for r in results),
        "tasks": results,
    }
    return jsonable(report)


def format_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    lines = []
    for t in report["tasks"]:
        status = "PASS" if t["passed"] else "FAIL"
        line = f"{status} {t['task']} max_residual={t['max_residual']:.3g}"
        if t["failures"]:
            line += " failed=" + ",".join(t["failures"])
        lines.append(line)
    lines.append(f"{'PASS' if report['passed'] else 'FAIL'} {len(report['tasks'])} task(s)")
    return "\n".join(lines) + "\n"


def demo_text(name: str) -> str:
    if name not in DEMOS:
        raise InputError("/", f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    return resources.files("corrkit").joinpath("data", f"{name}.json").read_text()


def export_dot(data: dict, graph: str, labeling: str | None = None) -> str:
    validate_spec(data)
    ctx = Context(data)
    E = ctx.graph(graph, _ptr("graphs", graph))
    delta = None
    if labeling is not None:
        delta = ctx.labeling(labeling, _ptr("labelings", labeling))
        if delta.graph != E:
            raise InputError(_ptr("labelings", labeling), "labeling is for a different graph")
    else:
        delta = next((d for d in ctx.labelings.values() if d.graph == E), None)
    return graphs.graph_to_dot(E, delta, name=graph)


def default_tolerance() -> float:
    raw = os.environ.get("CORRKIT_TOLERANCE")
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise InputError("/", f"CORRKIT_TOLERANCE is not a number: {raw!r}") from None
    if not tol > 0:
        raise InputError("/", "CORRKIT_TOLERANCE must be positive")
    return tol


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrkit", description="Twisted tensor products of correspondences.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tolerance", type=float, default=None, help="verification tolerance (default 1e-9)")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=["json", "text"], default="json")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized tasks")
        p.add_argument("--parallel", action="store_true", help="run tasks concurrently")
        p.add_argument("--timing", action="store_true", help="include wall-clock seconds per task")

    p_run = sub.add_parser("run", help="run the tasks of a spec file")
    p_run.add_argument("spec")
    common(p_run)
    p_demo = sub.add_parser("demo", help="run a built-in fixture bundle")
    p_demo.add_argument("name", choices=DEMOS)
    common(p_demo)
    p_dot = sub.add_parser("export-dot", help="write a graph of a spec file as DOT")
    p_dot.add_argument("spec")
    p_dot.add_argument("graph")
    p_dot.add_argument("out")
    p_dot.add_argument("--labeling", help="labeling to attach (default: the first one for the graph)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export-dot":
            try:
                text = open(args.spec, encoding="utf-8").read()
            except OSError as err:
                raise InputError("/", f"cannot read {args.spec}: {err.strerror}") from None
            dot = export_dot(load_spec(text), args.graph, args.labeling)
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(dot)
            return 0
        tol = args.tolerance if args.tolerance is not None else default_tolerance()
        if args.command == "demo":
            text, source = demo_text(args.name), f"demo:{args.name}"
        else:
            try:
                text = open(args.spec, encoding="utf-8").read()
            except OSError as err:
                raise InputError("/", f"cannot read {args.spec}: {err.strerror}") from None
            source = os.path.basename(args.spec)
        report = run_spec(load_spec(text), tol, args.seed, args.parallel, args.timing, source)
    except InputError as err:
        print(f"corrkit: input error at {err.pointer}: {err.msg}", file=sys.stderr)
        return 2
    out = format_report(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
