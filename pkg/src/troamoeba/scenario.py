"""Scenario documents (YAML) and their validated in-memory form.

Schema, field by field::

    name: str                               # used for output file names
    polytope:                               # required, list of facets
      - {normal: [int, ...], offset: int}
    psi:                                    # required; a single spec or a list (one run each)
      kind: quadratic                       #   G: [[num]], b: [num] (default 0), c: num
      G: [[1, 0], [0, 1]]                   #   numbers may be fraction strings like "4/9"
    # or kind: quartic_radial              #   x^2/2 + |x|^4/4
    phi: {kind: zero}                       # optional, only "zero" is accepted
    valuation: explicit                     # "explicit" (v per term) or "gq" (v(m) = psi(m))
    laurent:                                # terms; with valuation gq may be omitted (all of P n Z^n)
      - {m: [int, ...], v: num, a: [re, im]}   # a defaults to [1, 0]; v required when explicit
    s: [5, 10, 20]                          # positive; stored sorted
    grid: 400                               # y-grid per axis for finite-s sampling
    theta_grid: 256
    threshold: 0.001
    samples_per_edge: 64
    implode: {grid: 21, margin: 1.0}        # optional id - pi field over a padded box
    sections: {m: [[0]], s: [10, 100], epsilon: 0.1}   # optional quantization table
    outputs: {svg: out.svg, csv: out.csv, report: out.txt}   # optional, relative to the output dir
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

import yaml

from .errors import SchemaError, SemanticError, TroAmoebaError
from .polytope import DelzantPolytope, build_polytope
from .potential import ConvexFunction, Quadratic, QuarticRadial
from .tropical import TropicalPolynomial, build_gq_valuation

DEFAULTS = {"grid": 400, "theta_grid": 256, "threshold": 1e-3, "samples_per_edge": 64}
TOP_KEYS = {"name", "polytope", "psi", "phi", "valuation", "laurent", "s", "grid", "theta_grid", "threshold",
            "samples_per_edge", "implode", "sections", "outputs"}


@dataclass(frozen=True)
class Term:
    m: tuple[int, ...]
    v: Fraction | float | None
    a: tuple[float, float] = (1.0, 0.0)


@dataclass(frozen=True)
class SectionsSpec:
    m: tuple[tuple[int, ...], ...]
    s: tuple[float, ...]
    epsilon: float = 0.1


@dataclass(frozen=True)
class ImplodeSpec:
    grid: int = 21
    margin: float = 1.0


@dataclass(frozen=True)
class Scenario:
    name: str
    facets: tuple[tuple[tuple[int, ...], int], ...]
    psi: tuple[dict, ...]
    phi: dict = field(default_factory=lambda: {"kind": "zero"})
    valuation: str = "explicit"
    terms: tuple[Term, ...] = ()
    s: tuple[float, ...] = ()
    grid: int = DEFAULTS["grid"]
    theta_grid: int = DEFAULTS["theta_grid"]
    threshold: float = DEFAULTS["threshold"]
    samples_per_edge: int = DEFAULTS["samples_per_edge"]
    implode: ImplodeSpec | None = None
    sections: SectionsSpec | None = None
    outputs: dict = field(default_factory=dict)

    # -- derived objects --------------------------------------------------------------
    def polytope(self) -> DelzantPolytope:
        return build_polytope(self.facets)

    def psi_functions(self) -> list[ConvexFunction]:
        return [make_function(p) for p in self.psi]

    def tropical(self, psi: ConvexFunction, P: DelzantPolytope | None = None) -> TropicalPolynomial:
        """The Laurent data for one run (the GQ valuation depends on ``psi``)."""
        coeffs = {t.m: complex(*t.a) for t in self.terms}
        if self.valuation == "gq":
            pts = [t.m for t in self.terms] or (P or self.polytope()).lattice_points()
            return build_gq_valuation(psi, pts, coeffs or None)
        return TropicalPolynomial.from_items([(t.m, t.v) for t in self.terms], coeffs)

    def with_overrides(self, **kw) -> "Scenario":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "s" in kw:
            kw["s"] = tuple(sorted(float(x) for x in kw["s"]))
        return replace(self, **kw)


def make_function(spec: dict) -> ConvexFunction:
    kind = spec.get("kind")
    if kind == "quadratic":
        return Quadratic(spec["G"], spec.get("b"), spec.get("c", 0))
    if kind == "quartic_radial":
        return QuarticRadial()
    raise SchemaError("psi.kind", f"unknown kind {kind!r}")


# -- parsing ------------------------------------------------------------------------------

def _num(v, path):
    if isinstance(v, bool):
        raise SchemaError(path, "expected a number")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise SchemaError(path, f"not a number: {v!r}") from None
    raise SchemaError(path, "expected a number")


def _int(v, path):
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(path, "expected an integer")
    return v


def _int_vec(v, path, n=None):
    if not isinstance(v, list) or not v:
        raise SchemaError(path, "expected a list of integers")
    out = tuple(_int(x, f"{path}[{i}]") for i, x in enumerate(v))
    if n is not None and len(out) != n:
        raise SchemaError(path, f"expected length {n}")
    return out


def _pos_list(v, path):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, list) or not v:
        raise SchemaError(path, "expected a list of numbers")
    vals = [float(_num(x, f"{path}[{i}]")) for i, x in enumerate(v)]
    if any(x <= 0 for x in vals):
        raise SemanticError(f"{path}: values must be positive")
    return tuple(sorted(set(vals)))


def _psi_spec(d, path, n):
    if not isinstance(d, dict) or "kind" not in d:
        raise SchemaError(f"{path}.kind", "missing")
    kind = d["kind"]
    if kind == "quadratic":
        G = d.get("G")
        if not isinstance(G, list) or len(G) != n or any(not isinstance(r, list) or len(r) != n for r in G):
            raise SchemaError(f"{path}.G", f"expected an {n}x{n} matrix")
        spec = {"kind": kind, "G": [[_canon(_num(x, f"{path}.G")) for x in row] for row in G]}
        if "b" in d and d["b"] is not None:
            if not isinstance(d["b"], list) or len(d["b"]) != n:
                raise SchemaError(f"{path}.b", f"expected length {n}")
            spec["b"] = [_canon(_num(x, f"{path}.b")) for x in d["b"]]
        if "c" in d:
            spec["c"] = _canon(_num(d["c"], f"{path}.c"))
        extra = set(d) - {"kind", "G", "b", "c"}
    elif kind == "quartic_radial":
        spec = {"kind": kind}
        extra = set(d) - {"kind"}
    else:
        raise SchemaError(f"{path}.kind", f"unknown kind {kind!r}")
    if extra:
        raise SchemaError(f"{path}.{sorted(extra)[0]}", "unknown field")
    try:
        make_function(spec)
    except TroAmoebaError as e:
        raise SemanticError(f"{path}: {e}") from None
    return spec


def _canon(x):
    """Numbers are kept as ints, fraction strings, or floats."""
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return float(x)


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document, filling defaults."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise SchemaError("<document>", f"not valid YAML: {e}") from None
    if not isinstance(doc, dict):
        raise SchemaError("<document>", "expected a mapping")
    unknown = set(doc) - TOP_KEYS
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown field")
    if "polytope" not in doc:
        raise SchemaError("polytope", "missing")
    if "psi" not in doc:
        raise SchemaError("psi", "missing")

    facets_doc = doc["polytope"]
    if not isinstance(facets_doc, list) or not facets_doc:
        raise SchemaError("polytope", "expected a list of facets")
    facets = []
    for i, f in enumerate(facets_doc):
        if not isinstance(f, dict) or "normal" not in f or "offset" not in f:
            raise SchemaError(f"polytope[{i}]", "expected {normal, offset}")
        facets.append((_int_vec(f["normal"], f"polytope[{i}].normal"), _int(f["offset"], f"polytope[{i}].offset")))
    n = len(facets[0][0])
    if any(len(nu) != n for nu, _ in facets):
        raise SchemaError("polytope", "normals of mixed dimension")
    try:
        P = build_polytope(facets)
    except TroAmoebaError as e:
        raise SemanticError(f"polytope: {e}") from None

    psi_doc = doc["psi"]
    psi_list = psi_doc if isinstance(psi_doc, list) else [psi_doc]
    if not psi_list:
        raise SchemaError("psi", "empty")
    psis = tuple(_psi_spec(p, f"psi[{i}]" if isinstance(psi_doc, list) else "psi", n) for i, p in enumerate(psi_list))

    phi = doc.get("phi", {"kind": "zero"}) or {"kind": "zero"}
    if not isinstance(phi, dict) or phi.get("kind") != "zero" or set(phi) != {"kind"}:
        raise SchemaError("phi", "only {kind: zero} is supported")

    valuation = doc.get("valuation", "explicit")
    if valuation not in ("explicit", "gq"):
        raise SchemaError("valuation", "expected 'explicit' or 'gq'")

    terms = []
    lattice = set(P.lattice_points())
    for i, t in enumerate(doc.get("laurent") or []):
        path = f"laurent[{i}]"
        if not isinstance(t, dict) or "m" not in t:
            raise SchemaError(f"{path}.m", "missing")
        m = _int_vec(t["m"], f"{path}.m", n)
        if m not in lattice:
            raise SemanticError(f"{path}: term {list(m)} is not a lattice point of the polytope")
        if valuation == "explicit":
            if "v" not in t:
                raise SchemaError(f"{path}.v", "missing")
            v = _num(t["v"], f"{path}.v")
        else:
            v = None
        a = t.get("a", [1, 0])
        if not isinstance(a, list) or len(a) != 2:
            raise SchemaError(f"{path}.a", "expected [re, im]")
        a = (float(_num(a[0], f"{path}.a")), float(_num(a[1], f"{path}.a")))
        if a == (0.0, 0.0):
            raise SemanticError(f"{path}: coefficient must be nonzero")
        terms.append(Term(m, v, a))
    if len({t.m for t in terms}) != len(terms):
        raise SemanticError("laurent: repeated exponent")
    if valuation == "explicit" and len(terms) < 2:
        raise SchemaError("laurent", "at least two terms are needed")

    s = _pos_list(doc.get("s", [10]), "s")
    kw = {}
    for key in ("grid", "theta_grid", "samples_per_edge"):
        if key in doc:
            kw[key] = _int(doc[key], key)
            if kw[key] < 2:
                raise SemanticError(f"{key} must be at least 2")
    if "threshold" in doc:
        kw["threshold"] = float(_num(doc["threshold"], "threshold"))
        if not 0 < kw["threshold"] < 1:
            raise SemanticError("threshold must lie in (0, 1)")

    implode = None
    if doc.get("implode") is not None:
        d = doc["implode"]
        if not isinstance(d, dict):
            raise SchemaError("implode", "expected a mapping")
        implode = ImplodeSpec(_int(d.get("grid", 21), "implode.grid"), float(_num(d.get("margin", 1.0), "implode.margin")))

    sections = None
    if doc.get("sections") is not None:
        d = doc["sections"]
        if not isinstance(d, dict) or "m" not in d:
            raise SchemaError("sections.m", "missing")
        ms = d["m"]
        ms = ms if isinstance(ms, list) and ms and isinstance(ms[0], list) else [ms]
        mm = tuple(_int_vec(x, "sections.m", n) for x in ms)
        for x in mm:
            if x not in lattice:
                raise SemanticError(f"sections.m: {list(x)} is not a lattice point of the polytope")
        sections = SectionsSpec(mm, _pos_list(d.get("s", [10, 100, 1000]), "sections.s"),
                                float(_num(d.get("epsilon", 0.1), "sections.epsilon")))

    outputs = doc.get("outputs") or {}
    if not isinstance(outputs, dict) or set(outputs) - {"svg", "csv", "report"}:
        raise SchemaError("outputs", "allowed keys are svg, csv, report")

    return Scenario(
        name=str(doc.get("name", "scenario")),
        facets=tuple(facets),
        psi=psis,
        phi={"kind": "zero"},
        valuation=valuation,
        terms=tuple(terms),
        s=s,
        implode=implode,
        sections=sections,
        outputs=dict(outputs),
        **kw,
    )


def scenario_to_dict(sc: Scenario) -> dict:
    doc: dict[str, Any] = {
        "name": sc.name,
        "polytope": [{"normal": list(nu), "offset": lam} for nu, lam in sc.facets],
        "psi": [copy.deepcopy(p) for p in sc.psi] if len(sc.psi) > 1 else copy.deepcopy(sc.psi[0]),
        "phi": dict(sc.phi),
        "valuation": sc.valuation,
    }
    terms = []
    for t in sc.terms:
        d: dict[str, Any] = {"m": list(t.m)}
        if t.v is not None:
            d["v"] = _canon(t.v) if isinstance(t.v, Fraction) else t.v
        d["a"] = list(t.a)
        terms.append(d)
    if terms:
        doc["laurent"] = terms
    doc["s"] = list(sc.s)
    doc.update(grid=sc.grid, theta_grid=sc.theta_grid, threshold=sc.threshold, samples_per_edge=sc.samples_per_edge)
    if sc.implode is not None:
        doc["implode"] = {"grid": sc.implode.grid, "margin": sc.implode.margin}
    if sc.sections is not None:
        doc["sections"] = {"m": [list(m) for m in sc.sections.m], "s": list(sc.sections.s),
                           "epsilon": sc.sections.epsilon}
    if sc.outputs:
        doc["outputs"] = dict(sc.outputs)
    return doc


def serialize_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None)


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_scenario(fh.read())
    except OSError as e:
        raise SchemaError(str(path), f"cannot read: {e.strerror}") from None
