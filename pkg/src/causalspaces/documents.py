"""JSON documents for spaces, models, and tables, plus CLI expression grammars.

Schema problems (wrong keys, shapes, unknown names, unparseable text) raise
DocumentError; value-level problems (weights that are not distributions,
cyclic assignment graphs) surface as the library's own errors so callers can
separate "could not read" from "read fine but invalid".

Floats are rendered with 17 significant digits, which is enough for the
parsed value to be bit-identical to the dumped one.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Mapping

import numpy as np

from . import subsets
from .compilers import NoiseTerm, PoSpec, ScmSpec, ScmVariable
from .core import CausalMechanism, CausalSpace, mechanism_from_conditionals
from .errors import DocumentError, DomainError
from .measure import Dist, Event, FiniteProductSpace, Kernel, rectangle

SPACE_SUFFIX = ".space.json"
SCM_SUFFIX = ".scm.json"
PO_SUFFIX = ".po.json"
MASK_SUFFIX = ".mask.json"


# ------------------------------------------------------------ JSON egress


def fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise DocumentError(f"cannot serialize non-finite number {x!r}")
    s = format(x, ".17g")
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def _emit(o, out: list[str], pad: str) -> None:
    if isinstance(o, bool) or o is None:
        out.append("null" if o is None else ("true" if o else "false"))
    elif isinstance(o, (int, np.integer)):
        out.append(str(int(o)))
    elif isinstance(o, (float, np.floating)):
        out.append(fmt_float(float(o)))
    elif isinstance(o, str):
        out.append(json.dumps(o))
    elif isinstance(o, Mapping):
        if not o:
            out.append("{}")
            return
        out.append("{")
        inner = pad + "  "
        for i, (k, v) in enumerate(o.items()):
            if not isinstance(k, str):
                raise DocumentError(f"object keys must be strings, got {k!r}")
            out.append(("," if i else "") + "\n" + inner + json.dumps(k) + ": ")
            _emit(v, out, inner)
        out.append("\n" + pad + "}")
    elif isinstance(o, (list, tuple, np.ndarray)):
        items = o.tolist() if isinstance(o, np.ndarray) else list(o)
        if not items:
            out.append("[]")
            return
        nested = any(isinstance(v, (list, tuple, np.ndarray, Mapping)) for v in items)
        if nested:
            out.append("[")
            inner = pad + "  "
            for i, v in enumerate(items):
                out.append(("," if i else "") + "\n" + inner)
                _emit(v, out, inner)
            out.append("\n" + pad + "]")
        else:
            out.append("[")
            for i, v in enumerate(items):
                if i:
                    out.append(", ")
                _emit(v, out, pad)
            out.append("]")
    else:
        raise DocumentError(f"cannot serialize {type(o).__name__} to a document")


def dump_json(obj) -> str:
    out: list[str] = []
    _emit(obj, out, "")
    return "".join(out)


def read_document(path: str | Path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise DocumentError(f"cannot read {p}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{p}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise DocumentError(f"{p}: top level must be a JSON object")
    return obj


def write_document(path: str | Path, obj) -> None:
    Path(path).write_text(dump_json(obj) + "\n")


def kind_of(path: str | Path) -> str:
    name = str(path)
    for suffix, kind in (
        (SPACE_SUFFIX, "space"),
        (SCM_SUFFIX, "scm"),
        (PO_SUFFIX, "po"),
    ):
        if name.endswith(suffix):
            return kind
    raise DocumentError(
        f"{name!r} has no recognized suffix (.space.json, .scm.json, .po.json)"
    )


# --------------------------------------------------------- schema helpers


def _need(doc: dict, key: str, what: str):
    if key not in doc:
        raise DocumentError(f"{what} is missing key {key!r}")
    return doc[key]


def _no_extras(doc: dict, allowed: set[str], what: str) -> None:
    extra = sorted(set(doc) - allowed)
    if extra:
        raise DocumentError(f"{what} has unknown keys {extra}")


def _str_list(x, what: str) -> tuple[str, ...]:
    if not isinstance(x, list) or not all(isinstance(v, str) for v in x):
        raise DocumentError(f"{what} must be a list of strings")
    return tuple(x)


def _num_list(x, what: str) -> list[float]:
    if not isinstance(x, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        raise DocumentError(f"{what} must be a list of numbers")
    return [float(v) for v in x]


def _named_components(x, what: str) -> tuple[tuple[str, tuple[str, ...]], ...]:
    if not isinstance(x, list) or not x:
        raise DocumentError(f"{what} must be a nonempty list")
    out = []
    for i, c in enumerate(x):
        if not isinstance(c, dict):
            raise DocumentError(f"{what}[{i}] must be an object")
        _no_extras(c, {"name", "outcomes"}, f"{what}[{i}]")
        name = _need(c, "name", f"{what}[{i}]")
        if not isinstance(name, str):
            raise DocumentError(f"{what}[{i}].name must be a string")
        out.append((name, _str_list(_need(c, "outcomes", f"{what}[{i}]"), f"{what}[{i}].outcomes")))
    return tuple(out)


# ------------------------------------------------------- space documents


def subset_key(mask: int) -> str:
    """Sorted-index-list rendering of a subset mask; empty string for ∅."""
    return ",".join(str(i) for i in subsets.indices_of(mask))


def space_to_document(cs: CausalSpace) -> dict:
    return {
        "components": [
            {"name": n, "outcomes": list(outs)} for n, outs in cs.space.components
        ],
        "p": cs.observational.weights,
        "kernels": {
            subset_key(mask): cs.mechanism[mask].matrix
            for mask in subsets.all_masks(cs.space.n)
        },
    }


def document_to_space(doc: dict) -> CausalSpace:
    _no_extras(doc, {"components", "p", "kernels", "mechanism"}, "space document")
    space = FiniteProductSpace(_named_components(_need(doc, "components", "space document"), "components"))
    p_raw = _num_list(_need(doc, "p", "space document"), "p")
    if len(p_raw) != space.n_atoms:
        raise DocumentError(f"p has {len(p_raw)} weights, space has {space.n_atoms} atoms")
    p = Dist(space, space.full, np.array(p_raw))

    shortcut = doc.get("mechanism")
    if shortcut is not None:
        if shortcut != "conditionals":
            raise DocumentError(f"unknown mechanism shortcut {shortcut!r}")
        if "kernels" in doc:
            raise DocumentError("give either kernels or the conditionals shortcut, not both")
        return CausalSpace(space, p, mechanism_from_conditionals(space, p))

    table = _need(doc, "kernels", "space document")
    if not isinstance(table, dict):
        raise DocumentError("kernels must be an object keyed by subsets")
    want = {subset_key(mask): mask for mask in subsets.all_masks(space.n)}
    missing = sorted(set(want) - set(table), key=lambda k: want[k])
    extra = sorted(set(table) - set(want))
    if missing or extra:
        raise DocumentError(
            f"kernels must cover every subset exactly once "
            f"(missing {missing[:4]}, unknown {extra[:4]})"
        )
    kernels = []
    for mask in subsets.all_masks(space.n):
        rows = table[subset_key(mask)]
        shape = (space.n_atoms_of(mask), space.n_atoms)
        if not isinstance(rows, list) or len(rows) != shape[0]:
            raise DocumentError(f"kernel {subset_key(mask)!r} needs {shape[0]} rows")
        m = [_num_list(r, f"kernel {subset_key(mask)!r} row") for r in rows]
        if any(len(r) != shape[1] for r in m):
            raise DocumentError(f"kernel {subset_key(mask)!r} rows need {shape[1]} weights")
        kernels.append(Kernel(space, mask, np.array(m)))
    return CausalSpace(space, p, CausalMechanism(space, tuple(kernels)))


# --------------------------------------------------- SCM and PO documents


def scm_to_document(s: ScmSpec) -> dict:
    return {
        "variables": [{"name": v.name, "outcomes": list(v.outcomes)} for v in s.variables],
        "noises": [{"outcomes": list(z.outcomes), "weights": z.weights} for z in s.noises],
        "parents": [list(ps) for ps in s.parents],
        "tables": [t for t in s.tables],
    }


def document_to_scm(doc: dict) -> ScmSpec:
    _no_extras(doc, {"variables", "noises", "parents", "tables"}, "model document")
    variables = tuple(
        ScmVariable(n, outs)
        for n, outs in _named_components(_need(doc, "variables", "model document"), "variables")
    )
    raw_noises = _need(doc, "noises", "model document")
    if not isinstance(raw_noises, list):
        raise DocumentError("noises must be a list")
    noises = []
    for i, z in enumerate(raw_noises):
        if not isinstance(z, dict):
            raise DocumentError(f"noises[{i}] must be an object")
        _no_extras(z, {"outcomes", "weights"}, f"noises[{i}]")
        noises.append(
            NoiseTerm(
                _str_list(_need(z, "outcomes", f"noises[{i}]"), f"noises[{i}].outcomes"),
                tuple(_num_list(_need(z, "weights", f"noises[{i}]"), f"noises[{i}].weights")),
            )
        )
    raw_parents = _need(doc, "parents", "model document")
    if not isinstance(raw_parents, list):
        raise DocumentError("parents must be a list of index lists")
    parents = []
    for i, ps in enumerate(raw_parents):
        if not isinstance(ps, list) or not all(
            isinstance(p, int) and not isinstance(p, bool) for p in ps
        ):
            raise DocumentError(f"parents[{i}] must be a list of integers")
        parents.append(tuple(ps))
    raw_tables = _need(doc, "tables", "model document")
    if not isinstance(raw_tables, list):
        raise DocumentError("tables must be a list of matrices")
    tables = []
    for i, rows in enumerate(raw_tables):
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise DocumentError(f"tables[{i}] must be a matrix of outcome indices")
        for r in rows:
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in r):
                raise DocumentError(f"tables[{i}] must contain integers only")
        if len({len(r) for r in rows}) > 1:
            raise DocumentError(f"tables[{i}] rows have mixed lengths")
        tables.append(np.array(rows, dtype=np.intp).reshape(len(rows), -1))
    return ScmSpec(variables, tuple(noises), tuple(parents), tuple(tables))


def po_to_document(s: PoSpec) -> dict:
    return {
        "treatments": list(s.treatments),
        "outcomes": list(s.outcomes),
        "covariates": list(s.covariates),
        "joint": s.joint,
    }


def document_to_po(doc: dict) -> PoSpec:
    _no_extras(doc, {"treatments", "outcomes", "covariates", "joint"}, "table document")
    kwargs = {}
    if "covariates" in doc:
        kwargs["covariates"] = _str_list(doc["covariates"], "covariates")
    return PoSpec(
        _str_list(_need(doc, "treatments", "table document"), "treatments"),
        _str_list(_need(doc, "outcomes", "table document"), "outcomes"),
        np.array(_num_list(_need(doc, "joint", "table document"), "joint")),
        **kwargs,
    )


# ----------------------------------------------------- expression grammar


def _split_items(text: str) -> list[str]:
    t = text.strip()
    if t.startswith("[") and t.endswith("]"):
        t = t[1:-1].strip()
    if not t:
        return []
    return [part.strip() for part in t.split(",")]


def parse_subset(space: FiniteProductSpace, text: str) -> int:
    """Subset from a comma list of component indices or names; '' is ∅."""
    mask = 0
    for item in _split_items(text or ""):
        if not item:
            raise DocumentError(f"subset {text!r} has an empty entry")
        if re.fullmatch(r"-?\d+", item):
            t = int(item)
        else:
            try:
                t = space.index_of(item)
            except DomainError as exc:
                raise DocumentError(str(exc)) from exc
        if not 0 <= t < space.n:
            raise DocumentError(f"component index {t} outside this {space.n}-component space")
        if mask >> t & 1:
            raise DocumentError(f"component {item!r} listed twice in {text!r}")
        mask |= 1 << t
    return mask


def parse_atom(space: FiniteProductSpace, mask: int, text: str) -> int:
    """Flat subset-atom index from labels in ascending component order."""
    idx = subsets.indices_of(mask)
    labels = _split_items(text or "")
    if len(labels) != len(idx):
        raise DocumentError(
            f"{len(idx)} intervened components need {len(idx)} labels, got {len(labels)}"
        )
    try:
        coords = (space.outcome_index(t, v) for t, v in zip(idx, labels))
        return space.flat_of(mask, coords)
    except DomainError as exc:
        raise DocumentError(str(exc)) from exc


def parse_weights(text: str) -> np.ndarray:
    items = _split_items(text or "")
    try:
        return np.array([float(v) for v in items], dtype=np.float64)
    except ValueError as exc:
        raise DocumentError(f"weights {text!r} must be numbers") from exc


_TERM_SET = re.compile(r"(.+?)\s+in\s+\{(.*)\}\s*$", re.DOTALL)
_TERM_EQ = re.compile(r"(.+?)=(.*)$", re.DOTALL)


def parse_event(space: FiniteProductSpace, text: str) -> Event:
    """Conjunctions of `name=value` and `name in {a,b}`, joined by `&`.

    Repeating a name intersects its constraints; contradictions yield the
    empty event rather than an error.
    """
    if not text or not text.strip():
        raise DocumentError("empty event expression")
    allowed: dict[str, set[str]] = {}
    for term in text.split("&"):
        m = _TERM_SET.fullmatch(term.strip())
        if m:
            name = m.group(1).strip()
            labels = {v.strip() for v in m.group(2).split(",") if v.strip()}
        else:
            m = _TERM_EQ.fullmatch(term.strip())
            if not m:
                raise DocumentError(f"cannot parse event term {term.strip()!r}")
            name = m.group(1).strip()
            labels = {m.group(2).strip()}
        try:
            t = space.index_of(name)
        except DomainError as exc:
            raise DocumentError(str(exc)) from exc
        outs = set(space.components[t][1])
        unknown = labels - outs
        if unknown:
            raise DocumentError(
                f"component {name!r} has no outcomes {sorted(unknown)}"
            )
        allowed[name] = allowed.get(name, outs) & labels
    return rectangle(space, allowed)
