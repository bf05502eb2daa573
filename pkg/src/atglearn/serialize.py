"""Model files (YAML text, ``atg_version: 1``) and Graphviz DOT export."""
from __future__ import annotations

import numpy as np
import yaml

from .model import (
    ACTION_KINDS,
    ActionEdge,
    ActionKind,
    ATGModel,
    Feature,
    GaussianDist,
    StructureError,
)

ATG_VERSION = 1
_Loader = getattr(yaml, "CSafeLoader", yaml.SafeLoader)


class ModelFormatError(ValueError):
    """A model document could not be parsed; ``location`` says where."""

    def __init__(self, message: str, location: str):
        super().__init__(f"{location}: {message}")
        self.location = location


def _floats(a) -> list[float]:
    return [float(x) for x in np.ravel(a)]


def _kind_doc(kind: ActionKind) -> dict:
    return {"name": kind.name, "bounds": [list(b) for b in kind.bounds], "circular": kind.circular}


def to_document(model: ATGModel) -> dict:
    return {
        "atg_version": ATG_VERSION,
        "thin_var": model.thin_var,
        "features": [
            {
                "id": f.id,
                "ftype": f.ftype,
                "value": f.value,
                "pos_mean": _floats(f.pos_mean),
                "pos_cov": [_floats(row) for row in f.pos_cov],
            }
            for f in model.features.values()
        ],
        "nodes": [{"key": n.key, "feature_ids": list(n.feature_ids)} for n in model.nodes.values()],
        "edges": [
            {
                "src": e.src,
                "dst": e.dst,
                "kind": _kind_doc(e.kind),
                "q": float(e.q),
                "visit_count": e.visit_count,
                "samples": [list(s) for s in e.samples],
                "dist": {
                    "mean": _floats(e.dist.mean),
                    "cov": [_floats(row) for row in e.dist.cov],
                    "n_samples": e.dist.n_samples,
                },
            }
            for e in model.edges.values()
        ],
    }


_YAML_BREAKS = ("\x85", "\u2028", "\u2029")


class _Dumper(yaml.SafeDumper):
    """Safe dumper that escapes YAML line-break characters instead of emitting them raw.

    With ``allow_unicode`` the stock emitter writes NEL and the Unicode line
    and paragraph separators verbatim, and the loader folds them to spaces.
    """


def _represent_str(dumper: yaml.SafeDumper, text: str):
    style = '"' if any(ch in text for ch in _YAML_BREAKS) else None
    return dumper.represent_scalar("tag:yaml.org,2002:str", text, style=style)


_Dumper.add_representer(str, _represent_str)


def serialize(model: ATGModel, header: str | None = None) -> str:
    """Render a model as YAML text; ``header`` lines become leading comments."""
    body = yaml.dump(to_document(model), Dumper=_Dumper, sort_keys=False, allow_unicode=True,
                     default_flow_style=None)
    if header:
        body = "".join(f"# {line}\n" for line in header.splitlines()) + body
    return body


def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ModelFormatError(f"missing field {key!r}", where)
    return doc[key]


def _matrix(rows, d: int, where: str) -> np.ndarray:
    arr = np.array(rows, dtype=float).reshape(-1)
    if arr.size != d * d:
        raise ModelFormatError(f"expected a {d}x{d} matrix", where)
    return arr.reshape(d, d)


def from_document(doc) -> ATGModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("document root must be a mapping", "<root>")
    version = _require(doc, "atg_version", "<root>")
    if version != ATG_VERSION:
        raise ModelFormatError(f"unsupported atg_version {version!r}", "atg_version")
    model = ATGModel(thin_var=float(doc.get("thin_var", 1e-6)))

    for i, fd in enumerate(doc.get("features") or []):
        where = f"features[{i}]"
        try:
            feat = Feature(
                id=int(_require(fd, "id", where)),
                ftype=str(_require(fd, "ftype", where)),
                value=str(_require(fd, "value", where)),
                pos_mean=np.array(_require(fd, "pos_mean", where), dtype=float).reshape(3),
                pos_cov=_matrix(_require(fd, "pos_cov", where), 3, where + ".pos_cov"),
            )
            model._insert_feature(feat)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ModelFormatError):
                raise
            raise ModelFormatError(str(exc), where) from exc

    for i, nd in enumerate(doc.get("nodes") or []):
        where = f"nodes[{i}]"
        try:
            model.get_or_create_node(str(_require(nd, "key", where)), [int(x) for x in _require(nd, "feature_ids", where)])
        except StructureError as exc:
            raise ModelFormatError(str(exc), where) from exc

    for i, ed in enumerate(doc.get("edges") or []):
        where = f"edges[{i}]"
        try:
            kd = _require(ed, "kind", where)
            name = str(_require(kd, "name", where + ".kind"))
            kind = ActionKind(
                name,
                tuple((float(lo), float(hi)) for lo, hi in kd.get("bounds", [])),
                bool(kd.get("circular", False)),
            )
            if name not in ACTION_KINDS:
                raise ModelFormatError(f"unknown action kind {name!r}", where + ".kind")
            d = kind.param_dim
            dd = _require(ed, "dist", where)
            edge = ActionEdge(
                src=str(_require(ed, "src", where)),
                dst=str(_require(ed, "dst", where)),
                kind=kind,
                samples=[tuple(float(x) for x in s) for s in _require(ed, "samples", where)],
                dist=GaussianDist(
                    mean=np.array(_require(dd, "mean", where + ".dist"), dtype=float).reshape(d),
                    cov=_matrix(_require(dd, "cov", where + ".dist"), d, where + ".dist.cov"),
                    n_samples=int(_require(dd, "n_samples", where + ".dist")),
                ),
                q=float(_require(ed, "q", where)),
                visit_count=int(_require(ed, "visit_count", where)),
            )
            model.add_edge(edge)
        except ModelFormatError:
            raise
        except (StructureError, TypeError, ValueError) as exc:
            raise ModelFormatError(str(exc), where) from exc

    try:
        model.validate()
    except StructureError as exc:
        raise ModelFormatError(str(exc), "<model>") from exc
    return model


def deserialize(text: str) -> ATGModel:
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "<unknown>"
        raise ModelFormatError(str(getattr(exc, "problem", exc)), where) from exc
    return from_document(doc)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(model: ATGModel, header: str | None = None) -> str:
    """Graphviz rendering with nodes and edges in sorted order."""
    lines = []
    if header:
        lines += [f"// {line}" for line in header.splitlines()]
    lines.append("digraph ATG {")
    for key in sorted(model.nodes):
        lines.append(f"  {_quote(key)};")
    for ident in sorted(model.edges):
        e = model.edges[ident]
        mean = ", ".join(f"{x:.4f}" for x in e.dist.mean)
        label = f"{e.kind.name}([{mean}]) n={e.visit_count}"
        lines.append(f"  {_quote(e.src)} -> {_quote(e.dst)} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
