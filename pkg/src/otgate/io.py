"""CSV and JSON serialization, dendrogram export and atomic file writes.

JSON documents carry ``"schema"`` and ``"version"`` fields; loaders reject
anything else with :class:`SchemaError`. Floats are written with ``repr``
precision so every value round-trips exactly.
"""

import csv
import functools
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ArgumentError, OTGateError, ParseError, SchemaError
from .summary import ClusterModel, CytometrySummary, LabeledEvents
from .templates.formation import Template
from .templates.hierarchy import Dendrogram, MetaPartition

VERSION = 1
LABEL_COLUMN = "label"


def atomic_write(path, data):
    """Write text or bytes to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---- CSV -------------------------------------------------------------------

def parse_csv(text, source="<string>"):
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows:
        raise ParseError(f"{source}: empty file", 0, None)
    header = [h.strip() for h in rows[0]]
    label_cols = [i for i, h in enumerate(header) if h.lower() == LABEL_COLUMN]
    if len(label_cols) > 1:
        raise ParseError(f"{source}: more than one label column", 1, None)
    label_col = label_cols[0] if label_cols else None
    markers = [h for i, h in enumerate(header) if i != label_col]
    if not markers:
        raise ParseError(f"{source}: no marker columns", 1, None)
    if len(rows) < 2:
        raise ParseError(f"{source}: no data rows", 1, None)
    values = np.empty((len(rows) - 1, len(markers)))
    labels = [] if label_col is not None else None
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{source}: row {r} has {len(row)} cells, expected {len(header)}", r, None)
        c = 0
        for i, cell in enumerate(row):
            if i == label_col:
                labels.append(cell.strip())
                continue
            try:
                values[r - 2, c] = float(cell)
            except ValueError:
                raise ParseError(f"{source}: row {r}, column {header[i]!r}: not a number: {cell!r}",
                                 r, header[i]) from None
            c += 1
    return LabeledEvents(values, None if labels is None else np.array(labels, dtype=object), markers)


def load_csv(path):
    """Read events from a CSV with a header row; a ``label`` column (any case)
    supplies per-event labels."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv(fh.read(), str(path))


def format_csv(events, labels=None):
    """CSV text of ``events`` with ``labels`` (or the events' own) as last column."""
    labels = events.labels if labels is None else labels
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(events.markers) + ([LABEL_COLUMN] if labels is not None else []))
    for i, row in enumerate(events.events):
        cells = [repr(float(v)) for v in row]
        if labels is not None:
            cells.append(str(labels[i]))
        writer.writerow(cells)
    return out.getvalue()


def write_csv(path, events, labels=None):
    atomic_write(path, format_csv(events, labels))


# ---- JSON ------------------------------------------------------------------

def _dump(doc):
    return json.dumps(doc, indent=2) + "\n"


def _cluster_doc(c):
    return {"label": c.label, "weight": c.weight, "mean": c.mean.tolist(), "cov": c.cov.tolist()}


def summary_to_dict(s):
    return {"source_id": s.source_id, "dim": s.dim, "clusters": [_cluster_doc(c) for c in s.clusters]}


def template_to_dict(t):
    return {"group": t.group, "members": list(t.members), "dim": t.dim,
            "clusters": [_cluster_doc(c) for c in t.clusters]}


def partition_to_dict(p):
    return {"assignment": dict(p.assignment), "noise": list(p.noise)}


def _header(kind):
    return {"schema": f"otgate.{kind}", "version": VERSION}


def _field(doc, key, kind):
    try:
        return doc[key]
    except (KeyError, TypeError):
        raise SchemaError(f"{kind} document is missing field {key!r}") from None


def _schema_guard(kind):
    # any structural problem in a decoded document surfaces as SchemaError
    def wrap(fn):
        @functools.wraps(fn)
        def inner(doc):
            try:
                return fn(doc)
            except SchemaError:
                raise
            except (OTGateError, ValueError, TypeError, AttributeError, KeyError) as exc:
                raise SchemaError(f"invalid {kind}: {exc}") from exc
        return inner
    return wrap


def _cluster_from(doc):
    label = _field(doc, "label", "cluster")
    if label is not None and not isinstance(label, str):
        raise SchemaError("cluster label must be a string or null")
    return ClusterModel(np.array(_field(doc, "mean", "cluster"), dtype=float),
                        np.array(_field(doc, "cov", "cluster"), dtype=float),
                        float(_field(doc, "weight", "cluster")), label)


@_schema_guard("summary")
def summary_from_dict(doc):
    clusters = [_cluster_from(c) for c in _field(doc, "clusters", "summary")]
    return CytometrySummary(clusters, str(_field(doc, "source_id", "summary")))


@_schema_guard("template")
def template_from_dict(doc):
    clusters = [_cluster_from(c) for c in _field(doc, "clusters", "template")]
    return Template(int(_field(doc, "group", "template")), clusters, list(doc.get("members", [])))


@_schema_guard("partition")
def partition_from_dict(doc):
    assignment = {str(k): int(v) for k, v in _field(doc, "assignment", "partition").items()}
    return MetaPartition(assignment, [str(i) for i in doc.get("noise", [])])


def parse_document(text, kind, source="<string>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{source}: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{source}: expected a JSON object")
    if doc.get("schema") != f"otgate.{kind}":
        raise SchemaError(f"{source}: expected schema 'otgate.{kind}', found {doc.get('schema')!r}")
    if doc.get("version") != VERSION:
        raise SchemaError(f"{source}: unsupported version {doc.get('version')!r} (reader handles {VERSION})")
    return doc


def read_document(path, kind):
    path = Path(path)
    return parse_document(path.read_text(encoding="utf-8"), kind, str(path))


def dumps_summary(s):
    return _dump({**_header("summary"), **summary_to_dict(s)})


def save_summary(s, path):
    atomic_write(path, dumps_summary(s))


def load_summary(path):
    return summary_from_dict(read_document(path, "summary"))


def save_template(t, path):
    atomic_write(path, _dump({**_header("template"), **template_to_dict(t)}))


def load_template(path):
    return template_from_dict(read_document(path, "template"))


def dumps_bundle(partition, templates, database, options=None):
    """One document holding a metaclustering, its templates and the database."""
    return _dump({
        **_header("templates"),
        "options": dict(options or {}),
        "partition": partition_to_dict(partition),
        "templates": [template_to_dict(t) for t in templates],
        "database": [summary_to_dict(s) for s in database],
    })


def load_bundle(path):
    """Return ``(partition, templates, database, options)``."""
    doc = read_document(path, "templates")
    return (partition_from_dict(_field(doc, "partition", "templates")),
            [template_from_dict(t) for t in _field(doc, "templates", "templates")],
            [summary_from_dict(s) for s in _field(doc, "database", "templates")],
            doc.get("options", {}))


def dumps_metrics(report, extra=None):
    return _dump({**_header("metrics"), **(extra or {}), **report.to_dict()})


# ---- dendrograms -------------------------------------------------------------

_NEWICK_SPECIAL = set("()[]':;, \t\n")


def _newick_name(name):
    name = str(name)
    if any(ch in _NEWICK_SPECIAL for ch in name):
        return "'" + name.replace("'", "''") + "'"
    return name


def _newick(t):
    n = len(t)
    if n == 1:
        return f"{_newick_name(t.ids[0])};"
    depth = np.concatenate([np.zeros(n), t.heights / 2.0])
    text = {}
    for step, (a, b, _, _) in enumerate(t.merges):
        node = n + step
        parts = []
        for child in (int(a), int(b)):
            label = text.pop(child) if child >= n else _newick_name(t.ids[child])
            parts.append(f"{label}:{repr(float(depth[node] - depth[child]))}")
        text[node] = "(" + ",".join(parts) + ")"
    return text[2 * n - 2] + ";"


def dendrogram_to_dict(t):
    return {**_header("dendrogram"), "linkage": t.linkage, "ids": list(t.ids),
            "merges": [[int(a), int(b), float(h), int(s)] for a, b, h, s in t.merges]}


def export_dendrogram(t, format="newick"):
    """Newick text (branch lengths put each internal node at half its merge
    height) or a JSON mirror of the merge list."""
    if format == "newick":
        return _newick(t) + "\n"
    if format == "json":
        return _dump(dendrogram_to_dict(t))
    raise ArgumentError(f"unknown dendrogram format {format!r}")


def dendrogram_from_json(text):
    return _dendrogram_from_dict(parse_document(text, "dendrogram"))


@_schema_guard("dendrogram")
def _dendrogram_from_dict(doc):
    merges = np.array(_field(doc, "merges", "dendrogram"), dtype=float).reshape(-1, 4)
    return Dendrogram(merges, list(_field(doc, "ids", "dendrogram")), doc.get("linkage", "complete"))
