"""Command-line driver.

Subcommands: ``summarize``, ``templates``, ``classify``, ``eval`` and
``simulate``. Failures print one JSON line on stderr and exit with 2 for
usage problems (bad flags, missing files) or 1 for anything else. Outputs
are computed in full before any file is written, and every write is atomic.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ArgumentError, OTGateError
from .evaluation import metric_report
from .gating import METHODS, TclustParams, optimal_flow_classification
from .io import (
    atomic_write,
    dumps_bundle,
    dumps_metrics,
    dumps_summary,
    export_dendrogram,
    format_csv,
    load_bundle,
    load_csv,
    load_summary,
    read_document,
    summary_to_dict,
)
from .partition import CLUSTER_METRICS
from .summary import LabeledEvents, summarize_cytometry
from .synthetic import SyntheticSpec, generate_synthetic
from .templates import META_METHODS, TEMPLATE_METHODS, BarycenterOptions, optimal_flow_templates


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _k_value(text):
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("k must be a positive integer or 'auto'") from None
    if value < 1:
        raise argparse.ArgumentTypeError("k must be a positive integer or 'auto'")
    return value


def build_parser():
    parser = _Parser(prog="otgate", description="Optimal-transport templates and gating for cytometry.")
    parser.add_argument("--version", action="version", version=f"otgate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("summarize", help="labeled CSV -> summary JSON")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--id", default=None, help="source id (default: file stem)")
    p.add_argument("--min-cluster-size", type=int, default=None)
    p.add_argument("--equal-weights", action="store_true")

    p = sub.add_parser("templates", help="database -> partition, templates and dendrogram")
    p.add_argument("inputs", nargs="*", help="labeled CSV or summary JSON files")
    p.add_argument("--manifest", default=None)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--meta-method", choices=META_METHODS, default=None)
    p.add_argument("--template-method", choices=TEMPLATE_METHODS, default=None)
    p.add_argument("--k", type=_k_value, default=None)
    p.add_argument("--template-k", type=int, default=None)
    p.add_argument("--metric", choices=sorted(CLUSTER_METRICS), default=None)
    p.add_argument("--min-cluster-size", type=int, default=None)
    p.add_argument("--equal-weights", action="store_true", default=None)
    p.add_argument("--trim-alpha", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("classify", help="test CSV + templates -> labeled CSV (+ metrics)")
    p.add_argument("input")
    p.add_argument("--templates", required=True, help="templates.json written by 'templates'")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--metrics", default=None, help="metrics JSON path (needs a label column)")
    p.add_argument("--method", choices=METHODS, default="qda-template")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--restriction-c", type=float, default=1e6)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("eval", help="two labeled CSVs -> metric report")
    p.add_argument("truth")
    p.add_argument("prediction")
    p.add_argument("-o", "--output", default=None)

    p = sub.add_parser("simulate", help="synthetic spec JSON -> dataset directory")
    p.add_argument("spec", nargs="?", default=None)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--seed", type=int, default=None)
    return parser


def _require_file(path):
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")
    return Path(path)


def _cmd_summarize(args):
    path = _require_file(args.input)
    events = load_csv(path)
    summary = summarize_cytometry(events, args.min_cluster_size, args.equal_weights,
                                  source_id=args.id or path.stem)
    atomic_write(args.output, dumps_summary(summary))


DEFAULT_OPTIONS = {
    "meta_method": "complete",
    "template_method": "pooling",
    "k": "auto",
    "template_k": None,
    "metric": "gaussian_w2",
    "min_cluster_size": None,
    "equal_weights": False,
    "trim_alpha": 0.0,
    "seed": 0,
}


def _load_manifest(path):
    path = _require_file(path)
    doc = read_document(path, "manifest")
    entries = doc.get("entries")
    if not isinstance(entries, list):
        raise ArgumentError("manifest needs an 'entries' list")
    ids = [e.get("id") for e in entries]
    if len(set(ids)) != len(ids):
        raise ArgumentError("manifest ids must be unique")
    database = []
    for e in entries:
        if e.get("role", "database") == "database":
            database.append((str(e["id"]), _require_file(path.parent / e["path"])))
    return database, dict(doc.get("options", {}))


def _load_database(inputs, options):
    summaries = []
    for source_id, path in inputs:
        if path.suffix.lower() == ".json":
            summaries.append(load_summary(path))
        else:
            summaries.append(summarize_cytometry(load_csv(path), options["min_cluster_size"],
                                                 bool(options["equal_weights"]), source_id=source_id))
    return summaries


def _cmd_templates(args):
    options = dict(DEFAULT_OPTIONS)
    inputs = []
    if args.manifest:
        inputs, manifest_options = _load_manifest(args.manifest)
        unknown = set(manifest_options) - set(options)
        if unknown:
            raise ArgumentError(f"unknown manifest options {sorted(unknown)}")
        options.update(manifest_options)
    inputs += [(Path(p).stem, _require_file(p)) for p in args.inputs]
    if len(inputs) < 2:
        raise UsageError("templates needs at least two database cytometries")
    for key in DEFAULT_OPTIONS:
        value = getattr(args, key, None)
        if value is not None:
            options[key] = value

    db = _load_database(inputs, options)
    opts = BarycenterOptions(trim_alpha=float(options["trim_alpha"]), seed=int(options["seed"]))
    fit = optimal_flow_templates(db, options["meta_method"], options["template_method"], options["k"],
                                 cluster_metric=options["metric"], template_k=options["template_k"],
                                 opts=opts)

    out = Path(args.output)
    files = {"templates.json": dumps_bundle(fit.partition, fit.templates, db, options)}
    dm = fit.distances
    lines = [",".join(["id"] + list(dm.ids))]
    lines += [",".join([i] + [repr(float(v)) for v in row]) for i, row in zip(dm.ids, dm.entries)]
    files["distances.csv"] = "\n".join(lines) + "\n"
    if fit.dendrogram is not None:
        files["dendrogram.nwk"] = export_dendrogram(fit.dendrogram, "newick")
        files["dendrogram.json"] = export_dendrogram(fit.dendrogram, "json")
    for name, text in files.items():
        atomic_write(out / name, text)


def _cmd_classify(args):
    events = load_csv(_require_file(args.input))
    partition, templates, db, _ = load_bundle(_require_file(args.templates))
    if args.metrics and not events.labeled:
        raise ArgumentError("--metrics needs a label column in the input CSV")
    params = TclustParams(k=1, alpha=args.alpha, restriction_c=args.restriction_c,
                          max_iter=args.max_iter, n_restarts=1, seed=args.seed)
    result = optimal_flow_classification(events, partition, templates, db, args.method, params=params)
    unlabeled = LabeledEvents(events.events, None, events.markers)
    outputs = {Path(args.output): format_csv(unlabeled, result.labels)}
    if args.metrics:
        report = metric_report(events.labels, result.labels)
        extra = {"method": args.method, "group": int(result.group),
                 "template_index": int(result.template_index), "reference": result.reference}
        outputs[Path(args.metrics)] = dumps_metrics(report, extra)
    for path, text in outputs.items():
        atomic_write(path, text)


def _cmd_eval(args):
    truth = load_csv(_require_file(args.truth))
    pred = load_csv(_require_file(args.prediction))
    if not truth.labeled or not pred.labeled:
        raise ArgumentError("both files need a label column")
    if truth.n != pred.n:
        raise ArgumentError(f"files have {truth.n} and {pred.n} events")
    text = dumps_metrics(metric_report(truth.labels, pred.labels))
    if args.output:
        atomic_write(args.output, text)
    else:
        sys.stdout.write(text)


def _cmd_simulate(args):
    doc = {}
    if args.spec:
        doc = json.loads(_require_file(args.spec).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ArgumentError("synthetic spec must be a JSON object")
    if args.seed is not None:
        doc["seed"] = args.seed
    spec = SyntheticSpec.from_dict(doc)
    data = generate_synthetic(spec)
    out = Path(args.output)
    files = {}
    entries = []
    for s in data.samples:
        rel = f"{s.role}/{s.id}.csv"
        files[rel] = format_csv(s.events)
        entries.append({"id": s.id, "path": rel, "role": s.role, "group": s.group})
    manifest = {"schema": "otgate.manifest", "version": 1,
                "markers": [f"m{i + 1}" for i in range(spec.dim)],
                "entries": entries, "options": {"seed": spec.seed}}
    files["manifest.json"] = json.dumps(manifest, indent=2) + "\n"
    files["spec.json"] = json.dumps(spec.to_dict(), indent=2) + "\n"
    files["truth_templates.json"] = json.dumps(
        {"schema": "otgate.truth", "version": 1, "groups": [summary_to_dict(t) for t in data.templates]},
        indent=2) + "\n"
    for rel, text in files.items():
        atomic_write(out / rel, text)


COMMANDS = {
    "summarize": _cmd_summarize,
    "templates": _cmd_templates,
    "classify": _cmd_classify,
    "eval": _cmd_eval,
    "simulate": _cmd_simulate,
}


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message), "exit": code}) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("UsageError", exc, 2)
    except FileNotFoundError as exc:
        return _fail("UsageError", exc, 2)
    except (OTGateError, json.JSONDecodeError, np.linalg.LinAlgError) as exc:
        return _fail(type(exc).__name__, exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
