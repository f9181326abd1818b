import json
import subprocess
import sys

import numpy as np
import pytest

from otgate import SyntheticSpec, generate_synthetic
from otgate.cli import main
from otgate.errors import ArgumentError, GenerationError
from otgate.io import load_csv, read_document


def test_synthetic_is_deterministic_and_separated():
    spec = SyntheticSpec(groups=2, per_group=3, clusters=3, dim=2, seed=5, events=300, noise=0.05)
    a, b = generate_synthetic(spec), generate_synthetic(spec)
    for x, y in zip(a.samples, b.samples):
        assert x.id == y.id
        np.testing.assert_array_equal(x.events.events, y.events.events)
    assert [s.id for s in a.database] == ["g1-c01", "g1-c02", "g1-c03", "g2-c01", "g2-c02", "g2-c03"]
    assert [s.id for s in a.tests] == ["g1-t01", "g2-t01"]
    means = np.array([c.mean for t in a.templates for c in t.clusters])
    gaps = np.linalg.norm(means[:, None] - means[None], axis=-1) + np.eye(len(means)) * 1e9
    assert gaps.min() >= spec.separation
    assert np.sum(a.samples[0].events.labels == "noise") == 15
    assert not np.array_equal(generate_synthetic(SyntheticSpec(seed=6)).samples[0].events.events,
                              generate_synthetic(SyntheticSpec(seed=5)).samples[0].events.events)


def test_synthetic_spec_errors():
    with pytest.raises(ArgumentError):
        SyntheticSpec.from_dict({"groupz": 3})
    with pytest.raises(ArgumentError):
        SyntheticSpec(noise=1.0)
    with pytest.raises(GenerationError):
        generate_synthetic(SyntheticSpec(groups=5, clusters=5, dim=1, box=10.0))


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = root / "spec.json"
    spec.write_text(json.dumps({"groups": 2, "per_group": 4, "clusters": 3, "dim": 3, "events": 600}))
    assert main(["simulate", str(spec), "-o", str(root / "data"), "--seed", "2"]) == 0
    return root


def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_simulate_layout(dataset):
    data = dataset / "data"
    manifest = read_document(data / "manifest.json", "manifest")
    assert len(manifest["entries"]) == 10
    assert {e["role"] for e in manifest["entries"]} == {"database", "test"}
    assert json.loads((data / "spec.json").read_text())["seed"] == 2
    assert load_csv(data / "test" / "g1-t01.csv").labeled


def test_summarize_then_templates_from_json(dataset, tmp_path):
    data = dataset / "data"
    outs = []
    for name in ("g1-c01", "g1-c02", "g2-c01", "g2-c02"):
        out = tmp_path / f"{name}.json"
        assert main(["summarize", str(data / "database" / f"{name}.csv"), "-o", str(out)]) == 0
        outs.append(str(out))
    assert read_document(outs[0], "summary")["source_id"] == "g1-c01"
    assert main(["templates", *outs, "-o", str(tmp_path / "tpl"), "--k", "2"]) == 0
    bundle = read_document(tmp_path / "tpl" / "templates.json", "templates")
    assert bundle["partition"]["assignment"] == {"g1-c01": 1, "g1-c02": 1, "g2-c01": 2, "g2-c02": 2}
    assert (tmp_path / "tpl" / "dendrogram.nwk").read_text().endswith(";\n")


@pytest.mark.parametrize("method", ["qda-template", "qda-nearest", "label-transfer-hungarian",
                                    "label-transfer-fuzzy"])
def test_classify_and_eval(dataset, tmp_path, method, capsys):
    data = dataset / "data"
    assert main(["templates", "--manifest", str(data / "manifest.json"), "-o", str(tmp_path / "tpl")]) == 0
    test_csv = data / "test" / "g2-t01.csv"
    assert main(["classify", str(test_csv), "--templates", str(tmp_path / "tpl" / "templates.json"),
                 "-o", str(tmp_path / "pred.csv"), "--metrics", str(tmp_path / "m.json"),
                 "--method", method]) == 0
    metrics = read_document(tmp_path / "m.json", "metrics")
    assert metrics["method"] == method and metrics["f_measure"] >= 0.95
    capsys.readouterr()
    assert main(["eval", str(test_csv), str(tmp_path / "pred.csv")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["f_measure"] == metrics["f_measure"]


def test_manifest_options_and_flag_override(dataset, tmp_path):
    data = dataset / "data"
    manifest = json.loads((data / "manifest.json").read_text())
    manifest["options"] = {"meta_method": "hdbscan", "template_method": "density", "seed": 1}
    path = data / "manifest-hdbscan.json"
    path.write_text(json.dumps(manifest))
    assert main(["templates", "--manifest", str(path), "-o", str(tmp_path / "a")]) == 0
    doc = read_document(tmp_path / "a" / "templates.json", "templates")
    assert doc["options"]["meta_method"] == "hdbscan"
    assert not (tmp_path / "a" / "dendrogram.nwk").exists()
    assert main(["templates", "--manifest", str(path), "-o", str(tmp_path / "b"),
                 "--meta-method", "average"]) == 0
    assert read_document(tmp_path / "b" / "templates.json", "templates")["options"]["meta_method"] == "average"


def test_error_exit_codes(dataset, tmp_path, capsys):
    data = dataset / "data"
    assert main(["classify", str(tmp_path / "missing.csv"), "--templates", "x", "-o", "y"]) == 2
    assert _error(capsys)["error"] == "UsageError"
    assert main(["templates", "--k", "zero", "-o", str(tmp_path)]) == 2
    assert main(["nonsense"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "otgate.templates", "version": 1, "partition": ')
    assert main(["classify", str(data / "test" / "g1-t01.csv"), "--templates", str(bad),
                 "-o", str(tmp_path / "never.csv")]) == 1
    assert _error(capsys)["error"] == "SchemaError"
    assert not (tmp_path / "never.csv").exists()
    assert main(["templates", "--manifest", str(data / "manifest.json"), "-o", str(tmp_path / "kb"),
                 "--template-method", "kbarycenter"]) == 0
    assert main(["classify", str(data / "test" / "g1-t01.csv"), "--templates",
                 str(tmp_path / "kb" / "templates.json"), "-o", str(tmp_path / "never.csv")]) == 1
    assert _error(capsys)["error"] == "ConfigurationError"
    assert not (tmp_path / "never.csv").exists()


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "otgate.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("otgate ")
