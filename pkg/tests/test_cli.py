"""Command-line behavior: exit codes, config precedence, file round-trips."""

import json

import pytest

from ffrg.cli import field_status, main
from ffrg.docmodel import read_annotations, read_documents, read_labels


def run(*argv):
    return main(list(argv))


# --- exit codes -------------------------------------------------------------

def test_no_command_prints_usage_and_fails(capsys):
    assert run() == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        run("synth", "--bogus")
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_missing_required_option_is_a_usage_error(tmp_path):
    assert run("synth", "--out-docs", str(tmp_path / "d.jsonl")) == 1  # no gold path


def test_missing_input_file_is_an_io_error(tmp_path):
    code = run(
        "eval",
        "--pred", str(tmp_path / "absent.jsonl"),
        "--gold", str(tmp_path / "also-absent.jsonl"),
        "--report", str(tmp_path / "r.json"),
    )
    assert code == 2


def test_invalid_thread_count_is_a_validation_error(tmp_path):
    code = run(
        "synth", "--threads", "0", "--n", "1",
        "--out-docs", str(tmp_path / "d.jsonl"),
        "--out-gold", str(tmp_path / "g.jsonl"),
    )
    assert code == 1


# --- synth / group / bootstrap round trip ------------------------------------

@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli-synth")
    code = main([
        "synth", "--preset", "clean", "--n", "6", "--seed", "3",
        "--out-docs", str(d / "docs.jsonl"),
        "--out-gold", str(d / "gold.jsonl"),
        "--out-truth", str(d / "truth.jsonl"),
    ])
    assert code == 0
    return d


def test_synth_writes_parseable_corpus(synth_dir):
    docs = read_documents(str(synth_dir / "docs.jsonl"))
    assert len(docs) == 6
    gold = read_annotations(str(synth_dir / "gold.jsonl"))
    assert set(gold) == {d.doc_id for d in docs}
    truth = read_labels(str(synth_dir / "truth.jsonl"))
    assert truth.provenance == "truth"


def test_group_attaches_phrases(synth_dir, tmp_path):
    out = tmp_path / "grouped.jsonl"
    assert run("group", "--in", str(synth_dir / "docs.jsonl"), "--out", str(out)) == 0
    grouped = read_documents(str(out))
    assert all(d.phrases for d in grouped)


def test_bootstrap_emits_labels_and_values(synth_dir, tmp_path):
    labels_path = tmp_path / "labels.jsonl"
    values_path = tmp_path / "values.jsonl"
    code = run(
        "bootstrap", "--docs", str(synth_dir / "docs.jsonl"),
        "--out", str(labels_path), "--values", str(values_path),
    )
    assert code == 0
    labels = read_labels(str(labels_path))
    assert labels.provenance == "bootstrap"
    assert len(labels.doc_ids()) == 6
    values = read_annotations(str(values_path))
    assert any(values.values())


# --- train / extract / eval ---------------------------------------------------

@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, synth_dir):
    d = tmp_path_factory.mktemp("cli-train")
    labels = d / "labels.jsonl"
    assert main([
        "bootstrap", "--docs", str(synth_dir / "docs.jsonl"), "--out", str(labels),
    ]) == 0
    code = main([
        "train", "--docs", str(synth_dir / "docs.jsonl"),
        "--labels", str(labels), "--out", str(d / "model.ffrg"),
        "--branches", "2", "--epochs-step1", "1", "--epochs-step2", "1",
        "--hidden", "8", "--branch-hidden", "6", "--seed", "1",
        "--refined-out", str(d / "refined-"),
    ])
    assert code == 0
    return d


def test_train_saves_model_and_refined_labels(trained_dir):
    assert (trained_dir / "model.ffrg").exists()
    r1 = read_labels(str(trained_dir / "refined-1.jsonl"))
    r2 = read_labels(str(trained_dir / "refined-2.jsonl"))
    assert r1.provenance == "refined@branch_1"
    assert r2.provenance == "refined@branch_2"


def test_extract_then_eval(trained_dir, synth_dir, tmp_path):
    values = tmp_path / "values.jsonl"
    code = run(
        "extract", "--model", str(trained_dir / "model.ffrg"),
        "--docs", str(synth_dir / "docs.jsonl"), "--out", str(values),
    )
    assert code == 0
    report = tmp_path / "report.json"
    code = run(
        "eval", "--pred", str(values), "--gold", str(synth_dir / "gold.jsonl"),
        "--report", str(report), "--per-field",
    )
    assert code == 0
    blob = json.loads(report.read_text())
    assert set(blob) >= {"macro_precision", "macro_recall", "macro_f1", "fields"}


def test_extract_overlay_and_svg(trained_dir, synth_dir, tmp_path):
    overlay = tmp_path / "overlay.jsonl"
    svg_dir = tmp_path / "svg"
    code = run(
        "extract", "--model", str(trained_dir / "model.ffrg"),
        "--docs", str(synth_dir / "docs.jsonl"), "--out", str(tmp_path / "v.jsonl"),
        "--overlay", str(overlay), "--svg", str(svg_dir),
    )
    assert code == 0
    rows = [json.loads(line) for line in overlay.read_text().splitlines()]
    assert len(rows) == 6
    assert all({"doc_id", "predictions", "fields"} <= set(r) for r in rows)
    svgs = list(svg_dir.glob("*.svg"))
    assert len(svgs) == 6
    assert svgs[0].read_text().startswith("<svg")


def test_model_schema_guard(trained_dir, synth_dir, tmp_path):
    # a schema with fewer fields cannot serve a checkpoint trained on seven
    schema_path = tmp_path / "schema.json"
    schema_path.write_text(json.dumps({
        "fields": [
            {"field_id": 1, "name": "inv_number", "keys": ["invoice number"],
             "allowed_types": ["number"]},
        ]
    }))
    code = run(
        "extract", "--model", str(trained_dir / "model.ffrg"),
        "--docs", str(synth_dir / "docs.jsonl"),
        "--out", str(tmp_path / "v.jsonl"), "--schema", str(schema_path),
    )
    assert code == 1


# --- inspect -----------------------------------------------------------------

def test_field_status_classes():
    assert field_status(None, None) is None
    assert field_status("48113", "48113") == "correct"
    assert field_status("48113", None) == "extractor-error"
    assert field_status(None, "48113") == "extractor-error"
    # near-miss text lands in the value-text class, distant text does not
    assert field_status("48113", "48l13") == "value-text-error"
    assert field_status("hello", "48113") == "extractor-error"


def test_inspect_writes_outcomes(synth_dir, tmp_path):
    pred = tmp_path / "pred.jsonl"
    gold_rows = read_annotations(str(synth_dir / "gold.jsonl"))
    doc_id = sorted(gold_rows)[0]
    fields = dict(gold_rows[doc_id])
    some_field = sorted(fields)[0]
    fields[some_field] = "wrong-text"
    pred.write_text(json.dumps({"doc_id": doc_id, "fields": fields}) + "\n")
    out = tmp_path / "inspect.jsonl"
    assert run(
        "inspect", "--pred", str(pred), "--gold", str(synth_dir / "gold.jsonl"),
        "--out", str(out),
    ) == 0
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    statuses = {r["status"] for r in rows}
    assert "extractor-error" in statuses  # every other document is all-miss
    assert any(r["doc_id"] == doc_id and r["field"] == some_field for r in rows)


# --- config files -------------------------------------------------------------

def test_config_supplies_defaults_and_flags_win(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 3, "seed": 5, "preset": "clean"}))
    out_docs = tmp_path / "a.jsonl"
    assert run(
        "synth", "--config", str(cfg),
        "--out-docs", str(out_docs), "--out-gold", str(tmp_path / "ag.jsonl"),
    ) == 0
    assert len(read_documents(str(out_docs))) == 3

    out_docs2 = tmp_path / "b.jsonl"
    assert run(
        "synth", "--config", str(cfg), "--n", "2",
        "--out-docs", str(out_docs2), "--out-gold", str(tmp_path / "bg.jsonl"),
    ) == 0
    assert len(read_documents(str(out_docs2))) == 2


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_docs": 3}))
    code = run(
        "synth", "--config", str(cfg),
        "--out-docs", str(tmp_path / "d.jsonl"),
        "--out-gold", str(tmp_path / "g.jsonl"),
    )
    assert code == 1


def test_malformed_config_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    code = run(
        "synth", "--config", str(cfg),
        "--out-docs", str(tmp_path / "d.jsonl"),
        "--out-gold", str(tmp_path / "g.jsonl"),
    )
    assert code == 1
