"""Command-line pipeline: synth, group, bootstrap, train, extract, eval,
inspect, and an end-to-end pipeline command.

Conventions: all logs go to standard error; data goes to files (the
pipeline command additionally prints its evaluation report to standard
output).  Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
Every subcommand accepts --config pointing at a JSON object whose keys
mirror the long flag names (underscored); explicit flags win, and
unknown config keys are rejected.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Any, Callable

from . import bootstrap as bs
from . import docmodel as dm
from .evaluation import score, write_report
from .features import featurize_corpus
from .grouping import GroupingConfig, group_document
from .model import load_model, save_model
from .parallel import resolve_threads
from .progressive import TrainConfig, extract_corpus, predict_word_classes, train
from .similarity import string_distance
from .synth import SynthConfig, generate, preset_config, corruption_report, PRESETS

log = logging.getLogger("ffrg")

_FIELD_COLORS = (
    "#4c78a8", "#f58518", "#54a24b", "#b279a2",
    "#e45756", "#72b7b2", "#eeca3b", "#9d755d",
)
_STATUS_COLORS = {
    "correct": "#2e8b57",
    "extractor-error": "#d62728",
    "value-text-error": "#ff8c00",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract reserves 2 for I/O errors
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _load_config(path: str | None, allowed: set[str]) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        try:
            cfg = json.load(f)
        except json.JSONDecodeError as e:
            raise dm.ParseError(f"config file {path}: malformed JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise dm.ValidationError(f"config file {path}: top level must be an object")
    unknown = set(cfg) - allowed
    if unknown:
        raise dm.ValidationError(
            f"config file {path}: unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}"
        )
    return cfg


def _resolve(args: argparse.Namespace, defaults: dict[str, Any]) -> dict[str, Any]:
    """Flag > config file > built-in default, per option."""
    raw = vars(args)
    cfg = _load_config(raw.get("config"), set(defaults))
    out: dict[str, Any] = {}
    for key, default in defaults.items():
        if raw.get(key) is not None:
            out[key] = raw[key]
        elif key in cfg:
            out[key] = cfg[key]
        else:
            out[key] = default
    return out


def _require(opts: dict[str, Any], *keys: str) -> None:
    for k in keys:
        if opts[k] is None:
            raise dm.ValidationError(f"missing required option --{k.replace('_', '-')}")


def _read_schema_opt(opts: dict[str, Any]) -> dm.FieldSchema:
    if opts.get("schema"):
        return dm.read_schema(opts["schema"])
    return dm.default_invoice_schema()


def _doc_svg(doc: dm.Document, classes: dict[int, int] | None,
             statuses: dict[int, str] | None) -> str:
    w, h = doc.page_width, doc.page_height
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" '
        f'width="{w}" height="{h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    for word in doc.words:
        b = word.box
        x, y = b.x0 * w, b.y0 * h
        bw, bh = b.width * w, b.height * h
        fill = "none"
        stroke = "#999999"
        if statuses and word.id in statuses:
            fill = _STATUS_COLORS[statuses[word.id]]
            stroke = fill
        elif classes and classes.get(word.id, 0) > 0:
            fill = _FIELD_COLORS[(classes[word.id] - 1) % len(_FIELD_COLORS)]
            stroke = fill
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bw:.1f}" height="{bh:.1f}" '
            f'fill="{fill}" fill-opacity="0.35" stroke="{stroke}"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{y + bh - 1:.1f}" font-size="{bh * 0.8:.1f}" '
            f'font-family="monospace">{_xml_escape(word.text)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# --- subcommands -----------------------------------------------------------

def _cmd_synth(opts: dict[str, Any]) -> int:
    _require(opts, "out_docs", "out_gold")
    schema = _read_schema_opt(opts)
    if opts["preset"] is not None:
        cfg = preset_config(opts["preset"], opts["n"], opts["seed"])
    else:
        cfg = SynthConfig(n_docs=opts["n"], seed=opts["seed"])
    docs, gold, truth = generate(cfg, schema, threads=opts["threads"])
    dm.write_documents(opts["out_docs"], docs)
    dm.write_annotations(opts["out_gold"], gold)
    if opts["out_truth"]:
        dm.write_labels(opts["out_truth"], truth)
    log.info("synthesized %d documents to %s", len(docs), opts["out_docs"])
    return 0


def _cmd_group(opts: dict[str, Any]) -> int:
    _require(opts, "in_docs", "out")
    cfg = GroupingConfig(eps_scale=opts["eps_scale"])
    docs = dm.read_documents(opts["in_docs"])
    grouped = [group_document(d, cfg) for d in docs]
    dm.write_documents(opts["out"], grouped)
    n = sum(len(d.phrases or ()) for d in grouped)
    log.info("grouped %d documents into %d phrases", len(grouped), n)
    return 0


def _cmd_bootstrap(opts: dict[str, Any]) -> int:
    _require(opts, "docs", "out")
    schema = _read_schema_opt(opts)
    params = bs.RuleParams(
        sigma_d=opts["sigma_d"], sigma_a=opts["sigma_a"],
        alpha=opts["alpha"], theta_v=opts["theta_v"],
    )
    docs = dm.read_documents(opts["docs"])
    labels, values = bs.bootstrap_corpus(docs, schema, params, threads=opts["threads"])
    dm.write_labels(opts["out"], labels)
    if opts["values"]:
        dm.write_annotations(opts["values"], values)
    n = sum(len(labels.positives(d)) for d in labels.doc_ids())
    log.info("labeled %d words across %d documents", n, len(docs))
    return 0


def _cmd_train(opts: dict[str, Any]) -> int:
    _require(opts, "docs", "labels", "out")
    schema = _read_schema_opt(opts)
    docs = dm.read_documents(opts["docs"])
    labels = dm.read_labels(opts["labels"])
    cfg = TrainConfig(
        n_branches=opts["branches"],
        beta=opts["beta"],
        refine_threshold=opts["refine_threshold"],
        epochs_step1=opts["epochs_step1"],
        epochs_step2=opts["epochs_step2"],
        seed=opts["seed"],
        lr=opts["lr"],
        batch_docs=opts["batch_docs"],
        hidden=opts["hidden"],
        branch_hidden=opts["branch_hidden"],
        two_step=not opts["single_step"],
    )
    result = train(docs, labels, schema, cfg, threads=opts["threads"])
    save_model(opts["out"], result.params)
    if opts["refined_out"]:
        for k, labelset in sorted(result.refined.items()):
            dm.write_labels(f"{opts['refined_out']}{k}.jsonl", labelset)
    log.info(
        "trained %d branches; final stage losses %s",
        cfg.n_branches,
        ["%.4f" % ep[-1] for ep in result.stage_losses],
    )
    return 0


def _cmd_extract(opts: dict[str, Any]) -> int:
    _require(opts, "model", "docs", "out")
    schema = _read_schema_opt(opts)
    params = load_model(opts["model"], schema)
    docs = dm.read_documents(opts["docs"])
    features = featurize_corpus(docs, opts["threads"])
    values = extract_corpus(
        params, docs, schema, features, threshold=opts["threshold"],
        threads=opts["threads"],
    )
    dm.write_annotations(opts["out"], values)
    if opts["overlay"] or opts["svg"]:
        overlay_rows = []
        for doc, feats in zip(docs, features):
            classes = predict_word_classes(params, feats)
            positives = [[int(w), int(c)] for w, c in enumerate(classes) if c > 0]
            overlay_rows.append(
                {"doc_id": doc.doc_id, "predictions": positives,
                 "fields": values[doc.doc_id]}
            )
        if opts["overlay"]:
            with open(opts["overlay"], "w", encoding="utf-8") as f:
                for row in overlay_rows:
                    f.write(json.dumps(row, ensure_ascii=False) + "\n")
        if opts["svg"]:
            os.makedirs(opts["svg"], exist_ok=True)
            for doc, row in zip(docs, overlay_rows):
                classes = {w: c for w, c in row["predictions"]}
                path = os.path.join(opts["svg"], f"{doc.doc_id}.svg")
                with open(path, "w", encoding="utf-8") as f:
                    f.write(_doc_svg(doc, classes, None))
    n = sum(len(v) for v in values.values())
    log.info("extracted %d values from %d documents", n, len(docs))
    return 0


def _cmd_eval(opts: dict[str, Any]) -> int:
    _require(opts, "pred", "gold", "report")
    schema = _read_schema_opt(opts)
    pred = dm.read_annotations(opts["pred"])
    gold = dm.read_annotations(opts["gold"])
    report = score(pred, gold, schema)
    write_report(opts["report"], report)
    log.info(
        "macro P/R/F1 = %.4f/%.4f/%.4f",
        report.macro_precision, report.macro_recall, report.macro_f1,
    )
    if opts["per_field"]:
        for name, fm in sorted(report.fields.items()):
            log.info("field %-14s P=%.4f R=%.4f F1=%.4f", name, fm.precision, fm.recall, fm.f1)
    return 0


def field_status(pred: str | None, gold: str | None) -> str | None:
    """Fig-4-style outcome class for one field of one document."""
    from .evaluation import normalize_value

    if pred is None and gold is None:
        return None
    if pred is not None and gold is not None:
        if normalize_value(pred) == normalize_value(gold):
            return "correct"
        if string_distance(pred, gold) <= 0.2:
            return "value-text-error"
    return "extractor-error"


def _cmd_inspect(opts: dict[str, Any]) -> int:
    _require(opts, "pred", "gold", "out")
    schema = _read_schema_opt(opts)
    pred = dm.read_annotations(opts["pred"])
    gold = dm.read_annotations(opts["gold"])
    names = [f.name for f in schema.fields]
    counts = {"correct": 0, "extractor-error": 0, "value-text-error": 0}
    with open(opts["out"], "w", encoding="utf-8") as f:
        for doc_id in sorted(set(pred) | set(gold)):
            for name in names:
                p = pred.get(doc_id, {}).get(name)
                g = gold.get(doc_id, {}).get(name)
                status = field_status(p, g)
                if status is None:
                    continue
                counts[status] += 1
                f.write(json.dumps(
                    {"doc_id": doc_id, "field": name, "status": status,
                     "pred": p, "gold": g},
                    ensure_ascii=False) + "\n")
    if opts["svg"]:
        if not opts["docs"]:
            raise dm.ValidationError("--svg requires --docs for word geometry")
        docs = dm.read_documents(opts["docs"])
        overlay: dict[str, dict[int, int]] = {}
        if opts["overlay"]:
            for n, line in dm.iter_jsonl(opts["overlay"]):
                row = json.loads(line)
                overlay[row["doc_id"]] = {int(w): int(c) for w, c in row["predictions"]}
        os.makedirs(opts["svg"], exist_ok=True)
        for doc in docs:
            statuses: dict[int, str] = {}
            classes = overlay.get(doc.doc_id, {})
            by_field: dict[int, str] = {}
            for name in names:
                st = field_status(
                    pred.get(doc.doc_id, {}).get(name),
                    gold.get(doc.doc_id, {}).get(name),
                )
                if st is not None:
                    by_field[schema.field_by_name(name).field_id] = st
            for wid, cls in classes.items():
                if cls in by_field:
                    statuses[wid] = by_field[cls]
            path = os.path.join(opts["svg"], f"{doc.doc_id}.svg")
            with open(path, "w", encoding="utf-8") as f:
                f.write(_doc_svg(doc, classes, statuses))
    log.info(
        "inspect: %d correct, %d extractor errors, %d value-text errors",
        counts["correct"], counts["extractor-error"], counts["value-text-error"],
    )
    return 0


def _cmd_pipeline(opts: dict[str, Any]) -> int:
    _require(opts, "workdir")
    os.makedirs(opts["workdir"], exist_ok=True)
    p = lambda name: os.path.join(opts["workdir"], name)
    schema = _read_schema_opt(opts)
    dm.write_schema(p("schema.json"), schema)

    cfg = preset_config(opts["preset"], opts["n"], opts["seed"])
    docs, gold, truth = generate(cfg, schema, threads=opts["threads"])
    dm.write_documents(p("docs.jsonl"), docs)
    dm.write_annotations(p("gold.jsonl"), gold)
    dm.write_labels(p("truth.jsonl"), truth)
    log.info("pipeline: synthesized %d documents", len(docs))

    labels, rule_values = bs.bootstrap_corpus(docs, schema, threads=opts["threads"])
    dm.write_labels(p("labels.jsonl"), labels)
    dm.write_annotations(p("rule_values.jsonl"), rule_values)
    noise = corruption_report(docs, truth, labels)
    log.info(
        "pipeline: rule labels word P=%.4f R=%.4f",
        noise["word_precision"], noise["word_recall"],
    )

    tcfg = TrainConfig(
        n_branches=opts["branches"], beta=opts["beta"], seed=opts["seed"],
        epochs_step1=opts["epochs_step1"], epochs_step2=opts["epochs_step2"],
        lr=opts["lr"], two_step=not opts["single_step"],
    )
    features = featurize_corpus(docs, opts["threads"])
    result = train(docs, labels, schema, tcfg, features, threads=opts["threads"])
    save_model(p("model.ffrg"), result.params)
    log.info("pipeline: trained %d-branch model", tcfg.n_branches)

    values = extract_corpus(result.params, docs, schema, features, threads=opts["threads"])
    dm.write_annotations(p("values.jsonl"), values)

    report = score(values, gold, schema)
    write_report(p("report.json"), report)
    sys.stdout.write(report.to_json() + "\n")
    log.info("pipeline: macro F1 = %.4f", report.macro_f1)
    return 0


# --- argument wiring ---------------------------------------------------------

# Per-subcommand option defaults; None means "must be provided by flag or
# config".  Keys double as the allowed config-file vocabulary.
_DEFAULTS: dict[str, dict[str, Any]] = {
    "synth": dict(preset=None, n=100, seed=0, schema=None, out_docs=None,
                  out_gold=None, out_truth=None, threads=None),
    "group": dict(in_docs=None, out=None, eps_scale=0.8, threads=None),
    "bootstrap": dict(docs=None, schema=None, out=None, values=None,
                      theta_v=0.1, alpha=4.0, sigma_d=0.5, sigma_a=0.5,
                      threads=None),
    "train": dict(docs=None, labels=None, schema=None, out=None, branches=3,
                  beta=1.0, refine_threshold=0.1, epochs_step1=2,
                  epochs_step2=2, seed=0, lr=1e-3, batch_docs=8, hidden=64,
                  branch_hidden=64, single_step=False, refined_out=None,
                  threads=None),
    "extract": dict(model=None, docs=None, schema=None, out=None,
                    threshold=0.1, overlay=None, svg=None, threads=None),
    "eval": dict(pred=None, gold=None, schema=None, report=None,
                 per_field=False, threads=None),
    "inspect": dict(pred=None, gold=None, schema=None, out=None, docs=None,
                    overlay=None, svg=None, threads=None),
    "pipeline": dict(preset="clean", n=100, seed=0, schema=None,
                     workdir="ffrg-pipeline", branches=3, beta=1.0,
                     epochs_step1=2, epochs_step2=2, lr=1e-3,
                     single_step=False, threads=None),
}

_RUNNERS: dict[str, Callable[[dict[str, Any]], int]] = {
    "synth": _cmd_synth,
    "group": _cmd_group,
    "bootstrap": _cmd_bootstrap,
    "train": _cmd_train,
    "extract": _cmd_extract,
    "eval": _cmd_eval,
    "inspect": _cmd_inspect,
    "pipeline": _cmd_pipeline,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="ffrg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON config file; flags override")
        sp.add_argument("--threads", type=int, help="worker threads (env FFRG_THREADS)")
        return sp

    sp = add("synth", "generate a synthetic corpus with gold annotations")
    sp.add_argument("--preset", choices=sorted(PRESETS))
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--schema")
    sp.add_argument("--out-docs")
    sp.add_argument("--out-gold")
    sp.add_argument("--out-truth")

    sp = add("group", "attach density-grouped phrases to documents")
    sp.add_argument("--in", dest="in_docs")
    sp.add_argument("--out")
    sp.add_argument("--eps-scale", type=float)

    sp = add("bootstrap", "mine rule-based pseudo-labels and values")
    sp.add_argument("--docs")
    sp.add_argument("--schema")
    sp.add_argument("--out")
    sp.add_argument("--values")
    sp.add_argument("--theta-v", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--sigma-d", type=float)
    sp.add_argument("--sigma-a", type=float)

    sp = add("train", "train the multi-branch token classifier")
    sp.add_argument("--docs")
    sp.add_argument("--labels")
    sp.add_argument("--schema")
    sp.add_argument("--out")
    sp.add_argument("--branches", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--refine-threshold", type=float)
    sp.add_argument("--epochs-step1", type=int)
    sp.add_argument("--epochs-step2", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--batch-docs", type=int)
    sp.add_argument("--hidden", type=int)
    sp.add_argument("--branch-hidden", type=int)
    sp.add_argument("--single-step", action="store_true", default=None)
    sp.add_argument("--refined-out")

    sp = add("extract", "extract field values with a trained model")
    sp.add_argument("--model")
    sp.add_argument("--docs")
    sp.add_argument("--schema")
    sp.add_argument("--out")
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--overlay")
    sp.add_argument("--svg")

    sp = add("eval", "exact-match evaluation against gold annotations")
    sp.add_argument("--pred")
    sp.add_argument("--gold")
    sp.add_argument("--schema")
    sp.add_argument("--report")
    sp.add_argument("--per-field", action="store_true", default=None)

    sp = add("inspect", "per-field outcome report and optional SVG overlays")
    sp.add_argument("--pred")
    sp.add_argument("--gold")
    sp.add_argument("--schema")
    sp.add_argument("--out")
    sp.add_argument("--docs")
    sp.add_argument("--overlay")
    sp.add_argument("--svg")

    sp = add("pipeline", "synth + bootstrap + train + extract + eval")
    sp.add_argument("--preset", choices=sorted(PRESETS))
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--schema")
    sp.add_argument("--workdir")
    sp.add_argument("--branches", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--epochs-step1", type=int)
    sp.add_argument("--epochs-step2", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--single-step", action="store_true", default=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        opts = _resolve(args, _DEFAULTS[args.command])
        if opts.get("threads") is not None:
            resolve_threads(opts["threads"])  # validate early
        return _RUNNERS[args.command](opts)
    except dm.ValidationError as e:
        log.error("%s", e)
        return 1
    except ValueError as e:
        log.error("%s", e)
        return 1
    except OSError as e:
        log.error("%s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
