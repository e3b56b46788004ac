"""Progressive label-ensemble training over noisy rule-mined labels.

Branch 1 trains on the rule labels; each later branch trains on the
refined labels of every earlier branch plus a beta-weighted copy of the
rule labels per refinement term, after the trunk and earlier branches
are frozen.  Refinement keeps, per field per document, the single word
with the document-maximum probability when that probability clears a
threshold and the word's argmax agrees; everything else is background.
Inference averages all branch probability rows, and values come from the
same refinement rule applied to the averaged scores, expanded to a
contiguous argmax run inside the anchor's phrase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .docmodel import Document, FieldSchema, LabelSet, ValidationError, reading_order
from .features import FEATURE_DIM, featurize_corpus
from .grouping import GroupingConfig, group_words
from .model import (
    AdamState,
    ModelParams,
    adam_step,
    branch_loss_and_grad,
    forward,
    init_params,
)
from .parallel import ordered_map


@dataclass(frozen=True)
class TrainConfig:
    n_branches: int = 3
    beta: float = 1.0
    refine_threshold: float = 0.1
    epochs_step1: int = 2
    epochs_step2: int = 2
    seed: int = 0
    lr: float = 1e-3
    batch_docs: int = 8
    hidden: int = 64
    branch_hidden: int = 64
    # Two-step training freezes the trunk and finished branches before the
    # next branch starts; turning it off lets every stage update them all.
    two_step: bool = True

    def __post_init__(self):
        if self.n_branches < 1:
            raise ValidationError("need at least one branch")
        if self.beta < 0:
            raise ValidationError("beta must be non-negative")
        if not 0.0 <= self.refine_threshold <= 1.0:
            raise ValidationError("refine threshold must lie in [0,1]")
        if min(self.epochs_step1, self.epochs_step2, self.batch_docs) < 1:
            raise ValidationError("epochs and batch size must be positive")


@dataclass
class TrainResult:
    params: ModelParams
    # refined[k] is the label set generated from branch k after its stage
    refined: dict[int, LabelSet]
    stage_losses: list[list[float]]  # per stage, per epoch mean batch loss


def loss_terms(n_branches: int, beta: float) -> list[tuple[int, int, float]]:
    """Expansion of the aggregate loss as (branch, label_source, weight).

    Label source 0 is the rule labels; source j >= 1 is branch j's refined
    labels.  The rule-label term repeats once per refinement term, so K
    branches give 1 + (K-1)K/2 unweighted terms and (K-1)K/2 weighted ones.
    """
    terms = [(1, 0, 1.0)]
    for k in range(2, n_branches + 1):
        for j in range(1, k):
            terms.append((k, j, 1.0))
            terms.append((k, 0, beta))
    return terms


def total_loss(branch_losses: dict[tuple[int, int], float], n_branches: int, beta: float) -> float:
    """Aggregate loss given per-(branch, source) cross-entropies."""
    return sum(w * branch_losses[(k, j)] for k, j, w in loss_terms(n_branches, beta))


def labels_to_arrays(docs: Sequence[Document], labels: LabelSet) -> list[np.ndarray]:
    arrays = []
    for doc in docs:
        y = np.zeros(len(doc.words), dtype=np.int64)
        for wid, cls in labels.positives(doc.doc_id).items():
            y[wid] = cls
        arrays.append(y)
    return arrays


def _select_anchors(
    probs: np.ndarray, order: list[int], n_fields: int, threshold: float
) -> dict[int, int]:
    """Per field, the single anchor word id under the refinement rule."""
    anchors: dict[int, int] = {}
    if probs.shape[0] == 0:
        return anchors
    argmax = probs.argmax(axis=1)
    for f in range(1, n_fields + 1):
        best_wid = -1
        best_p = -1.0
        for wid in order:  # reading order, so ties go to the earlier word
            p = probs[wid, f]
            if p > best_p:
                best_p, best_wid = p, wid
        if best_p > threshold and argmax[best_wid] == f:
            anchors[f] = best_wid
    return anchors


def refine_labels(
    docs: Sequence[Document],
    probs_per_doc: Sequence[np.ndarray],
    n_fields: int,
    threshold: float,
    provenance: str,
) -> LabelSet:
    labels = LabelSet(provenance)
    for doc, probs in zip(docs, probs_per_doc):
        labels.add_document(doc.doc_id)
        anchors = _select_anchors(probs, reading_order(doc), n_fields, threshold)
        for f, wid in anchors.items():
            labels.set_label(doc.doc_id, wid, f)
    return labels


def _branch_terms(
    branch: int, beta: float, y_by_source: dict[int, list[np.ndarray]]
) -> list[tuple[float, int]]:
    """(weight, source) pairs for one branch's share of the aggregate loss."""
    if branch == 1:
        return [(1.0, 0)]
    terms: list[tuple[float, int]] = []
    for j in range(1, branch):
        terms.append((1.0, j))
        terms.append((beta, 0))
    return terms


def train(
    docs: Sequence[Document],
    rule_labels: LabelSet,
    schema: FieldSchema,
    cfg: TrainConfig,
    features: Sequence[np.ndarray] | None = None,
    threads: int | None = None,
) -> TrainResult:
    """Stage-wise training; deterministic for a fixed config and seed."""
    if not docs:
        raise ValidationError("cannot train on an empty corpus")
    for doc in docs:
        if not rule_labels.covers(doc.doc_id):
            raise ValidationError(f"labels do not cover document {doc.doc_id}")
    if features is None:
        features = featurize_corpus(docs, threads)

    n_fields = schema.n_fields
    params = init_params(
        FEATURE_DIM,
        n_fields,
        cfg.n_branches,
        schema.digest(),
        hidden=cfg.hidden,
        branch_hidden=cfg.branch_hidden,
        seed=cfg.seed,
    )
    y_by_source: dict[int, list[np.ndarray]] = {0: labels_to_arrays(docs, rule_labels)}
    trainable = [i for i in range(len(docs)) if len(docs[i].words) > 0]
    if not trainable:
        raise ValidationError("corpus has no words to train on")

    refined: dict[int, LabelSet] = {}
    stage_losses: list[list[float]] = []

    def run_stage(stage: int) -> None:
        # Per-stage work: which branches get gradient updates, on what terms.
        if stage == 1 or not cfg.two_step:
            specs = [
                (b, _branch_terms(b, cfg.beta, y_by_source), True)
                for b in range(1, stage + 1)
            ]
        else:
            specs = [(stage, _branch_terms(stage, cfg.beta, y_by_source), False)]
        epochs = cfg.epochs_step1 if stage == 1 else cfg.epochs_step2
        shuffle_rng = np.random.default_rng([cfg.seed, 1, stage])
        state = AdamState()
        epoch_losses: list[float] = []
        for _ in range(epochs):
            perm = shuffle_rng.permutation(len(trainable))
            batch_losses: list[float] = []
            for start in range(0, len(perm), cfg.batch_docs):
                batch = [trainable[i] for i in perm[start : start + cfg.batch_docs]]
                x = np.concatenate([features[i] for i in batch], axis=0)
                y_cat = {
                    src: np.concatenate([arrays[i] for i in batch])
                    for src, arrays in y_by_source.items()
                }
                loss = 0.0
                grads: dict[str, np.ndarray] = {}
                for branch, terms, train_trunk in specs:
                    targets = [(w, y_cat[src]) for w, src in terms]
                    l, g = branch_loss_and_grad(params, x, targets, branch, train_trunk)
                    loss += l
                    for key, val in g.items():
                        grads[key] = grads[key] + val if key in grads else val
                adam_step(params, grads, state, cfg.lr)
                batch_losses.append(loss)
            epoch_losses.append(float(np.mean(batch_losses)))
        stage_losses.append(epoch_losses)

    for stage in range(1, cfg.n_branches + 1):
        if stage >= 2:
            # one-shot refinement from the previous branch over the train set
            probs = ordered_map(
                lambda i: forward(params, features[i], stage - 1),
                range(len(docs)),
                threads,
            )
            labelset = refine_labels(
                docs, probs, n_fields, cfg.refine_threshold,
                f"refined@branch_{stage - 1}",
            )
            refined[stage - 1] = labelset
            y_by_source[stage - 1] = labels_to_arrays(docs, labelset)
        run_stage(stage)

    final_probs = ordered_map(
        lambda i: forward(params, features[i], cfg.n_branches), range(len(docs)), threads
    )
    refined[cfg.n_branches] = refine_labels(
        docs, final_probs, n_fields, cfg.refine_threshold,
        f"refined@branch_{cfg.n_branches}",
    )
    return TrainResult(params, refined, stage_losses)


def ensemble_predict(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Mean of the branch probability rows; rows still sum to one."""
    acc = forward(params, features, 1)
    for k in range(2, params.n_branches + 1):
        acc = acc + forward(params, features, k)
    return acc / params.n_branches


def extract_values(
    params: ModelParams,
    doc: Document,
    features: np.ndarray,
    schema: FieldSchema,
    threshold: float = 0.1,
    grouping: GroupingConfig | None = None,
) -> dict[str, str]:
    """Field values for one document from the ensemble scores.

    The refinement rule picks one anchor word per field; the value is the
    maximal contiguous argmax run around the anchor inside its phrase.
    """
    if len(doc.words) == 0:
        return {}
    probs = ensemble_predict(params, features)
    order = reading_order(doc)
    anchors = _select_anchors(probs, order, schema.n_fields, threshold)
    if not anchors:
        return {}
    phrases = doc.phrases if doc.phrases is not None else group_words(doc, grouping)
    argmax = probs.argmax(axis=1)
    by_word = {wid: ph for ph in phrases for wid in ph.word_ids}
    words = {w.id: w for w in doc.words}
    out: dict[str, str] = {}
    for f, anchor in sorted(anchors.items()):
        ph = by_word.get(anchor)
        if ph is None:
            out[schema.field_by_id(f).name] = words[anchor].text
            continue
        pos = ph.word_ids.index(anchor)
        lo = pos
        while lo > 0 and argmax[ph.word_ids[lo - 1]] == f:
            lo -= 1
        hi = pos
        while hi + 1 < len(ph.word_ids) and argmax[ph.word_ids[hi + 1]] == f:
            hi += 1
        run = ph.word_ids[lo : hi + 1]
        out[schema.field_by_id(f).name] = " ".join(words[wid].text for wid in run)
    return out


def extract_corpus(
    params: ModelParams,
    docs: Sequence[Document],
    schema: FieldSchema,
    features: Sequence[np.ndarray] | None = None,
    threshold: float = 0.1,
    threads: int | None = None,
) -> dict[str, dict[str, str]]:
    if features is None:
        features = featurize_corpus(docs, threads)
    rows = ordered_map(
        lambda i: extract_values(params, docs[i], features[i], schema, threshold),
        range(len(docs)),
        threads,
    )
    return {doc.doc_id: fields for doc, fields in zip(docs, rows)}


def predict_word_classes(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Per-word argmax class under the ensemble (0 is background)."""
    if features.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return ensemble_predict(params, features).argmax(axis=1)
