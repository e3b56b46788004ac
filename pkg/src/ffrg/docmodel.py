"""Document, schema, and label data model with JSONL ingestion.

Boxes are normalized to [0,1] at ingestion (origin top-left, y downward);
all geometric constants elsewhere in the package operate in those units.
Background class is 0; schema fields are classes 1..N.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Iterator

from .datatypes import VALUE_TYPES, DataType


class FfrgError(Exception):
    """Base class for toolkit errors."""


class ValidationError(FfrgError):
    """Input violates a structural invariant."""


class ParseError(ValidationError):
    """Input could not be decoded at all."""


@dataclass(frozen=True)
class BBox:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or v != v or v in (float("inf"), float("-inf")):
                raise ValidationError(f"box coordinate {name}={v!r} is not finite")
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"box coordinate {name}={v} outside [0,1]")
        if self.x1 < self.x0:
            raise ValidationError(f"box has x1 < x0 ({self.x1} < {self.x0})")
        if self.y1 < self.y0:
            raise ValidationError(f"box has y1 < y0 ({self.y1} < {self.y0})")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def union(self, other: "BBox") -> "BBox":
        return BBox(
            min(self.x0, other.x0),
            min(self.y0, other.y0),
            max(self.x1, other.x1),
            max(self.y1, other.y1),
        )

    def contains(self, other: "BBox") -> bool:
        return (
            self.x0 <= other.x0
            and self.y0 <= other.y0
            and self.x1 >= other.x1
            and self.y1 >= other.y1
        )

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


@dataclass(frozen=True)
class Word:
    id: int
    text: str
    box: BBox

    def __post_init__(self):
        if not self.text or self.text != self.text.strip():
            raise ValidationError(
                f"word {self.id} text {self.text!r} is empty or has surrounding whitespace"
            )


@dataclass(frozen=True)
class Phrase:
    word_ids: tuple[int, ...]
    text: str
    box: BBox

    def __post_init__(self):
        if not self.word_ids:
            raise ValidationError("phrase has no words")
        if len(set(self.word_ids)) != len(self.word_ids):
            raise ValidationError("phrase has duplicate word ids")


@dataclass(frozen=True)
class Document:
    doc_id: str
    page_width: int
    page_height: int
    words: tuple[Word, ...]
    phrases: tuple[Phrase, ...] | None = None

    def __post_init__(self):
        if self.page_width <= 0 or self.page_height <= 0:
            raise ValidationError(f"document {self.doc_id}: page dimensions must be positive")
        ids = sorted(w.id for w in self.words)
        if ids != list(range(len(self.words))):
            raise ValidationError(f"document {self.doc_id}: word ids are not dense 0..M-1")
        if self.phrases is not None:
            seen: set[int] = set()
            for ph in self.phrases:
                for wid in ph.word_ids:
                    if wid < 0 or wid >= len(self.words):
                        raise ValidationError(
                            f"document {self.doc_id}: phrase references missing word {wid}"
                        )
                    if wid in seen:
                        raise ValidationError(
                            f"document {self.doc_id}: word {wid} belongs to two phrases"
                        )
                    seen.add(wid)

    def word_by_id(self, wid: int) -> Word:
        for w in self.words:
            if w.id == wid:
                return w
        raise KeyError(wid)


def reading_order(doc: Document) -> list[int]:
    """Return word ids sorted into reading order.

    Two words share a line iff their vertical center offset is at most half
    the smaller word height; lines are the transitive closure of that
    relation, ordered by top y (then leftmost x, then smallest id), and
    words within a line are ordered by x0 (then id).
    """
    words = sorted(doc.words, key=lambda w: w.id)
    n = len(words)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        wi = words[i]
        yc_i = (wi.box.y0 + wi.box.y1) / 2.0
        for j in range(i + 1, n):
            wj = words[j]
            yc_j = (wj.box.y0 + wj.box.y1) / 2.0
            if abs(yc_i - yc_j) <= 0.5 * min(wi.box.height, wj.box.height):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj

    lines: dict[int, list[Word]] = {}
    for i in range(n):
        lines.setdefault(find(i), []).append(words[i])
    ordered_lines = sorted(
        lines.values(),
        key=lambda ws: (
            min(w.box.y0 for w in ws),
            min(w.box.x0 for w in ws),
            min(w.id for w in ws),
        ),
    )
    out: list[int] = []
    for line in ordered_lines:
        out.extend(w.id for w in sorted(line, key=lambda w: (w.box.x0, w.id)))
    return out


def make_phrase(doc: Document, word_ids: Iterable[int], order: list[int] | None = None) -> Phrase:
    """Build a phrase from member word ids, ordering members by reading order."""
    ids = list(word_ids)
    if order is None:
        order = reading_order(doc)
    rank = {wid: r for r, wid in enumerate(order)}
    ids.sort(key=lambda wid: rank[wid])
    members = [doc.word_by_id(wid) for wid in ids]
    box = members[0].box
    for w in members[1:]:
        box = box.union(w.box)
    return Phrase(tuple(ids), " ".join(w.text for w in members), box)


# --- JSONL documents -------------------------------------------------------

def parse_document(line: str, line_number: int | None = None) -> Document:
    """Parse one JSONL document record; boxes auto-normalize from pixels."""
    where = f"line {line_number}" if line_number is not None else "input"
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParseError(f"{where}: malformed JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ParseError(f"{where}: document record must be a JSON object")
    try:
        doc_id = str(raw["doc_id"])
        page_w = int(raw["page_width"])
        page_h = int(raw["page_height"])
        raw_words = raw["words"]
    except KeyError as e:
        raise ParseError(f"{where}: missing document key {e}") from e
    if page_w <= 0 or page_h <= 0:
        raise ValidationError(f"{where}: document {doc_id}: page dimensions must be positive")

    boxes: list[list[float]] = []
    texts: list[str] = []
    for idx, rw in enumerate(raw_words):
        try:
            text = str(rw["text"]).strip()
            box = [float(v) for v in rw["box"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"{where}: word {idx} of {doc_id} is malformed: {e}") from e
        if len(box) != 4:
            raise ParseError(f"{where}: word {idx} of {doc_id} box must have 4 coordinates")
        if not text:
            raise ValidationError(f"{where}: word {idx} of {doc_id} has empty text")
        texts.append(text)
        boxes.append(box)

    pixel_input = any(v > 1.5 for b in boxes for v in b)
    words = []
    for idx, (text, b) in enumerate(zip(texts, boxes)):
        if pixel_input:
            b = [b[0] / page_w, b[1] / page_h, b[2] / page_w, b[3] / page_h]
        try:
            bbox = BBox(*b)
        except ValidationError as e:
            raise ValidationError(
                f"{where}: word {idx} ({text!r}) of {doc_id}: {e}"
            ) from e
        words.append(Word(idx, text, bbox))

    doc = Document(doc_id, page_w, page_h, tuple(words))
    if "phrases" in raw and raw["phrases"] is not None:
        order = reading_order(doc)
        phrases = tuple(
            make_phrase(doc, p["word_ids"], order) for p in raw["phrases"]
        )
        doc = Document(doc_id, page_w, page_h, tuple(words), phrases)
    return doc


def serialize_document(doc: Document) -> str:
    """One-line JSON for a document; inverse of parse_document."""
    rec: dict = {
        "doc_id": doc.doc_id,
        "page_width": doc.page_width,
        "page_height": doc.page_height,
        "words": [
            {"text": w.text, "box": w.box.as_list()}
            for w in sorted(doc.words, key=lambda w: w.id)
        ],
    }
    if doc.phrases is not None:
        rec["phrases"] = [{"word_ids": list(p.word_ids)} for p in doc.phrases]
    return json.dumps(rec, ensure_ascii=False)


def read_documents(path: str) -> list[Document]:
    docs = []
    with open(path, "r", encoding="utf-8") as f:
        for n, line in enumerate(f, start=1):
            if line.strip():
                docs.append(parse_document(line, line_number=n))
    return docs


def write_documents(path: str, docs: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            f.write(serialize_document(doc) + "\n")


# --- Field schema ----------------------------------------------------------

@dataclass(frozen=True)
class SchemaField:
    field_id: int
    name: str
    keys: tuple[str, ...]
    allowed_types: frozenset[DataType]

    def __post_init__(self):
        if not self.name:
            raise ValidationError("schema field has empty name")
        if not self.keys:
            raise ValidationError(f"field {self.name}: key list is empty")
        for k in self.keys:
            if not k or k != k.strip() or k != k.lower():
                raise ValidationError(
                    f"field {self.name}: key {k!r} must be lowercase and trimmed"
                )
        if not self.allowed_types or not self.allowed_types <= VALUE_TYPES:
            raise ValidationError(
                f"field {self.name}: allowed_types must be a non-empty subset of "
                f"{sorted(t.value for t in VALUE_TYPES)}"
            )


@dataclass(frozen=True)
class FieldSchema:
    fields: tuple[SchemaField, ...]

    def __post_init__(self):
        ids = [f.field_id for f in self.fields]
        if ids != list(range(1, len(self.fields) + 1)):
            raise ValidationError("field ids must be contiguous 1..N in order")
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate field names in schema")

    @property
    def n_fields(self) -> int:
        return len(self.fields)

    def field_by_id(self, field_id: int) -> SchemaField:
        if not 1 <= field_id <= len(self.fields):
            raise KeyError(field_id)
        return self.fields[field_id - 1]

    def field_by_name(self, name: str) -> SchemaField:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)

    def to_json_dict(self) -> dict:
        return {
            "fields": [
                {
                    "field_id": f.field_id,
                    "name": f.name,
                    "keys": list(f.keys),
                    "allowed_types": sorted(t.value for t in f.allowed_types),
                }
                for f in self.fields
            ]
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> bytes:
        """32-byte identity of the schema, stored in model checkpoints."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).digest()


def schema_from_json_dict(raw: dict) -> FieldSchema:
    try:
        fields = tuple(
            SchemaField(
                field_id=int(f["field_id"]),
                name=str(f["name"]),
                keys=tuple(str(k) for k in f["keys"]),
                allowed_types=frozenset(DataType(t) for t in f["allowed_types"]),
            )
            for f in raw["fields"]
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed schema: {e}") from e
    return FieldSchema(fields)


def read_schema(path: str) -> FieldSchema:
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"schema file {path}: malformed JSON: {e}") from e
    return schema_from_json_dict(raw)


def write_schema(path: str, schema: FieldSchema) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(schema.to_json_dict(), f, indent=2)
        f.write("\n")


def default_invoice_schema() -> FieldSchema:
    """The bundled seven-field invoice schema."""
    number = frozenset({DataType.NUMBER})
    date = frozenset({DataType.DATE})
    amount = frozenset({DataType.NUMBER, DataType.MONEY})
    return FieldSchema(
        (
            SchemaField(1, "inv_number", (
                "invoice number", "invoice #", "invoice", "invoice no.", "invoice no",
            ), number),
            SchemaField(2, "po_number", (
                "po #", "po number", "p.o. #", "p.o. number", "po", "purchase order number",
            ), number),
            SchemaField(3, "inv_date", ("date", "invoice date:", "invoice date"), date),
            SchemaField(4, "due_date", ("due date",), date),
            SchemaField(5, "total_amount", ("total", "invoice total"), amount),
            SchemaField(6, "due_amount", ("amount due", "balance due"), amount),
            SchemaField(7, "total_tax", ("tax",), amount),
        )
    )


# --- Label sets ------------------------------------------------------------

class LabelSet:
    """Word-level class assignments for one corpus pass.

    Only positive labels (class >= 1) are stored; absent words are
    background (class 0).  A document registered with no positives still
    counts as covered.
    """

    def __init__(self, provenance: str):
        self.provenance = provenance
        self._by_doc: dict[str, dict[int, int]] = {}

    def add_document(self, doc_id: str) -> None:
        self._by_doc.setdefault(doc_id, {})

    def set_label(self, doc_id: str, word_id: int, cls: int) -> None:
        if cls < 0:
            raise ValidationError(f"label class {cls} out of range")
        labels = self._by_doc.setdefault(doc_id, {})
        if cls == 0:
            labels.pop(word_id, None)
        else:
            labels[word_id] = cls

    def get(self, doc_id: str, word_id: int) -> int:
        return self._by_doc.get(doc_id, {}).get(word_id, 0)

    def doc_ids(self) -> list[str]:
        return sorted(self._by_doc)

    def positives(self, doc_id: str) -> dict[int, int]:
        return dict(self._by_doc.get(doc_id, {}))

    def covers(self, doc_id: str) -> bool:
        return doc_id in self._by_doc

    def validate(self, docs: Iterable[Document], n_fields: int) -> None:
        by_id = {d.doc_id: d for d in docs}
        for doc_id, labels in self._by_doc.items():
            if doc_id not in by_id:
                raise ValidationError(f"labels reference unknown document {doc_id}")
            m = len(by_id[doc_id].words)
            for wid, cls in labels.items():
                if not 0 <= wid < m:
                    raise ValidationError(
                        f"document {doc_id}: label references missing word {wid}"
                    )
                if not 1 <= cls <= n_fields:
                    raise ValidationError(
                        f"document {doc_id}: label class {cls} out of range 1..{n_fields}"
                    )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LabelSet)
            and self.provenance == other.provenance
            and self._by_doc == other._by_doc
        )

    def __repr__(self) -> str:
        n = sum(len(v) for v in self._by_doc.values())
        return f"LabelSet({self.provenance!r}, docs={len(self._by_doc)}, positives={n})"


def read_labels(path: str) -> LabelSet:
    labels = None
    with open(path, "r", encoding="utf-8") as f:
        for n, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                doc_id = str(rec["doc_id"])
                pairs = rec["labels"]
                provenance = str(rec["provenance"])
            except (json.JSONDecodeError, KeyError) as e:
                raise ParseError(f"labels line {n}: {e}") from e
            if labels is None:
                labels = LabelSet(provenance)
            labels.add_document(doc_id)
            for wid, cls in pairs:
                labels.set_label(doc_id, int(wid), int(cls))
    return labels if labels is not None else LabelSet("empty")


def write_labels(path: str, labels: LabelSet) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc_id in labels.doc_ids():
            pairs = sorted(labels.positives(doc_id).items())
            rec = {
                "doc_id": doc_id,
                "labels": [[wid, cls] for wid, cls in pairs],
                "provenance": labels.provenance,
            }
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


# --- Annotations (gold values and predictions share the format) ------------

def read_annotations(path: str) -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for n, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                doc_id = str(rec["doc_id"])
                fields = {str(k): str(v) for k, v in rec["fields"].items()}
            except (json.JSONDecodeError, KeyError, AttributeError) as e:
                raise ParseError(f"annotations line {n}: {e}") from e
            out[doc_id] = fields
    return out


def write_annotations(path: str, annotations: dict[str, dict[str, str]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc_id in sorted(annotations):
            rec = {"doc_id": doc_id, "fields": annotations[doc_id]}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def iter_jsonl(path: str) -> Iterator[tuple[int, str]]:
    with open(path, "r", encoding="utf-8") as f:
        for n, line in enumerate(f, start=1):
            if line.strip():
                yield n, line
