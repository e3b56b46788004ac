"""Phrase construction: density grouping of words into multi-word units.

Words are clustered with a DBSCAN region-growing pass over a box distance
that is cheap to compute and anisotropic: vertical center offset is
penalized so that grouping mostly chains words along a line.  With
min_pts=1 every word is a core point, so clusters are exactly the
connected components of the eps-neighborhood graph; the region-growing
form is kept because it is the shape the algorithm takes when min_pts is
raised.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

from .docmodel import Document, Phrase, Word, make_phrase, reading_order


@dataclass(frozen=True)
class GroupingConfig:
    # eps is this fraction of the median word height in the document
    eps_scale: float = 0.8
    vertical_penalty: float = 3.0
    min_pts: int = 1

    def __post_init__(self):
        if self.eps_scale <= 0 or self.vertical_penalty <= 0 or self.min_pts < 1:
            raise ValueError("grouping parameters must be positive")


def word_distance(a: Word, b: Word, vertical_penalty: float = 3.0) -> float:
    """Horizontal gap between boxes combined with penalized center offset.

    The gap is zero when the x-projections overlap, so stacked words are
    separated purely by their vertical offset.
    """
    gap = max(a.box.x0, b.box.x0) - min(a.box.x1, b.box.x1)
    if gap < 0.0:
        gap = 0.0
    dyc = abs(
        (a.box.y0 + a.box.y1) / 2.0 - (b.box.y0 + b.box.y1) / 2.0
    )
    return math.hypot(gap, vertical_penalty * dyc)


def neighborhood_eps(doc: Document, config: GroupingConfig) -> float:
    heights = [w.box.height for w in doc.words]
    if not heights:
        return 0.0
    return config.eps_scale * statistics.median(heights)


def group_words(doc: Document, config: GroupingConfig | None = None) -> tuple[Phrase, ...]:
    """Cluster words into phrases; returns phrases in reading order."""
    if config is None:
        config = GroupingConfig()
    words = sorted(doc.words, key=lambda w: w.id)
    n = len(words)
    if n == 0:
        return ()
    eps = neighborhood_eps(doc, config)

    def neighbors(i: int) -> list[int]:
        wi = words[i]
        return [
            j
            for j in range(n)
            if word_distance(wi, words[j], config.vertical_penalty) <= eps
        ]

    UNSEEN, NOISE = -2, -1
    assignment = [UNSEEN] * n
    cluster = 0
    for i in range(n):
        if assignment[i] != UNSEEN:
            continue
        seeds = neighbors(i)
        if len(seeds) < config.min_pts:
            assignment[i] = NOISE
            continue
        assignment[i] = cluster
        queue = [j for j in seeds if j != i]
        while queue:
            j = queue.pop()
            if assignment[j] == NOISE:
                assignment[j] = cluster  # border point adopted by this cluster
            if assignment[j] != UNSEEN:
                continue
            assignment[j] = cluster
            expansion = neighbors(j)
            if len(expansion) >= config.min_pts:
                queue.extend(k for k in expansion if assignment[k] == UNSEEN)
        cluster += 1

    members: dict[int, list[int]] = {}
    for i, c in enumerate(assignment):
        key = c if c != NOISE else -(i + 1)  # noise words become singleton phrases
        members.setdefault(key, []).append(words[i].id)

    order = reading_order(doc)
    rank = {wid: r for r, wid in enumerate(order)}
    phrases = [make_phrase(doc, ids, order) for ids in members.values()]
    phrases.sort(key=lambda p: min(rank[wid] for wid in p.word_ids))
    return tuple(phrases)


def group_document(doc: Document, config: GroupingConfig | None = None) -> Document:
    """Return a copy of the document with phrases attached."""
    return Document(
        doc.doc_id, doc.page_width, doc.page_height, doc.words, group_words(doc, config)
    )
