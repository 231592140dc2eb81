"""Scoring: normalized edit distance over LaTeX text and the render-based
character detection matching (CDM) score over glyph layouts.

Edit distance uses Myers' bit-parallel algorithm, which Python's arbitrary
precision integers make block-free; it is exact and is cross-checked
against a textbook dynamic program in the test suite.

CDM matches glyphs of identical character identity whose normalized
centers lie within a radius ``tau``, takes the maximum-cardinality
matching, and among those minimizes total center distance.  The matching
is computed per character class with successive shortest augmenting paths
(Dijkstra with potentials), which yields exactly that optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from heapq import heappop, heappush

from .lexer import LexError, NormalizeConfig, detokenize, normalize, tokenize
from .render import GlyphBox, GlyphLayout, is_unit_normalized


@dataclass(frozen=True)
class EdScore:
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"edit distance score out of range: {self.value}")


@dataclass(frozen=True)
class CdmScore:
    precision: float
    recall: float
    f1: float
    matched: int
    pred_total: int
    gt_total: int


@dataclass(frozen=True)
class Matching:
    """Pairs of (pred_index, gt_index); indices unique on each side."""

    pairs: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.pairs)


class UnnormalizedLayout(Exception):
    pass


def levenshtein(a: str, b: str) -> int:
    """Exact Levenshtein distance (unit-cost insert/delete/substitute)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) > len(b):
        a, b = b, a
    m = len(a)
    peq: dict[str, int] = {}
    for idx, ch in enumerate(a):
        peq[ch] = peq.get(ch, 0) | (1 << idx)
    mask = (1 << m) - 1
    last = 1 << (m - 1)
    vp = mask
    vn = 0
    score = m
    for ch in b:
        eq = peq.get(ch, 0)
        xv = eq | vn
        xh = (((eq & vp) + vp) ^ vp) | eq
        hp = vn | ~(xh | vp)
        hn = vp & xh
        if hp & last:
            score += 1
        if hn & last:
            score -= 1
        hp = ((hp << 1) | 1) & mask
        hn = (hn << 1) & mask
        vp = (hn | ~(xv | hp)) & mask
        vn = hp & xv
    return score


def canonical_text(src: str, config: NormalizeConfig | None = None) -> str:
    """Normalized comparison text for scoring; raw input if lexing fails."""
    try:
        seq = tokenize(src)
    except LexError:
        return src
    return detokenize(normalize(seq, config))


def edit_distance(
    pred: str, gt: str, config: NormalizeConfig | None = None
) -> EdScore:
    """Levenshtein distance over normalized text, divided by the longer
    length.  0 when both sides are empty."""
    p = canonical_text(pred, config)
    g = canonical_text(gt, config)
    longest = max(len(p), len(g))
    if longest == 0:
        return EdScore(0.0)
    return EdScore(levenshtein(p, g) / longest)


def _require_unit_box(layout: GlyphLayout) -> None:
    if layout.glyphs and not is_unit_normalized(layout):
        raise UnnormalizedLayout(
            f"layout {layout.record_id!r} is not in unit-box coordinates"
        )


def match_glyphs(pred: GlyphLayout, gt: GlyphLayout, tau: float) -> Matching:
    """Maximum-cardinality matching between identity-equal glyphs within
    center distance ``tau``; ties resolved toward minimum total distance,
    then lowest indices.  Both layouts must be in unit-box coordinates."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    _require_unit_box(pred)
    _require_unit_box(gt)
    by_char: dict[str, tuple[list[int], list[int]]] = {}
    for i, g in enumerate(pred.glyphs):
        by_char.setdefault(g.ch, ([], []))[0].append(i)
    for j, g in enumerate(gt.glyphs):
        by_char.setdefault(g.ch, ([], []))[1].append(j)
    pairs: list[tuple[int, int]] = []
    for ch in sorted(by_char):
        left, right = by_char[ch]
        if not left or not right:
            continue
        adj: list[list[tuple[int, float]]] = []
        for i in left:
            gi = pred.glyphs[i]
            row = []
            for jj, j in enumerate(right):
                gj = gt.glyphs[j]
                d = math.hypot(gi.x - gj.x, gi.y - gj.y)
                if d <= tau:
                    row.append((jj, d))
            adj.append(row)
        for li, rj in _min_cost_max_matching(adj, len(right)):
            pairs.append((left[li], right[rj]))
    return Matching(tuple(sorted(pairs)))


def _min_cost_max_matching(
    adj: list[list[tuple[int, float]]], n_right: int
) -> list[tuple[int, int]]:
    """Successive shortest augmenting paths on a bipartite graph.

    Returns a maximum-cardinality matching of minimum total edge cost as
    (left, right) index pairs.  Costs must be non-negative.
    """
    n_left = len(adj)
    inf = math.inf
    pot_l = [0.0] * n_left
    pot_r = [0.0] * n_right
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    for _ in range(min(n_left, n_right)):
        dist_l = [inf] * n_left
        dist_r = [inf] * n_right
        parent_r = [-1] * n_right
        heap: list[tuple[float, int]] = []
        for i in range(n_left):
            if match_l[i] == -1:
                dist_l[i] = 0.0
                heappush(heap, (0.0, i))
        while heap:
            d, i = heappop(heap)
            if d > dist_l[i]:
                continue
            for j, cost in adj[i]:
                nd = d + cost - pot_l[i] - pot_r[j]
                if nd < dist_r[j]:
                    dist_r[j] = nd
                    parent_r[j] = i
                    i2 = match_r[j]
                    if i2 != -1 and nd < dist_l[i2]:
                        dist_l[i2] = nd  # matched edge back to left is tight
                        heappush(heap, (nd, i2))
        best_j = -1
        best_d = inf
        for j in range(n_right):
            if match_r[j] == -1 and dist_r[j] < best_d:
                best_d = dist_r[j]
                best_j = j
        if best_j == -1:
            break
        for i in range(n_left):
            if dist_l[i] <= best_d:
                pot_l[i] += best_d - dist_l[i]
        for j in range(n_right):
            if dist_r[j] <= best_d:
                pot_r[j] -= best_d - dist_r[j]
        j = best_j
        while j != -1:
            i = parent_r[j]
            prev_j = match_l[i]
            match_l[i] = j
            match_r[j] = i
            j = prev_j
    return [(i, j) for i, j in enumerate(match_l) if j != -1]


def cdm(pred: GlyphLayout, gt: GlyphLayout, tau: float) -> CdmScore:
    """Character detection matching score.

    A layout with ``render_ok`` false contributes zero glyphs, so a failed
    prediction scores 0 against any non-empty ground truth.  Empty against
    empty scores 1 (perfect agreement on nothing).
    """
    pred_eff = pred if pred.render_ok else replace(pred, glyphs=())
    gt_eff = gt if gt.render_ok else replace(gt, glyphs=())
    pred_total = len(pred_eff.glyphs)
    gt_total = len(gt_eff.glyphs)
    matched = 0
    if pred_total and gt_total:
        matched = len(match_glyphs(pred_eff, gt_eff, tau))
    if pred_total == 0 and gt_total == 0:
        precision = recall = f1 = 1.0
    else:
        precision = matched / pred_total if pred_total else 0.0
        recall = matched / gt_total if gt_total else 0.0
        f1 = 2.0 * matched / (pred_total + gt_total)
    return CdmScore(
        precision=precision,
        recall=recall,
        f1=f1,
        matched=matched,
        pred_total=pred_total,
        gt_total=gt_total,
    )


__all__ = [
    "EdScore",
    "CdmScore",
    "Matching",
    "UnnormalizedLayout",
    "levenshtein",
    "canonical_text",
    "edit_distance",
    "match_glyphs",
    "cdm",
    "GlyphBox",
    "GlyphLayout",
]
