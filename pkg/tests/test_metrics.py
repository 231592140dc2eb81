import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formulakit.metrics import (
    UnnormalizedLayout,
    cdm,
    edit_distance,
    levenshtein,
    match_glyphs,
)
from formulakit.render import Bounds, GlyphBox, GlyphLayout
from helpers_gen import random_unicode, random_unit_layout
from helpers_oracle import (
    compat_matrix,
    dp_levenshtein,
    exhaustive_max_matching,
    exhaustive_min_cost_max_matching,
)


class TestEditDistance:
    def test_identity(self):
        assert edit_distance("abc", "abc").value == 0.0

    def test_kitten_sitting(self):
        assert dp_levenshtein("kitten", "sitting") == 3  # oracle agrees with 3/7
        assert edit_distance("kitten", "sitting").value == pytest.approx(3 / 7)

    def test_empty_vs_nonempty(self):
        assert edit_distance("", "ab").value == 1.0

    def test_both_empty(self):
        assert edit_distance("", "").value == 0.0

    def test_normalization_applies(self):
        # spelling variants normalize to the same text, so distance is 0
        assert edit_distance("x ^ 2", "x^{2}").value == 0.0
        assert edit_distance("\\dfrac{a}{b}", "\\frac{a}{b}").value == 0.0

    def test_raw_string_fallback_when_unlexable(self):
        score = edit_distance("{oops", "{oops")
        assert score.value == 0.0

    def test_levenshtein_against_oracle_small(self):
        rng = random.Random(7)
        for _ in range(300):
            a = random_unicode(rng, max_len=30)
            b = random_unicode(rng, max_len=30)
            assert levenshtein(a, b) == dp_levenshtein(a, b)

    @settings(max_examples=300, deadline=None)
    @given(st.text(max_size=60), st.text(max_size=60))
    def test_levenshtein_oracle_property(self, a, b):
        assert levenshtein(a, b) == dp_levenshtein(a, b)

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=40), st.text(max_size=40))
    def test_laws(self, a, b):
        d_ab = edit_distance(a, b).value
        d_ba = edit_distance(b, a).value
        assert d_ab == d_ba
        assert 0.0 <= d_ab <= 1.0
        assert edit_distance(a, a).value == 0.0


def unit_layout(record_id, glyphs):
    return GlyphLayout(
        record_id=record_id,
        glyphs=tuple(glyphs),
        bounds=Bounds(0.0, 0.0, 1.0, 1.0),
        render_ok=True,
    )


def g(ch, x, y, s=0.05):
    return GlyphBox(ch, x, y, s, s)


class TestMatchGlyphs:
    def test_identical_layouts_match_fully(self):
        glyphs = [g("x", 0.1, 0.2), g("y", 0.5, 0.5), g("x", 0.9, 0.8)]
        layout = unit_layout("a", glyphs)
        matching = match_glyphs(layout, layout, 0.25)
        assert matching.pairs == ((0, 0), (1, 1), (2, 2))

    def test_single_compatible_pair(self):
        pred = unit_layout("p", [g("x", 0.2, 0.5)])
        gt = unit_layout("g", [g("x", 0.25, 0.5), g("y", 0.8, 0.5)])
        matching = match_glyphs(pred, gt, 0.25)
        assert matching.pairs == ((0, 0),)
        # oracle agrees
        assert exhaustive_max_matching(
            compat_matrix(pred.glyphs, gt.glyphs, 0.25)
        ) == 1

    def test_identity_mismatch_gives_empty_matching(self):
        pred = unit_layout("p", [g("a", 0.5, 0.5)])
        gt = unit_layout("g", [g("b", 0.5, 0.5)])
        assert match_glyphs(pred, gt, 0.25).pairs == ()

    def test_character_discipline(self):
        rng = random.Random(11)
        for _ in range(100):
            pred = random_unit_layout(rng, max_glyphs=8)
            gt = random_unit_layout(rng, max_glyphs=8)
            for i, j in match_glyphs(pred, gt, 0.3).pairs:
                assert pred.glyphs[i].ch == gt.glyphs[j].ch

    def test_radius_respected(self):
        pred = unit_layout("p", [g("x", 0.0, 0.0)])
        gt = unit_layout("g", [g("x", 1.0, 1.0)])
        assert match_glyphs(pred, gt, 0.25).pairs == ()
        assert len(match_glyphs(pred, gt, 2.0).pairs) == 1

    def test_cardinality_against_exhaustive_oracle(self):
        rng = random.Random(23)
        for _ in range(200):
            pred = random_unit_layout(rng, max_glyphs=8)
            gt = random_unit_layout(rng, max_glyphs=8)
            got = len(match_glyphs(pred, gt, 0.25).pairs)
            want = exhaustive_max_matching(
                compat_matrix(pred.glyphs, gt.glyphs, 0.25)
            )
            assert got == want

    def test_minimum_total_distance_among_max_matchings(self):
        rng = random.Random(29)
        for _ in range(120):
            pred = random_unit_layout(rng, max_glyphs=6, alphabet="ab")
            gt = random_unit_layout(rng, max_glyphs=6, alphabet="ab")
            pairs = match_glyphs(pred, gt, 0.5).pairs
            total = sum(
                math.hypot(
                    pred.glyphs[i].x - gt.glyphs[j].x,
                    pred.glyphs[i].y - gt.glyphs[j].y,
                )
                for i, j in pairs
            )
            want_size, want_total = exhaustive_min_cost_max_matching(
                pred.glyphs, gt.glyphs, 0.5
            )
            assert len(pairs) == want_size
            assert total == pytest.approx(want_total, abs=1e-9)

    def test_exact_tie_breaks_deterministically(self):
        # two pred x's equidistant from two gt x's: expect index order
        pred = unit_layout("p", [g("x", 0.4, 0.5), g("x", 0.6, 0.5)])
        gt = unit_layout("g", [g("x", 0.4, 0.6), g("x", 0.6, 0.6)])
        first = match_glyphs(pred, gt, 0.5).pairs
        assert first == ((0, 0), (1, 1))
        assert match_glyphs(pred, gt, 0.5).pairs == first

    def test_matched_count_symmetric(self):
        rng = random.Random(31)
        for _ in range(200):
            a = random_unit_layout(rng, max_glyphs=7)
            b = random_unit_layout(rng, max_glyphs=7)
            assert len(match_glyphs(a, b, 0.25).pairs) == len(
                match_glyphs(b, a, 0.25).pairs
            )

    def test_rejects_unnormalized_layout(self):
        raw = GlyphLayout(
            record_id="raw",
            glyphs=(g("x", 5.0, 5.0),),
            bounds=Bounds(0.0, 0.0, 10.0, 10.0),
            render_ok=True,
        )
        ok = unit_layout("ok", [g("x", 0.5, 0.5)])
        with pytest.raises(UnnormalizedLayout):
            match_glyphs(raw, ok, 0.25)

    def test_rejects_nonpositive_tau(self):
        layout = unit_layout("a", [g("x", 0.5, 0.5)])
        with pytest.raises(ValueError):
            match_glyphs(layout, layout, 0.0)


class TestCdm:
    def test_identical_layouts(self):
        layout = unit_layout("a", [g("x", 0.1, 0.1), g("y", 0.9, 0.9)])
        score = cdm(layout, layout, 0.25)
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_partial_match_two_thirds(self):
        pred = unit_layout("p", [g("x", 0.2, 0.5)])
        gt = unit_layout("g", [g("x", 0.25, 0.5), g("y", 0.8, 0.5)])
        score = cdm(pred, gt, 0.25)
        assert score.f1 == pytest.approx(2 / 3)
        assert (score.matched, score.pred_total, score.gt_total) == (1, 1, 2)

    def test_failed_render_scores_zero(self):
        failed = GlyphLayout(
            record_id="p",
            glyphs=(),
            bounds=Bounds(0, 0, 0, 0),
            render_ok=False,
            error_message="boom",
        )
        gt = unit_layout("g", [g("x", 0.5, 0.5)])
        score = cdm(failed, gt, 0.25)
        assert score.f1 == 0.0
        assert score.pred_total == 0

    def test_empty_vs_empty_is_perfect(self):
        empty = GlyphLayout(
            record_id="e", glyphs=(), bounds=Bounds(0, 0, 0, 0), render_ok=True
        )
        score = cdm(empty, empty, 0.25)
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_identity_on_fuzzed_layouts(self):
        rng = random.Random(37)
        for _ in range(100):
            layout = random_unit_layout(rng)
            assert cdm(layout, layout, 0.25).f1 == 1.0

    def test_f1_invariant_formula(self):
        rng = random.Random(41)
        for _ in range(100):
            pred = random_unit_layout(rng)
            gt = random_unit_layout(rng)
            score = cdm(pred, gt, 0.25)
            assert score.matched <= min(score.pred_total, score.gt_total)
            assert score.f1 == pytest.approx(
                2 * score.matched / (score.pred_total + score.gt_total)
            )
