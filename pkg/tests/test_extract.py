import random
from pathlib import Path

import pytest

from formulakit.extract import (
    Delimiter,
    ExtractionStats,
    ExtractorConfig,
    PageDocument,
    PageFormat,
    SampleLevel,
    build_samples,
    extract_corpus,
    extract_spans,
    extraction_text,
)
from helpers_corpus import build_fixture_corpus

FIXTURES = Path(__file__).parent / "fixtures"


def md_page(body, page_id="p"):
    return PageDocument(page_id=page_id, body=body, format=PageFormat.MARKDOWN)


class TestExtractSpans:
    def test_inline_dollar_in_html(self):
        page = PageDocument(page_id="p", body="<p>Let $x$ grow.</p>")
        spans = extract_spans(page)
        assert len(spans) == 1
        assert spans[0].delimiter is Delimiter.INLINE_DOLLAR
        assert spans[0].latex == "x"

    def test_display_dollar(self):
        spans = extract_spans(md_page("$$E=mc^2$$"))
        assert len(spans) == 1
        assert spans[0].delimiter is Delimiter.DISPLAY_DOLLAR
        assert spans[0].latex == "E=mc^2"

    def test_mixed_fixture_page_offsets(self):
        body = (FIXTURES / "page_mixed.html").read_text(encoding="utf-8")
        page = PageDocument(page_id="mixed", body=body)
        spans = extract_spans(page)
        assert [(s.start, s.end, s.delimiter) for s in spans] == [
            (27, 32, Delimiter.INLINE_DOLLAR),
            (55, 70, Delimiter.DISPLAY_DOLLAR),
            (92, 99, Delimiter.INLINE_PAREN),
            (115, 163, Delimiter.ENVIRONMENT),
        ]
        assert spans[0].latex == "a+b"
        assert spans[1].latex == "\\frac{x}{y}"
        assert spans[2].latex == "z_1"
        # offsets index the original body because preprocessing keeps length
        assert body[spans[1].start : spans[1].end] == "$$\\frac{x}{y}$$"

    def test_spans_sorted_and_disjoint(self):
        spans = extract_spans(md_page("$a$ text $$b$$ more \\(c\\)"))
        assert [s.delimiter for s in spans] == [
            Delimiter.INLINE_DOLLAR,
            Delimiter.DISPLAY_DOLLAR,
            Delimiter.INLINE_PAREN,
        ]
        for left, right in zip(spans, spans[1:]):
            assert left.end <= right.start

    def test_lex_failures_dropped_and_counted(self):
        stats = ExtractionStats()
        spans = extract_spans(md_page("bad ${oops$ then $x$"), stats=stats)
        assert [s.latex for s in spans] == ["x"]
        assert stats.spans_dropped_lex_error == 1

    def test_currency_needs_clean_lex(self):
        # the guard is lexing, so plain words between dollars still match
        spans = extract_spans(md_page("$5 and $10"))
        assert len(spans) == 1

    def test_inline_dollar_does_not_cross_newline(self):
        assert extract_spans(md_page("a $x\ny$ b")) == []

    def test_max_inline_length_guard(self):
        body = "$" + "a" * 50 + "$"
        cfg = ExtractorConfig(max_inline_len=20)
        assert extract_spans(md_page(body), cfg) == []
        assert len(extract_spans(md_page(body))) == 1

    def test_script_and_style_removed(self):
        page = PageDocument(
            page_id="p",
            body="<script>var x = $nope$;</script><p>$y$</p><style>a{}</style>",
        )
        spans = extract_spans(page)
        assert [s.latex for s in spans] == ["y"]

    def test_entity_decoding_preserves_offsets(self):
        page = PageDocument(page_id="p", body="<p>$a &lt; b$</p>")
        spans = extract_spans(page)
        assert len(spans) == 1
        assert spans[0].latex.replace(" ", "") == "a<b"
        assert len(extraction_text(page)) == len(page.body)

    def test_environment_outermost_wins(self):
        body = "$$\\begin{align}x\\end{align}$$"
        spans = extract_spans(md_page(body))
        assert len(spans) == 1
        assert spans[0].delimiter is Delimiter.DISPLAY_DOLLAR

    def test_markdown_code_blocks_ignored(self):
        body = "```\n$not math$\n```\nreal $x$ and `$y$` inline"
        spans = extract_spans(md_page(body))
        assert [s.latex for s in spans] == ["x"]

    def test_no_overlap_fuzz(self):
        rng = random.Random(99)
        pieces = ["$", "$$", "\\(", "\\)", "\\[", "\\]", "a", "b ", "x+y",
                  "\\begin{align}", "\\end{align}", "\n\n", " ", "{", "}"]
        for i in range(10_000):
            body = "".join(rng.choice(pieces) for _ in range(rng.randint(0, 12)))
            spans = extract_spans(md_page(body, page_id=f"f{i}"))
            for left, right in zip(spans, spans[1:]):
                assert left.end <= right.start


class TestBuildSamples:
    def test_single_display_formula_page(self):
        page = md_page("$$\\frac{a}{b}$$")
        records = build_samples(page, extract_spans(page))
        levels = [r.level for r in records]
        assert levels == [SampleLevel.LINE]

    def test_paragraph_preserves_interleaved_text(self):
        page = md_page("the energy $E=mc^2$ follows")
        records = build_samples(page, extract_spans(page))
        assert [r.level for r in records] == [SampleLevel.PARAGRAPH]
        assert records[0].latex == "the energy $E=mc^2$ follows"

    def test_empty_page(self):
        page = md_page("")
        assert build_samples(page, extract_spans(page)) == []

    def test_page_record_needs_min_spans(self):
        one = md_page("$$x$$")
        assert all(
            r.level is not SampleLevel.PAGE
            for r in build_samples(one, extract_spans(one))
        )
        two = md_page("$$x$$\n\nwords\n\n$$y$$")
        records = build_samples(two, extract_spans(two))
        pages = [r for r in records if r.level is SampleLevel.PAGE]
        assert len(pages) == 1
        assert "$$x$$" in pages[0].latex and "$$y$$" in pages[0].latex

    def test_formula_only_block_is_not_a_paragraph(self):
        page = md_page("$a+b$\n\n$$c$$")
        records = build_samples(page, extract_spans(page))
        assert all(r.level is not SampleLevel.PARAGRAPH for r in records)

    def test_reextraction_closure_for_line_records(self):
        page = md_page("$$\\sum_{i=1}^{n} i$$")
        records = build_samples(page, extract_spans(page))
        line = next(r for r in records if r.level is SampleLevel.LINE)
        wrapped = md_page(f"$${line.latex}$$", page_id="re")
        again = extract_spans(wrapped)
        assert len(again) == 1
        assert again[0].latex == line.latex

    def test_paragraph_and_page_records_reextract(self):
        page = md_page("words $a+b$ here\n\nmore $$c^2$$ text")
        for rec in build_samples(page, extract_spans(page)):
            if rec.level is SampleLevel.LINE:
                continue
            inner = extract_spans(md_page(rec.latex, page_id="re"))
            assert len(inner) >= 1


class TestCorpus:
    def test_count_consistency_on_fixture_corpus(self):
        pages = build_fixture_corpus()
        records, stats = extract_corpus(pages)
        display_spans = 0
        for page in pages:
            display_spans += sum(
                1
                for s in extract_spans(page)
                if s.delimiter
                in (Delimiter.DISPLAY_DOLLAR, Delimiter.DISPLAY_BRACKET, Delimiter.ENVIRONMENT)
            )
        line_records = [r for r in records if r.level is SampleLevel.LINE]
        assert len(line_records) == display_spans
        assert stats.records_per_level["line"] == len(line_records)
        assert stats.pages == 60
        assert stats.spans_dropped_lex_error >= 1  # the authored bad-dollar page

    def test_duplicate_page_id_rejected(self):
        pages = [md_page("$$x$$", page_id="a"), md_page("$$y$$", page_id="a")]
        with pytest.raises(Exception):
            extract_corpus(pages)

    def test_deterministic_order(self):
        pages = build_fixture_corpus()
        records1, _ = extract_corpus(pages)
        records2, _ = extract_corpus(list(reversed(pages)))
        assert [r.record_id for r in records1] == [r.record_id for r in records2]
