"""Find LaTeX formulas in stored page documents and assemble dataset
records at line, paragraph, and page level.

HTML bodies are preprocessed position-preservingly: tags, scripts, styles,
comments, and entities are replaced by equal-length text (block tags leave
a paragraph break behind), so span offsets remain valid offsets into the
original body.  Markdown bodies get the same treatment for code fences and
inline code.
"""

from __future__ import annotations

import html as _htmllib
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .lexer import LexError, tokenize


class PageFormat(Enum):
    HTML = "html"
    MARKDOWN = "markdown"


class SampleLevel(Enum):
    LINE = "line"
    PARAGRAPH = "paragraph"
    PAGE = "page"


class Delimiter(Enum):
    INLINE_DOLLAR = "inline_dollar"
    DISPLAY_DOLLAR = "display_dollar"
    INLINE_PAREN = "inline_paren"
    DISPLAY_BRACKET = "display_bracket"
    ENVIRONMENT = "environment"


#: Delimiters that mark display-style (standalone) formulas.
DISPLAY_DELIMITERS = frozenset(
    {Delimiter.DISPLAY_DOLLAR, Delimiter.DISPLAY_BRACKET, Delimiter.ENVIRONMENT}
)


@dataclass(frozen=True)
class PageDocument:
    page_id: str
    body: str
    format: PageFormat = PageFormat.HTML
    url: str = ""

    def __post_init__(self):
        if not self.page_id:
            raise ValueError("page_id must be nonempty")


@dataclass(frozen=True)
class FormulaSpan:
    """A delimited formula region; offsets index the page's extraction
    text, which is position-aligned with the original body."""

    start: int
    end: int
    delimiter: Delimiter
    latex: str


@dataclass(frozen=True)
class FormulaRecord:
    record_id: str
    level: SampleLevel
    latex: str
    source_page_id: str
    dedup_key: str = ""

    def to_json_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "level": self.level.value,
            "latex": self.latex,
            "source_page_id": self.source_page_id,
            "dedup_key": self.dedup_key,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "FormulaRecord":
        return cls(
            record_id=obj["record_id"],
            level=SampleLevel(obj["level"]),
            latex=obj["latex"],
            source_page_id=obj.get("source_page_id", ""),
            dedup_key=obj.get("dedup_key", ""),
        )


@dataclass
class ExtractorConfig:
    max_inline_len: int = 2000
    page_min_spans: int = 2


@dataclass
class ExtractionStats:
    pages: int = 0
    spans_found: int = 0
    spans_dropped_lex_error: int = 0
    records_per_level: dict = field(
        default_factory=lambda: {level.value: 0 for level in SampleLevel}
    )

    def to_json_dict(self) -> dict:
        return {
            "pages": self.pages,
            "spans_found": self.spans_found,
            "spans_dropped_lex_error": self.spans_dropped_lex_error,
            "records_per_level": dict(self.records_per_level),
        }


_MATH_ENVS = (
    "equation|align|alignat|flalign|gather|multline|eqnarray|displaymath|math"
)

_SPAN_RE = re.compile(
    rf"""
    \\begin\{{(?P<env>(?:{_MATH_ENVS})\*?)\}}(?P<env_body>.*?)\\end\{{(?P=env)\}}
    | \\\[(?P<bracket>.*?)\\\]
    | \$\$(?P<ddollar>.+?)\$\$
    | \\\((?P<paren>.*?)\\\)
    | (?<!\$)\$(?P<dollar>(?:\\.|[^$\\\n])+?)\$(?!\$)
    """,
    re.DOTALL | re.VERBOSE,
)

_GROUP_DELIMS = {
    "env_body": Delimiter.ENVIRONMENT,
    "bracket": Delimiter.DISPLAY_BRACKET,
    "ddollar": Delimiter.DISPLAY_DOLLAR,
    "paren": Delimiter.INLINE_PAREN,
    "dollar": Delimiter.INLINE_DOLLAR,
}

_SCRIPT_STYLE_RE = re.compile(
    r"<script\b.*?</script\s*>|<style\b.*?</style\s*>|<!--.*?-->",
    re.DOTALL | re.IGNORECASE,
)
_TAG_RE = re.compile(r"</?([a-zA-Z][a-zA-Z0-9]*)\b[^>]*>")
_ENTITY_RE = re.compile(r"&(?:#\d+|#x[0-9a-fA-F]+|[a-zA-Z][a-zA-Z0-9]*);")
_BLOCK_TAGS = frozenset(
    {
        "p", "div", "br", "li", "ul", "ol", "dl", "dt", "dd", "table", "tr",
        "td", "th", "blockquote", "pre", "hr", "h1", "h2", "h3", "h4", "h5",
        "h6", "section", "article", "header", "footer", "figure",
    }
)
_FENCE_RE = re.compile(r"```.*?```|``.*?``|`[^`\n]*`", re.DOTALL)
_WORD_RE = re.compile(r"[A-Za-z0-9]")


def _blank(text: str, keep_newlines: bool = True) -> str:
    if keep_newlines:
        return "".join("\n" if ch == "\n" else " " for ch in text)
    return " " * len(text)


def extraction_text(page: PageDocument) -> str:
    """Body prepared for span search; same length as the body so offsets
    carry over."""
    body = page.body
    if page.format is PageFormat.HTML:
        body = _SCRIPT_STYLE_RE.sub(lambda m: _blank(m.group(0)), body)
        body = _ENTITY_RE.sub(_replace_entity, body)
        body = _TAG_RE.sub(_replace_tag, body)
    else:
        body = _FENCE_RE.sub(lambda m: _blank(m.group(0)), body)
    return body


def _replace_tag(m: re.Match) -> str:
    length = len(m.group(0))
    if m.group(1).lower() in _BLOCK_TAGS:
        return "\n\n" + " " * (length - 2)
    return " " * length


def _replace_entity(m: re.Match) -> str:
    raw = m.group(0)
    decoded = _htmllib.unescape(raw)
    if decoded != raw and len(decoded) == 1:
        return decoded + " " * (len(raw) - 1)
    return raw


def extract_spans(
    page: PageDocument,
    config: ExtractorConfig | None = None,
    stats: ExtractionStats | None = None,
) -> list[FormulaSpan]:
    """Scan a page for delimited formula regions.

    Spans come back sorted by start offset and pairwise disjoint.  A
    candidate only becomes a span if its content is nonempty after trimming
    and lexes cleanly; lex failures are counted on ``stats`` (the dollar
    sign doubles as currency, so this doubles as the currency guard).
    """
    cfg = config or ExtractorConfig()
    text = extraction_text(page)
    spans: list[FormulaSpan] = []
    for m in _SPAN_RE.finditer(text):
        group_name = next(name for name in _GROUP_DELIMS if m.group(name) is not None)
        delimiter = _GROUP_DELIMS[group_name]
        if delimiter is Delimiter.ENVIRONMENT:
            latex = m.group(0)  # keep the environment wrapper; outermost wins
        else:
            latex = m.group(group_name)
        if (
            delimiter is Delimiter.INLINE_DOLLAR
            and m.end() - m.start() > cfg.max_inline_len
        ):
            continue
        latex = latex.strip()
        if not latex:
            continue
        try:
            tokenize(latex)
        except LexError:
            if stats is not None:
                stats.spans_dropped_lex_error += 1
            continue
        spans.append(
            FormulaSpan(start=m.start(), end=m.end(), delimiter=delimiter, latex=latex)
        )
    if stats is not None:
        stats.spans_found += len(spans)
    return spans


def _paragraph_blocks(text: str) -> list[tuple[int, int]]:
    blocks = []
    pos = 0
    for m in re.finditer(r"\n[ \t]*\n[ \t\n]*", text):
        if m.start() > pos:
            blocks.append((pos, m.start()))
        pos = m.end()
    if pos < len(text):
        blocks.append((pos, len(text)))
    return [(s, e) for s, e in blocks if text[s:e].strip()]


def _collapse_ws(text: str) -> str:
    return " ".join(text.split())


def _clean_page_text(text: str) -> str:
    lines = [" ".join(line.split()) for line in text.split("\n")]
    cleaned = re.sub(r"\n{3,}", "\n\n", "\n".join(lines))
    return re.sub(r"\n\s*\n", "\n\n", cleaned).strip()


def build_samples(
    page: PageDocument,
    spans: Sequence[FormulaSpan],
    config: ExtractorConfig | None = None,
) -> list[FormulaRecord]:
    """Assemble level-classified records from a page's spans.

    Display-delimited spans become line records; paragraph blocks mixing at
    least one span with at least one non-formula word become paragraph
    records; the whole page becomes a page record when it holds at least
    ``page_min_spans`` spans.
    """
    cfg = config or ExtractorConfig()
    text = extraction_text(page)
    records: list[FormulaRecord] = []
    line_idx = 0
    for span in spans:
        if span.delimiter in DISPLAY_DELIMITERS:
            records.append(
                FormulaRecord(
                    record_id=f"{page.page_id}:line:{line_idx:04d}",
                    level=SampleLevel.LINE,
                    latex=span.latex,
                    source_page_id=page.page_id,
                )
            )
            line_idx += 1
    para_idx = 0
    for bstart, bend in _paragraph_blocks(text):
        block_spans = [s for s in spans if bstart <= s.start and s.end <= bend]
        if not block_spans:
            continue
        masked = list(text[bstart:bend])
        for s in block_spans:
            for k in range(s.start - bstart, s.end - bstart):
                masked[k] = " "
        if not _WORD_RE.search("".join(masked)):
            continue
        records.append(
            FormulaRecord(
                record_id=f"{page.page_id}:para:{para_idx:04d}",
                level=SampleLevel.PARAGRAPH,
                latex=_collapse_ws(text[bstart:bend]),
                source_page_id=page.page_id,
            )
        )
        para_idx += 1
    if len(spans) >= cfg.page_min_spans:
        records.append(
            FormulaRecord(
                record_id=f"{page.page_id}:page",
                level=SampleLevel.PAGE,
                latex=_clean_page_text(text),
                source_page_id=page.page_id,
            )
        )
    return records


class CorpusError(Exception):
    pass


def extract_corpus(
    pages: Iterable[PageDocument], config: ExtractorConfig | None = None
) -> tuple[list[FormulaRecord], ExtractionStats]:
    """Run extraction over a corpus, merging deterministically by page_id."""
    cfg = config or ExtractorConfig()
    stats = ExtractionStats()
    by_id: dict[str, PageDocument] = {}
    for page in pages:
        if page.page_id in by_id:
            raise CorpusError(f"duplicate page_id {page.page_id!r}")
        by_id[page.page_id] = page
    records: list[FormulaRecord] = []
    for page_id in sorted(by_id):
        page = by_id[page_id]
        stats.pages += 1
        spans = extract_spans(page, cfg, stats)
        for rec in build_samples(page, spans, cfg):
            stats.records_per_level[rec.level.value] += 1
            records.append(rec)
    return records, stats
