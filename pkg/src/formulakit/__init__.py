"""formulakit: dataset construction and evaluation for math formula
recognition.

Pipeline: extract formula records from page corpora, deduplicate and
split them, render LaTeX through a MathJax worker into glyph layouts,
collect predictions from any HTTP recognizer, and score with normalized
edit distance and character detection matching.
"""

from .client import (
    BatchItem,
    EndpointConfig,
    EndpointError,
    EvalRecord,
    extract_latex,
    recognize,
    run_batch,
)
from .dedup import (
    DedupResult,
    DedupStats,
    InsufficientSamples,
    NearDupConfig,
    SplitConfig,
    canonical_key,
    dedup,
    split,
)
from .extract import (
    Delimiter,
    ExtractionStats,
    ExtractorConfig,
    FormulaRecord,
    FormulaSpan,
    PageDocument,
    PageFormat,
    SampleLevel,
    build_samples,
    extract_corpus,
    extract_spans,
)
from .lexer import (
    LexError,
    LexErrorKind,
    NormalizeConfig,
    Token,
    TokenKind,
    TokenSeq,
    detokenize,
    normalize,
    tokenize,
)
from .metrics import (
    CdmScore,
    EdScore,
    Matching,
    UnnormalizedLayout,
    canonical_text,
    cdm,
    edit_distance,
    levenshtein,
    match_glyphs,
)
from .render import (
    Bounds,
    DegenerateBounds,
    GlyphBox,
    GlyphLayout,
    ManifestEntry,
    SchemaError,
    is_unit_normalized,
    normalize_layout,
    read_layouts,
    read_manifest,
    reconcile_layouts,
    write_manifest,
)
from .report import (
    AVG_SUBSET,
    EmptyInput,
    MetricsSummary,
    TableFormat,
    aggregate,
    render_table,
)

__version__ = "0.1.0"
