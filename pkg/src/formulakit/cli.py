"""Command-line interface exposing the whole pipeline.

Exit codes: 0 success, 2 configuration error (bad flags, unreadable
config, unresolvable paths), 3 data error (malformed records, schema
violations, insufficient samples).
"""

from __future__ import annotations

import json
import shlex
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from .client import BatchItem, EndpointConfig, EvalRecord, run_batch
from .dedup import (
    InsufficientSamples,
    NearDupConfig,
    SplitConfig,
    dedup as dedup_records,
    split as split_records,
    split_manifest,
)
from .extract import (
    CorpusError,
    ExtractorConfig,
    FormulaRecord,
    PageDocument,
    PageFormat,
    SampleLevel,
    extract_corpus,
)
from .jsonio import read_jsonl, write_jsonl
from .lexer import LexError
from .metrics import CdmScore, EdScore, cdm, edit_distance
from .render import (
    Bounds,
    DegenerateBounds,
    GlyphLayout,
    SchemaError,
    layout_to_json,
    normalize_layout,
    read_layouts,
    read_manifest,
    reconcile_layouts,
    write_manifest,
)
from .report import (
    EmptyInput,
    MetricsSummary,
    TableFormat,
    aggregate,
    render_table,
)

EXIT_CONFIG = 2
EXIT_DATA = 3

_DATA_ERRORS = (
    CorpusError,
    LexError,
    SchemaError,
    DegenerateBounds,
    InsufficientSamples,
    EmptyInput,
    json.JSONDecodeError,
    KeyError,
    ValueError,
)


@dataclass
class RunConfig:
    """Resolved paths and knobs for one command invocation; constructing
    it verifies every referenced input path exists."""

    inputs: tuple[Path, ...] = ()
    tau: float = 0.25
    seed: int = 0

    def __post_init__(self):
        for p in self.inputs:
            if not Path(p).exists():
                raise click.UsageError(f"path not found: {p}")


def _fail_data(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_DATA)


def _load_records(path: str) -> list[FormulaRecord]:
    try:
        return [FormulaRecord.from_json_dict(obj) for _, obj in read_jsonl(path)]
    except _DATA_ERRORS as exc:
        _fail_data(f"bad records file {path}: {exc}")
        raise AssertionError  # unreachable


@click.group()
def main() -> None:
    """Formula recognition dataset and evaluation toolkit."""


@main.command("extract")
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--stats", "stats_path", required=True, type=click.Path())
@click.option("--max-inline-len", default=2000, show_default=True)
@click.option("--page-min-spans", default=2, show_default=True)
def extract_cmd(
    corpus: str, out_path: str, stats_path: str, max_inline_len: int, page_min_spans: int
) -> None:
    """Extract formula records from a corpus directory of page files."""
    pages = []
    try:
        for file in sorted(Path(corpus).iterdir()):
            if file.suffix == ".json":
                pages.append(_parse_page(json.loads(file.read_text(encoding="utf-8"))))
            elif file.suffix == ".jsonl":
                for _, obj in read_jsonl(file):
                    pages.append(_parse_page(obj))
    except _DATA_ERRORS as exc:
        _fail_data(f"bad corpus: {exc}")
    cfg = ExtractorConfig(max_inline_len=max_inline_len, page_min_spans=page_min_spans)
    try:
        records, stats = extract_corpus(pages, cfg)
    except CorpusError as exc:
        _fail_data(str(exc))
    write_jsonl(out_path, (rec.to_json_dict() for rec in records))
    Path(stats_path).write_text(
        json.dumps(stats.to_json_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    click.echo(f"{stats.pages} pages -> {len(records)} records")


def _parse_page(obj: dict) -> PageDocument:
    return PageDocument(
        page_id=obj["page_id"],
        body=obj["body"],
        format=PageFormat(obj.get("format", "html").lower()),
        url=obj.get("url", ""),
    )


@main.command("dedup")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--stats", "stats_path", required=True, type=click.Path())
@click.option("--near-dup/--no-near-dup", default=False, show_default=True,
              help="Enable the MinHash near-duplicate pass.")
def dedup_cmd(in_path: str, out_path: str, stats_path: str, near_dup: bool) -> None:
    """Drop duplicate records by canonical key (first occurrence wins)."""
    records = _load_records(in_path)
    near_cfg = NearDupConfig() if near_dup else None
    result = dedup_records(records, near_dup=near_cfg)
    write_jsonl(out_path, (rec.to_json_dict() for rec in result.kept))
    stats_obj = {
        "levels": [result.stats[level].to_json_dict() for level in SampleLevel],
        "quarantined": len(result.quarantined),
    }
    Path(stats_path).write_text(
        json.dumps(stats_obj, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    click.echo(
        f"{len(records)} records -> {len(result.kept)} kept, "
        f"{len(result.quarantined)} quarantined"
    )


@main.command("split")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--test-per-level", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-train", required=True, type=click.Path())
@click.option("--out-test", required=True, type=click.Path())
@click.option("--split-manifest", "manifest_path", type=click.Path(), default=None,
              help="Also write a JSON manifest of test membership.")
def split_cmd(
    in_path: str,
    test_per_level: int,
    seed: int,
    out_train: str,
    out_test: str,
    manifest_path: str | None,
) -> None:
    """Split deduplicated records into disjoint train/test sets."""
    records = _load_records(in_path)
    cfg = SplitConfig(test_per_level=test_per_level, seed=seed)
    try:
        train, test = split_records(records, cfg)
    except InsufficientSamples as exc:
        _fail_data(str(exc))
    write_jsonl(out_train, (rec.to_json_dict() for rec in train))
    write_jsonl(out_test, (rec.to_json_dict() for rec in test))
    if manifest_path:
        Path(manifest_path).write_text(
            json.dumps(split_manifest(cfg, test), indent=2, sort_keys=True)
            + "\n",
            encoding="utf-8",
        )
    click.echo(f"{len(train)} train / {len(test)} test")


@main.command("manifest")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--source", type=click.Choice(["records", "preds"]), default="records",
              show_default=True,
              help="Build from ground-truth records or from predicted LaTeX.")
@click.option("--scale", default=1.0, show_default=True)
def manifest_cmd(in_path: str, out_path: str, source: str, scale: float) -> None:
    """Write a render manifest for the MathJax worker."""
    if source == "records":
        records = _load_records(in_path)
    else:
        records = []
        try:
            for _, obj in read_jsonl(in_path):
                ev = EvalRecord.from_json_dict(obj)
                if ev.error is None and ev.pred_latex:
                    records.append(
                        FormulaRecord(
                            record_id=ev.record_id,
                            level=ev.level,
                            latex=ev.pred_latex,
                            source_page_id="",
                        )
                    )
        except _DATA_ERRORS as exc:
            _fail_data(f"bad predictions file {in_path}: {exc}")
    try:
        count = write_manifest(records, out_path, scale=scale)
    except ValueError as exc:
        _fail_data(str(exc))
    click.echo(f"wrote {count} manifest entries")


@main.command("render")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--worker", "worker_cmd", default=None,
              help="Worker command; invoked as CMD --input MANIFEST --output OUT.")
@click.option("--layouts", "layouts_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Ingest pre-rendered worker output instead of invoking a worker.")
@click.option("--out", "out_path", required=True, type=click.Path())
def render_cmd(
    manifest_path: str, worker_cmd: str | None, layouts_path: str | None, out_path: str
) -> None:
    """Render a manifest via the worker, or validate pre-rendered output."""
    if (worker_cmd is None) == (layouts_path is None):
        raise click.UsageError("exactly one of --worker or --layouts is required")
    if worker_cmd is not None:
        argv = shlex.split(worker_cmd) + [
            "--input", manifest_path, "--output", out_path,
        ]
        proc = subprocess.run(argv)
        if proc.returncode != 0:
            _fail_data(f"worker exited with status {proc.returncode}")
        source = out_path
    else:
        source = layouts_path
    try:
        layouts = read_layouts(source)
    except SchemaError as exc:
        _fail_data(str(exc))
    entries = read_manifest(manifest_path)
    missing, duplicated, extra = reconcile_layouts(
        [e.record_id for e in entries], layouts
    )
    if layouts_path is not None:
        Path(out_path).write_text(
            "".join(layout_to_json(l) + "\n" for l in layouts),
            encoding="utf-8",
        )
    for rid in extra:
        click.echo(f"warning: layout for unknown record {rid}", err=True)
    if missing or duplicated:
        for rid in missing:
            click.echo(f"missing layout: {rid}", err=True)
        for rid in duplicated:
            click.echo(f"duplicated layout: {rid}", err=True)
        _fail_data(f"{len(missing)} missing / {len(duplicated)} duplicated layouts")
    failed = sum(1 for l in layouts if not l.render_ok)
    click.echo(f"{len(layouts)} layouts ({failed} failed renders)")


@main.command("predict")
@click.option("--test", "test_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--endpoint", "endpoint_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--cache", "cache_path", default=None, type=click.Path())
def predict_cmd(
    test_path: str, images_dir: str, endpoint_path: str, out_path: str, cache_path: str | None
) -> None:
    """Collect predictions from a recognizer endpoint for the test set."""
    try:
        cfg = EndpointConfig.from_json_file(endpoint_path)
    except (ValueError, TypeError, OSError) as exc:
        raise click.UsageError(f"bad endpoint config: {exc}") from exc
    records = _load_records(test_path)
    items = []
    for rec in records:
        items.append(
            BatchItem(
                record_id=rec.record_id,
                image_path=str(_find_image(Path(images_dir), rec.record_id)),
                level=rec.level,
                gt_latex=rec.latex,
            )
        )
    results = run_batch(items, cfg, cache_path=cache_path)
    write_jsonl(out_path, (rec.to_json_dict() for rec in results))
    errored = sum(1 for r in results if r.error is not None)
    click.echo(f"{len(results)} predictions ({errored} errored)")


def _find_image(images_dir: Path, record_id: str) -> Path:
    for ext in (".png", ".jpg", ".jpeg", ".webp", ".svg"):
        candidate = images_dir / f"{record_id}{ext}"
        if candidate.exists():
            return candidate
    return images_dir / f"{record_id}.png"  # run_batch records the miss


@main.command("score")
@click.option("--gt", "gt_layouts_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pred-latex", "preds_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pred-layouts", "pred_layouts_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--tau", default=0.25, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def score_cmd(
    gt_layouts_path: str, preds_path: str, pred_layouts_path: str, tau: float, out_path: str
) -> None:
    """Score predictions with edit distance and CDM."""
    if tau <= 0:
        raise click.UsageError("--tau must be positive")
    try:
        gt_layouts = {l.record_id: l for l in read_layouts(gt_layouts_path)}
        pred_layouts = {l.record_id: l for l in read_layouts(pred_layouts_path)}
        evals = [
            EvalRecord.from_json_dict(obj) for _, obj in read_jsonl(preds_path)
        ]
    except _DATA_ERRORS as exc:
        _fail_data(str(exc))
    lines = [
        {
            "_meta": {
                "tau": tau,
                "normalization": "whitespace, script braces, singleton groups, aliases",
            }
        }
    ]
    for ev in evals:
        lines.append(_score_one(ev, gt_layouts, pred_layouts, tau))
    write_jsonl(out_path, lines)
    click.echo(f"scored {len(evals)} records")


def _normalized(layout):
    if layout.render_ok and layout.glyphs:
        return normalize_layout(layout)
    return layout


def _score_one(ev, gt_layouts, pred_layouts, tau: float) -> dict:
    base = {"record_id": ev.record_id, "level": ev.level.value}
    if ev.error is not None:
        return {**base, "error": ev.error, "ed": None, "cdm": None}
    gt_layout = gt_layouts.get(ev.record_id)
    if gt_layout is None:
        return {**base, "error": "missing ground-truth layout", "ed": None, "cdm": None}
    ed = edit_distance(ev.pred_latex, ev.gt_latex)
    pred_layout = pred_layouts.get(ev.record_id)
    if pred_layout is None:
        pred_layout = GlyphLayout(
            record_id=ev.record_id,
            glyphs=(),
            bounds=Bounds(0.0, 0.0, 0.0, 0.0),
            render_ok=False,
            error_message="missing prediction layout",
        )
    score = cdm(_normalized(pred_layout), _normalized(gt_layout), tau)
    return {
        **base,
        "error": None,
        "ed": ed.value,
        "cdm": {
            "precision": score.precision,
            "recall": score.recall,
            "f1": score.f1,
            "matched": score.matched,
            "pred_total": score.pred_total,
            "gt_total": score.gt_total,
        },
    }


@main.command("report")
@click.option("--scores", "scores_paths", required=True, multiple=True,
              help="Scores file, optionally as NAME=PATH; repeat to compare systems.")
@click.option("--format", "fmt", type=click.Choice(["markdown", "csv"]),
              default="markdown", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def report_cmd(scores_paths: tuple[str, ...], fmt: str, out_path: str) -> None:
    """Aggregate scores into per-level tables."""
    systems: dict[str, list[MetricsSummary]] = {}
    metas: list[dict] = []
    for scores_arg in scores_paths:
        name, _, path = scores_arg.rpartition("=")
        if not name:
            name, path = Path(path).stem, path
        if not Path(path).exists():
            raise click.UsageError(f"path not found: {path}")
        try:
            evals, scores, meta = _read_scores(path)
            systems[name] = aggregate(evals, scores)
        except _DATA_ERRORS as exc:
            _fail_data(f"bad scores file {path}: {exc}")
        if meta:
            metas.append(meta)
    table_format = TableFormat(fmt)
    ed_table = render_table(systems, table_format, metric="mean_ed")
    cdm_table = render_table(
        systems, table_format, metric="mean_cdm_f1", higher_is_better=True
    )
    meta_text = json.dumps(metas[0], sort_keys=True) if metas else "{}"
    if table_format is TableFormat.MARKDOWN:
        text = (
            f"<!-- scoring settings: {meta_text} -->\n\n"
            "## Edit distance (lower is better)\n\n"
            + ed_table
            + "\n## Character detection matching F1 (higher is better)\n\n"
            + cdm_table
        )
    else:
        text = (
            f"# scoring settings: {meta_text}\n"
            "# edit distance (lower is better)\n"
            + ed_table
            + "# character detection matching F1 (higher is better)\n"
            + cdm_table
        )
    Path(out_path).write_text(text, encoding="utf-8")
    click.echo(f"wrote report for {len(systems)} system(s)")


def _read_scores(path: str):
    evals: list[EvalRecord] = []
    scores: dict[str, tuple[EdScore, CdmScore]] = {}
    meta: dict = {}
    for _, obj in read_jsonl(path):
        if "_meta" in obj:
            meta = obj["_meta"]
            continue
        level = SampleLevel(obj["level"])
        error = obj.get("error")
        evals.append(
            EvalRecord(
                record_id=obj["record_id"],
                level=level,
                gt_latex="",
                pred_latex="",
                latency_ms=0,
                attempt=0,
                error=error,
            )
        )
        if error is None:
            c = obj["cdm"]
            scores[obj["record_id"]] = (
                EdScore(obj["ed"]),
                CdmScore(
                    precision=c["precision"],
                    recall=c["recall"],
                    f1=c["f1"],
                    matched=c["matched"],
                    pred_total=c["pred_total"],
                    gt_total=c["gt_total"],
                ),
            )
    return evals, scores, meta


if __name__ == "__main__":
    main()
