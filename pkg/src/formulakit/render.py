"""File contract between the core pipeline and the MathJax render worker.

The bridge writes render manifests (JSONL of formulas to render), ingests
and validates the worker's glyph layouts, and normalizes layouts into
unit-box coordinates so CDM scoring is scale and translation invariant.
Layout coordinates follow the worker convention: y increases downward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .extract import FormulaRecord, SampleLevel

_UNIT_TOL = 1e-9


@dataclass(frozen=True)
class ManifestEntry:
    record_id: str
    latex: str
    display_mode: bool
    scale: float = 1.0


@dataclass(frozen=True)
class GlyphBox:
    """One rendered character: identity, center, and positive extents."""

    ch: str
    x: float
    y: float
    w: float
    h: float


@dataclass(frozen=True)
class Bounds:
    min_x: float
    min_y: float
    max_x: float
    max_y: float


@dataclass(frozen=True)
class GlyphLayout:
    record_id: str
    glyphs: tuple[GlyphBox, ...]
    bounds: Bounds
    render_ok: bool
    error_message: str = ""


class SchemaError(Exception):
    """A malformed layout line; carries the 1-based line number and the
    offending field."""

    def __init__(self, line_no: int, field: str, message: str):
        super().__init__(f"line {line_no}, field {field!r}: {message}")
        self.line_no = line_no
        self.field = field


class DegenerateBounds(Exception):
    pass


def write_manifest(
    records: Sequence[FormulaRecord], path: str | Path, *, scale: float = 1.0
) -> int:
    """Write one manifest entry per record; returns the entry count.

    Line-level records render in display mode; paragraph and page records
    render with inline math honored inside their markup.
    """
    if not records:
        raise ValueError("records must be nonempty")
    seen: set[str] = set()
    lines = []
    for rec in records:
        if rec.record_id in seen:
            raise ValueError(f"duplicate record_id {rec.record_id!r}")
        seen.add(rec.record_id)
        if not rec.latex:
            raise ValueError(f"record {rec.record_id!r} has empty latex")
        lines.append(
            json.dumps(
                {
                    "record_id": rec.record_id,
                    "latex": rec.latex,
                    "display_mode": rec.level is SampleLevel.LINE,
                    "scale": scale,
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(lines)


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    entries = []
    for line_no, obj in _iter_jsonl(path):
        try:
            entries.append(
                ManifestEntry(
                    record_id=obj["record_id"],
                    latex=obj["latex"],
                    display_mode=bool(obj["display_mode"]),
                    scale=float(obj.get("scale", 1.0)),
                )
            )
        except KeyError as exc:
            raise SchemaError(line_no, exc.args[0], "missing field") from exc
    return entries


def read_layouts(path: str | Path) -> list[GlyphLayout]:
    """Parse and validate worker output.  Layouts with render_ok false are
    retained (they score zero against any non-empty ground truth)."""
    layouts = []
    for line_no, obj in _iter_jsonl(path):
        layouts.append(_parse_layout(line_no, obj))
    return layouts


def _iter_jsonl(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(line_no, "<line>", f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise SchemaError(line_no, "<line>", "expected a JSON object")
            yield line_no, obj


def _field(line_no: int, obj: dict, name: str, types) -> object:
    if name not in obj:
        raise SchemaError(line_no, name, "missing field")
    value = obj[name]
    if not isinstance(value, types) or isinstance(value, bool) and types is not bool:
        raise SchemaError(line_no, name, f"expected {types}, got {type(value).__name__}")
    return value


def _parse_layout(line_no: int, obj: dict) -> GlyphLayout:
    record_id = _field(line_no, obj, "record_id", str)
    render_ok = _field(line_no, obj, "render_ok", bool)
    error_message = _field(line_no, obj, "error_message", str)
    bounds_obj = _field(line_no, obj, "bounds", dict)
    glyphs_obj = _field(line_no, obj, "glyphs", list)
    try:
        bounds = Bounds(
            min_x=float(bounds_obj["min_x"]),
            min_y=float(bounds_obj["min_y"]),
            max_x=float(bounds_obj["max_x"]),
            max_y=float(bounds_obj["max_y"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(line_no, "bounds", f"malformed bounds: {exc}") from exc
    glyphs = []
    for k, g in enumerate(glyphs_obj):
        if not isinstance(g, dict):
            raise SchemaError(line_no, f"glyphs[{k}]", "expected an object")
        try:
            glyph = GlyphBox(
                ch=g["ch"],
                x=float(g["x"]),
                y=float(g["y"]),
                w=float(g["w"]),
                h=float(g["h"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(line_no, f"glyphs[{k}]", f"malformed glyph: {exc}") from exc
        if not isinstance(glyph.ch, str) or len(glyph.ch) != 1:
            raise SchemaError(line_no, f"glyphs[{k}].ch", "must be a single character")
        if glyph.w <= 0 or glyph.h <= 0:
            raise SchemaError(line_no, f"glyphs[{k}]", "extents must be positive")
        glyphs.append(glyph)
    if render_ok:
        for k, glyph in enumerate(glyphs):
            if not (
                bounds.min_x < glyph.x < bounds.max_x
                and bounds.min_y < glyph.y < bounds.max_y
            ):
                raise SchemaError(
                    line_no, f"glyphs[{k}]", "center outside layout bounds"
                )
    elif not error_message:
        raise SchemaError(line_no, "error_message", "required when render_ok is false")
    return GlyphLayout(
        record_id=record_id,
        glyphs=tuple(glyphs),
        bounds=bounds,
        render_ok=render_ok,
        error_message=error_message,
    )


def layout_to_json(layout: GlyphLayout) -> str:
    return json.dumps(
        {
            "record_id": layout.record_id,
            "render_ok": layout.render_ok,
            "error_message": layout.error_message,
            "bounds": {
                "min_x": layout.bounds.min_x,
                "min_y": layout.bounds.min_y,
                "max_x": layout.bounds.max_x,
                "max_y": layout.bounds.max_y,
            },
            "glyphs": [
                {"ch": g.ch, "x": g.x, "y": g.y, "w": g.w, "h": g.h}
                for g in layout.glyphs
            ],
        },
        ensure_ascii=False,
    )


def normalize_layout(layout: GlyphLayout) -> GlyphLayout:
    """Map glyph centers into unit-box coordinates.

    The hull of glyph centers is translated to the origin and uniformly
    scaled so its longer side spans [0, 1]; aspect ratio is preserved.  A
    single-point hull (one glyph, or coincident centers) maps to the center
    of the unit box, with extents scaled by the largest glyph extent so the
    map stays covariant under uniform scaling.
    """
    if not layout.render_ok:
        raise ValueError("cannot normalize a failed render")
    if not layout.glyphs:
        raise DegenerateBounds(f"layout {layout.record_id!r} has no glyphs")
    xs = [g.x for g in layout.glyphs]
    ys = [g.y for g in layout.glyphs]
    min_x, max_x = min(xs), max(xs)
    min_y, max_y = min(ys), max(ys)
    width = max_x - min_x
    height = max_y - min_y
    if width == 0.0 and height == 0.0:
        span = max(max(g.w for g in layout.glyphs), max(g.h for g in layout.glyphs))
        glyphs = tuple(
            replace(g, x=0.5, y=0.5, w=g.w / span, h=g.h / span)
            for g in layout.glyphs
        )
        return replace(layout, glyphs=glyphs, bounds=Bounds(0.0, 0.0, 1.0, 1.0))
    span = max(width, height)
    glyphs = tuple(
        replace(
            g,
            x=(g.x - min_x) / span,
            y=(g.y - min_y) / span,
            w=g.w / span,
            h=g.h / span,
        )
        for g in layout.glyphs
    )
    return replace(
        layout,
        glyphs=glyphs,
        bounds=Bounds(0.0, 0.0, width / span, height / span),
    )


def is_unit_normalized(layout: GlyphLayout, tol: float = _UNIT_TOL) -> bool:
    """True when bounds declare unit-box coordinates: mins at the origin
    and the longer side spanning exactly 1."""
    b = layout.bounds
    if abs(b.min_x) > tol or abs(b.min_y) > tol:
        return False
    if abs(max(b.max_x, b.max_y) - 1.0) > tol:
        return False
    for g in layout.glyphs:
        if not (-tol <= g.x <= 1.0 + tol and -tol <= g.y <= 1.0 + tol):
            return False
    return True


def reconcile_layouts(
    manifest_ids: Iterable[str], layouts: Sequence[GlyphLayout]
) -> tuple[list[str], list[str], list[str]]:
    """Compare manifest ids against worker output.

    Returns (missing, duplicated, extra) record id lists; callers must
    report missing ids rather than silently dropping records.
    """
    wanted = list(manifest_ids)
    seen: dict[str, int] = {}
    for layout in layouts:
        seen[layout.record_id] = seen.get(layout.record_id, 0) + 1
    missing = [rid for rid in wanted if rid not in seen]
    duplicated = sorted(rid for rid, n in seen.items() if n > 1)
    extra = sorted(set(seen) - set(wanted))
    return missing, duplicated, extra
