/**
 * Walk a MathJax SVG tree and collect one box per rendered character.
 *
 * Characters are <path data-c="..."> nodes (font caching is disabled);
 * rules are <rect> nodes and report the rule identity.  Nested <svg>
 * viewports (stretchy extenders) clip their content.  Multi-piece
 * delimiter assemblies inside one <mo> group are merged into a single box
 * carrying the logical delimiter character.
 */

import {
  INVISIBLE,
  RULE_CHAR,
  foldChar,
  isAssemblyPiece,
  resolveAssembly,
} from './chars';
import {
  IDENTITY,
  Matrix,
  Rect,
  emptyRect,
  intersectRect,
  isEmpty,
  multiply,
  parseTransform,
  pathBounds,
  transformRect,
} from './svgpath';
import { GlyphBox } from './types';

interface RawGlyph {
  codepoint: number | null; // null for rules
  rect: Rect;
  moGroup: number;
}

interface Adaptor {
  kind(node: unknown): string;
  childNodes(node: unknown): unknown[];
  getAttribute(node: unknown, name: string): string | null;
}

/** Extents below this (degenerate hairlines) are clamped; render units are
 * roughly thousandths of an em. */
const MIN_EXTENT = 1.0;

export function collectGlyphs(adaptor: Adaptor, svgRoot: unknown): GlyphBox[] {
  const raw: RawGlyph[] = [];
  const state = { nextGroup: 1 };

  const walk = (node: unknown, matrix: Matrix, clip: Rect | null, moGroup: number): void => {
    const kind = adaptor.kind(node);
    if (kind === '#text' || kind === '#comment' || kind === 'defs' || kind === 'title') {
      return;
    }
    let m = matrix;
    const transform = adaptor.getAttribute(node, 'transform');
    if (transform) {
      m = multiply(m, parseTransform(transform));
    }
    let group = moGroup;
    if (kind === 'g' && adaptor.getAttribute(node, 'data-mml-node') === 'mo') {
      group = state.nextGroup;
      state.nextGroup += 1;
    }
    if (kind === 'svg') {
      // nested viewport: viewBox space mapped onto (x, y, width, height)
      const x = Number(adaptor.getAttribute(node, 'x') ?? 0);
      const y = Number(adaptor.getAttribute(node, 'y') ?? 0);
      const w = Number(adaptor.getAttribute(node, 'width') ?? 0);
      const h = Number(adaptor.getAttribute(node, 'height') ?? 0);
      const viewBox = (adaptor.getAttribute(node, 'viewBox') ?? '').trim();
      const [vbx, vby, vbw, vbh] = viewBox
        ? viewBox.split(/[\s,]+/).map(Number)
        : [0, 0, w, h];
      const sx = vbw > 0 ? w / vbw : 1;
      const sy = vbh > 0 ? h / vbh : 1;
      const inner = multiply(m, [sx, 0, 0, sy, x - vbx * sx, y - vby * sy]);
      const viewport = transformRect(m, { minX: x, minY: y, maxX: x + w, maxY: y + h });
      const innerClip = clip ? intersectRect(clip, viewport) : viewport;
      for (const child of adaptor.childNodes(node)) {
        walk(child, inner, innerClip, group);
      }
      return;
    }
    if (kind === 'path') {
      const dataC = adaptor.getAttribute(node, 'data-c');
      const local = pathBounds(adaptor.getAttribute(node, 'd'));
      if (local === null) {
        return;
      }
      let rect = transformRect(m, local);
      if (clip) {
        rect = intersectRect(rect, clip);
        if (isEmpty(rect)) {
          return;
        }
      }
      const codepoint = dataC ? parseInt(dataC, 16) : null;
      if (codepoint !== null && INVISIBLE.has(codepoint)) {
        return;
      }
      raw.push({ codepoint, rect, moGroup: group });
      return;
    }
    if (kind === 'rect') {
      const x = Number(adaptor.getAttribute(node, 'x') ?? 0);
      const y = Number(adaptor.getAttribute(node, 'y') ?? 0);
      const w = Number(adaptor.getAttribute(node, 'width') ?? 0);
      const h = Number(adaptor.getAttribute(node, 'height') ?? 0);
      if (w <= 0 || h <= 0) {
        return;
      }
      let rect = transformRect(m, { minX: x, minY: y, maxX: x + w, maxY: y + h });
      if (clip) {
        rect = intersectRect(rect, clip);
        if (isEmpty(rect)) {
          return;
        }
      }
      raw.push({ codepoint: null, rect, moGroup: group });
      return;
    }
    for (const child of adaptor.childNodes(node)) {
      walk(child, m, clip, group);
    }
  };

  for (const child of adaptor.childNodes(svgRoot)) {
    walk(child, IDENTITY, null, 0);
  }
  return mergeAssemblies(raw);
}

function mergeAssemblies(raw: RawGlyph[]): GlyphBox[] {
  const byGroup = new Map<number, RawGlyph[]>();
  for (const glyph of raw) {
    if (glyph.moGroup > 0) {
      const list = byGroup.get(glyph.moGroup) ?? [];
      list.push(glyph);
      byGroup.set(glyph.moGroup, list);
    }
  }
  const assemblies = new Map<number, GlyphBox>();
  const absorbed = new Set<RawGlyph>();
  for (const [group, members] of byGroup) {
    const allPieces = members.every(
      (g) => g.codepoint !== null && isAssemblyPiece(g.codepoint)
    );
    if (members.length > 1 && allPieces) {
      let rect = members[0].rect;
      for (const g of members.slice(1)) {
        rect = {
          minX: Math.min(rect.minX, g.rect.minX),
          minY: Math.min(rect.minY, g.rect.minY),
          maxX: Math.max(rect.maxX, g.rect.maxX),
          maxY: Math.max(rect.maxY, g.rect.maxY),
        };
      }
      members.forEach((g) => absorbed.add(g));
      assemblies.set(
        group,
        toBox(resolveAssembly(members.map((g) => g.codepoint as number)), rect)
      );
    }
  }
  const out: GlyphBox[] = [];
  const emitted = new Set<number>();
  for (const glyph of raw) {
    if (absorbed.has(glyph)) {
      if (!emitted.has(glyph.moGroup)) {
        emitted.add(glyph.moGroup);
        out.push(assemblies.get(glyph.moGroup) as GlyphBox);
      }
      continue;
    }
    const ch = glyph.codepoint === null ? RULE_CHAR : foldChar(glyph.codepoint);
    out.push(toBox(ch, glyph.rect));
  }
  return out;
}

function toBox(ch: string, rect: Rect): GlyphBox {
  const w = Math.max(rect.maxX - rect.minX, MIN_EXTENT);
  const h = Math.max(rect.maxY - rect.minY, MIN_EXTENT);
  return {
    ch,
    x: (rect.minX + rect.maxX) / 2,
    y: (rect.minY + rect.maxY) / 2,
    w,
    h,
  };
}
