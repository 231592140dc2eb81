/**
 * MathJax TeX -> SVG rendering behind a small synchronous facade.
 *
 * The engine runs fully server-side on the Lite DOM with font caching
 * disabled, so every character appears as an inline <path data-c="...">
 * and two runs over the same input produce identical bytes.  Undefined
 * control sequences become per-entry failures (the `noundefined` package
 * is excluded on purpose), never crashes.
 */

import { liteAdaptor, LiteAdaptor } from 'mathjax-full/js/adaptors/liteAdaptor.js';
import { RegisterHTMLHandler } from 'mathjax-full/js/handlers/html.js';
import { TeX } from 'mathjax-full/js/input/tex.js';
import { AllPackages } from 'mathjax-full/js/input/tex/AllPackages.js';
import { mathjax } from 'mathjax-full/js/mathjax.js';
import { SVG } from 'mathjax-full/js/output/svg.js';

import { collectGlyphs } from './glyphs';
import { entryToTex } from './latex';
import { failedLayout, GlyphLayout, ManifestEntry } from './types';

export interface RenderResult {
  layout: GlyphLayout;
  svg: string | null;
}

export class Engine {
  private adaptor: LiteAdaptor;
  private document: ReturnType<typeof mathjax.document>;

  constructor(macros: Record<string, string> = {}) {
    this.adaptor = liteAdaptor();
    RegisterHTMLHandler(this.adaptor);
    const packages = AllPackages.filter(
      (name) => name !== 'noundefined' && name !== 'autoload' && name !== 'require'
    );
    const tex = new TeX({ packages, macros });
    const svg = new SVG({ fontCache: 'none' });
    this.document = mathjax.document('', { InputJax: tex, OutputJax: svg });
  }

  render(entry: ManifestEntry): RenderResult {
    let container: unknown;
    try {
      const tex = entryToTex(entry.latex, entry.display_mode);
      container = this.document.convert(tex, { display: entry.display_mode });
    } catch (err) {
      return {
        layout: failedLayout(entry.record_id, errorText(err)),
        svg: null,
      };
    }
    const adaptor = this.adaptor;
    const svgText = adaptor.outerHTML(container as never);
    const texError = findTexError(svgText);
    if (texError !== null) {
      return { layout: failedLayout(entry.record_id, texError), svg: null };
    }
    const svgRoot = findSvgRoot(adaptor, container);
    if (svgRoot === null) {
      return {
        layout: failedLayout(entry.record_id, 'no SVG output produced'),
        svg: svgText,
      };
    }
    const glyphs = collectGlyphs(adaptor, svgRoot).map((g) => ({
      ch: g.ch,
      x: g.x * entry.scale,
      y: g.y * entry.scale,
      w: g.w * entry.scale,
      h: g.h * entry.scale,
    }));
    let bounds = { min_x: 0, min_y: 0, max_x: 0, max_y: 0 };
    if (glyphs.length > 0) {
      bounds = {
        min_x: Math.min(...glyphs.map((g) => g.x - g.w / 2)),
        min_y: Math.min(...glyphs.map((g) => g.y - g.h / 2)),
        max_x: Math.max(...glyphs.map((g) => g.x + g.w / 2)),
        max_y: Math.max(...glyphs.map((g) => g.y + g.h / 2)),
      };
    }
    return {
      layout: {
        record_id: entry.record_id,
        render_ok: true,
        error_message: '',
        bounds,
        glyphs,
      },
      svg: svgText,
    };
  }
}

function errorText(err: unknown): string {
  if (err instanceof Error) {
    return err.message;
  }
  return String(err);
}

const TEX_ERROR_RE = /data-mjx-error="([^"]*)"/;

function findTexError(svgText: string): string | null {
  const match = TEX_ERROR_RE.exec(svgText);
  if (!match) {
    return null;
  }
  return decodeEntities(match[1]) || 'TeX error';
}

function decodeEntities(text: string): string {
  return text
    .replace(/&lt;/g, '<')
    .replace(/&gt;/g, '>')
    .replace(/&quot;/g, '"')
    .replace(/&#(\d+);/g, (_, n) => String.fromCodePoint(Number(n)))
    .replace(/&amp;/g, '&');
}

function findSvgRoot(adaptor: LiteAdaptor, container: unknown): unknown {
  for (const child of adaptor.childNodes(container as never)) {
    if (adaptor.kind(child as never) === 'svg') {
      return child;
    }
  }
  return null;
}
