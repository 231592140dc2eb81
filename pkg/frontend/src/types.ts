import * as fs from 'node:fs';

export interface ManifestEntry {
  record_id: string;
  latex: string;
  display_mode: boolean;
  scale: number;
}

export interface GlyphBox {
  ch: string;
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface LayoutBounds {
  min_x: number;
  min_y: number;
  max_x: number;
  max_y: number;
}

/** One line of worker output; y grows downward. */
export interface GlyphLayout {
  record_id: string;
  render_ok: boolean;
  error_message: string;
  bounds: LayoutBounds;
  glyphs: GlyphBox[];
}

export interface WorkerConfig {
  inputPath: string;
  outputPath: string;
  svgDir?: string;
  timeoutMs: number;
  macros: Record<string, string>;
}

export function readManifest(path: string): ManifestEntry[] {
  const text = fs.readFileSync(path, 'utf-8');
  const entries: ManifestEntry[] = [];
  const seen = new Set<string>();
  text.split('\n').forEach((line, index) => {
    const trimmed = line.trim();
    if (!trimmed) {
      return;
    }
    let obj: Record<string, unknown>;
    try {
      obj = JSON.parse(trimmed);
    } catch (err) {
      throw new Error(`manifest line ${index + 1}: invalid JSON (${err})`);
    }
    if (typeof obj.record_id !== 'string' || !obj.record_id) {
      throw new Error(`manifest line ${index + 1}: missing record_id`);
    }
    if (seen.has(obj.record_id)) {
      throw new Error(`manifest line ${index + 1}: duplicate record_id ${obj.record_id}`);
    }
    seen.add(obj.record_id);
    if (typeof obj.latex !== 'string' || !obj.latex) {
      throw new Error(`manifest line ${index + 1}: missing latex`);
    }
    entries.push({
      record_id: obj.record_id,
      latex: obj.latex,
      display_mode: Boolean(obj.display_mode),
      scale: typeof obj.scale === 'number' && obj.scale > 0 ? obj.scale : 1.0,
    });
  });
  return entries;
}

const round4 = (v: number): number => Math.round(v * 10000) / 10000;

/** Serialize with fixed key order and rounded coordinates so identical
 * runs produce byte-identical files. */
export function layoutToJson(layout: GlyphLayout): string {
  return JSON.stringify({
    record_id: layout.record_id,
    render_ok: layout.render_ok,
    error_message: layout.error_message,
    bounds: {
      min_x: round4(layout.bounds.min_x),
      min_y: round4(layout.bounds.min_y),
      max_x: round4(layout.bounds.max_x),
      max_y: round4(layout.bounds.max_y),
    },
    glyphs: layout.glyphs.map((g) => ({
      ch: g.ch,
      x: round4(g.x),
      y: round4(g.y),
      w: round4(g.w),
      h: round4(g.h),
    })),
  });
}

export function failedLayout(recordId: string, message: string): GlyphLayout {
  return {
    record_id: recordId,
    render_ok: false,
    error_message: message || 'render failed',
    bounds: { min_x: 0, min_y: 0, max_x: 0, max_y: 0 },
    glyphs: [],
  };
}
