/**
 * Geometry helpers: 2D affine transforms as [a, b, c, d, e, f]
 * (x' = a·x + c·y + e, y' = b·x + d·y + f) and bounding boxes of SVG path
 * data.  Curve control points are included in the box, which bounds the
 * true curve from outside (Bezier curves lie in their control hull).
 */

export type Matrix = [number, number, number, number, number, number];

export const IDENTITY: Matrix = [1, 0, 0, 1, 0, 0];

export function multiply(m: Matrix, n: Matrix): Matrix {
  return [
    m[0] * n[0] + m[2] * n[1],
    m[1] * n[0] + m[3] * n[1],
    m[0] * n[2] + m[2] * n[3],
    m[1] * n[2] + m[3] * n[3],
    m[0] * n[4] + m[2] * n[5] + m[4],
    m[1] * n[4] + m[3] * n[5] + m[5],
  ];
}

export function apply(m: Matrix, x: number, y: number): [number, number] {
  return [m[0] * x + m[2] * y + m[4], m[1] * x + m[3] * y + m[5]];
}

const TRANSFORM_RE = /(translate|scale|matrix)\s*\(([^)]*)\)/g;

/** Parse an SVG transform attribute (translate/scale/matrix chains). */
export function parseTransform(value: string | null): Matrix {
  let m: Matrix = IDENTITY;
  if (!value) {
    return m;
  }
  for (const match of value.matchAll(TRANSFORM_RE)) {
    const name = match[1];
    const args = match[2]
      .split(/[\s,]+/)
      .filter((s) => s.length > 0)
      .map(Number);
    let next: Matrix;
    if (name === 'translate') {
      next = [1, 0, 0, 1, args[0] ?? 0, args[1] ?? 0];
    } else if (name === 'scale') {
      const sx = args[0] ?? 1;
      const sy = args.length > 1 ? args[1] : sx;
      next = [sx, 0, 0, sy, 0, 0];
    } else {
      next = [args[0], args[1], args[2], args[3], args[4], args[5]];
    }
    m = multiply(m, next);
  }
  return m;
}

export interface Rect {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function emptyRect(): Rect {
  return { minX: Infinity, minY: Infinity, maxX: -Infinity, maxY: -Infinity };
}

export function isEmpty(rect: Rect): boolean {
  return rect.minX > rect.maxX || rect.minY > rect.maxY;
}

export function addPoint(rect: Rect, x: number, y: number): void {
  if (x < rect.minX) rect.minX = x;
  if (y < rect.minY) rect.minY = y;
  if (x > rect.maxX) rect.maxX = x;
  if (y > rect.maxY) rect.maxY = y;
}

export function unionRects(a: Rect, b: Rect): Rect {
  return {
    minX: Math.min(a.minX, b.minX),
    minY: Math.min(a.minY, b.minY),
    maxX: Math.max(a.maxX, b.maxX),
    maxY: Math.max(a.maxY, b.maxY),
  };
}

export function intersectRect(a: Rect, b: Rect): Rect {
  return {
    minX: Math.max(a.minX, b.minX),
    minY: Math.max(a.minY, b.minY),
    maxX: Math.min(a.maxX, b.maxX),
    maxY: Math.min(a.maxY, b.maxY),
  };
}

/** Corners of ``rect`` mapped through ``m``, re-boxed. */
export function transformRect(m: Matrix, rect: Rect): Rect {
  const out = emptyRect();
  for (const [x, y] of [
    [rect.minX, rect.minY],
    [rect.minX, rect.maxY],
    [rect.maxX, rect.minY],
    [rect.maxX, rect.maxY],
  ]) {
    const [px, py] = apply(m, x, y);
    addPoint(out, px, py);
  }
  return out;
}

const PATH_TOKEN_RE = /([MmLlHhVvCcSsQqTtAaZz])|(-?\d*\.?\d+(?:[eE][-+]?\d+)?)/g;

const ARG_COUNT: Record<string, number> = {
  M: 2, L: 2, H: 1, V: 1, C: 6, S: 4, Q: 4, T: 2, A: 7, Z: 0,
};

/**
 * Bounding box of SVG path data, or null when the path is empty.  All
 * coordinate arguments (control points included) contribute points; arcs
 * contribute their endpoints.
 */
export function pathBounds(d: string | null): Rect | null {
  if (!d) {
    return null;
  }
  const tokens: (string | number)[] = [];
  for (const match of d.matchAll(PATH_TOKEN_RE)) {
    tokens.push(match[1] !== undefined ? match[1] : Number(match[2]));
  }
  const rect = emptyRect();
  let cx = 0;
  let cy = 0;
  let startX = 0;
  let startY = 0;
  let i = 0;
  let command = '';
  while (i < tokens.length) {
    if (typeof tokens[i] === 'string') {
      command = tokens[i] as string;
      i += 1;
      if (command === 'Z' || command === 'z') {
        cx = startX;
        cy = startY;
        continue;
      }
    } else if (command === '') {
      break; // numbers before any command: malformed, stop
    } else if (command === 'M') {
      command = 'L'; // implicit lineto after moveto
    } else if (command === 'm') {
      command = 'l';
    }
    const upper = command.toUpperCase();
    const relative = command !== upper;
    const count = ARG_COUNT[upper];
    const args = tokens.slice(i, i + count) as number[];
    if (args.length < count || args.some((a) => typeof a !== 'number')) {
      break;
    }
    i += count;
    if (upper === 'H') {
      cx = relative ? cx + args[0] : args[0];
    } else if (upper === 'V') {
      cy = relative ? cy + args[0] : args[0];
    } else if (upper === 'A') {
      cx = relative ? cx + args[5] : args[5];
      cy = relative ? cy + args[6] : args[6];
    } else {
      const baseX = relative ? cx : 0;
      const baseY = relative ? cy : 0;
      for (let k = 0; k + 1 < args.length; k += 2) {
        addPoint(rect, baseX + args[k], baseY + args[k + 1]);
      }
      cx = baseX + args[count - 2];
      cy = baseY + args[count - 1];
    }
    addPoint(rect, cx, cy);
    if (upper === 'M') {
      startX = cx;
      startY = cy;
    }
  }
  return isEmpty(rect) ? null : rect;
}
