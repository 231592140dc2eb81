/**
 * Character identity for glyphs.
 *
 * MathJax renders letters through the Unicode math alphanumeric block
 * (italic x is U+1D465), so glyph identities are folded back to their base
 * character; styled variants of the same letter count as the same
 * character for matching purposes.  Stretched delimiters assembled from
 * bracket pieces are folded to the logical delimiter they draw.
 */

/** Letterlike symbols that fill reserved holes in the alphanumeric block. */
const LETTERLIKE: Record<number, string> = {
  0x210e: 'h', // planck
  0x210a: 'g', 0x210b: 'H', 0x210c: 'H', 0x210d: 'H',
  0x2110: 'I', 0x2111: 'I', 0x2112: 'L', 0x2113: 'l', 0x2115: 'N',
  0x2119: 'P', 0x211a: 'Q', 0x211b: 'R', 0x211c: 'R', 0x211d: 'R',
  0x2124: 'Z', 0x2128: 'Z', 0x212c: 'B', 0x212d: 'C',
  0x212f: 'e', 0x2130: 'E', 0x2131: 'F', 0x2133: 'M', 0x2134: 'o',
  0x2102: 'C', 0x131: 'i', 0x237: 'j',
};

const LATIN_RUNS = [
  0x1d400, 0x1d434, 0x1d468, 0x1d49c, 0x1d4d0, 0x1d504, 0x1d538,
  0x1d56c, 0x1d5a0, 0x1d5d4, 0x1d608, 0x1d63c, 0x1d670,
];

/** 58-slot Greek runs: 24 caps + theta symbol, nabla, 25 lowercase, then
 * partial and six variant forms (kept as their own identities). */
const GREEK_RUNS = [0x1d6a8, 0x1d6e2, 0x1d71c, 0x1d756, 0x1d790];
const GREEK_TEMPLATE =
  'ΑΒΓΔΕΖΗΘΙΚΛΜΝΞΟΠΡϴΣΤΥΦΧΨΩ∇' + 'αβγδεζηθικλμνξοπρςστυφχψω' + '∂ϵϑϰϕϱϖ';

const DIGIT_RUNS = [0x1d7ce, 0x1d7d8, 0x1d7e2, 0x1d7ec, 0x1d7f6];

export function foldChar(codepoint: number): string {
  const letterlike = LETTERLIKE[codepoint];
  if (letterlike !== undefined) {
    return letterlike;
  }
  for (const start of LATIN_RUNS) {
    const offset = codepoint - start;
    if (offset >= 0 && offset < 52) {
      return String.fromCodePoint((offset < 26 ? 0x41 : 0x61 - 26) + offset);
    }
  }
  for (const start of GREEK_RUNS) {
    const offset = codepoint - start;
    if (offset >= 0 && offset < GREEK_TEMPLATE.length) {
      return [...GREEK_TEMPLATE][offset];
    }
  }
  for (const start of DIGIT_RUNS) {
    const offset = codepoint - start;
    if (offset >= 0 && offset < 10) {
      return String.fromCodePoint(0x30 + offset);
    }
  }
  return String.fromCodePoint(codepoint);
}

/** Rule glyphs (fraction bars, \rule boxes) report this identity. */
export const RULE_CHAR = '—';

/** Invisible glyphs that never become boxes. */
export const INVISIBLE = new Set([0x20, 0xa0]);

/** Multi-piece stretchy assemblies: piece codepoint -> logical delimiter. */
const PIECE_LOGICAL: Record<number, string> = {
  0x239b: '(', 0x239c: '(', 0x239d: '(',
  0x239e: ')', 0x239f: ')', 0x23a0: ')',
  0x23a1: '[', 0x23a2: '[', 0x23a3: '[',
  0x23a4: ']', 0x23a5: ']', 0x23a6: ']',
  0x23a7: '{', 0x23a8: '{', 0x23a9: '{',
  0x23ab: '}', 0x23ac: '}', 0x23ad: '}',
  0x2320: '∫', 0x2321: '∫', 0x23ae: '∫',
  0x23af: '—', 0x23d0: '|', 0x23b7: '√',
};

/** Pieces that identify a delimiter on their own (extenders are shared). */
const IDENTIFYING_PIECES = new Set([
  0x239b, 0x239d, 0x239e, 0x23a0, 0x23a1, 0x23a3, 0x23a4, 0x23a6,
  0x23a7, 0x23a9, 0x23ab, 0x23ad, 0x2320, 0x2321, 0x23b7,
]);

export function isAssemblyPiece(codepoint: number): boolean {
  return codepoint in PIECE_LOGICAL || codepoint === 0x23aa;
}

export function resolveAssembly(codepoints: number[]): string {
  for (const cp of codepoints) {
    if (IDENTIFYING_PIECES.has(cp)) {
      return PIECE_LOGICAL[cp];
    }
  }
  for (const cp of codepoints) {
    if (cp in PIECE_LOGICAL) {
      return PIECE_LOGICAL[cp];
    }
  }
  // only shared curly-brace extenders present
  return '{';
}
