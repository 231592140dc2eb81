/**
 * Turn mixed text+formula markup (paragraph and page records) into a
 * single TeX expression MathJax can render in one pass: text runs become
 * \text{...} with TeX specials escaped, math islands keep their content,
 * and paragraph breaks / display islands become gathered rows.
 */

const ISLAND_RE = new RegExp(
  [
    '\\\\begin\\{(equation|align|alignat|flalign|gather|multline|eqnarray|displaymath|math)\\*?\\}[\\s\\S]*?\\\\end\\{\\1\\*?\\}',
    '\\\\\\[[\\s\\S]*?\\\\\\]',
    '\\$\\$[\\s\\S]+?\\$\\$',
    '\\\\\\([\\s\\S]*?\\\\\\)',
    '(?<!\\$)\\$(?:\\\\.|[^$\\\\\\n])+?\\$(?!\\$)',
  ].join('|'),
  'g'
);

const TEXT_ESCAPES: Record<string, string> = {
  '\\': '\\textbackslash ',
  '{': '\\{',
  '}': '\\}',
  '$': '\\$',
  '%': '\\%',
  '&': '\\&',
  '#': '\\#',
  '_': '\\_',
  '^': '\\textasciicircum ',
  '~': '\\textasciitilde ',
};

function escapeText(text: string): string {
  return text.replace(/[\\{}$%&#_^~]/g, (ch) => TEXT_ESCAPES[ch]);
}

function stripDelimiters(island: string): { content: string; display: boolean } {
  if (island.startsWith('$$')) {
    return { content: island.slice(2, -2), display: true };
  }
  if (island.startsWith('\\[')) {
    return { content: island.slice(2, -2), display: true };
  }
  if (island.startsWith('\\(')) {
    return { content: island.slice(2, -2), display: false };
  }
  if (island.startsWith('$')) {
    return { content: island.slice(1, -1), display: false };
  }
  return { content: island, display: true }; // environment, keep the wrapper
}

/** True when the source contains math delimiters (is mixed content). */
export function hasMathIslands(src: string): boolean {
  ISLAND_RE.lastIndex = 0;
  return ISLAND_RE.test(src);
}

export function mixedToTex(src: string): string {
  const rows: string[] = [];
  let current: string[] = [];
  const flushRow = () => {
    const joined = current.join('').trim();
    if (joined) {
      rows.push(joined);
    }
    current = [];
  };
  const pushText = (text: string) => {
    // paragraph breaks start a new row
    const parts = text.split(/\n[ \t]*\n+/);
    parts.forEach((part, index) => {
      if (index > 0) {
        flushRow();
      }
      const collapsed = part.replace(/\s+/g, ' ');
      if (collapsed.trim()) {
        current.push(`\\text{${escapeText(collapsed)}}`);
      }
    });
  };
  ISLAND_RE.lastIndex = 0;
  let last = 0;
  for (const match of src.matchAll(ISLAND_RE)) {
    pushText(src.slice(last, match.index));
    const { content, display } = stripDelimiters(match[0]);
    if (display) {
      flushRow();
      current.push(content.trim());
      flushRow();
    } else {
      current.push(`{${content.trim()}}`);
    }
    last = (match.index as number) + match[0].length;
  }
  pushText(src.slice(last));
  flushRow();
  if (rows.length === 0) {
    return '';
  }
  if (rows.length === 1) {
    return rows[0];
  }
  return `\\begin{gathered}${rows.join(' \\\\ ')}\\end{gathered}`;
}

/** The TeX string to render for a manifest entry. */
export function entryToTex(latex: string, displayMode: boolean): string {
  if (!displayMode && hasMathIslands(latex)) {
    return mixedToTex(latex);
  }
  return latex;
}
