// Word-level trace tokenization and detokenization offsets.
//
// Each token is an atom (identifier, number, string, multi-char operator
// or single punctuation char) carrying its leading blanks; "\n" is
// always its own token. Tokens partition the text exactly, so per-token
// character spans are exact and concatenate back to the text.

const ATOM = new RegExp(
  String.raw`[ \t]*(?:[A-Za-z_]\w*|\d+\.\d+(?:[eE][+-]?\d+)?|\d+|"[^"\n]*"|'[^'\n]*'` +
    String.raw`|==|!=|<=|>=|->|\+=|-=|\*=|/=|\*\*|&&|\|\||<<|>>|::|[^\w\s])`,
  "y",
);

export function tokenizeTarget(text: string): string[] {
  const tokens: string[] = [];
  const chars = [...text];
  let i = 0;
  // operate on code-point indices so spans agree with code-point clients
  const asString = chars.join("");
  let cursor = 0; // UTF-16 index aligned with code-point walking below
  while (i < chars.length) {
    if (chars[i] === "\n") {
      tokens.push("\n");
      i += 1;
      cursor += 1;
      continue;
    }
    ATOM.lastIndex = cursor;
    const match = ATOM.exec(asString);
    if (match && match.index === cursor && match[0].length > 0) {
      tokens.push(match[0]);
      cursor += match[0].length;
      i += [...match[0]].length;
    } else {
      tokens.push(chars[i]);
      cursor += chars[i].length;
      i += 1;
    }
  }
  return tokens;
}

/** Code-point length, so offsets agree with code-point based clients. */
export function cpLength(text: string): number {
  return [...text].length;
}

export interface Detok {
  text: string;
  spans: [number, number][];
}

export function detokenize(tokens: number[], vocab: string[]): Detok {
  const parts: string[] = [];
  const spans: [number, number][] = [];
  let cursor = 0;
  for (const token of tokens) {
    if (!Number.isInteger(token) || token < 0 || token >= vocab.length) {
      throw new Error(`token id ${token} not in vocabulary`);
    }
    const text = vocab[token];
    parts.push(text);
    const width = cpLength(text);
    spans.push([cursor, cursor + width]);
    cursor += width;
  }
  return { text: parts.join(""), spans };
}

/** Sort by code points, matching a plain byte/code-point sort. */
export function codePointSort(values: string[]): string[] {
  return [...values].sort((a, b) => {
    const pa = [...a];
    const pb = [...b];
    const n = Math.min(pa.length, pb.length);
    for (let i = 0; i < n; i++) {
      const ca = pa[i].codePointAt(0)!;
      const cb = pb[i].codePointAt(0)!;
      if (ca !== cb) return ca - cb;
    }
    return pa.length - pb.length;
  });
}
