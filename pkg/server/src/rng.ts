// Deterministic key-addressed randomness: every draw is a pure function
// of its string key, so identical requests always produce identical
// replies regardless of call order.

function fnv1a(key: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < key.length; i++) {
    hash ^= key.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

function mulberry32(state: number): () => number {
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Uniform draw in [0, 1) keyed by the joined parts. */
export function unit(...parts: (string | number)[]): number {
  return mulberry32(fnv1a(parts.join(":")))();
}

/** Uniform integer in [lo, hi) keyed by the joined parts. */
export function unitInt(lo: number, hi: number, ...parts: (string | number)[]): number {
  return lo + Math.floor(unit(...parts) * (hi - lo));
}
