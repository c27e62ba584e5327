// Trace-backed masked-token predictor.
//
// The model spec is a trace document fixing the target token sequences
// of one batch. For every masked position the model "samples" the
// target token (flipped to a wrong one with probability 1 - p_correct)
// and reports a confidence that is a pure function of (seed, instance,
// position[, committed neighbours]). The server holds no decode policy.

import { readFileSync } from "node:fs";
import { unit, unitInt } from "./rng.js";
import { codePointSort, detokenize, tokenizeTarget, Detok } from "./tokenizer.js";

export const PAD_ID = 0;
export const EOS_ID = 1;

export interface TraceDoc {
  name: string;
  targets: string[];
  length?: number;
  language_id?: string;
  confidence_model?: string;
  p_correct?: number;
  seed?: number;
  vocab?: string[];
  target_ids?: number[][];
}

export interface Proposal {
  candidates: number[];
  confidences: number[];
}

export class TraceModel {
  readonly name: string;
  readonly length: number;
  readonly languageId: string;
  readonly confidenceModel: string;
  readonly pCorrect: number;
  readonly seed: number;
  readonly vocab: string[];
  readonly targetIds: number[][];

  constructor(doc: TraceDoc, seedOverride?: number) {
    if (!doc || !Array.isArray(doc.targets) || doc.targets.length === 0) {
      throw new Error("trace document needs a non-empty targets array");
    }
    this.name = doc.name ?? "trace";
    this.length = doc.length ?? 128;
    this.languageId = doc.language_id ?? "mini";
    this.confidenceModel = doc.confidence_model ?? "seeded-uniform";
    this.pCorrect = doc.p_correct ?? 1.0;
    this.seed = seedOverride ?? doc.seed ?? 0;
    if (this.confidenceModel === "file-replay") {
      throw new Error("file-replay traces are not servable; use a synthetic model");
    }
    if (!["seeded-uniform", "locality-biased"].includes(this.confidenceModel)) {
      throw new Error(`unknown confidence model '${this.confidenceModel}'`);
    }
    if (doc.vocab && doc.target_ids) {
      this.vocab = doc.vocab;
      this.targetIds = doc.target_ids;
    } else {
      const tokenLists = doc.targets.map(tokenizeTarget);
      const unique = new Set<string>();
      for (const tokens of tokenLists) for (const t of tokens) unique.add(t);
      const sorted = codePointSort([...unique]);
      this.vocab = ["", "", ...sorted];
      const ids = new Map(sorted.map((t, i) => [t, i + 2]));
      this.targetIds = tokenLists.map((tokens) => {
        if (tokens.length >= this.length) {
          throw new Error(
            `target of ${tokens.length} tokens leaves no room for EOS at length ${this.length}`,
          );
        }
        const row = tokens.map((t) => ids.get(t)!);
        row.push(EOS_ID);
        while (row.length < this.length) row.push(PAD_ID);
        return row;
      });
    }
    for (const row of this.targetIds) {
      if (row.length !== this.length) {
        throw new Error(`target_ids rows must have length ${this.length}`);
      }
    }
  }

  get size(): number {
    return this.targetIds.length;
  }

  get vocabSize(): number {
    return this.vocab.length;
  }

  propose(views: (number | null)[][], step: number, temperature = 1.0): Proposal[] {
    if (views.length !== this.size) {
      throw new Error(`trace has ${this.size} targets, got ${views.length} instances`);
    }
    return views.map((committed, index) => {
      const targets = this.targetIds[index];
      if (committed.length !== targets.length) {
        throw new Error(
          `instance ${index}: length ${committed.length} != trace length ${targets.length}`,
        );
      }
      const candidates: number[] = [];
      const confidences: number[] = [];
      for (let position = 0; position < committed.length; position++) {
        const slot = committed[position];
        if (slot !== null) {
          candidates.push(slot);
          confidences.push(0.0);
          continue;
        }
        let candidate = targets[position];
        if (this.pCorrect < 1.0 && unit(this.seed, "flip", step, index, position) >= this.pCorrect) {
          candidate = this.wrongToken(targets[position], step, index, position);
        }
        let confidence = unit(this.seed, "conf", index, position);
        if (this.confidenceModel === "locality-biased") {
          let neighbours = 0;
          if (position > 0 && committed[position - 1] !== null) neighbours += 1;
          if (position + 1 < committed.length && committed[position + 1] !== null) neighbours += 1;
          confidence = Math.min(1.0, confidence + 0.25 * neighbours);
        }
        confidence = Math.min(1.0, Math.pow(confidence, 1.0 / temperature));
        candidates.push(candidate);
        confidences.push(confidence);
      }
      return { candidates, confidences };
    });
  }

  private wrongToken(target: number, step: number, index: number, position: number): number {
    if (this.vocabSize <= 3) return target;
    for (let salt = 0; ; salt++) {
      const token = unitInt(2, this.vocabSize, this.seed, "wrong", step, index, position, salt);
      if (token !== target) return token;
    }
  }

  detokenize(tokens: number[]): Detok {
    return detokenize(tokens, this.vocab);
  }
}

export function loadTrace(path: string, seedOverride?: number): TraceModel {
  let raw: string;
  try {
    raw = readFileSync(path, "utf-8");
  } catch (err) {
    throw new Error(`cannot read model spec ${path}: ${(err as Error).message}`);
  }
  let doc: TraceDoc;
  try {
    doc = JSON.parse(raw) as TraceDoc;
  } catch (err) {
    throw new Error(`malformed model spec ${path}: ${(err as Error).message}`);
  }
  return new TraceModel(doc, seedOverride);
}
