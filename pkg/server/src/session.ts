// Request dispatch for one server session.
//
// Wire contract (one JSON record per line):
//   {"type":"init"}                                -> init_ok
//   {"type":"step","step":t,"instances":[{"tokens":[id|null,...]},...]}
//                                                  -> candidates
//   {"type":"detok","tokens":[id,...]}             -> detok_ok
//   anything else / malformed                      -> error record
//
// Per-request failures return error records without ending the session.

import { EOS_ID, PAD_ID, TraceModel } from "./model.js";

export interface LineHandler {
  handleLine(line: string): string;
}

export class Session implements LineHandler {
  constructor(
    private readonly model: TraceModel,
    private readonly temperature: number = 1.0,
  ) {
    if (temperature <= 0) throw new Error("temperature must be positive");
  }

  handleLine(line: string): string {
    let request: unknown;
    try {
      request = JSON.parse(line);
    } catch (err) {
      return error(`malformed request: ${(err as Error).message}`);
    }
    if (typeof request !== "object" || request === null || !("type" in request)) {
      return error("request is not a typed record");
    }
    const kind = (request as { type: unknown }).type;
    try {
      switch (kind) {
        case "init":
          return this.init();
        case "step":
          return this.step(request as Record<string, unknown>);
        case "detok":
          return this.detok(request as Record<string, unknown>);
        default:
          return error(`unknown request type '${String(kind)}'`);
      }
    } catch (err) {
      return error((err as Error).message);
    }
  }

  private init(): string {
    return JSON.stringify({
      type: "init_ok",
      vocab_size: this.model.vocabSize,
      pad_id: PAD_ID,
      eos_id: EOS_ID,
      language_id: this.model.languageId,
    });
  }

  private step(request: Record<string, unknown>): string {
    const step = request.step;
    const instances = request.instances;
    if (!Number.isInteger(step) || !Array.isArray(instances)) {
      return error("step request needs an integer step and an instances array");
    }
    const views: (number | null)[][] = [];
    for (const entry of instances) {
      const tokens = (entry as Record<string, unknown>)?.tokens;
      if (!Array.isArray(tokens)) {
        return error("each instance needs a tokens array");
      }
      const view: (number | null)[] = [];
      for (const token of tokens) {
        if (token === null) {
          view.push(null);
        } else if (Number.isInteger(token)) {
          view.push(token as number);
        } else {
          return error(`token entries must be ids or null, got ${JSON.stringify(token)}`);
        }
      }
      views.push(view);
    }
    const proposals = this.model.propose(views, step as number, this.temperature);
    return JSON.stringify({
      type: "candidates",
      instances: proposals.map((p) => ({
        candidates: p.candidates,
        confidences: p.confidences,
      })),
    });
  }

  private detok(request: Record<string, unknown>): string {
    const tokens = request.tokens;
    if (!Array.isArray(tokens) || !tokens.every((t) => Number.isInteger(t))) {
      return error("detok request needs an array of token ids");
    }
    const { text, spans } = this.model.detokenize(tokens as number[]);
    return JSON.stringify({ type: "detok_ok", text, spans });
  }
}

export function error(message: string): string {
  return JSON.stringify({ type: "error", message });
}

/** Stands in when the model failed to load: refuses everything. */
export class RefusingSession implements LineHandler {
  constructor(private readonly message: string) {}

  handleLine(_line: string): string {
    return error(this.message);
  }
}

export function isShutdown(line: string): boolean {
  try {
    const record = JSON.parse(line);
    return typeof record === "object" && record !== null && record.type === "shutdown";
  } catch {
    return false;
  }
}
