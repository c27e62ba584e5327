import { describe, expect, it } from "vitest";
import { TraceModel } from "../src/model.js";
import { Session } from "../src/session.js";

const DOC = {
  name: "t",
  targets: ["def test_a():\n    assert f(1) == 2\n", "def test_b():\n    assert f(3) == 4\n"],
  length: 24,
  seed: 5,
};

function session(): Session {
  return new Session(new TraceModel(DOC));
}

function reply(s: Session, request: unknown): any {
  return JSON.parse(s.handleLine(JSON.stringify(request)));
}

describe("Session", () => {
  it("answers init with the session metadata", () => {
    const record = reply(session(), { type: "init" });
    expect(record.type).toBe("init_ok");
    expect(record.pad_id).toBe(0);
    expect(record.eos_id).toBe(1);
    expect(record.vocab_size).toBeGreaterThan(2);
    expect(record.language_id).toBe("mini");
  });

  it("answers step with full-length arrays per instance", () => {
    const s = session();
    const tokens = Array(24).fill(null);
    const record = reply(s, {
      type: "step",
      step: 0,
      instances: [{ tokens }, { tokens }],
    });
    expect(record.type).toBe("candidates");
    expect(record.instances).toHaveLength(2);
    for (const instance of record.instances) {
      expect(instance.candidates).toHaveLength(24);
      expect(instance.confidences).toHaveLength(24);
    }
  });

  it("returns arrays even for an all-committed instance", () => {
    const s = session();
    const model = new TraceModel(DOC);
    const record = reply(s, {
      type: "step",
      step: 3,
      instances: [{ tokens: model.targetIds[0] }, { tokens: model.targetIds[1] }],
    });
    expect(record.type).toBe("candidates");
    expect(record.instances[0].candidates).toHaveLength(24);
  });

  it("answers detok with spans concatenating to the text", () => {
    const s = session();
    const model = new TraceModel(DOC);
    const record = reply(s, { type: "detok", tokens: model.targetIds[0].slice(0, 8) });
    expect(record.type).toBe("detok_ok");
    let rebuilt = "";
    for (const [start, end] of record.spans) {
      rebuilt += [...record.text].slice(start, end).join("");
    }
    expect(rebuilt).toBe(record.text);
  });

  it("answers detok of nothing with an empty text", () => {
    const record = reply(session(), { type: "detok", tokens: [] });
    expect(record).toEqual({ type: "detok_ok", text: "", spans: [] });
  });

  it("returns error records instead of dying", () => {
    const s = session();
    expect(JSON.parse(s.handleLine("not json")).type).toBe("error");
    expect(reply(s, { type: "bogus" }).type).toBe("error");
    expect(reply(s, { type: "step", step: "x", instances: [] }).type).toBe("error");
    expect(reply(s, { type: "detok", tokens: [99999] }).type).toBe("error");
    expect(reply(s, { type: "step", step: 0, instances: [{ tokens: [null] }] }).type).toBe(
      "error",
    );
    // the session still works afterwards
    expect(reply(s, { type: "init" }).type).toBe("init_ok");
  });

  it("is deterministic across identical requests", () => {
    const s = session();
    const request = {
      type: "step",
      step: 1,
      instances: [{ tokens: Array(24).fill(null) }, { tokens: Array(24).fill(null) }],
    };
    expect(reply(s, request)).toEqual(reply(s, request));
  });
});
