/**
 * End-to-end: the annotation flow against the live service, over HTTP only.
 */
import { execFile } from "node:child_process";
import { writeFile } from "node:fs/promises";
import { join } from "node:path";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotationApi, ApiError } from "../src/api.js";
import {
  annotateFlow,
  assertMaskedPayloadSafe,
  PayloadLeakError,
  submitWithRetry,
  type AnnotatorAgent,
} from "../src/flow.js";
import type { PredictionRecord, TaskPayload } from "../src/types.js";
import { startService, type RunningService } from "./service.js";

const run = promisify(execFile);

let service: RunningService;

beforeAll(async () => {
  service = await startService(40);
});

afterAll(() => {
  service?.stop();
});

/** Answers with the instance's gold label, flipping the given ids. */
function scriptedAgent(gold: Map<string, string>, flip: Set<string>,
                       payloads?: TaskPayload[]): AnnotatorAgent {
  return {
    judge: (task) => {
      payloads?.push(task);
      let value = gold.get(task.instance_id);
      if (value === undefined) {
        throw new Error(`no gold for ${task.instance_id}`);
      }
      if (flip.has(task.instance_id)) {
        value = value === "T" ? "F" : "T";
      }
      return Promise.resolve({ prediction: value, guessed_surface: "candle" });
    },
  };
}

function percentAgreement(a: Map<string, string>, b: Map<string, string>,
                          ids: string[]): number {
  let same = 0;
  for (const id of ids) {
    if (a.get(id) === b.get(id)) {
      same += 1;
    }
  }
  return (100 * same) / ids.length;
}

describe("scripted annotation session", () => {
  const nextPayloads: string[] = [];
  let records: PredictionRecord[] = [];
  let overlapIds: string[] = [];
  let batchIds: string[] = [];

  it("completes a 10-item context batch for both annotators", async () => {
    // capture every /next response body to audit for leaks afterwards
    const recordingFetch = async (input: string, init?: RequestInit) => {
      const response = await fetch(input, init);
      if (input.includes("/next")) {
        nextPayloads.push(await response.clone().text());
      }
      return response;
    };
    const api = new AnnotationApi(service.baseUrl, recordingFetch);
    const [batchA, batchB] = await api.createBatches({
      variant: "context",
      n_per_annotator: 10,
      overlap: 5,
      seed: 1,
      annotators: ["h1", "h2"],
    });
    batchIds = [batchA.batch_id, batchB.batch_id];
    overlapIds = batchA.overlap_ids;
    expect(batchA.instance_ids).toHaveLength(10);
    expect(batchB.overlap_ids).toEqual(overlapIds);
    expect(overlapIds).toHaveLength(5);

    const flip = new Set(overlapIds.slice(0, 2));
    const progressA = await annotateFlow(api, batchA.batch_id, "h1",
                                         scriptedAgent(service.dataset.gold, new Set()));
    const progressB = await annotateFlow(api, batchB.batch_id, "h2",
                                         scriptedAgent(service.dataset.gold, flip));
    expect(progressA.complete).toBe(true);
    expect(progressA.done).toBe(10);
    expect(progressB.complete).toBe(true);
  });

  it("never ships a hidden surface in masked payloads", () => {
    expect(nextPayloads.length).toBeGreaterThanOrEqual(20);
    const masked = nextPayloads.filter((p) => p.includes('"task":{'));
    for (const payload of masked) {
      expect(payload).toContain("[MASK]");
      for (const surface of service.dataset.surfaces.values()) {
        expect(payload).not.toContain(surface);
      }
      expect(payload).not.toContain('"surface"');
      expect(payload).not.toContain('"word_key"');
    }
  });

  it("exports one schema-valid record per judgment", async () => {
    const api = new AnnotationApi(service.baseUrl);
    records = await api.exportBatches(batchIds);
    expect(records).toHaveLength(20);
    for (const record of records) {
      expect(typeof record.instance_id).toBe("string");
      expect(record.system).toBe("human");
      expect(record.variant).toBe("context");
      expect(["T", "F"]).toContain(record.prediction);
      expect(["h1", "h2"]).toContain(record.annotator ?? "");
      expect(record.guessed_surface).toBe("candle");
    }
    // the primary toolkit's own parser accepts the export verbatim
    const exportPath = join(service.storeDir, "..", "export.jsonl");
    await writeFile(exportPath,
                    records.map((r) => JSON.stringify(r)).join("\n") + "\n", "utf-8");
    const script = "import sys\n" +
      "from lexbias.ingest import parse_predictions\n" +
      "print(len(parse_predictions(sys.argv[1])))\n";
    const { stdout } = await run("python3", ["-c", script, exportPath]);
    expect(stdout.trim()).toBe("20");
  });

  it("computes sibling-batch agreement on the overlap", () => {
    const byAnnotator = new Map<string, Map<string, string>>([
      ["h1", new Map()], ["h2", new Map()],
    ]);
    for (const record of records) {
      byAnnotator.get(record.annotator ?? "")?.set(record.instance_id, record.prediction);
    }
    const value = percentAgreement(byAnnotator.get("h1")!, byAnnotator.get("h2")!,
                                   overlapIds);
    expect(value).toBeCloseTo(60, 10); // 2 of 5 overlap items flipped
  });
});

describe("retry and duplicate handling", () => {
  it("stores exactly one judgment when the response is lost and the client retries", async () => {
    let failuresToInject = 1;
    const flakyFetch = async (input: string, init?: RequestInit) => {
      const response = await fetch(input, init);
      if (init?.method === "POST" && input.includes("/judgments") && failuresToInject > 0) {
        failuresToInject -= 1;
        throw new TypeError("simulated network failure after the request was sent");
      }
      return response;
    };
    const api = new AnnotationApi(service.baseUrl, flakyFetch);
    const [batchA] = await api.createBatches({
      variant: "context",
      n_per_annotator: 4,
      overlap: 2,
      seed: 2,
      annotators: ["r1", "r2"],
    });
    const next = await api.next(batchA.batch_id, "r1");
    const task = next.task!;
    const outcome = await submitWithRetry(api, batchA.batch_id, task.instance_id, "r1",
                                          { prediction: "T" }, { retryDelayMs: 5 });
    expect(outcome).toBe("duplicate"); // first attempt stored, retry deduplicated
    const progress = await api.progress(batchA.batch_id);
    expect(progress.done).toBe(1);
    const exported = await api.exportBatches([batchA.batch_id]);
    expect(exported).toHaveLength(1);
    expect(exported[0].instance_id).toBe(task.instance_id);
  });

  it("reports a conflict for a differing resubmission", async () => {
    const api = new AnnotationApi(service.baseUrl);
    const [batchA] = await api.createBatches({
      variant: "context",
      n_per_annotator: 3,
      overlap: 1,
      seed: 3,
      annotators: ["c1", "c2"],
    });
    const next = await api.next(batchA.batch_id, "c1");
    const task = next.task!;
    await api.submit(batchA.batch_id, task.instance_id, "c1", { prediction: "T" });
    const outcome = await submitWithRetry(api, batchA.batch_id, task.instance_id, "c1",
                                          { prediction: "F" });
    expect(outcome).toBe("conflict");
    await expect(api.submit(batchA.batch_id, task.instance_id, "c1", { prediction: "F" }))
      .rejects.toThrowError(ApiError);
  });

  it("gives up after exhausting retries on a dead connection", async () => {
    const deadFetch = () => Promise.reject(new TypeError("connection refused"));
    const api = new AnnotationApi("http://127.0.0.1:1", deadFetch);
    await expect(
      submitWithRetry(api, "b", "i", "a", { prediction: "T" },
                      { maxRetries: 2, retryDelayMs: 1 }),
    ).rejects.toThrowError("connection refused");
  });
});

describe("client-side payload audit", () => {
  const baseTask: TaskPayload = {
    instance_id: "x",
    task_kind: "pair_classification",
    variant: "context",
    segments: [
      { text: "a [MASK] b", start: 2, end: 8 },
      { text: "c [MASK] d", start: 2, end: 8 },
    ],
    label_space: "binary",
    guess_enabled: true,
  };

  it("accepts a clean masked payload", () => {
    expect(() => assertMaskedPayloadSafe(baseTask)).not.toThrow();
  });

  it("rejects segments carrying extra fields", () => {
    const leaky = {
      ...baseTask,
      segments: [{ ...baseTask.segments[0], surface: "oops" } as never,
                 baseTask.segments[1]],
    };
    expect(() => assertMaskedPayloadSafe(leaky)).toThrowError(PayloadLeakError);
  });

  it("rejects diverging mask slots", () => {
    const leaky = {
      ...baseTask,
      segments: [baseTask.segments[0], { text: "c word d", start: 2, end: 6 }],
    };
    expect(() => assertMaskedPayloadSafe(leaky)).toThrowError(PayloadLeakError);
  });

  it("ignores unmasked variants", () => {
    const full = { ...baseTask, variant: "full" as const };
    expect(() => assertMaskedPayloadSafe(full)).not.toThrow();
  });
});
