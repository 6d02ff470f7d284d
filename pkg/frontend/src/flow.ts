/**
 * The annotation loop: fetch next task, collect a judgment, submit, repeat
 * until the service reports the batch complete.
 *
 * Network failures retry the *identical* payload (the server deduplicates,
 * so a lost response cannot double-store); a conflict means the item was
 * already judged and the loop skips forward.
 */
import { AnnotationApi, ApiError } from "./api.js";
import type { JudgmentInput, Progress, TaskPayload } from "./types.js";

/** Whoever answers tasks: the DOM layer for humans, a script in tests. */
export interface AnnotatorAgent {
  judge(task: TaskPayload, progress: Progress): Promise<JudgmentInput>;
  onProgress?(progress: Progress): void;
  onComplete?(progress: Progress): void;
}

export interface FlowOptions {
  /** Resubmission attempts per judgment after a network failure. */
  maxRetries?: number;
  /** Base delay between retries, ms (doubles per attempt). */
  retryDelayMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

export class PayloadLeakError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PayloadLeakError";
  }
}

const SEGMENT_KEYS = new Set(["text", "start", "end"]);

/**
 * Client-side absence check: a masked task must carry nothing but the
 * rendered text and span offsets, and the span itself must be the mask slot,
 * not a real word revealed by the server.
 */
export function assertMaskedPayloadSafe(task: TaskPayload): void {
  if (task.variant !== "context") {
    return;
  }
  const slots = new Set<string>();
  for (const segment of task.segments) {
    const extra = Object.keys(segment).filter((key) => !SEGMENT_KEYS.has(key));
    if (extra.length > 0) {
      throw new PayloadLeakError(`masked segment carries extra fields: ${extra.join(", ")}`);
    }
    slots.add(segment.text.slice(segment.start, segment.end));
  }
  // Every masked slot must be the same opaque token; diverging slots would
  // mean the server leaked a surface into one of them.
  if (slots.size !== 1) {
    throw new PayloadLeakError(`masked slots disagree: ${[...slots].join(" vs ")}`);
  }
  const extraTask = Object.keys(task).filter(
    (key) => !["batch_id", "instance_id", "task_kind", "variant", "segments",
               "label_space", "guess_enabled", "candidates"].includes(key));
  if (extraTask.length > 0) {
    throw new PayloadLeakError(`masked task carries extra fields: ${extraTask.join(", ")}`);
  }
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export type SubmitOutcome = "stored" | "duplicate" | "conflict";

/**
 * Submit one judgment, resubmitting the identical payload on network
 * failure. Returns "conflict" when a differing judgment already exists
 * (the caller skips to the next item).
 */
export async function submitWithRetry(
  api: AnnotationApi,
  batchId: string,
  instanceId: string,
  annotator: string,
  judgment: JudgmentInput,
  options: FlowOptions = {},
): Promise<SubmitOutcome> {
  const maxRetries = options.maxRetries ?? 5;
  const sleep = options.sleep ?? defaultSleep;
  const retryDelayMs = options.retryDelayMs ?? 250;
  let attempt = 0;
  for (;;) {
    try {
      const response = await api.submit(batchId, instanceId, annotator, judgment);
      return response.status;
    } catch (error) {
      if (error instanceof ApiError) {
        if (error.status === 409) {
          return "conflict";
        }
        throw error;
      }
      // Network failure: the judgment is preserved and resent verbatim.
      attempt += 1;
      if (attempt > maxRetries) {
        throw error;
      }
      await sleep(retryDelayMs * 2 ** (attempt - 1));
    }
  }
}

/**
 * Run one batch to completion. Resolves with the final progress once the
 * service returns no further tasks.
 */
export async function annotateFlow(
  api: AnnotationApi,
  batchId: string,
  annotator: string,
  agent: AnnotatorAgent,
  options: FlowOptions = {},
): Promise<Progress> {
  for (;;) {
    const body = await api.next(batchId, annotator);
    agent.onProgress?.(body.progress);
    if (body.done || body.task === null) {
      agent.onComplete?.(body.progress);
      return body.progress;
    }
    assertMaskedPayloadSafe(body.task);
    const started = Date.now();
    const judgment = await agent.judge(body.task, body.progress);
    const timed: JudgmentInput = {
      ...judgment,
      elapsed_ms: judgment.elapsed_ms ?? Date.now() - started,
    };
    await submitWithRetry(api, batchId, body.task.instance_id, annotator, timed, options);
  }
}
