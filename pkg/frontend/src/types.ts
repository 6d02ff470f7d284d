/**
 * Payload shapes of the annotation service API. Field names mirror the
 * server's JSON exactly.
 */

export type AnnotationVariant = "full" | "context" | "word";

export type LabelSpace = "binary" | "candidate";

/** One rendered text with the target (or mask) span marked by offsets. */
export interface SegmentView {
  text: string;
  start: number;
  end: number;
}

export interface TaskPayload {
  batch_id?: string;
  instance_id: string;
  task_kind: string;
  variant: AnnotationVariant;
  segments: SegmentView[];
  label_space: LabelSpace;
  guess_enabled: boolean;
  candidates?: string[];
}

export interface Progress {
  batch_id: string;
  annotator: string;
  variant: string;
  done: number;
  total: number;
  complete: boolean;
  overlap_ids: string[];
}

export interface NextResponse {
  done: boolean;
  task: TaskPayload | null;
  progress: Progress;
}

/** What the annotator decided for one task. */
export interface JudgmentInput {
  prediction: string;
  guessed_surface?: string;
  elapsed_ms?: number;
}

export interface SubmitResponse {
  status: "stored" | "duplicate";
  progress: Progress;
}

export interface BatchInfo {
  batch_id: string;
  dataset: string;
  variant: string;
  annotator: string;
  instance_ids: string[];
  overlap_ids: string[];
  seed: number;
  created_at?: string;
}

export interface SamplingRequest {
  variant: AnnotationVariant;
  n_per_annotator: number;
  overlap: number;
  seed: number;
  annotators: [string, string];
  dataset_name?: string;
}

/** One exported judgment line (the prediction JSONL record). */
export interface PredictionRecord {
  instance_id: string;
  system: string;
  variant: string;
  seed: number | null;
  prediction: string;
  annotator?: string;
  guessed_surface?: string;
}
