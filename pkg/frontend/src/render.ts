/**
 * DOM layer: one task on screen at a time, no back navigation. The target
 * (or mask) slot is styled from span offsets; all content is inserted as
 * text nodes, never markup.
 */
import type { AnnotatorAgent } from "./flow.js";
import type { JudgmentInput, Progress, TaskPayload } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function renderSegment(task: TaskPayload, index: number): HTMLElement {
  const segment = task.segments[index];
  const paragraph = el("p", "segment");
  paragraph.append(segment.text.slice(0, segment.start));
  const slotClass = task.variant === "context" ? "slot slot-mask" : "slot slot-target";
  paragraph.append(el("span", slotClass, segment.text.slice(segment.start, segment.end)));
  paragraph.append(segment.text.slice(segment.end));
  return paragraph;
}

function renderProgress(progress: Progress): HTMLElement {
  const bar = el("div", "progress", `${progress.done} / ${progress.total} judged`);
  bar.setAttribute("data-done", String(progress.done));
  bar.setAttribute("data-total", String(progress.total));
  return bar;
}

const VARIANT_HINTS: Record<string, string> = {
  full: "Judge the highlighted target words in their contexts.",
  context: "The target words are hidden. Judge from the contexts alone; " +
    "if you can, first guess what the hidden word could be.",
  word: "Only the target words are shown. Judge from the words alone, " +
    "thinking of their most typical meanings.",
};

interface AnswerControl {
  root: HTMLElement;
  /** Resolves with the chosen label value once the annotator confirms. */
  collect(onReady: (prediction: string) => void): void;
}

function binaryControl(): AnswerControl {
  const root = el("div", "answer answer-binary");
  const collect = (onReady: (prediction: string) => void) => {
    for (const value of ["T", "F"]) {
      const button = el("button", "answer-button", value);
      button.setAttribute("data-value", value);
      button.addEventListener("click", () => onReady(value));
      root.append(button);
    }
  };
  return { root, collect };
}

function candidateControl(candidates: string[]): AnswerControl {
  const root = el("div", "answer answer-candidates");
  const collect = (onReady: (prediction: string) => void) => {
    const filter = el("input", "candidate-filter");
    filter.setAttribute("placeholder", "filter candidates");
    const list = el("div", "candidate-list");
    let selected: string | null = null;
    const submit = el("button", "answer-button submit-candidate", "submit");
    submit.setAttribute("disabled", "disabled");
    const rebuild = () => {
      list.textContent = "";
      const needle = filter.value.trim().toLowerCase();
      for (const candidate of candidates) {
        if (needle && !candidate.toLowerCase().includes(needle)) {
          continue;
        }
        const option = el("button", "candidate-option", candidate);
        option.setAttribute("data-candidate", candidate);
        if (candidate === selected) {
          option.classList.add("selected");
        }
        option.addEventListener("click", () => {
          selected = candidate;
          submit.removeAttribute("disabled");
          rebuild();
        });
        list.append(option);
      }
    };
    filter.addEventListener("input", rebuild);
    submit.addEventListener("click", () => {
      if (selected !== null) {
        onReady(selected);
      }
    });
    rebuild();
    root.append(filter, list, submit);
  };
  return { root, collect };
}

/**
 * Render one task and resolve with the judgment once the annotator answers.
 */
export function renderTask(
  root: HTMLElement,
  task: TaskPayload,
  progress: Progress,
): Promise<JudgmentInput> {
  root.textContent = "";
  root.append(renderProgress(progress));
  root.append(el("p", "hint", VARIANT_HINTS[task.variant] ?? ""));
  const card = el("div", "task-card");
  card.setAttribute("data-instance", task.instance_id);
  card.setAttribute("data-variant", task.variant);
  for (let i = 0; i < task.segments.length; i += 1) {
    card.append(renderSegment(task, i));
  }

  let guessBox: HTMLInputElement | null = null;
  if (task.guess_enabled) {
    const wrapper = el("label", "guess-wrapper", "your guess for the hidden word (optional): ");
    guessBox = el("input", "guess-box");
    wrapper.append(guessBox);
    card.append(wrapper);
  }

  const control = task.label_space === "binary"
    ? binaryControl()
    : candidateControl(task.candidates ?? []);
  card.append(control.root);
  root.append(card);

  return new Promise<JudgmentInput>((resolve) => {
    control.collect((prediction) => {
      const guess = guessBox?.value.trim();
      resolve({
        prediction,
        guessed_surface: guess ? guess : undefined,
      });
    });
  });
}

export function renderCompletion(root: HTMLElement, progress: Progress): void {
  root.textContent = "";
  const done = el("div", "completion");
  done.append(el("h2", undefined, "Batch complete"));
  done.append(el("p", undefined,
    `All ${progress.total} items are judged and stored. ` +
    "Your judgments are exported to the analysis pipeline automatically."));
  done.append(renderProgress(progress));
  root.append(done);
}

export function renderError(root: HTMLElement, message: string): void {
  const banner = el("div", "error-banner", message);
  root.prepend(banner);
}

/** Bind the flow to the page: humans answer via the rendered controls. */
export function createDomAgent(root: HTMLElement): AnnotatorAgent {
  return {
    judge: (task, progress) => renderTask(root, task, progress),
    onComplete: (progress) => renderCompletion(root, progress),
  };
}
