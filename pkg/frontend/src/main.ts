/**
 * Entry point: read the batch token from the query string, connect to the
 * service and run the annotation loop.
 *
 * Expected URL: index.html?server=http://host:port&batch=<id>&annotator=<name>
 */
import { AnnotationApi } from "./api.js";
import { annotateFlow } from "./flow.js";
import { createDomAgent, renderError } from "./render.js";

function requireParam(params: URLSearchParams, name: string): string {
  const value = params.get(name);
  if (!value) {
    throw new Error(`missing ?${name}= in the URL`);
  }
  return value;
}

async function start(root: HTMLElement): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? window.location.origin;
  const batch = requireParam(params, "batch");
  const annotator = requireParam(params, "annotator");
  const api = new AnnotationApi(server);
  await annotateFlow(api, batch, annotator, createDomAgent(root));
}

const root = document.getElementById("app");
if (root) {
  start(root).catch((error: unknown) => {
    renderError(root, error instanceof Error ? error.message : String(error));
  });
}
