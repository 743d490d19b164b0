/** Entry point: wire URL parameters to a session and run it. */

import { ApiClient } from "./api.js";
import { AnnotationSession } from "./session.js";

function required(params: URLSearchParams, name: string): string {
  const value = params.get(name);
  if (!value) throw new Error(`missing URL parameter '${name}'`);
  return value;
}

export function mount(root: HTMLElement, search: string = window.location.search): AnnotationSession {
  const params = new URLSearchParams(search);
  const api = new ApiClient(
    params.get("base") ?? "",
    required(params, "project"),
    Number(required(params, "slot")),
    required(params, "token"),
  );
  const session = new AnnotationSession(api, root);
  void session.start();
  return session;
}

const root = document.getElementById("app");
if (root) {
  try {
    mount(root);
  } catch (error) {
    root.textContent = String(error);
  }
}
