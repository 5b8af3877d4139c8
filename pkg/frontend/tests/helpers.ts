/** Shared DOM-test plumbing: polling waits, input helpers, app mounting. */
import { AuditApi } from "../src/api";
import { App } from "../src/app";

export async function waitFor(
  condition: () => boolean,
  what = "condition",
  timeoutMs = 10_000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (condition()) return;
    await new Promise((resolve) => setTimeout(resolve, 15));
  }
  throw new Error(`timed out waiting for ${what}`);
}

export function setValue(input: HTMLInputElement, value: string): void {
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

export function selectValue(select: HTMLSelectElement, value: string): void {
  select.value = value;
  select.dispatchEvent(new Event("change", { bubbles: true }));
}

export function q<T extends Element = HTMLElement>(selector: string): T {
  const node = document.querySelector<T>(selector);
  if (!node) throw new Error(`no element matches ${selector}`);
  return node;
}

export function maybe<T extends Element = HTMLElement>(selector: string): T | null {
  return document.querySelector<T>(selector);
}

/**
 * Drops any previous DOM, pins the location without firing hashchange
 * (a stray event would re-route mid-test), and boots a fresh App.
 * Returns the api handle so tests can cross-check against the service.
 */
export function mountApp(baseUrl: string, hash = "#/"): AuditApi {
  document.body.innerHTML = '<div id="app"></div>';
  window.history.replaceState(null, "", hash);
  const api = new AuditApi(baseUrl);
  new App(document.getElementById("app")!, api).start();
  return api;
}
