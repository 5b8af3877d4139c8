/**
 * What-if panel: candidate next-round sizes crossed with hypothesized
 * margins, each cell the service-computed probability of certifying within
 * that many further draws. Auditors use it to pick the next round size.
 *
 * Cells carry the raw response value in data-value; only the visible label
 * is formatted.
 */
import { ApiError, NetworkError, type AuditApi } from "./api";
import { el, swap } from "./dom";

export class WhatIfPanel {
  readonly root: HTMLElement;
  private readonly sizesInput: HTMLInputElement;
  private readonly marginsInput: HTMLInputElement;
  private readonly grid: HTMLElement;
  private readonly message: HTMLElement;

  constructor(
    private readonly api: AuditApi,
    private readonly contestId: string,
  ) {
    this.sizesInput = el("input", {
      type: "text",
      id: "whatif-sizes",
      value: "50, 100, 200",
    });
    this.marginsInput = el("input", {
      type: "text",
      id: "whatif-margins",
      value: "0.55, 0.6",
    });
    this.grid = el("div", { id: "whatif-grid" });
    this.message = el("div", { class: "panel-message hidden", id: "whatif-message" });
    this.root = el(
      "section",
      { class: "panel", id: "whatif-panel" },
      el("h3", {}, "What if the next round is..."),
      el(
        "div",
        { class: "round-grid" },
        el("label", { for: "whatif-sizes" }, "Round sizes"),
        this.sizesInput,
        el("label", { for: "whatif-margins" }, "True winner shares"),
        this.marginsInput,
      ),
      el(
        "div",
        { class: "form-actions" },
        el(
          "button",
          { type: "button", id: "whatif-run", onclick: () => void this.run() },
          "Project",
        ),
      ),
      this.message,
      this.grid,
    );
  }

  private parseList(raw: string, label: string, integer: boolean): number[] | null {
    const parts = raw.split(",").map((s) => s.trim()).filter((s) => s !== "");
    const values = parts.map(Number);
    const valid =
      values.length > 0 &&
      values.every((v) => Number.isFinite(v) && v >= 0 && (!integer || Number.isInteger(v)));
    if (!valid) {
      this.showMessage(`${label} must be a comma-separated list of ${integer ? "whole numbers" : "shares"}.`);
      return null;
    }
    return values;
  }

  private showMessage(message: string): void {
    this.message.textContent = message;
    this.message.className = "panel-message message-error";
  }

  async run(): Promise<void> {
    this.message.className = "panel-message hidden";
    const sizes = this.parseList(this.sizesInput.value, "Round sizes", true);
    const margins = this.parseList(this.marginsInput.value, "Shares", false);
    if (!sizes || !margins) return;
    let response;
    try {
      response = await this.api.projection(this.contestId, sizes, margins);
    } catch (err) {
      if (err instanceof NetworkError) {
        this.showMessage("The audit service is unreachable; try again shortly.");
      } else if (err instanceof ApiError) {
        this.showMessage(err.detail);
      } else {
        this.showMessage(String(err));
      }
      return;
    }

    const head = el(
      "tr",
      {},
      el("th", {}, "true share"),
      ...sizes.map((s) => el("th", {}, s === 0 ? "now" : `+${s}`)),
    );
    const rows = response.projections.map((projection) => {
      const cells = sizes.map((size) => {
        const value = projection.certify_probability[String(size)] ?? 0;
        const cell = el("td", { class: "whatif-cell" }, formatProbability(value));
        cell.dataset.size = String(size);
        cell.dataset.margin = String(projection.margin);
        cell.dataset.value = String(value);
        return cell;
      });
      return el("tr", {}, el("th", {}, String(projection.margin)), ...cells);
    });
    swap(
      this.grid,
      el(
        "table",
        { class: "whatif-table" },
        el("thead", {}, head),
        el("tbody", {}, ...rows),
      ),
      el(
        "p",
        { class: "whatif-note" },
        `probability of certifying within the added draws (n=${response.state.n} now)`,
      ),
    );
  }
}

function formatProbability(p: number): string {
  if (p === 0) return "0%";
  if (p === 1) return "100%";
  if (p < 0.001) return "<0.1%";
  if (p > 0.999) return ">99.9%";
  return `${(100 * p).toFixed(1)}%`;
}
