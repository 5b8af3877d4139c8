/**
 * Round entry panel: auditors record each round either as winner/total
 * counts or as the per-ballot 0/1 interpretation string in draw order.
 *
 * Sequence numbers come from the latest contest snapshot; submitting the
 * same round twice (double click, flaky network retry) replays the recorded
 * result server-side instead of appending a duplicate. A 409 means another
 * editor moved the contest first, so the panel refreshes and asks the
 * auditor to reconcile before re-entering.
 */
import { ApiError, NetworkError, type AuditApi, type Contest } from "./api";
import { el } from "./dom";

export class RoundEntry {
  readonly root: HTMLElement;
  private readonly modeSelect: HTMLSelectElement;
  private readonly winnerCount: HTMLInputElement;
  private readonly roundSize: HTMLInputElement;
  private readonly ballots: HTMLInputElement;
  private readonly message: HTMLElement;
  private readonly submitButton: HTMLButtonElement;
  private contest: Contest | null = null;

  constructor(
    private readonly api: AuditApi,
    private readonly onChanged: () => Promise<void>,
  ) {
    this.modeSelect = el("select", { id: "round-mode" });
    this.modeSelect.append(
      el("option", { value: "counts" }, "counts"),
      el("option", { value: "ballots" }, "ballot-by-ballot"),
    );
    this.winnerCount = el("input", {
      type: "number",
      id: "round-winner-count",
      placeholder: "for the winner",
    });
    this.roundSize = el("input", {
      type: "number",
      id: "round-size",
      placeholder: "ballots drawn",
    });
    this.ballots = el("input", {
      type: "text",
      id: "round-ballots",
      placeholder: "e.g. 1101 in draw order",
    });
    this.message = el("div", { class: "panel-message hidden", id: "round-message" });
    this.submitButton = el(
      "button",
      { type: "button", id: "round-submit", onclick: () => void this.submit() },
      "Record round",
    );
    this.root = el(
      "section",
      { class: "panel", id: "round-entry" },
      el("h3", {}, "Record a round"),
      this.message,
      el(
        "div",
        { class: "round-grid" },
        el("label", { for: "round-mode" }, "Entry mode"),
        this.modeSelect,
        el("label", { for: "round-winner-count", class: "mode-counts" }, "Winner ballots"),
        this.winnerCount,
        el("label", { for: "round-size", class: "mode-counts" }, "Round size"),
        this.roundSize,
        el("label", { for: "round-ballots", class: "mode-ballots" }, "Interpretations"),
        this.ballots,
      ),
      el("div", { class: "form-actions" }, this.submitButton),
    );
    this.modeSelect.addEventListener("change", () => this.syncMode());
    this.syncMode();
  }

  update(contest: Contest): void {
    this.contest = contest;
    const open = contest.status === "open";
    this.submitButton.disabled = !open;
    this.winnerCount.disabled = !open;
    this.roundSize.disabled = !open;
    this.ballots.disabled = !open;
    this.modeSelect.disabled = !open;
    if (!open) {
      this.showMessage(
        "The contest is closed; no further rounds can be recorded.",
        "locked",
      );
    }
  }

  private syncMode(): void {
    const counts = this.modeSelect.value === "counts";
    for (const node of this.root.querySelectorAll<HTMLElement>(".mode-counts")) {
      node.classList.toggle("hidden", !counts);
    }
    this.winnerCount.classList.toggle("hidden", !counts);
    this.roundSize.classList.toggle("hidden", !counts);
    for (const node of this.root.querySelectorAll<HTMLElement>(".mode-ballots")) {
      node.classList.toggle("hidden", counts);
    }
    this.ballots.classList.toggle("hidden", counts);
  }

  private showMessage(message: string, tone: "error" | "reconcile" | "locked"): void {
    this.message.textContent = message;
    this.message.className = `panel-message message-${tone}`;
  }

  private clearMessage(): void {
    this.message.textContent = "";
    this.message.className = "panel-message hidden";
  }

  async submit(): Promise<void> {
    if (!this.contest || this.contest.status !== "open") return;
    this.clearMessage();
    const sequenceNumber = this.contest.next_sequence_number;
    let body;
    if (this.modeSelect.value === "counts") {
      const wins = Number(this.winnerCount.value);
      const size = Number(this.roundSize.value);
      if (!Number.isInteger(size) || size < 1) {
        this.showMessage("Round size must be a positive whole number.", "error");
        return;
      }
      if (!Number.isInteger(wins) || wins < 0 || wins > size) {
        this.showMessage("Winner ballots must lie between 0 and the round size.", "error");
        return;
      }
      body = { sequence_number: sequenceNumber, winner_count: wins, round_size: size };
    } else {
      const text = this.ballots.value.replace(/[\s,]/g, "");
      if (text === "" || /[^01]/.test(text)) {
        this.showMessage("Interpretations must be a string of 0s and 1s.", "error");
        return;
      }
      body = {
        sequence_number: sequenceNumber,
        interpretations: [...text].map(Number),
      };
    }
    this.submitButton.disabled = true;
    try {
      await this.api.postRound(this.contest.contest_id, body);
      this.winnerCount.value = "";
      this.roundSize.value = "";
      this.ballots.value = "";
      await this.onChanged();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.showMessage(
          "Another editor recorded a round first. The view has been refreshed; " +
            "check the new state before re-entering this round.",
          "reconcile",
        );
        await this.onChanged();
      } else if (err instanceof ApiError && err.status === 410) {
        await this.onChanged();
      } else if (err instanceof NetworkError) {
        this.showMessage(
          "The audit service is unreachable; the round was not recorded. Retry when it is back.",
          "error",
        );
      } else if (err instanceof ApiError) {
        this.showMessage(err.detail, "error");
      } else {
        this.showMessage(String(err), "error");
      }
    } finally {
      this.submitButton.disabled = this.contest.status !== "open";
    }
  }
}
