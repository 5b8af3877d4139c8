/**
 * Hash-routed single-page app: "#/" is the creation wizard, "#/contest/{id}"
 * the live dashboard. Navigation never carries state beyond the id in the
 * fragment, so deep links and reloads always work mid-audit.
 */
import type { AuditApi, Contest } from "./api";
import { Dashboard } from "./dashboard";
import { el, swap } from "./dom";
import { ContestWizard } from "./wizard";

export class App {
  constructor(
    private readonly root: HTMLElement,
    private readonly api: AuditApi,
    private readonly window_: Window = window,
  ) {}

  start(): void {
    this.window_.addEventListener("hashchange", () => void this.route());
    void this.route();
  }

  async route(): Promise<void> {
    const hash = this.window_.location.hash;
    const match = /^#\/contest\/([A-Za-z0-9-]+)$/.exec(hash);
    const view = el("main", { class: "view" });
    swap(this.root, this.banner(), view);
    if (match && match[1]) {
      await new Dashboard(this.api, match[1], view).load();
    } else {
      await new ContestWizard(this.api, (contest: Contest) => {
        this.window_.location.hash = `#/contest/${contest.contest_id}`;
      }).mount(view);
    }
  }

  private banner(): HTMLElement {
    return el(
      "nav",
      { class: "topbar" },
      el("a", { href: "#/", class: "brand" }, "ballot audit"),
      el("span", { class: "topbar-note" }, "every number on this page comes from the audit service"),
    );
  }
}
