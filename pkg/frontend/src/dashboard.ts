/**
 * Contest dashboard. All state is derived from GET /v1/contests/{id}: a
 * page reload, a second tab, or a reconnect after downtime all converge on
 * the same view. Mutations go through the round panel and are followed by a
 * full refetch rather than local state edits.
 */
import {
  NetworkError,
  parseLogStatistic,
  type AuditApi,
  type Contest,
  type RoundJson,
} from "./api";
import { formatValue, renderTrajectory } from "./chart";
import { el, swap } from "./dom";
import { RoundEntry } from "./rounds";
import { WhatIfPanel } from "./whatif";

export class Dashboard {
  private readonly rounds: RoundEntry;
  private readonly whatIf: WhatIfPanel;
  private contest: Contest | null = null;

  constructor(
    private readonly api: AuditApi,
    private readonly contestId: string,
    private readonly root: HTMLElement,
  ) {
    this.rounds = new RoundEntry(api, () => this.refresh());
    this.whatIf = new WhatIfPanel(api, contestId);
  }

  async load(): Promise<void> {
    try {
      this.contest = await this.api.getContest(this.contestId);
    } catch (err) {
      swap(
        this.root,
        el(
          "div",
          { class: "banner banner-retry" },
          el(
            "span",
            {},
            err instanceof NetworkError
              ? "The audit service is unreachable."
              : `Could not load the contest: ${err instanceof Error ? err.message : err}`,
          ),
          el(
            "button",
            { type: "button", id: "dashboard-retry", onclick: () => void this.load() },
            "Retry",
          ),
        ),
      );
      return;
    }
    this.render();
  }

  async refresh(): Promise<void> {
    await this.load();
  }

  private render(): void {
    const contest = this.contest;
    if (!contest) return;
    this.rounds.update(contest);
    swap(
      this.root,
      this.header(contest),
      this.statusBanner(contest),
      el(
        "section",
        { class: "panel", id: "trajectory-panel" },
        el("h3", {}, "Statistic trajectory"),
        renderTrajectory(contest),
      ),
      this.summary(contest),
      this.rounds.root,
      this.whatIf.root,
      this.roundLog(contest),
    );
  }

  private header(contest: Contest): HTMLElement {
    const name = typeof contest.meta.name === "string" ? contest.meta.name : "Contest";
    return el(
      "header",
      { class: "dashboard-header" },
      el("h2", {}, name),
      el("span", { class: `status-pill status-${contest.status}`, id: "status-pill" },
        contest.status),
      el(
        "button",
        { type: "button", id: "dashboard-refresh", onclick: () => void this.refresh() },
        "Refresh",
      ),
      el("div", { class: "contest-id" }, `id ${contest.contest_id}`),
    );
  }

  private statusBanner(contest: Contest): HTMLElement | null {
    const last: RoundJson | undefined = contest.rounds[contest.rounds.length - 1];
    if (contest.status === "certified") {
      return el(
        "div",
        { class: "banner banner-certify", id: "decision-banner" },
        el("strong", {}, "Certify."),
        ` The statistic crossed the certification threshold at n=${contest.n}.`,
      );
    }
    if (contest.status === "full-hand-count") {
      const reason =
        last?.decision.reason === "lower-threshold"
          ? "the statistic fell through the lower threshold"
          : "the audit reached its maximum sample size";
      return el(
        "div",
        { class: "banner banner-fullcount", id: "decision-banner" },
        el("strong", {}, "Full hand count."),
        ` Certification was not reached: ${reason}.`,
      );
    }
    if (last) {
      return el(
        "div",
        { class: "banner banner-continue", id: "decision-banner" },
        `Continue: keep drawing ballots (n=${contest.n} of at most ${contest.rule.max_sample}).`,
      );
    }
    return null;
  }

  private summary(contest: Contest): HTMLElement {
    const items: HTMLElement[] = [
      this.summaryItem("Sample size n", String(contest.n)),
      this.summaryItem("Winner ballots Y", String(contest.winner_count)),
      this.summaryItem(
        "Certify threshold",
        formatValue(contest.thresholds.upper),
        contest.thresholds.upper,
      ),
    ];
    if (contest.thresholds.lower !== undefined) {
      items.push(
        this.summaryItem(
          "Lower threshold",
          formatValue(contest.thresholds.lower),
          contest.thresholds.lower,
        ),
      );
    }
    const calibration = contest.meta.calibration as
      | Record<string, unknown>
      | undefined;
    if (calibration) {
      // the service calibrated this contest; show the nominal scale value
      // it reported alongside the achieved worst-case risk
      for (const key of ["nominal_alpha", "nominal_upset"]) {
        const value = calibration[key];
        if (typeof value === "number") {
          items.push(
            this.summaryItem(
              key === "nominal_alpha" ? "Nominal α" : "Nominal upset",
              `${(100 * value).toFixed(2)}%`,
              value,
              "calibrated-nominal",
            ),
          );
        }
      }
      const achieved = calibration["achieved_risk"];
      if (typeof achieved === "number") {
        items.push(
          this.summaryItem(
            "Achieved risk",
            `${(100 * achieved).toFixed(2)}%`,
            achieved,
            "achieved-risk",
          ),
        );
      }
    }
    const lastRound = contest.rounds[contest.rounds.length - 1];
    if (lastRound) {
      const value = parseLogStatistic(lastRound.log_statistic);
      items.push(
        this.summaryItem(
          contest.thresholds.decision_scale === "log" ? "Log statistic" : "Statistic",
          formatValue(value),
          lastRound.log_statistic,
          "current-statistic",
        ),
      );
    }
    return el("section", { class: "summary", id: "contest-summary" }, ...items);
  }

  private summaryItem(
    label: string,
    display: string,
    raw?: unknown,
    id?: string,
  ): HTMLElement {
    const value = el("span", { class: "summary-value" }, display);
    if (raw !== undefined) value.dataset.value = String(raw);
    if (id) value.id = id;
    return el("div", { class: "summary-item" }, el("span", { class: "summary-label" }, label), value);
  }

  private roundLog(contest: Contest): HTMLElement | null {
    if (contest.rounds.length === 0) return null;
    const rows = contest.rounds.map((round) =>
      el(
        "tr",
        {},
        el("td", {}, String(round.round_index)),
        el("td", {}, String(round.interpretations.length)),
        el("td", {}, String(round.n)),
        el("td", {}, String(round.Y)),
        el("td", {}, formatValue(parseLogStatistic(round.log_statistic))),
        el("td", {}, round.decision.kind),
      ),
    );
    return el(
      "section",
      { class: "panel", id: "round-log" },
      el("h3", {}, "Rounds"),
      el(
        "table",
        { class: "round-table" },
        el(
          "thead",
          {},
          el(
            "tr",
            {},
            el("th", {}, "#"),
            el("th", {}, "drawn"),
            el("th", {}, "n"),
            el("th", {}, "Y"),
            el("th", {}, "statistic"),
            el("th", {}, "decision"),
          ),
        ),
        el("tbody", {}, ...rows),
      ),
    );
  }
}
