/**
 * Contest wizard flows in a real DOM against the live service: successful
 * creation lands on the dashboard with the calibrated threshold, client-side
 * validation blocks bad schedules before any request, an unreachable service
 * keeps the form intact behind a retry banner, and server-side rejections
 * land on the field they name.
 */
import { beforeEach, describe, expect, inject, it } from "vitest";
import type { AuditApi } from "../src/api";
import { maybe, mountApp, q, selectValue, setValue, waitFor } from "./helpers";

const baseUrl = inject("baseUrl");
let api: AuditApi;

function fillBravo(opts: {
  p1: string;
  scheme: string;
  total?: string;
  maxSample: string;
  mode: "alpha" | "threshold";
  value: string;
  name?: string;
}): void {
  if (opts.name) setValue(q("#f-name"), opts.name);
  selectValue(q("#f-kind"), "bravo");
  setValue(q("#f-p1"), opts.p1);
  selectValue(q("#f-scheme"), opts.scheme);
  if (opts.total !== undefined) setValue(q("#f-total"), opts.total);
  setValue(q("#f-max-sample"), opts.maxSample);
  selectValue(q("#f-threshold-mode"), opts.mode);
  setValue(q(opts.mode === "alpha" ? "#f-alpha" : "#f-upper"), opts.value);
}

describe("contest wizard", () => {
  beforeEach(async () => {
    api = mountApp(baseUrl, "#/");
    // the kind select fills only once the catalog fetch resolves
    await waitFor(
      () => (maybe<HTMLSelectElement>("#f-kind")?.options.length ?? 0) > 0,
      "method catalog",
    );
  });

  it("creates a contest and shows the calibrated threshold on the dashboard", async () => {
    fillBravo({
      p1: "0.7",
      scheme: "without-replacement",
      total: "400",
      maxSample: "80",
      mode: "alpha",
      value: "0.1",
      name: "Ward 3",
    });
    q<HTMLButtonElement>("#wizard-submit").click();

    await waitFor(
      () => /^#\/contest\/[A-Za-z0-9-]+$/.test(window.location.hash),
      "navigation to the new contest",
    );
    const contestId = window.location.hash.replace("#/contest/", "");
    await waitFor(() => maybe("#calibrated-nominal") !== null, "dashboard summary");

    // every displayed number must match what the service reports directly
    const contest = await api.getContest(contestId);
    const calibration = contest.meta.calibration as Record<string, unknown>;
    const shown = q<HTMLElement>("#calibrated-nominal");
    expect(shown.dataset.value).toBe(String(calibration["nominal_alpha"]));
    expect(shown.textContent).toBe(
      `${(100 * (calibration["nominal_alpha"] as number)).toFixed(2)}%`,
    );
    expect(q("h2").textContent).toBe("Ward 3");
    expect(q("#status-pill").textContent).toBe("open");
  });

  it("rejects a schedule longer than the population without calling the server", async () => {
    fillBravo({
      p1: "0.6",
      scheme: "without-replacement",
      total: "100",
      maxSample: "200",
      mode: "alpha",
      value: "0.05",
    });
    q<HTMLButtonElement>("#wizard-submit").click();

    const err = q<HTMLElement>("#err-maxSample");
    expect(err.textContent).toMatch(/cannot exceed the 100-ballot population/);
    expect(window.location.hash).toBe("#/");
    expect(maybe("#contest-wizard")).not.toBeNull();
  });

  it("keeps the form and offers a retry when the service is unreachable", async () => {
    mountApp("http://127.0.0.1:9", "#/");
    await waitFor(
      () => (maybe<HTMLSelectElement>("#f-kind")?.options.length ?? 0) > 0,
      "fallback catalog",
    );
    fillBravo({
      p1: "0.65",
      scheme: "with-replacement",
      maxSample: "500",
      mode: "alpha",
      value: "0.05",
    });
    q<HTMLButtonElement>("#wizard-submit").click();

    await waitFor(() => maybe("#wizard-retry") !== null, "retry banner");
    const banner = q<HTMLElement>("#wizard-banner");
    expect(banner.className).toContain("banner-retry");
    expect(banner.textContent).toMatch(/Your inputs are kept/);
    expect(q<HTMLInputElement>("#f-p1").value).toBe("0.65");
    expect(q<HTMLInputElement>("#f-max-sample").value).toBe("500");
    expect(window.location.hash).toBe("#/");
  });

  it("maps a server-side rejection onto the field it names", async () => {
    // p1 = 0.51 over 10 ballots rounds onto the null tally; only the
    // server knows that, so this must come back as a 400 on the p1 field
    fillBravo({
      p1: "0.51",
      scheme: "without-replacement",
      total: "10",
      maxSample: "10",
      mode: "threshold",
      value: "20",
    });
    q<HTMLButtonElement>("#wizard-submit").click();

    await waitFor(
      () => (maybe<HTMLElement>("#err-p1")?.textContent ?? "") !== "",
      "field error from the server",
    );
    expect(q<HTMLElement>("#err-p1").textContent).toMatch(/alternative tally/);
    expect(window.location.hash).toBe("#/");
    const banner = q<HTMLElement>("#wizard-banner");
    expect(banner.classList.contains("hidden")).toBe(true);
  });
});
