/**
 * Contest creation wizard.
 *
 * Validation here mirrors the server's rules so auditors get immediate
 * feedback, but the server stays authoritative: any 400/422 it returns is
 * surfaced on the matching field. A network failure keeps the form intact
 * behind a retry banner; the idempotency key makes the retry safe even if
 * the first request actually landed.
 */
import {
  ApiError,
  NetworkError,
  type AuditApi,
  type Contest,
  type CreateContestBody,
  type MethodInfo,
  type MethodJson,
} from "./api";
import { el, swap } from "./dom";

interface Fields {
  name: HTMLInputElement;
  kind: HTMLSelectElement;
  p1: HTMLInputElement;
  gamma: HTMLInputElement;
  priorVariant: HTMLSelectElement;
  priorA: HTMLInputElement;
  priorB: HTMLInputElement;
  scheme: HTMLSelectElement;
  totalBallots: HTMLInputElement;
  maxSample: HTMLInputElement;
  increment: HTMLInputElement;
  minSample: HTMLInputElement;
  thresholdMode: HTMLSelectElement;
  alpha: HTMLInputElement;
  upperThreshold: HTMLInputElement;
  lowerThreshold: HTMLInputElement;
}

type FieldName = keyof Fields;

// maps a server detail message onto the field that caused it
const SERVER_FIELD_PATTERNS: Array<[RegExp, FieldName]> = [
  [/p1|alternative (share|tally)/i, "p1"],
  [/gamma/i, "gamma"],
  [/prior/i, "priorVariant"],
  [/alpha|risk limit/i, "alpha"],
  [/total[ _]ballots|population/i, "totalBallots"],
  [/max[ _]sample|schedule|increment/i, "maxSample"],
  [/lower/i, "lowerThreshold"],
  [/threshold/i, "upperThreshold"],
];

const PARAM_FIELDS: Record<string, FieldName[]> = {
  p1: ["p1"],
  gamma: ["gamma"],
  prior: ["priorVariant", "priorA", "priorB"],
};

export class ContestWizard {
  private readonly fields: Fields;
  private readonly errors = new Map<FieldName, HTMLElement>();
  private readonly banner: HTMLElement;
  private readonly submitButton: HTMLButtonElement;
  private readonly form: HTMLFormElement;
  private catalog: MethodInfo[] = [];
  private idempotencyKey = freshKey();

  constructor(
    private readonly api: AuditApi,
    private readonly onCreated: (contest: Contest) => void,
  ) {
    this.fields = {
      name: el("input", { type: "text", id: "f-name", placeholder: "Contest name" }),
      kind: el("select", { id: "f-kind" }),
      p1: el("input", { type: "number", id: "f-p1", step: "0.01", value: "0.55" }),
      gamma: el("input", { type: "number", id: "f-gamma", step: "0.01", value: "0.5" }),
      priorVariant: el("select", { id: "f-prior-variant" }),
      priorA: el("input", { type: "number", id: "f-prior-a", step: "any", value: "1" }),
      priorB: el("input", { type: "number", id: "f-prior-b", step: "any", value: "1" }),
      scheme: el("select", { id: "f-scheme" }),
      totalBallots: el("input", { type: "number", id: "f-total", value: "10000" }),
      maxSample: el("input", { type: "number", id: "f-max-sample", value: "1000" }),
      increment: el("input", { type: "number", id: "f-increment", value: "1" }),
      minSample: el("input", { type: "number", id: "f-min-sample", value: "0" }),
      thresholdMode: el("select", { id: "f-threshold-mode" }),
      alpha: el("input", { type: "number", id: "f-alpha", step: "0.01", value: "0.05" }),
      upperThreshold: el("input", { type: "number", id: "f-upper", step: "any" }),
      lowerThreshold: el("input", { type: "number", id: "f-lower", step: "any" }),
    };
    this.fields.scheme.append(
      el("option", { value: "without-replacement" }, "without replacement"),
      el("option", { value: "with-replacement" }, "with replacement"),
    );
    this.fields.thresholdMode.append(
      el("option", { value: "alpha" }, "calibrate to a risk limit"),
      el("option", { value: "threshold" }, "explicit threshold"),
    );
    this.banner = el("div", { class: "banner hidden", id: "wizard-banner" });
    this.submitButton = el("button", { type: "submit", id: "wizard-submit" }, "Create contest");
    this.form = this.buildForm();
  }

  async mount(root: HTMLElement): Promise<void> {
    swap(root, el("h2", {}, "New contest"), this.banner, this.form);
    try {
      this.catalog = await this.api.methods();
    } catch {
      // an empty catalog leaves a plain text input path unusable, so fall
      // back to the known kinds; the server still validates
      this.catalog = FALLBACK_CATALOG;
    }
    swap(
      this.fields.kind,
      ...this.catalog.map((m) => el("option", { value: m.kind }, m.label)),
    );
    this.syncVisibility();
  }

  private buildForm(): HTMLFormElement {
    const f = this.fields;
    const form = el(
      "form",
      { id: "contest-wizard", onsubmit: (ev) => void this.handleSubmit(ev) },
      this.row("name", "Name", f.name),
      this.row("kind", "Statistic", f.kind),
      this.row("p1", "Alternative share p1", f.p1),
      this.row("gamma", "Gamma", f.gamma),
      this.row("priorVariant", "Prior", f.priorVariant),
      this.row("priorA", "Prior a", f.priorA),
      this.row("priorB", "Prior b", f.priorB),
      this.row("scheme", "Sampling", f.scheme),
      this.row("totalBallots", "Total ballots N", f.totalBallots),
      this.row("maxSample", "Max sample m", f.maxSample),
      this.row("increment", "Check every k draws", f.increment),
      this.row("minSample", "Min sample before deciding", f.minSample),
      this.row("thresholdMode", "Threshold", f.thresholdMode),
      this.row("alpha", "Risk limit α", f.alpha),
      this.row("upperThreshold", "Upper threshold", f.upperThreshold),
      this.row("lowerThreshold", "Lower threshold (optional)", f.lowerThreshold),
      el("div", { class: "form-actions" }, this.submitButton),
    );
    f.kind.addEventListener("change", () => this.syncVisibility());
    f.scheme.addEventListener("change", () => this.syncVisibility());
    f.thresholdMode.addEventListener("change", () => this.syncVisibility());
    return form;
  }

  private row(name: FieldName, label: string, input: HTMLElement): HTMLElement {
    const error = el("span", { class: "field-error hidden", id: `err-${name}` });
    this.errors.set(name, error);
    return el(
      "div",
      { class: "form-row", id: `row-${name}` },
      el("label", { for: input.id }, label),
      input,
      error,
    );
  }

  private selectedMethod(): MethodInfo | undefined {
    return this.catalog.find((m) => m.kind === this.fields.kind.value);
  }

  private syncVisibility(): void {
    const method = this.selectedMethod();
    const params = new Set(method?.params ?? []);
    for (const [param, fields] of Object.entries(PARAM_FIELDS)) {
      for (const field of fields) {
        this.setRowVisible(field, params.has(param));
      }
    }
    if (params.has("prior")) {
      swap(
        this.fields.priorVariant,
        ...(method?.priors ?? []).map((p) => el("option", { value: p }, p)),
      );
    }
    this.setRowVisible(
      "totalBallots",
      this.fields.scheme.value === "without-replacement",
    );
    const calibrating = this.fields.thresholdMode.value === "alpha";
    this.setRowVisible("alpha", calibrating);
    this.setRowVisible("upperThreshold", !calibrating);
  }

  private setRowVisible(name: FieldName, visible: boolean): void {
    const row = this.form.querySelector<HTMLElement>(`#row-${name}`);
    if (row) row.classList.toggle("hidden", !visible);
  }

  private setError(name: FieldName, message: string | null): void {
    const slot = this.errors.get(name);
    if (!slot) return;
    slot.textContent = message ?? "";
    slot.classList.toggle("hidden", message === null);
  }

  private clearErrors(): void {
    for (const name of this.errors.keys()) this.setError(name, null);
    this.banner.classList.add("hidden");
  }

  private showBanner(message: string, retry: boolean): void {
    swap(
      this.banner,
      el("span", {}, message),
      retry
        ? el(
            "button",
            { type: "button", id: "wizard-retry", onclick: () => void this.submit() },
            "Retry",
          )
        : null,
    );
    this.banner.classList.remove("hidden");
    this.banner.className = retry ? "banner banner-retry" : "banner banner-error";
  }

  /** Client-side checks that mirror the server's. Returns true when clean. */
  private validate(): boolean {
    const f = this.fields;
    let ok = true;
    const fail = (name: FieldName, message: string) => {
      this.setError(name, message);
      ok = false;
    };
    const withoutReplacement = f.scheme.value === "without-replacement";
    const total = Number(f.totalBallots.value);
    const maxSample = Number(f.maxSample.value);
    if (!Number.isInteger(maxSample) || maxSample < 1) {
      fail("maxSample", "must be a positive whole number");
    }
    if (withoutReplacement) {
      if (!Number.isInteger(total) || total < 1) {
        fail("totalBallots", "must be a positive whole number");
      } else if (maxSample > total) {
        fail("maxSample", `cannot exceed the ${total}-ballot population`);
      }
    }
    const params = new Set(this.selectedMethod()?.params ?? []);
    if (params.has("p1")) {
      const p1 = Number(f.p1.value);
      if (!(p1 > 0.5 && p1 <= 1)) fail("p1", "must lie in (0.5, 1]");
    }
    if (params.has("gamma")) {
      const gamma = Number(f.gamma.value);
      if (!(gamma > 0 && gamma <= 1)) fail("gamma", "must lie in (0, 1]");
    }
    if (params.has("prior")) {
      if (!(Number(f.priorA.value) > 0)) fail("priorA", "must be positive");
      if (!(Number(f.priorB.value) > 0)) fail("priorB", "must be positive");
    }
    if (f.thresholdMode.value === "alpha") {
      const alpha = Number(f.alpha.value);
      if (!(alpha > 0 && alpha < 1)) fail("alpha", "must lie in (0, 1)");
    } else if (!(Number(f.upperThreshold.value) > 0)) {
      fail("upperThreshold", "must be positive");
    }
    return ok;
  }

  private buildBody(): CreateContestBody {
    const f = this.fields;
    const method: MethodJson = { kind: f.kind.value };
    const params = new Set(this.selectedMethod()?.params ?? []);
    if (params.has("p1")) method.p1 = Number(f.p1.value);
    if (params.has("gamma")) method.gamma = Number(f.gamma.value);
    if (params.has("prior")) {
      method.prior = {
        variant: f.priorVariant.value,
        a: Number(f.priorA.value),
        b: Number(f.priorB.value),
      };
      if (f.priorVariant.value === "beta-binomial") {
        method.prior.total = Number(f.totalBallots.value);
      }
    }
    const body: CreateContestBody = {
      method,
      scheme: f.scheme.value,
      max_sample: Number(f.maxSample.value),
      increment: Number(f.increment.value) || 1,
      idempotency_key: this.idempotencyKey,
    };
    if (f.scheme.value === "without-replacement") {
      body.total_ballots = Number(f.totalBallots.value);
    }
    if (Number(f.minSample.value) > 0) body.min_sample = Number(f.minSample.value);
    if (f.thresholdMode.value === "alpha") {
      body.alpha = Number(f.alpha.value);
    } else {
      body.upper_threshold = Number(f.upperThreshold.value);
    }
    if (f.lowerThreshold.value !== "") {
      body.lower_threshold = Number(f.lowerThreshold.value);
    }
    if (f.name.value.trim() !== "") body.name = f.name.value.trim();
    return body;
  }

  private async handleSubmit(ev: Event): Promise<void> {
    ev.preventDefault();
    await this.submit();
  }

  async submit(): Promise<void> {
    this.clearErrors();
    if (!this.validate()) return;
    this.submitButton.disabled = true;
    try {
      const contest = await this.api.createContest(this.buildBody());
      this.idempotencyKey = freshKey();
      this.onCreated(contest);
    } catch (err) {
      if (err instanceof NetworkError) {
        this.showBanner(
          "The audit service is unreachable. Your inputs are kept; retry when it is back.",
          true,
        );
      } else if (err instanceof ApiError) {
        const field = SERVER_FIELD_PATTERNS.find(([re]) => re.test(err.detail));
        if (field) {
          this.setError(field[1], err.detail);
        } else {
          this.showBanner(err.detail, false);
        }
      } else {
        this.showBanner(String(err), false);
      }
    } finally {
      this.submitButton.disabled = false;
    }
  }
}

function freshKey(): string {
  return `ui-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}

const FALLBACK_CATALOG: MethodInfo[] = [
  { kind: "bravo", label: "BRAVO likelihood ratio", params: ["p1"] },
  {
    kind: "bayesian",
    label: "Bayesian posterior odds",
    params: ["prior"],
    priors: ["beta", "beta-binomial"],
  },
];
