/**
 * Typed client for the audit service /v1 API.
 *
 * Every number the UI displays originates from one of these responses; the
 * front end formats and positions values but never computes a statistic.
 */

export type ContestStatus = "open" | "certified" | "full-hand-count";

export interface MethodInfo {
  kind: string;
  label: string;
  params: string[];
  priors?: string[];
  notes?: string;
}

export interface PriorJson {
  variant: string;
  a: number;
  b: number;
  total?: number;
}

export interface MethodJson {
  kind: string;
  prior?: PriorJson;
  p1?: number;
  reported_share?: number;
  epsilon?: number;
  gamma?: number;
  null_mean?: number;
  scheme_variant?: string;
}

export interface RuleJson {
  upper_threshold: number;
  lower_threshold?: number;
  max_sample: number;
  increment?: number;
  min_sample?: number;
  schedule?: number[];
}

export interface SchemeJson {
  mode: string;
  total_ballots?: number;
}

/** Thresholds restated on the method's decision scale for charting. */
export interface ThresholdBlock {
  decision_scale: string;
  upper: number;
  upper_scaled: number | string;
  lower?: number;
  lower_scaled?: number | string;
}

export interface DecisionJson {
  kind: string;
  reason: string | null;
  flags: string[];
}

export interface RoundJson {
  round_index: number;
  interpretations: number[];
  n: number;
  Y: number;
  log_statistic: number | string;
  decision: DecisionJson;
}

export interface Contest {
  contest_id: string;
  status: ContestStatus;
  frozen: boolean;
  method: MethodJson;
  rule: RuleJson;
  scheme: SchemeJson;
  thresholds: ThresholdBlock;
  n: number;
  winner_count: number;
  next_sequence_number: number;
  rounds: RoundJson[];
  meta: Record<string, unknown>;
}

export interface RoundResponse {
  contest_id: string;
  round: RoundJson;
  status: ContestStatus;
  frozen: boolean;
  trajectory_point: { n: number; log_statistic: number | string };
  next_sequence_number: number;
}

export interface ProjectionCell {
  margin: number;
  certify_probability: Record<string, number>;
}

export interface ProjectionResponse {
  contest_id: string;
  state: { n: number; winner_count: number };
  status: ContestStatus;
  projections: ProjectionCell[];
}

export interface CreateContestBody {
  method: MethodJson;
  scheme?: string;
  total_ballots?: number;
  max_sample: number;
  increment?: number;
  min_sample?: number;
  alpha?: number;
  upper_threshold?: number;
  lower_threshold?: number;
  name?: string;
  idempotency_key?: string;
}

export type RoundBody =
  | { sequence_number: number; interpretations: number[] }
  | { sequence_number: number; winner_count: number; round_size: number };

/** Non-2xx response; carries the server's detail message and any extras. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
    readonly extra: Record<string, unknown> = {},
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

/** The request never reached the service (refused, DNS, timeout). */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(cause instanceof Error ? cause.message : String(cause));
    this.name = "NetworkError";
  }
}

/** The service serializes non-finite statistics as strings. */
export function parseLogStatistic(x: number | string): number {
  if (typeof x === "number") return x;
  if (x === "inf") return Infinity;
  if (x === "-inf") return -Infinity;
  return NaN;
}

export class AuditApi {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        headers: { "content-type": "application/json" },
        ...init,
      });
    } catch (err) {
      throw new NetworkError(err);
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const { detail, ...extra } = body as Record<string, unknown>;
      throw new ApiError(response.status, String(detail ?? response.statusText), extra);
    }
    return body as T;
  }

  async health(): Promise<boolean> {
    try {
      await this.request<{ status: string }>("/healthz");
      return true;
    } catch {
      return false;
    }
  }

  async methods(): Promise<MethodInfo[]> {
    const body = await this.request<{ methods: MethodInfo[] }>("/v1/methods");
    return body.methods;
  }

  /** Returns the created (or, for a replayed idempotency key, existing) contest. */
  createContest(body: CreateContestBody): Promise<Contest> {
    return this.request<Contest>("/v1/contests", {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getContest(contestId: string): Promise<Contest> {
    return this.request<Contest>(`/v1/contests/${contestId}`);
  }

  postRound(contestId: string, body: RoundBody): Promise<RoundResponse> {
    return this.request<RoundResponse>(`/v1/contests/${contestId}/rounds`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  projection(
    contestId: string,
    roundSizes: number[],
    margins: number[],
  ): Promise<ProjectionResponse> {
    const params = new URLSearchParams({
      round_sizes: roundSizes.join(","),
      margins: margins.join(","),
    });
    return this.request<ProjectionResponse>(
      `/v1/contests/${contestId}/projection?${params}`,
    );
  }
}
