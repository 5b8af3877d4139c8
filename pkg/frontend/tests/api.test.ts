/**
 * Client-level contract tests against the live service: payload shapes,
 * idempotent replays, conflict surfacing, and the non-finite statistic
 * encoding the chart relies on.
 */
import { describe, expect, inject, it } from "vitest";
import {
  ApiError,
  AuditApi,
  NetworkError,
  parseLogStatistic,
  type CreateContestBody,
} from "../src/api";

const api = new AuditApi(inject("baseUrl"));

function bravoContest(extra: Partial<CreateContestBody> = {}): CreateContestBody {
  return {
    method: { kind: "bravo", p1: 0.7 },
    scheme: "with-replacement",
    upper_threshold: 20,
    max_sample: 60,
    ...extra,
  };
}

describe("method catalog", () => {
  it("lists every statistic with its parameters", async () => {
    const methods = await api.methods();
    const kinds = methods.map((m) => m.kind);
    expect(kinds).toContain("bravo");
    expect(kinds).toContain("bayesian");
    expect(kinds).toContain("clip-audit");
    const bravo = methods.find((m) => m.kind === "bravo");
    expect(bravo?.params).toContain("p1");
    expect(bravo?.label.length).toBeGreaterThan(0);
  });
});

describe("contest creation", () => {
  it("returns the full contest snapshot", async () => {
    const contest = await api.createContest(bravoContest({ name: "Snapshot" }));
    expect(contest.status).toBe("open");
    expect(contest.n).toBe(0);
    expect(contest.rounds).toEqual([]);
    expect(contest.next_sequence_number).toBe(0);
    expect(contest.thresholds.decision_scale).toBe("log");
    expect(contest.meta.name).toBe("Snapshot");
    expect(typeof contest.thresholds.upper_scaled).toBe("number");
  });

  it("calibrates when alpha is given and reports the nominal scale", async () => {
    const contest = await api.createContest({
      method: { kind: "bravo", p1: 0.7 },
      scheme: "without-replacement",
      total_ballots: 400,
      max_sample: 80,
      alpha: 0.1,
    });
    const calibration = contest.meta.calibration as Record<string, unknown>;
    expect(calibration).toBeDefined();
    expect(calibration["raw_threshold"]).toBe(contest.rule.upper_threshold);
    expect(typeof calibration["nominal_alpha"]).toBe("number");
    expect(calibration["achieved_risk"]).toBeLessThanOrEqual(0.1);
  });

  it("replays an idempotency key instead of creating twice", async () => {
    const body = bravoContest({ idempotency_key: `key-${Math.random()}` });
    const first = await api.createContest(body);
    const second = await api.createContest(body);
    expect(second.contest_id).toBe(first.contest_id);
  });

  it("surfaces validation failures with the server's detail", async () => {
    await expect(
      api.createContest({
        method: { kind: "bravo", p1: 0.7 },
        scheme: "without-replacement",
        max_sample: 60,
      }),
    ).rejects.toThrowError(ApiError);
    try {
      await api.createContest(bravoContest({ upper_threshold: undefined }));
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(400);
      expect((err as ApiError).detail).toMatch(/alpha or an explicit/);
    }
  });
});

describe("round flow", () => {
  it("appends, replays identically, and rejects conflicts", async () => {
    const contest = await api.createContest(bravoContest());
    const body = { sequence_number: 0, winner_count: 4, round_size: 6 };
    const first = await api.postRound(contest.contest_id, body);
    expect(first.round.n).toBe(6);
    expect(first.round.Y).toBe(4);
    expect(first.next_sequence_number).toBe(1);

    // a network retry resends the same round; the service replays it
    const replay = await api.postRound(contest.contest_id, body);
    expect(replay.round).toEqual(first.round);
    expect(replay.next_sequence_number).toBe(1);
    const after = await api.getContest(contest.contest_id);
    expect(after.rounds.length).toBe(1);

    // same sequence number, different ballots: hard conflict
    await expect(
      api.postRound(contest.contest_id, {
        sequence_number: 0,
        winner_count: 5,
        round_size: 6,
      }),
    ).rejects.toMatchObject({ status: 409 });

    // skipping ahead names the expected sequence number for reconciliation
    try {
      await api.postRound(contest.contest_id, {
        sequence_number: 5,
        winner_count: 1,
        round_size: 2,
      });
      expect.unreachable();
    } catch (err) {
      expect((err as ApiError).extra["expected_sequence_number"]).toBe(1);
    }
  });

  it("encodes non-finite statistics as strings the client restores", () => {
    expect(parseLogStatistic(3.5)).toBe(3.5);
    expect(parseLogStatistic("inf")).toBe(Infinity);
    expect(parseLogStatistic("-inf")).toBe(-Infinity);
    expect(Number.isNaN(parseLogStatistic("nan"))).toBe(true);
  });
});

describe("projection", () => {
  it("returns one probability per size and margin, size 0 meaning now", async () => {
    const contest = await api.createContest(bravoContest());
    await api.postRound(contest.contest_id, {
      sequence_number: 0,
      winner_count: 4,
      round_size: 6,
    });
    const projection = await api.projection(contest.contest_id, [0, 30], [0.55, 0.7]);
    expect(projection.state).toEqual({ n: 6, winner_count: 4 });
    expect(projection.projections.length).toBe(2);
    for (const row of projection.projections) {
      expect(row.certify_probability["0"]).toBe(0.0);
      const p = row.certify_probability["30"];
      expect(p).toBeGreaterThan(0);
      expect(p).toBeLessThanOrEqual(1);
    }
  });
});

describe("transport failures", () => {
  it("raises NetworkError when the service cannot be reached", async () => {
    const dead = new AuditApi("http://127.0.0.1:9");
    await expect(dead.getContest("nope")).rejects.toThrowError(NetworkError);
  });
});
