/**
 * SVG trajectory chart: the running statistic per round against the
 * certification (and optional escalation) thresholds.
 *
 * Pure presentation. Statistic values and threshold positions arrive from
 * the service already on a common decision scale; this module only maps
 * them to pixels. Non-finite statistics are clamped to the plot edge and
 * marked, since they have no finite y-coordinate.
 */
import { parseLogStatistic, type Contest } from "./api";

const WIDTH = 640;
const HEIGHT = 280;
const PAD = { left: 58, right: 16, top: 18, bottom: 34 };

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

function text(x: number, y: number, label: string, cls: string): SVGTextElement {
  const node = svgEl("text", { x: String(x), y: String(y), class: cls });
  node.textContent = label;
  return node;
}

interface Point {
  n: number;
  raw: number | string;
  value: number;
}

export function renderTrajectory(contest: Contest): SVGSVGElement {
  const { thresholds, rule } = contest;
  const upper = Number(thresholds.upper_scaled);
  const lower =
    thresholds.lower_scaled === undefined ? null : Number(thresholds.lower_scaled);

  const points: Point[] = contest.rounds.map((round) => ({
    n: round.n,
    raw: round.log_statistic,
    value: parseLogStatistic(round.log_statistic),
  }));

  // y-domain spans the thresholds and every finite observation, padded so
  // lines never sit on the frame
  const finite = points.map((p) => p.value).filter(Number.isFinite);
  const candidates = [...finite, upper];
  if (lower !== null && Number.isFinite(lower)) candidates.push(lower);
  if (Number.isFinite(upper)) candidates.push(0);
  let yMin = Math.min(...candidates);
  let yMax = Math.max(...candidates);
  if (!Number.isFinite(yMin) || !Number.isFinite(yMax)) {
    yMin = -1;
    yMax = 1;
  }
  const span = yMax - yMin || 1;
  yMin -= 0.1 * span;
  yMax += 0.1 * span;

  const xMax = Math.max(rule.max_sample, 1);
  const plotW = WIDTH - PAD.left - PAD.right;
  const plotH = HEIGHT - PAD.top - PAD.bottom;
  const px = (n: number) => PAD.left + (n / xMax) * plotW;
  const py = (v: number) => {
    const clamped = Math.max(yMin, Math.min(yMax, v));
    return PAD.top + (1 - (clamped - yMin) / (yMax - yMin)) * plotH;
  };

  const svg = svgEl("svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    class: "trajectory",
    role: "img",
  });

  svg.append(
    svgEl("rect", {
      x: String(PAD.left),
      y: String(PAD.top),
      width: String(plotW),
      height: String(plotH),
      class: "chart-frame",
    }),
  );

  const scaleName =
    thresholds.decision_scale === "log" ? "log statistic" : "statistic";
  svg.append(text(PAD.left, HEIGHT - 8, `sample size (max ${xMax})`, "axis-label"));
  svg.append(text(8, PAD.top + 10, scaleName, "axis-label"));

  const drawThreshold = (value: number, cls: string, label: string) => {
    const y = py(value);
    const line = svgEl("line", {
      x1: String(PAD.left),
      x2: String(WIDTH - PAD.right),
      y1: String(y),
      y2: String(y),
      class: cls,
    });
    line.dataset.value = String(value);
    svg.append(line);
    svg.append(text(WIDTH - PAD.right - 4, y - 4, label, `${cls}-label`));
  };
  drawThreshold(upper, "threshold-upper", `certify at ${formatValue(upper)}`);
  if (lower !== null) {
    drawThreshold(lower, "threshold-lower", `full count at ${formatValue(lower)}`);
  }

  if (points.length > 0) {
    const path = points
      .map((p, i) => `${i === 0 ? "M" : "L"}${px(p.n)},${py(p.value)}`)
      .join(" ");
    svg.append(svgEl("path", { d: path, class: "trajectory-line" }));
  }

  for (const p of points) {
    const dot = svgEl("circle", {
      cx: String(px(p.n)),
      cy: String(py(p.value)),
      r: "3.5",
      class: Number.isFinite(p.value)
        ? "trajectory-point"
        : "trajectory-point clamped",
    });
    dot.dataset.n = String(p.n);
    dot.dataset.value = String(p.raw);
    dot.append(
      Object.assign(document.createElementNS(SVG_NS, "title"), {
        textContent: `n=${p.n}: ${formatValue(p.value)}`,
      }),
    );
    svg.append(dot);
  }

  return svg;
}

export function formatValue(v: number): string {
  if (!Number.isFinite(v)) return v > 0 ? "∞" : "-∞";
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 1000 || abs < 0.01) return v.toExponential(2);
  return v.toPrecision(4);
}
