/**
 * SVG builders for the three figure kinds.
 *
 * Everything is drawn into a fixed 560x360 frame with deterministic
 * formatting; rendering the same CSV twice yields identical bytes.
 */

import { loadColumns, Columns } from "./csv.js";

export const KINDS = ["scaling", "qq", "asclt-decay"] as const;
export type FigureKind = (typeof KINDS)[number];

const SCHEMAS: Record<FigureKind, readonly string[]> = {
  scaling: ["R", "log_R", "log_sigma_sq", "fit_log_sigma_sq"],
  qq: ["probability", "sample_quantile", "normal_quantile"],
  "asclt-decay": ["seed", "horizon", "weighted_ks", "median_ks"],
};

// ---------------------------------------------------------------------------
// Layout and scales
// ---------------------------------------------------------------------------

const W = 560;
const H = 360;
const MARGIN = { left: 64, right: 24, top: 40, bottom: 52 };
const PW = W - MARGIN.left - MARGIN.right;
const PH = H - MARGIN.top - MARGIN.bottom;

type Scale = (v: number) => number;

function xScale(min: number, max: number): Scale {
  return (v) => MARGIN.left + ((v - min) / (max - min || 1)) * PW;
}

function yScale(min: number, max: number): Scale {
  return (v) => MARGIN.top + PH - ((v - min) / (max - min || 1)) * PH;
}

function pad(min: number, max: number, frac = 0.06): [number, number] {
  const span = max - min || 1;
  return [min - frac * span, max + frac * span];
}

function niceTicks(min: number, max: number, count = 5): number[] {
  const rough = (max - min || 1) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    // avoid -0 labels
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function fmtTick(v: number): string {
  if (v === Math.round(v) && Math.abs(v) < 1e6) return String(Math.round(v));
  return String(parseFloat(v.toPrecision(4)));
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

// ---------------------------------------------------------------------------
// Shared frame pieces
// ---------------------------------------------------------------------------

interface Frame {
  x: Scale;
  y: Scale;
  xTicks: number[];
  yTicks: number[];
  xTickLabel?: (v: number) => string;
}

function openSvg(title: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
    `viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${W}" height="${H}" fill="#fff"/>\n` +
    `<text x="${MARGIN.left}" y="22" font-size="13" font-weight="600" fill="#222">${esc(title)}</text>\n`
  );
}

function axes(frame: Frame, xLabel: string, yLabel: string): string {
  const { x, y, xTicks, yTicks } = frame;
  const label = frame.xTickLabel ?? fmtTick;
  const x0 = MARGIN.left;
  const y0 = MARGIN.top + PH;
  let s = "";
  for (const v of yTicks) {
    const yy = y(v).toFixed(1);
    s += `<line x1="${x0}" y1="${yy}" x2="${x0 + PW}" y2="${yy}" stroke="#eee" stroke-width="0.6"/>\n`;
    s += `<text x="${x0 - 7}" y="${(y(v) + 3.5).toFixed(1)}" text-anchor="end" font-size="10" fill="#555">${esc(fmtTick(v))}</text>\n`;
  }
  for (const v of xTicks) {
    const xx = x(v).toFixed(1);
    s += `<line x1="${xx}" y1="${y0}" x2="${xx}" y2="${y0 + 4}" stroke="#333" stroke-width="0.6"/>\n`;
    s += `<text x="${xx}" y="${y0 + 16}" text-anchor="middle" font-size="10" fill="#555">${esc(label(v))}</text>\n`;
  }
  s += `<line x1="${x0}" y1="${MARGIN.top}" x2="${x0}" y2="${y0}" stroke="#333" stroke-width="0.8"/>\n`;
  s += `<line x1="${x0}" y1="${y0}" x2="${x0 + PW}" y2="${y0}" stroke="#333" stroke-width="0.8"/>\n`;
  s += `<text x="${x0 + PW / 2}" y="${H - 10}" text-anchor="middle" font-size="11" fill="#333">${esc(xLabel)}</text>\n`;
  s += `<text x="16" y="${MARGIN.top + PH / 2}" text-anchor="middle" font-size="11" fill="#333" transform="rotate(-90,16,${MARGIN.top + PH / 2})">${esc(yLabel)}</text>\n`;
  return s;
}

interface LegendEntry {
  label: string;
  color: string;
  width?: number;
  dash?: string;
  marker?: boolean;
}

function legend(entries: LegendEntry[], corner: "tl" | "tr" = "tr"): string {
  const lw = Math.max(...entries.map((e) => e.label.length)) * 5.6 + 34;
  const lx = corner === "tr" ? MARGIN.left + PW - lw - 6 : MARGIN.left + 10;
  let s = `<rect x="${lx - 4}" y="${MARGIN.top + 4}" width="${lw + 8}" height="${entries.length * 15 + 8}" rx="3" fill="#fff" fill-opacity="0.9" stroke="#ddd" stroke-width="0.5"/>\n`;
  entries.forEach((e, i) => {
    const ly = MARGIN.top + 15 + i * 15;
    if (e.marker) {
      s += `<circle cx="${lx + 8}" cy="${ly - 3}" r="3" fill="${e.color}"/>\n`;
    } else {
      s += `<line x1="${lx}" y1="${ly - 3}" x2="${lx + 16}" y2="${ly - 3}" stroke="${e.color}" stroke-width="${e.width ?? 1.5}"${e.dash ? ` stroke-dasharray="${e.dash}"` : ""}/>\n`;
    }
    s += `<text x="${lx + 22}" y="${ly}" font-size="10" fill="#444">${esc(e.label)}</text>\n`;
  });
  return s;
}

function polyline(
  xs: number[], ys: number[], frame: Frame, color: string,
  width: number, extra = ""
): string {
  const pts = xs
    .map((v, i) => `${frame.x(v).toFixed(1)},${frame.y(ys[i]).toFixed(1)}`)
    .join(" ");
  return `<polyline fill="none" stroke="${color}" stroke-width="${width}"${extra} points="${pts}"/>\n`;
}

// ---------------------------------------------------------------------------
// Figure kinds
// ---------------------------------------------------------------------------

function scalingChart(cols: Columns): string {
  const { log_R, log_sigma_sq, fit_log_sigma_sq } = cols;
  // the fit column is affine in log_R, so its endpoints give the slope back
  const last = log_R.length - 1;
  const beta = (fit_log_sigma_sq[last] - fit_log_sigma_sq[0]) / (log_R[last] - log_R[0]);

  const [xMin, xMax] = pad(Math.min(...log_R), Math.max(...log_R));
  const all = [...log_sigma_sq, ...fit_log_sigma_sq];
  const [yMin, yMax] = pad(Math.min(...all), Math.max(...all));
  const frame: Frame = {
    x: xScale(xMin, xMax),
    y: yScale(yMin, yMax),
    xTicks: niceTicks(xMin, xMax),
    yTicks: niceTicks(yMin, yMax),
  };

  let s = openSvg("Spatial-average variance scaling");
  s += axes(frame, "log R", "log sigma_R^2");
  s += polyline(log_R, fit_log_sigma_sq, frame, "#c1121f", 1.5);
  for (let i = 0; i < log_R.length; i++) {
    s += `<circle cx="${frame.x(log_R[i]).toFixed(1)}" cy="${frame.y(log_sigma_sq[i]).toFixed(1)}" r="3.5" fill="#1d3557"/>\n`;
  }
  s += legend([
    { label: "measured log sigma_R^2", color: "#1d3557", marker: true },
    { label: `fit, slope β̂ = ${beta.toFixed(3)}`, color: "#c1121f" },
  ]);
  return s + "</svg>\n";
}

function qqChart(cols: Columns): string {
  const { sample_quantile, normal_quantile } = cols;
  const lo = Math.min(...sample_quantile, ...normal_quantile);
  const hi = Math.max(...sample_quantile, ...normal_quantile);
  const [min, max] = pad(lo, hi);
  const frame: Frame = {
    x: xScale(min, max),
    y: yScale(min, max),
    xTicks: niceTicks(min, max),
    yTicks: niceTicks(min, max),
  };

  let s = openSvg("Normalised spatial average vs standard normal");
  s += axes(frame, "Normal quantile", "Sample quantile");
  s += polyline([lo, hi], [lo, hi], frame, "#999", 1, ' stroke-dasharray="5,4"');
  for (let i = 0; i < normal_quantile.length; i++) {
    s += `<circle cx="${frame.x(normal_quantile[i]).toFixed(1)}" cy="${frame.y(sample_quantile[i]).toFixed(1)}" r="1.6" fill="#1d3557" fill-opacity="0.65"/>\n`;
  }
  s += legend(
    [
      { label: "quantile pairs", color: "#1d3557", marker: true },
      { label: "diagonal", color: "#999", dash: "5,4", width: 1 },
    ],
    "tl"
  );
  return s + "</svg>\n";
}

function ascltDecayChart(cols: Columns): string {
  const { seed, horizon, weighted_ks, median_ks } = cols;

  // group the per-seed trajectories, keeping first-seen seed order
  const bySeed = new Map<number, { h: number[]; ks: number[] }>();
  for (let i = 0; i < seed.length; i++) {
    const entry = bySeed.get(seed[i]) ?? { h: [], ks: [] };
    entry.h.push(horizon[i]);
    entry.ks.push(weighted_ks[i]);
    bySeed.set(seed[i], entry);
  }
  const medians = new Map<number, number>();
  for (let i = 0; i < horizon.length; i++) medians.set(horizon[i], median_ks[i]);
  const medH = [...medians.keys()].sort((a, b) => a - b);
  const medKs = medH.map((h) => medians.get(h)!);

  const logs = horizon.map(Math.log);
  const [xMin, xMax] = pad(Math.min(...logs), Math.max(...logs), 0.04);
  const [yMin, yMax] = pad(0, Math.max(...weighted_ks));
  const frame: Frame = {
    x: xScale(xMin, xMax),
    y: yScale(yMin, yMax),
    xTicks: medH.map(Math.log),
    yTicks: niceTicks(yMin, yMax),
    xTickLabel: (v) => fmtTick(Math.exp(v)),
  };

  let s = openSvg("Log-averaged empirical law: distance to normal");
  s += axes(frame, "T (log scale)", "weighted KS");
  for (const { h, ks } of bySeed.values()) {
    s += polyline(h.map(Math.log), ks, frame, "#8d99ae", 0.8, ' stroke-opacity="0.7"');
  }
  s += polyline(medH.map(Math.log), medKs, frame, "#c1121f", 2.5);
  s += legend([
    { label: "single realisation", color: "#8d99ae", width: 0.8 },
    { label: "median over seeds", color: "#c1121f", width: 2.5 },
  ]);
  return s + "</svg>\n";
}

// ---------------------------------------------------------------------------

const BUILDERS: Record<FigureKind, (cols: Columns) => string> = {
  scaling: scalingChart,
  qq: qqChart,
  "asclt-decay": ascltDecayChart,
};

export function renderFigure(kind: string, csvPath: string): string {
  if (!(KINDS as readonly string[]).includes(kind)) {
    throw new Error(`unknown figure kind "${kind}"; expected one of ${KINDS.join(", ")}`);
  }
  const k = kind as FigureKind;
  return BUILDERS[k](loadColumns(csvPath, SCHEMAS[k]));
}
