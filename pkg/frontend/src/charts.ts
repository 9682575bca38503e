// Small SVG chart helpers: pure scale/path math plus thin DOM builders.

export interface Scale {
  (x: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number],
                            range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  fn.range = range;
  return fn;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

export function pathFrom(xs: number[], ys: number[], x: Scale,
                         y: Scale): string {
  let d = "";
  for (let i = 0; i < xs.length; i++) {
    if (!Number.isFinite(xs[i]) || !Number.isFinite(ys[i])) continue;
    const cmd = d === "" ? "M" : "L";
    d += `${cmd}${x(xs[i]).toFixed(2)},${y(ys[i]).toFixed(2)}`;
  }
  return d;
}

export function formatSlope(slope: number): string {
  const s = slope.toFixed(3);
  return s === "-0.000" ? "0.000" : s;
}

export function formatAmps(a: number | null): string {
  if (a === null || !Number.isFinite(a)) return "-";
  return `${(a * 1e9).toFixed(2)} nA`;
}

// Overlay segment for a fitted slope line in log-log space:
// log10(sigma) = slope * log10(a) + intercept, drawn across [a_lo, a_hi].
export function slopeSegment(slope: number, intercept: number,
                             logALo: number, logAHi: number,
                             x: Scale, y: Scale):
    { x1: number; y1: number; x2: number; y2: number } {
  return {
    x1: x(logALo),
    y1: y(slope * logALo + intercept),
    x2: x(logAHi),
    y2: y(slope * logAHi + intercept),
  };
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function el<K extends keyof SVGElementTagNameMap>(
    doc: Document, tag: K,
    attrs: Record<string, string | number> = {}): SVGElementTagNameMap[K] {
  const node = doc.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, String(v));
  }
  return node;
}

export const BRANCH_COLORS: Record<string, string> = {
  "descending-1": "#d62728",
  "ascending": "#1f77b4",
  "descending-2": "#ff7f0e",
  "ascending-1": "#1f77b4",
  "descending": "#d62728",
  "ascending-2": "#2ca02c",
};

export function branchColor(branch: string): string {
  return BRANCH_COLORS[branch] ?? "#7f7f7f";
}
