/**
 * Gradient-boosted regression trees on logistic loss.
 *
 * Second-order boosting with histogram splits over per-feature quantile
 * bins: per round g = p - y and h = p(1 - p); split gain
 * 0.5*(GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)) - gamma,
 * accepted only if positive with at least minInstances rows per child;
 * leaf value -sign(G)*max(|G|-alpha, 0)/(H+lambda); raw scores start at
 * 0 and advance by stepSize per round. Depth counts edges (maxDepth 1
 * is a stump). Deterministic for a given seed; seed-free when subsample
 * and colsample are both 1.
 */

import { SplitMix64 } from "./rng.js";

export interface NumericDataset {
  /** Row-major n x d feature matrix. */
  features: Float64Array;
  nRows: number;
  nCols: number;
  /** 0/1 labels, length n. */
  labels: Int8Array;
}

export interface GbtParams {
  maxDepth: number;
  stepSize: number;
  rounds: number;
  subsample: number;
  colsample: number;
  alpha: number;
  lambda: number;
  gamma: number;
  maxBins: number;
  minInstances: number;
}

export const DEFAULT_PARAMS: GbtParams = {
  maxDepth: 6,
  stepSize: 0.3,
  rounds: 50,
  subsample: 1.0,
  colsample: 1.0,
  alpha: 0.0,
  lambda: 1.0,
  gamma: 0.0,
  maxBins: 256,
  minInstances: 1,
};

interface ParamSpec {
  field: keyof GbtParams;
  integer: boolean;
  check: (v: number) => boolean;
  range: string;
}

/** Wire-protocol hyperparameter names and their validity ranges. */
export const PARAM_SPECS: Record<string, ParamSpec> = {
  max_depth: { field: "maxDepth", integer: true, check: (v) => v >= 1, range: ">= 1" },
  step_size: { field: "stepSize", integer: false, check: (v) => v >= 0, range: ">= 0" },
  max_iteration: { field: "rounds", integer: true, check: (v) => v >= 1, range: ">= 1" },
  subsample: { field: "subsample", integer: false, check: (v) => v > 0 && v <= 1, range: "in (0, 1]" },
  colsample: { field: "colsample", integer: false, check: (v) => v > 0 && v <= 1, range: "in (0, 1]" },
  alpha: { field: "alpha", integer: false, check: (v) => v >= 0, range: ">= 0" },
  lambda: { field: "lambda", integer: false, check: (v) => v >= 0, range: ">= 0" },
  gamma: { field: "gamma", integer: false, check: (v) => v >= 0, range: ">= 0" },
  max_bins: { field: "maxBins", integer: true, check: (v) => v >= 2, range: ">= 2" },
  min_instances: { field: "minInstances", integer: true, check: (v) => v >= 1, range: ">= 1" },
};

export const HYPERPARAMETER_NAMES = Object.keys(PARAM_SPECS);

/** Defaults overridden by protocol hyperparameters; throws on unknown names. */
export function paramsFromHyperparams(hyperparams: Record<string, unknown>): GbtParams {
  const unknown = Object.keys(hyperparams).filter((k) => !(k in PARAM_SPECS));
  if (unknown.length > 0) {
    throw new Error(`unknown hyperparameters: ${unknown.sort().join(", ")}`);
  }
  const params = { ...DEFAULT_PARAMS };
  for (const [name, raw] of Object.entries(hyperparams)) {
    const spec = PARAM_SPECS[name];
    if (typeof raw !== "number" || !Number.isFinite(raw)) {
      throw new Error(`hyperparameter ${name} must be a finite number, got ${JSON.stringify(raw)}`);
    }
    if (spec.integer && !Number.isInteger(raw)) {
      throw new Error(`hyperparameter ${name} must be an integer, got ${raw}`);
    }
    if (!spec.check(raw)) {
      throw new Error(`hyperparameter ${name} must be ${spec.range}, got ${raw}`);
    }
    params[spec.field] = raw;
  }
  return params;
}

interface TreeNode {
  feature: number; // -1 marks a leaf
  cutBin: number;
  left: number;
  right: number;
  value: number;
}

function sigmoid(x: number): number {
  return x >= 0 ? 1 / (1 + Math.exp(-x)) : Math.exp(x) / (1 + Math.exp(x));
}

function quantileSorted(sorted: Float64Array, q: number): number {
  const pos = q * (sorted.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  if (lo === hi) return sorted[lo];
  return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

/** Per-feature cut points: midpoints of uniques, or deduped quantiles. */
export function computeBinCuts(data: NumericDataset, maxBins: number): Float64Array[] {
  const cuts: Float64Array[] = [];
  for (let j = 0; j < data.nCols; j++) {
    const column = new Float64Array(data.nRows);
    for (let i = 0; i < data.nRows; i++) column[i] = data.features[i * data.nCols + j];
    column.sort();
    const uniques: number[] = [];
    for (let i = 0; i < column.length; i++) {
      if (i === 0 || column[i] !== column[i - 1]) uniques.push(column[i]);
    }
    let raw: number[];
    if (uniques.length <= maxBins) {
      raw = [];
      for (let i = 0; i + 1 < uniques.length; i++) raw.push((uniques[i] + uniques[i + 1]) / 2);
    } else {
      raw = [];
      for (let i = 1; i < maxBins; i++) raw.push(quantileSorted(column, i / maxBins));
    }
    const deduped: number[] = [];
    for (const c of raw) {
      if (deduped.length === 0 || c !== deduped[deduped.length - 1]) deduped.push(c);
    }
    cuts.push(Float64Array.from(deduped));
  }
  return cuts;
}

function upperBound(cuts: Float64Array, x: number): number {
  let lo = 0;
  let hi = cuts.length;
  while (lo < hi) {
    const mid = (lo + hi) >>> 1;
    if (cuts[mid] <= x) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

export function binFeatures(data: NumericDataset, cuts: Float64Array[]): Int32Array {
  const binned = new Int32Array(data.nRows * data.nCols);
  for (let i = 0; i < data.nRows; i++) {
    for (let j = 0; j < data.nCols; j++) {
      binned[i * data.nCols + j] = upperBound(cuts[j], data.features[i * data.nCols + j]);
    }
  }
  return binned;
}

export class GradientBoostedTrees {
  private trees: TreeNode[][] = [];
  private cuts: Float64Array[] = [];
  private nCols = 0;

  constructor(private readonly params: GbtParams) {}

  fit(data: NumericDataset, seed: number): void {
    let positives = 0;
    for (let i = 0; i < data.nRows; i++) positives += data.labels[i];
    if (positives === 0 || positives === data.nRows) {
      throw new Error("training labels contain a single class");
    }
    const p = this.params;
    this.nCols = data.nCols;
    this.cuts = computeBinCuts(data, p.maxBins);
    const binned = binFeatures(data, this.cuts);
    const nBins = this.cuts.map((c) => c.length + 1);
    const n = data.nRows;
    const d = data.nCols;
    const needRng = p.subsample < 1 || p.colsample < 1;
    const rng = needRng ? new SplitMix64(seed) : null;
    const nSub = Math.max(1, Math.round(p.subsample * n));
    const nCol = Math.max(1, Math.round(p.colsample * d));

    const scores = new Float64Array(n);
    const g = new Float64Array(n);
    const h = new Float64Array(n);
    const allRows = new Int32Array(n);
    for (let i = 0; i < n; i++) allRows[i] = i;
    const allCols = new Int32Array(d);
    for (let j = 0; j < d; j++) allCols[j] = j;

    this.trees = [];
    for (let round = 0; round < p.rounds; round++) {
      for (let i = 0; i < n; i++) {
        const prob = sigmoid(scores[i]);
        g[i] = prob - data.labels[i];
        h[i] = prob * (1 - prob);
      }
      const rows = rng && p.subsample < 1 ? rng.sampleWithoutReplacement(n, nSub) : allRows;
      const cols = rng && p.colsample < 1 ? rng.sampleWithoutReplacement(d, nCol) : allCols;
      const tree = growTree(binned, d, nBins, g, h, rows, cols, p);
      this.trees.push(tree);
      if (tree.length > 1 || tree[0].value !== 0) {
        for (let i = 0; i < n; i++) {
          scores[i] += p.stepSize * applyTree(tree, binned, d, i);
        }
      }
    }
  }

  /** Probability of label 1 per row. */
  predict(data: NumericDataset): Float64Array {
    if (data.nCols !== this.nCols) {
      throw new Error(`feature width ${data.nCols} does not match training width ${this.nCols}`);
    }
    const binned = binFeatures(data, this.cuts);
    const out = new Float64Array(data.nRows);
    for (let i = 0; i < data.nRows; i++) {
      let score = 0;
      for (const tree of this.trees) {
        score += this.params.stepSize * applyTree(tree, binned, data.nCols, i);
      }
      out[i] = sigmoid(score);
    }
    return out;
  }
}

function leafValue(G: number, H: number, params: GbtParams): number {
  const denom = H + params.lambda;
  if (denom <= 0) return 0;
  const shrunk = Math.max(Math.abs(G) - params.alpha, 0);
  return -Math.sign(G) * (shrunk / denom);
}

const ZERO_TREE: TreeNode[] = [{ feature: -1, cutBin: -1, left: -1, right: -1, value: 0 }];

function growTree(
  binned: Int32Array,
  d: number,
  nBins: number[],
  g: Float64Array,
  h: Float64Array,
  rows: Int32Array,
  cols: Int32Array,
  params: GbtParams,
): TreeNode[] {
  const nodes: TreeNode[] = [];

  const newNode = (): number => {
    nodes.push({ feature: -1, cutBin: -1, left: -1, right: -1, value: 0 });
    return nodes.length - 1;
  };

  interface Best {
    feature: number;
    cutBin: number;
    gain: number;
  }

  const bestSplit = (nodeRows: Int32Array): Best | null => {
    let G = 0;
    let H = 0;
    for (let i = 0; i < nodeRows.length; i++) {
      G += g[nodeRows[i]];
      H += h[nodeRows[i]];
    }
    const lam = params.lambda;
    const parent = H + lam > 0 ? (G * G) / (H + lam) : 0;
    let best: Best | null = null;
    for (let c = 0; c < cols.length; c++) {
      const j = cols[c];
      const bins = nBins[j];
      if (bins < 2) continue;
      const count = new Int32Array(bins);
      const gSum = new Float64Array(bins);
      const hSum = new Float64Array(bins);
      for (let i = 0; i < nodeRows.length; i++) {
        const r = nodeRows[i];
        const b = binned[r * d + j];
        count[b]++;
        gSum[b] += g[r];
        hSum[b] += h[r];
      }
      let cl = 0;
      let GL = 0;
      let HL = 0;
      for (let b = 0; b + 1 < bins; b++) {
        cl += count[b];
        GL += gSum[b];
        HL += hSum[b];
        const cr = nodeRows.length - cl;
        if (cl < params.minInstances || cr < params.minInstances) continue;
        const dl = HL + lam;
        const dr = H - HL + lam;
        if (dl <= 0 || dr <= 0) continue;
        const GR = G - GL;
        const gain = 0.5 * ((GL * GL) / dl + (GR * GR) / dr - parent) - params.gamma;
        if (gain > 0 && (best === null || gain > best.gain)) {
          best = { feature: j, cutBin: b, gain };
        }
      }
    }
    return best;
  };

  const build = (
    nodeRows: Int32Array,
    depth: number,
    slot: number,
    precomputed?: Best | null,
  ): void => {
    const split =
      precomputed !== undefined
        ? precomputed
        : depth < params.maxDepth
          ? bestSplit(nodeRows)
          : null;
    if (split === null) {
      let G = 0;
      let H = 0;
      for (let i = 0; i < nodeRows.length; i++) {
        G += g[nodeRows[i]];
        H += h[nodeRows[i]];
      }
      nodes[slot].value = leafValue(G, H, params);
      return;
    }
    let nLeft = 0;
    for (let i = 0; i < nodeRows.length; i++) {
      if (binned[nodeRows[i] * d + split.feature] <= split.cutBin) nLeft++;
    }
    const leftRows = new Int32Array(nLeft);
    const rightRows = new Int32Array(nodeRows.length - nLeft);
    let li = 0;
    let ri = 0;
    for (let i = 0; i < nodeRows.length; i++) {
      const r = nodeRows[i];
      if (binned[r * d + split.feature] <= split.cutBin) leftRows[li++] = r;
      else rightRows[ri++] = r;
    }
    nodes[slot].feature = split.feature;
    nodes[slot].cutBin = split.cutBin;
    nodes[slot].left = newNode();
    build(leftRows, depth + 1, nodes[slot].left);
    nodes[slot].right = newNode();
    build(rightRows, depth + 1, nodes[slot].right);
  };

  const root = newNode();
  // An unsplittable root yields a zero tree so blanket split rejection
  // (huge gamma) leaves predictions at 0.5.
  const rootSplit = bestSplit(rows);
  if (rootSplit === null) return ZERO_TREE;
  build(rows, 0, root, rootSplit);
  return nodes;
}

function applyTree(tree: TreeNode[], binned: Int32Array, d: number, row: number): number {
  let node = 0;
  while (tree[node].feature >= 0) {
    const { feature, cutBin, left, right } = tree[node];
    node = binned[row * d + feature] <= cutBin ? left : right;
  }
  return tree[node].value;
}
