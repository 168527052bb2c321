/**
 * Test-set metrics. "loss" on the wire is the metric value in its
 * natural orientation: AUC and accuracy higher-is-better, log-loss
 * lower-is-better.
 */

export type MetricName = "auc" | "logloss" | "accuracy";

const LOG_LOSS_EPS = 1e-12;

/** Area under the ROC curve via midranks (ties get half credit). */
export function auc(scores: ArrayLike<number>, labels: ArrayLike<number>): number {
  const n = scores.length;
  if (n !== labels.length) throw new Error("scores and labels differ in length");
  const order = Array.from({ length: n }, (_, i) => i).sort(
    (a, b) => scores[a] - scores[b],
  );
  const ranks = new Float64Array(n);
  let i = 0;
  while (i < n) {
    let j = i;
    while (j + 1 < n && scores[order[j + 1]] === scores[order[i]]) j++;
    const midrank = (i + j) / 2 + 1;
    for (let k = i; k <= j; k++) ranks[order[k]] = midrank;
    i = j + 1;
  }
  let nPos = 0;
  let rankSum = 0;
  for (let k = 0; k < n; k++) {
    if (labels[k] === 1) {
      nPos++;
      rankSum += ranks[k];
    }
  }
  const nNeg = n - nPos;
  if (nPos === 0 || nNeg === 0) throw new Error("auc needs both classes present");
  return (rankSum - (nPos * (nPos + 1)) / 2) / (nPos * nNeg);
}

export function logLoss(probs: ArrayLike<number>, labels: ArrayLike<number>): number {
  if (probs.length !== labels.length) throw new Error("probs and labels differ in length");
  let total = 0;
  for (let k = 0; k < probs.length; k++) {
    const p = Math.min(Math.max(probs[k], LOG_LOSS_EPS), 1 - LOG_LOSS_EPS);
    total += labels[k] === 1 ? -Math.log(p) : -Math.log1p(-p);
  }
  return total / probs.length;
}

export function accuracy(
  scores: ArrayLike<number>,
  labels: ArrayLike<number>,
  threshold = 0.5,
): number {
  if (scores.length !== labels.length) throw new Error("scores and labels differ in length");
  let hits = 0;
  for (let k = 0; k < scores.length; k++) {
    if ((scores[k] >= threshold ? 1 : 0) === labels[k]) hits++;
  }
  return hits / scores.length;
}

export function computeMetric(
  name: MetricName,
  scores: ArrayLike<number>,
  labels: ArrayLike<number>,
): number {
  switch (name) {
    case "auc":
      return auc(scores, labels);
    case "logloss":
      return logLoss(scores, labels);
    case "accuracy":
      return accuracy(scores, labels);
  }
}

export function isMetricName(name: string): name is MetricName {
  return name === "auc" || name === "logloss" || name === "accuracy";
}
