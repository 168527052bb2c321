import { describe, expect, it } from "vitest";

import { accuracy, auc, logLoss } from "../src/metrics.js";

function bruteForceAuc(scores: number[], labels: number[]): number {
  const pos = scores.filter((_, i) => labels[i] === 1);
  const neg = scores.filter((_, i) => labels[i] === 0);
  let credit = 0;
  for (const p of pos) {
    for (const q of neg) {
      if (p > q) credit += 1;
      else if (p === q) credit += 0.5;
    }
  }
  return credit / (pos.length * neg.length);
}

describe("auc", () => {
  it("is 1 for perfect separation", () => {
    expect(auc([0.9, 0.1], [1, 0])).toBe(1.0);
  });

  it("is 0.5 when all scores tie", () => {
    expect(auc([0.3, 0.3, 0.3, 0.3], [1, 0, 1, 0])).toBe(0.5);
  });

  it("matches the pairwise oracle on random inputs", () => {
    let state = 12345;
    const rand = () => {
      state = (state * 1103515245 + 12345) % 2 ** 31;
      return state / 2 ** 31;
    };
    for (let trial = 0; trial < 50; trial++) {
      const n = 5 + Math.floor(rand() * 30);
      const scores = Array.from({ length: n }, () => Math.round(rand() * 10) / 10);
      const labels = Array.from({ length: n }, () => (rand() < 0.5 ? 0 : 1));
      labels[0] = 0;
      labels[1] = 1;
      expect(auc(scores, labels)).toBeCloseTo(bruteForceAuc(scores, labels), 12);
    }
  });

  it("rejects single-class labels", () => {
    expect(() => auc([0.1, 0.2], [1, 1])).toThrow(/both classes/);
  });
});

describe("logLoss", () => {
  it("is ln 2 for coin-flip probabilities", () => {
    expect(logLoss([0.5, 0.5], [0, 1])).toBeCloseTo(Math.log(2), 12);
  });

  it("survives 0 and 1 via clipping", () => {
    expect(Number.isFinite(logLoss([0, 1], [1, 0]))).toBe(true);
  });
});

describe("accuracy", () => {
  it("treats the threshold as inclusive", () => {
    expect(accuracy([0.5], [1])).toBe(1.0);
  });

  it("counts matches", () => {
    expect(accuracy([0.9, 0.1, 0.8], [1, 0, 0])).toBeCloseTo(2 / 3, 12);
  });
});
