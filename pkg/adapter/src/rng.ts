/**
 * Deterministic seeded RNG (splitmix64) for row/column subsampling.
 *
 * The estimator only needs reproducible draws for a given seed; it does
 * not need to match any other engine's stream.
 */

const MASK64 = (1n << 64n) - 1n;

export class SplitMix64 {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt.asUintN(64, BigInt(Math.trunc(Number(seed)))) & MASK64;
  }

  nextUint53(): number {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    z = z ^ (z >> 31n);
    return Number(z >> 11n); // top 53 bits fit a double exactly
  }

  /** Uniform float in [0, 1). */
  nextFloat(): number {
    return this.nextUint53() / 2 ** 53;
  }

  /** Uniform integer in [0, bound). */
  nextBelow(bound: number): number {
    return Math.floor(this.nextFloat() * bound);
  }

  /** k distinct indices from [0, n), ascending (partial Fisher-Yates). */
  sampleWithoutReplacement(n: number, k: number): Int32Array {
    const pool = new Int32Array(n);
    for (let i = 0; i < n; i++) pool[i] = i;
    for (let i = 0; i < k; i++) {
      const j = i + this.nextBelow(n - i);
      const tmp = pool[i];
      pool[i] = pool[j];
      pool[j] = tmp;
    }
    const out = pool.slice(0, k);
    out.sort();
    return out;
  }
}
