/**
 * Wire-protocol server: newline-delimited JSON over stdin/stdout.
 *
 *   parent -> {"cmd": "hello", "protocol": 1}
 *   child  <- {"protocol": 1, "hyperparameters": [...]}
 *   parent -> {"id": 0, "cmd": "evaluate", "train": path, "test": path,
 *              "label": col, "hyperparams": {...}, "metric": name,
 *              "seed": int}
 *   child  <- {"id": 0, "loss": value}  |  {"id": 0, "error": message}
 *
 * One reply per request, in request order. A bad request earns an error
 * reply, never a crash; the process exits when stdin closes.
 */

import { createInterface } from "node:readline";

import { loadDataset } from "./csv.js";
import {
  GradientBoostedTrees,
  HYPERPARAMETER_NAMES,
  paramsFromHyperparams,
} from "./estimator.js";
import { computeMetric, isMetricName } from "./metrics.js";

export const PROTOCOL_VERSION = 1;

interface EvaluateRequest {
  id: number;
  train: string;
  test: string;
  label: string;
  hyperparams: Record<string, unknown>;
  metric: string;
  seed: number;
}

function asEvaluateRequest(message: Record<string, unknown>): EvaluateRequest {
  const { id, train, test, label, hyperparams, metric, seed } = message;
  if (typeof train !== "string" || typeof test !== "string") {
    throw new Error("evaluate needs string 'train' and 'test' paths");
  }
  if (typeof label !== "string") throw new Error("evaluate needs a string 'label'");
  if (typeof metric !== "string") throw new Error("evaluate needs a string 'metric'");
  if (hyperparams !== undefined && (typeof hyperparams !== "object" || hyperparams === null || Array.isArray(hyperparams))) {
    throw new Error("'hyperparams' must be an object");
  }
  if (seed !== undefined && typeof seed !== "number") {
    throw new Error("'seed' must be a number");
  }
  return {
    id: typeof id === "number" ? id : Number.NaN,
    train,
    test,
    label,
    hyperparams: (hyperparams ?? {}) as Record<string, unknown>,
    metric,
    seed: (seed as number | undefined) ?? 0,
  };
}

function evaluate(request: EvaluateRequest): number {
  const params = paramsFromHyperparams(request.hyperparams);
  if (!isMetricName(request.metric)) {
    throw new Error(`unknown metric: ${request.metric}`);
  }
  const train = loadDataset(request.train, request.label);
  const test = loadDataset(request.test, request.label);
  if (test.nCols !== train.nCols) {
    throw new Error(
      `train and test disagree on feature count (${train.nCols} vs ${test.nCols})`,
    );
  }
  const model = new GradientBoostedTrees(params);
  model.fit(train, request.seed);
  const scores = model.predict(test);
  const loss = computeMetric(request.metric, scores, test.labels);
  if (!Number.isFinite(loss)) throw new Error(`metric ${request.metric} came out non-finite`);
  return loss;
}

export interface ServeStreams {
  input: NodeJS.ReadableStream;
  output: NodeJS.WritableStream;
}

/** Serve requests until the input stream closes. */
export async function serve({ input, output }: ServeStreams): Promise<void> {
  const reply = (obj: unknown): void => {
    output.write(`${JSON.stringify(obj)}\n`);
  };
  const lines = createInterface({ input, crlfDelay: Infinity });
  for await (const line of lines) {
    const trimmed = line.trim();
    if (!trimmed) continue;

    let message: Record<string, unknown>;
    try {
      const parsed: unknown = JSON.parse(trimmed);
      if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
        throw new Error("request is not a JSON object");
      }
      message = parsed as Record<string, unknown>;
    } catch (error) {
      reply({ id: null, error: `malformed request: ${(error as Error).message}` });
      continue;
    }

    if (message.cmd === "hello") {
      if (message.protocol !== PROTOCOL_VERSION) {
        reply({ id: null, error: `unsupported protocol ${JSON.stringify(message.protocol)}` });
        continue;
      }
      reply({ protocol: PROTOCOL_VERSION, hyperparameters: HYPERPARAMETER_NAMES });
      continue;
    }

    if (message.cmd === "evaluate") {
      const id = typeof message.id === "number" ? message.id : null;
      try {
        const request = asEvaluateRequest(message);
        reply({ id, loss: evaluate(request) });
      } catch (error) {
        reply({ id, error: (error as Error).message });
      }
      continue;
    }

    reply({
      id: typeof message.id === "number" ? message.id : null,
      error: `unknown command: ${JSON.stringify(message.cmd)}`,
    });
  }
}
