#!/usr/bin/env node
/**
 * Entry point: `node dist/main.js --estimator gbt`.
 *
 * Speaks the external-trainer wire protocol on stdin/stdout and exits
 * when stdin closes.
 */

import { serve } from "./server.js";

function parseArgs(argv: string[]): { estimator: string } {
  let estimator = "gbt";
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--estimator") {
      const value = argv[++i];
      if (!value) {
        process.stderr.write("--estimator needs a value\n");
        process.exit(2);
      }
      estimator = value;
    } else {
      process.stderr.write(`unknown argument: ${arg}\n`);
      process.exit(2);
    }
  }
  return { estimator };
}

const { estimator } = parseArgs(process.argv.slice(2));
if (estimator !== "gbt") {
  process.stderr.write(`unknown estimator: ${estimator} (only 'gbt' is available)\n`);
  process.exit(2);
}

serve({ input: process.stdin, output: process.stdout }).catch((error: Error) => {
  process.stderr.write(`fatal: ${error.stack ?? error.message}\n`);
  process.exit(1);
});
