#!/usr/bin/env node
/** plot --in <dir> --out <dir> [--metric <name>] [--resamples N] */

import { renderFigures } from "./plot.js";

function parseArgs(argv: string[]) {
  const args: Record<string, string> = {};
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (!a.startsWith("--")) {
      throw new Error(`unexpected argument '${a}'`);
    }
    args[a.slice(2)] = argv[++i];
  }
  return args;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command !== "plot") {
    console.error("usage: plot --in <dir> --out <dir> [--metric <name>] [--resamples N]");
    return 2;
  }
  let args: Record<string, string>;
  try {
    args = parseArgs(rest);
  } catch (err) {
    console.error(String(err));
    return 2;
  }
  if (!args.in || !args.out) {
    console.error("plot requires --in and --out");
    return 2;
  }
  try {
    const written = renderFigures(args.in, args.out, {
      metric: args.metric,
      resamples: args.resamples ? Number(args.resamples) : undefined,
    });
    for (const f of written) console.log(f);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
