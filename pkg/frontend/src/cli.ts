#!/usr/bin/env node
/**
 * quadet-plots --kind ser_snr --input fig_ser.csv --out fig_ser.svg
 *
 * Kinds: ser_snr | floor_n | floor_rho | outage | scatter
 * --input may repeat to overlay several result files on one figure.
 * For 'scatter', point the input at the *_scatter.csv (or the outage JSON).
 */

import { realpathSync } from "fs";
import { fileURLToPath } from "url";

import { FIGURE_KINDS, FigureKind, FigureSpec } from "./figures.js";
import { render } from "./render.js";
import { SchemaError } from "./schema.js";

function usage(message?: string): never {
  if (message) console.error(`error: ${message}`);
  console.error(
    "usage: quadet-plots --kind <ser_snr|floor_n|floor_rho|outage|scatter> " +
      "--input <file> [--input <file> ...] --out <image.svg> [--title <text>]",
  );
  process.exit(2);
}

export function parseArgs(argv: string[]): FigureSpec {
  let kind: string | undefined;
  const inputs: string[] = [];
  let output: string | undefined;
  let title: string | undefined;
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) usage(`flag ${flag} needs a value`);
    switch (flag) {
      case "--kind":
        kind = value;
        break;
      case "--input":
        inputs.push(value);
        break;
      case "--out":
        output = value;
        break;
      case "--title":
        title = value;
        break;
      default:
        usage(`unknown flag ${flag}`);
    }
  }
  if (!kind || !FIGURE_KINDS.includes(kind as FigureKind)) {
    usage(`--kind must be one of ${FIGURE_KINDS.join(", ")}`);
  }
  if (inputs.length === 0) usage("at least one --input is required");
  if (!output) usage("--out is required");
  return { kind: kind as FigureKind, inputs, output, title };
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const path = render(spec);
    console.log(`wrote ${path}`);
    return 0;
  } catch (e) {
    if (e instanceof SchemaError) {
      console.error(`schema error: ${e.message}`);
      return 1;
    }
    throw e;
  }
}

const entryPath = process.argv[1] ? realpathSync(process.argv[1]) : "";
if (entryPath === fileURLToPath(import.meta.url)) {
  process.exit(main(process.argv.slice(2)));
}
