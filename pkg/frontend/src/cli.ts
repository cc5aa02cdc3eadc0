#!/usr/bin/env node
/**
 * plotviz <kind> --input FILE [--fit FILE] --out FILE.svg [--dpi N]
 *
 * Kinds: heatmap, decay_fit, envelope, spectrum, profile, maxvalue.
 * Reads the simulator's on-disk artifacts only; writes a deterministic SVG.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { readFit, readMatrix, readModes, readTwoColumn, SchemaError } from "./csv.js";
import { readModeBinary } from "./modebin.js";
import {
  renderDecayFit,
  renderEnvelope,
  renderHeatmap,
  renderMaxValue,
  renderProfile,
  renderSpectrum,
} from "./plots.js";

const KINDS = ["heatmap", "decay_fit", "envelope", "spectrum", "profile", "maxvalue"];

interface Args {
  kind: string;
  input: string;
  fit?: string;
  out: string;
  dpi: number;
}

function parseArgs(argv: string[]): Args {
  const [kind, ...rest] = argv;
  if (!kind || !KINDS.includes(kind)) {
    throw new Error(`usage: plotviz <${KINDS.join("|")}> --input FILE --out FILE [--fit FILE] [--dpi N]`);
  }
  const opts = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    const value = rest[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`malformed option near "${key}"`);
    }
    opts.set(key.slice(2), value);
  }
  const input = opts.get("input");
  const out = opts.get("out");
  if (!input || !out) throw new Error("--input and --out are required");
  return {
    kind,
    input,
    fit: opts.get("fit"),
    out,
    dpi: opts.has("dpi") ? Number(opts.get("dpi")) : 96,
  };
}

export function render(args: Args): string {
  switch (args.kind) {
    case "heatmap":
      return renderHeatmap(readMatrix(readFileSync(args.input, "utf-8")), args.dpi);
    case "decay_fit": {
      if (!args.fit) throw new Error("decay_fit requires --fit FILE");
      const signal = readTwoColumn(readFileSync(args.input, "utf-8"), "tau_s,value");
      const fit = readFit(readFileSync(args.fit, "utf-8"));
      return renderDecayFit(signal, fit, args.dpi);
    }
    case "envelope":
      return renderEnvelope(readModes(readFileSync(args.input, "utf-8")), args.dpi);
    case "spectrum":
      return renderSpectrum(
        readTwoColumn(readFileSync(args.input, "utf-8"), "freq_hz,intensity"),
        args.dpi,
      );
    case "profile":
      return renderProfile(readModeBinary(readFileSync(args.input)), args.dpi);
    case "maxvalue":
      return renderMaxValue(
        readTwoColumn(readFileSync(args.input, "utf-8"), "freq_hz,max_amplitude"),
        args.dpi,
      );
    default:
      throw new Error(`unknown kind ${args.kind}`);
  }
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    writeFileSync(args.out, render(args), "utf-8");
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema mismatch: ${err.message}`);
      return 2;
    }
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
