/** Command line: plot <kind> --in <file> [--in <file>] --out <figure.svg>
 *
 * Kinds and their inputs:
 *   deformed_density   state snapshot JSON, then density CSV
 *   mesh_overview      state snapshot JSON
 *   energy_curve       energy-breakdown CSV
 */

import { writeFileSync } from "node:fs";

import { readDensityCsv, readEnergyCsv, readSnapshot } from "./io.js";
import { plotDeformedDensity, plotEnergyCurve, plotMeshOverview } from "./plots.js";
import { InputError } from "./types.js";

const KINDS = ["deformed_density", "mesh_overview", "energy_curve"] as const;

interface Args {
  kind: string;
  inputs: string[];
  out: string;
  lo?: number;
  hi?: number;
}

export function parseArgs(argv: string[]): Args {
  if (argv.length === 0) {
    throw new InputError(`usage: plot <${KINDS.join("|")}> --in FILE [--in FILE] --out FILE`);
  }
  const [kind, ...rest] = argv;
  if (!(KINDS as readonly string[]).includes(kind)) {
    throw new InputError(`unknown figure kind '${kind}'; expected one of ${KINDS.join(", ")}`);
  }
  const args: Args = { kind, inputs: [], out: "" };
  for (let i = 0; i < rest.length; i++) {
    const flag = rest[i];
    const value = rest[++i];
    if (value === undefined) throw new InputError(`missing value for ${flag}`);
    switch (flag) {
      case "--in": args.inputs.push(value); break;
      case "--out": args.out = value; break;
      case "--lo": args.lo = Number(value); break;
      case "--hi": args.hi = Number(value); break;
      default: throw new InputError(`unknown flag ${flag}`);
    }
  }
  if (!args.out) throw new InputError("--out is required");
  if ((args.lo === undefined) !== (args.hi === undefined)) {
    throw new InputError("--lo and --hi must be given together");
  }
  if (args.lo !== undefined && args.hi !== undefined && !(args.lo < args.hi)) {
    throw new InputError("--lo must be smaller than --hi");
  }
  return args;
}

export function renderFromArgs(args: Args): string {
  const opts = { lo: args.lo, hi: args.hi };
  switch (args.kind) {
    case "deformed_density": {
      if (args.inputs.length !== 2) {
        throw new InputError("deformed_density needs --in snapshot.json --in density.csv");
      }
      const snap = readSnapshot(args.inputs[0]);
      const dens = readDensityCsv(args.inputs[1]);
      return plotDeformedDensity(snap, dens, opts);
    }
    case "mesh_overview": {
      if (args.inputs.length !== 1) {
        throw new InputError("mesh_overview needs --in snapshot.json");
      }
      return plotMeshOverview(readSnapshot(args.inputs[0]), opts);
    }
    case "energy_curve": {
      if (args.inputs.length !== 1) {
        throw new InputError("energy_curve needs --in energies.csv");
      }
      return plotEnergyCurve(readEnergyCsv(args.inputs[0]), opts);
    }
    default:
      throw new InputError(`unhandled kind ${args.kind}`);
  }
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    writeFileSync(args.out, renderFromArgs(args));
    console.log(args.out);
    return 0;
  } catch (err) {
    if (err instanceof InputError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

if (process.argv[1] && /cli\.(js|ts)$/.test(process.argv[1])) {
  process.exit(main(process.argv.slice(2)));
}
