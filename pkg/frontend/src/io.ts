import { readFileSync } from "node:fs";

import { DensityRow, EnergyRow, EnergyTable, InputError, Snapshot } from "./types.js";

export function readSnapshot(path: string): Snapshot {
  let data: unknown;
  try {
    data = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new InputError(`cannot read snapshot ${path}: ${err}`);
  }
  const snap = data as Snapshot;
  if (!Array.isArray(snap.nodes) || !Array.isArray(snap.elements)) {
    throw new InputError(`snapshot ${path} lacks nodes/elements`);
  }
  if (snap.y1 && snap.y1.length !== snap.nodes.length) {
    throw new InputError(`snapshot ${path}: y1 table size mismatch`);
  }
  return snap;
}

function splitCsv(path: string): string[][] {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new InputError(`cannot read ${path}: ${err}`);
  }
  return text
    .split(/\r?\n/)
    .filter((line) => line.trim().length > 0)
    .map((line) => line.split(","));
}

export function readDensityCsv(path: string): DensityRow[] {
  const lines = splitCsv(path);
  if (lines.length < 1 || lines[0][0] !== "element_id") {
    throw new InputError(`${path} is not a density table`);
  }
  return lines.slice(1).map((cols) => ({
    element_id: Number(cols[0]),
    x1: Number(cols[1]),
    x2: Number(cols[2]),
    density: Number(cols[3]),
  }));
}

export function readEnergyCsv(path: string): EnergyTable {
  const lines = splitCsv(path);
  if (lines.length < 1 || lines[0].length !== 6 || lines[0][5] !== "total") {
    throw new InputError(`${path} is not an energy table`);
  }
  const rows: EnergyRow[] = lines.slice(1).map((cols) => ({
    value: Number(cols[0]),
    E_el: Number(cols[1]),
    mu_E_cn: Number(cols[2]),
    E_reg: Number(cols[3]),
    E_body: Number(cols[4]),
    total: Number(cols[5]),
  }));
  if (rows.some((r) => !Number.isFinite(r.value) || !Number.isFinite(r.total))) {
    throw new InputError(`${path} has non-numeric rows`);
  }
  return { parameter: lines[0][0], rows };
}
