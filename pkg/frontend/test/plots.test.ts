import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { readDensityCsv, readEnergyCsv, readSnapshot } from "../src/io.js";
import { DENSITY_FLOOR, plotDeformedDensity, plotEnergyCurve, plotMeshOverview } from "../src/plots.js";
import { main, parseArgs } from "../src/cli.js";
import { InputError } from "../src/types.js";

const SAMPLE = join(__dirname, "..", "sample");
const snapPath = join(SAMPLE, "state_deformed.json");
const meshPath = join(SAMPLE, "mesh_undeformed.json");
const densPath = join(SAMPLE, "density_eps2_0p5.csv");

describe("input parsing", () => {
  it("reads the snapshot and density samples consistently", () => {
    const snap = readSnapshot(snapPath);
    const dens = readDensityCsv(densPath);
    expect(snap.elements.length).toBe(dens.length);
    expect(snap.y1?.length).toBe(snap.nodes.length);
  });

  it("reads both energy tables", () => {
    const m2 = readEnergyCsv(join(SAMPLE, "energies_m2.csv"));
    expect(m2.parameter).toBe("m2");
    expect(m2.rows.length).toBeGreaterThanOrEqual(2);
    const mu = readEnergyCsv(join(SAMPLE, "energies_mu.csv"));
    expect(mu.parameter).toBe("mu");
    expect(Math.min(...mu.rows.map((r) => r.value))).toBeCloseTo(1e-6);
  });

  it("rejects wrong files", () => {
    expect(() => readDensityCsv(join(SAMPLE, "energies_m2.csv"))).toThrow(InputError);
    expect(() => readSnapshot(densPath)).toThrow(InputError);
  });
});

describe("deformed density figure", () => {
  it("renders with hot fill exactly on elements above the floor", () => {
    const snap = readSnapshot(snapPath);
    const dens = readDensityCsv(densPath);
    const svg = plotDeformedDensity(snap, dens);
    const hotCount = (svg.match(/class="elem hot"/g) ?? []).length;
    const zeroCount = (svg.match(/class="elem zero"/g) ?? []).length;
    const expectedHot = dens.filter((r) => r.density > DENSITY_FLOOR).length;
    expect(expectedHot).toBeGreaterThan(0);
    expect(hotCount).toBe(expectedHot);
    expect(hotCount + zeroCount).toBe(snap.elements.length);
  });

  it("respects fixed color bounds in the colorbar labels", () => {
    const snap = readSnapshot(snapPath);
    const dens = readDensityCsv(densPath);
    const svg = plotDeformedDensity(snap, dens, { lo: 0, hi: 123.456 });
    expect(svg).toContain((123.456).toExponential(2));
  });

  it("rejects a density table of the wrong size", () => {
    const snap = readSnapshot(snapPath);
    const dens = readDensityCsv(densPath).slice(0, 5);
    expect(() => plotDeformedDensity(snap, dens)).toThrow(InputError);
  });

  it("renders the identity snapshot with uniform zero coloring", () => {
    const snap = readSnapshot(meshPath);
    const dens = snap.elements.map((_, e) => ({
      element_id: e, x1: 0, x2: 0, density: 0,
    }));
    const svg = plotDeformedDensity(snap, dens);
    expect((svg.match(/class="elem hot"/g) ?? []).length).toBe(0);
  });
});

describe("mesh overview figure", () => {
  it("renders with pinned-node markers", () => {
    const snap = readSnapshot(meshPath);
    const svg = plotMeshOverview(snap);
    const dots = (svg.match(/<circle /g) ?? []).length;
    expect(dots).toBe(snap.node_tags.dirichlet.length);
    expect(svg).toContain("<polygon");
  });
});

describe("energy curves", () => {
  it("renders the displacement sweep with a linear axis", () => {
    const svg = plotEnergyCurve(readEnergyCsv(join(SAMPLE, "energies_m2.csv")));
    expect(svg).toContain("<polyline");
    expect(svg).not.toContain(">1e-6<");
  });

  it("uses a log axis for the decade-spanning weight sweep", () => {
    const svg = plotEnergyCurve(readEnergyCsv(join(SAMPLE, "energies_mu.csv")));
    expect(svg).toContain(">1e-6<");
    expect(svg).toContain(">1e0<");
  });

  it("rejects single-row tables", () => {
    const table = readEnergyCsv(join(SAMPLE, "energies_m2.csv"));
    table.rows = table.rows.slice(0, 1);
    expect(() => plotEnergyCurve(table)).toThrow(InputError);
  });
});

describe("cli", () => {
  it("parses and validates arguments", () => {
    const args = parseArgs(["deformed_density", "--in", "a", "--in", "b",
                            "--out", "x.svg", "--lo", "0", "--hi", "2"]);
    expect(args.inputs).toEqual(["a", "b"]);
    expect(() => parseArgs(["unknown_kind", "--out", "x"])).toThrow(InputError);
    expect(() => parseArgs(["energy_curve", "--in", "a"])).toThrow(InputError);
    expect(() => parseArgs(["energy_curve", "--in", "a", "--out", "x",
                            "--lo", "3", "--hi", "1"])).toThrow(InputError);
  });

  it("renders all three kinds end to end and leaves inputs untouched", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const before = [snapPath, densPath].map((p) => readFileSync(p));
    expect(main(["deformed_density", "--in", snapPath, "--in", densPath,
                 "--out", join(dir, "d.svg")])).toBe(0);
    expect(main(["mesh_overview", "--in", meshPath,
                 "--out", join(dir, "m.svg")])).toBe(0);
    expect(main(["energy_curve", "--in", join(SAMPLE, "energies_mu.csv"),
                 "--out", join(dir, "e.svg")])).toBe(0);
    for (const out of ["d.svg", "m.svg", "e.svg"]) {
      const text = readFileSync(join(dir, out), "utf8");
      expect(text).toContain("<svg");
    }
    const after = [snapPath, densPath].map((p) => readFileSync(p));
    expect(before[0].equals(after[0])).toBe(true);
    expect(before[1].equals(after[1])).toBe(true);
  });

  it("returns 2 on unreadable inputs", () => {
    expect(main(["mesh_overview", "--in", "/nonexistent.json",
                 "--out", "/tmp/x.svg"])).toBe(2);
  });
});
