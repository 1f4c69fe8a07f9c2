/** Data files produced by the solver: state snapshots, marginal-density
 * tables and energy-breakdown sweeps. */

export interface Snapshot {
  /** Node coordinates, nn x 2. */
  nodes: [number, number][];
  /** Element corner node indices, counter-clockwise from lower-left. */
  elements: [number, number, number, number][];
  element_size: [number, number];
  body_id: number[];
  boundary_nodes: number[];
  boundary_elements: number[];
  node_tags: Record<string, number[]>;
  /** Component DOF tables (value, d1, d2, d12 per node); optional for
   * undeformed snapshots, where the identity is implied. */
  y1?: number[][];
  y2?: number[][];
  kind?: string;
}

export interface DensityRow {
  element_id: number;
  x1: number;
  x2: number;
  density: number;
}

export interface EnergyRow {
  /** Sweep parameter value (the first CSV column, name varies). */
  value: number;
  E_el: number;
  mu_E_cn: number;
  E_reg: number;
  E_body: number;
  total: number;
}

export interface EnergyTable {
  parameter: string;
  rows: EnergyRow[];
}

export class InputError extends Error {}

/** Deformed element corner positions: value DOFs of both components at the
 * element's corner nodes (the identity when no DOF tables are present). */
export function deformedCorners(snap: Snapshot, elem: number): [number, number][] {
  const ids = snap.elements[elem];
  return ids.map((n) => {
    if (snap.y1 && snap.y2) {
      return [snap.y1[n][0], snap.y2[n][0]] as [number, number];
    }
    return [snap.nodes[n][0], snap.nodes[n][1]] as [number, number];
  });
}
