/** Atlas JSON reader: active sets with their validity polytopes. */

import { readFileSync } from "node:fs";

import type { Polytope } from "./law.js";
import { stageSubset } from "./law.js";

export interface AtlasEntry {
  active: number[];
  region: Polytope;
}

export interface Atlas {
  qStage: number;
  entries: AtlasEntry[];
}

export function loadAtlas(path: string): Atlas {
  const raw = JSON.parse(readFileSync(path, "utf-8"));
  const entries: AtlasEntry[] = raw.entries.map(
    (e: { active: number[]; C: number[][]; c: number[] }) => ({
      active: e.active,
      region: { T: e.C, d: e.c },
    })
  );
  return { qStage: raw.q_stage, entries };
}

/** Entries whose first-stage rows match ``atilde``: one shared feedback. */
export function groupMembers(atlas: Atlas, atilde: number[]): AtlasEntry[] {
  const key = JSON.stringify(atilde);
  return atlas.entries.filter(
    (e) => JSON.stringify(stageSubset(e.active, atlas.qStage)) === key
  );
}
