import { fileURLToPath } from "node:url";

import { beforeAll, describe, expect, it } from "vitest";

import { groupMembers, loadAtlas, type Atlas } from "../src/atlas.js";
import { contains, stageSubset } from "../src/law.js";
import { loadProblem, type ProblemData } from "../src/problem.js";

const fixture = (name: string) =>
  fileURLToPath(new URL(`../fixtures/${name}`, import.meta.url));

let atlas: Atlas;
let p: ProblemData;

beforeAll(() => {
  atlas = loadAtlas(fixture("ex1_atlas41.json"));
  p = loadProblem(fixture("ex1_problem.json"));
});

describe("loadAtlas", () => {
  it("reads entries with their polytopes", () => {
    expect(atlas.qStage).toBe(6);
    expect(atlas.entries.length).toBeGreaterThan(0);
    for (const entry of atlas.entries) {
      expect(entry.region.T.length).toBe(entry.region.d.length);
    }
  });

  it("covers the anchor state with exactly one region interior", () => {
    const x0 = [-2.15, 1.05];
    const hits = atlas.entries.filter((e) => contains(e.region, x0, 1e-9));
    expect(hits.length).toBeGreaterThanOrEqual(1);
    // x0 is generic: only its own region and closures meeting at x0 count
    expect(hits.some((e) => e.active.join(",") === "7,13,19,25")).toBe(true);
  });
});

describe("groupMembers", () => {
  it("collects every entry sharing first-stage rows [1]", () => {
    const group = groupMembers(atlas, [1]);
    expect(group.length).toBeGreaterThan(0);
    for (const entry of group) {
      expect(stageSubset(entry.active, atlas.qStage)).toEqual([1]);
    }
    const keys = group.map((e) => e.active.join(","));
    expect(keys).toContain("1,7,13");
    expect(keys).toContain("1,7");
    expect(keys).toContain("1");
  });

  it("returns nothing for a stage subset no entry carries", () => {
    expect(groupMembers(atlas, [2, 3]).length).toBe(0);
  });

  it("group laws beyond the stage count cannot share u(0) blindly", () => {
    // entries with empty stage subsets stay out of every m-sized group
    const bare = groupMembers(atlas, []);
    for (const entry of bare) {
      expect(entry.active.every((r) => r > atlas.qStage)).toBe(true);
    }
    expect(p.m).toBe(1);
  });
});
