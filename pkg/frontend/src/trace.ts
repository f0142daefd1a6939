/** Trace CSV reader.  One row per step: k, x1..xn, u1..um, e. */

import { readFileSync } from "node:fs";

import Papa from "papaparse";

import type { Vec } from "./linalg.js";

export interface Trace {
  states: Vec[]; // x(0..steps-1), the state each input was computed at
  inputs: Vec[];
  e: number[]; // 1 where a QP was solved
}

export function loadTrace(path: string, n: number, m: number): Trace {
  const text = readFileSync(path, "utf-8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new Error(`trace parse failed: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  const header = rows[0];
  if (header.length !== 1 + n + m + 1) {
    throw new Error(`expected ${1 + n + m + 1} columns, got ${header.length}`);
  }
  const states: Vec[] = [];
  const inputs: Vec[] = [];
  const e: number[] = [];
  for (const row of rows.slice(1)) {
    states.push(row.slice(1, 1 + n).map(Number));
    inputs.push(row.slice(1 + n, 1 + n + m).map(Number));
    e.push(Number(row[1 + n + m]));
  }
  return { states, inputs, e };
}
