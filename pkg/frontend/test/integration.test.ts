/** End-to-end: a spawned central node serves a TypeScript local node. */

import { spawn, type ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { closedLoop, WireClient } from "../src/client.js";
import { loadProblem, type ProblemData } from "../src/problem.js";
import { loadTrace, type Trace } from "../src/trace.js";

const fixture = (name: string) =>
  fileURLToPath(new URL(`../fixtures/${name}`, import.meta.url));
const CONFIG = fileURLToPath(new URL("../../configs/ex1.json", import.meta.url));

let central: ChildProcess;
let port: number;
let p: ProblemData;
let reference: Trace;

function startCentral(): Promise<number> {
  return new Promise((resolve, reject) => {
    central = spawn(
      "regionalmpc",
      ["netsim", "--serve", "--port", "0", "--l", "8", "--config", CONFIG],
      { stdio: ["ignore", "pipe", "pipe"] }
    );
    let out = "";
    central.stdout!.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const m = out.match(/serving on 127\.0\.0\.1:(\d+)/);
      if (m) resolve(Number(m[1]));
    });
    let err = "";
    central.stderr!.on("data", (chunk: Buffer) => {
      err += chunk.toString();
    });
    central.on("exit", (code) =>
      reject(new Error(`central exited early (${code}): ${err}`))
    );
    central.on("error", reject);
  });
}

beforeAll(async () => {
  p = loadProblem(fixture("ex1_problem.json"));
  reference = loadTrace(fixture("ex1_trace_family.csv"), p.n, p.m);
  port = await startCentral();
}, 60_000);

afterAll(() => {
  if (central) {
    central.removeAllListeners("exit");
    central.kill("SIGTERM");
  }
});

describe("closedLoop against a live central node", () => {
  it("reproduces the family-strategy trace byte for byte in spirit", async () => {
    const client = await WireClient.connect("127.0.0.1", port);
    try {
      const run = await closedLoop(client, p, [-2.15, 1.05]);

      // l=8 holds every candidate, so the wire node equals family reuse
      expect(run.e).toEqual(reference.e);
      expect(run.requests).toBe(5);
      expect(run.enteredTerminalAt).toBe(8);
      expect(run.states.length).toBe(reference.states.length + 1);
      for (let k = 0; k < reference.states.length; k++) {
        for (let j = 0; j < p.n; j++) {
          expect(Math.abs(run.states[k][j] - reference.states[k][j])).toBeLessThan(
            1e-8
          );
        }
        for (let j = 0; j < p.m; j++) {
          expect(Math.abs(run.inputs[k][j] - reference.inputs[k][j])).toBeLessThan(
            1e-8
          );
        }
      }
    } finally {
      client.close();
    }
  }, 60_000);

  it("drives a second session over a fresh connection deterministically", async () => {
    // the central serves one connection at a time: close before reconnecting
    const a = await WireClient.connect("127.0.0.1", port);
    const first = await closedLoop(a, p, [1.2, -0.6]).finally(() => a.close());
    const b = await WireClient.connect("127.0.0.1", port);
    const second = await closedLoop(b, p, [1.2, -0.6]).finally(() => b.close());
    expect(first.e).toEqual(second.e);
    expect(first.states).toEqual(second.states);
    expect(first.requests).toBeLessThanOrEqual(first.e.length);
    expect(first.e).toEqual([1, 1, 1, 1, 0, 0]);
  }, 60_000);
});
