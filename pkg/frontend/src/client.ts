/** Local node over TCP: cache laws from responses, ask only on a miss. */

import { Socket } from "node:net";

import {
  encodeRequest,
  ERR_INFEASIBLE,
  FLAG_CRITERION,
  FLAG_NO_CACHE,
  FrameReader,
  type Frame,
} from "./frames.js";
import {
  applyFeedback,
  contains,
  controlLaw,
  feedbackHead,
  polytopeFromActiveSet,
  simplifiedFeedback,
  stageSubset,
  type Feedback,
  type Polytope,
} from "./law.js";
import { addVec, matVec, SingularMatrix, type Vec } from "./linalg.js";
import { inTerminalSet, type ProblemData } from "./problem.js";
import { ProtocolError } from "./bitset.js";

export const MEMBERSHIP_TOL = 1e-9;

export class InfeasibleState extends Error {}
export class MaxSteps extends Error {}

export interface SessionResult {
  states: Vec[];
  inputs: Vec[];
  e: number[];
  requests: number;
  enteredTerminalAt: number;
}

/** One cached context: a feedback plus the polytopes where it is optimal. */
interface Context {
  fb: Feedback;
  polys: Polytope[];
}

function query(ctx: Context, x: Vec): Vec | null {
  for (const poly of ctx.polys) {
    if (contains(poly, x, MEMBERSHIP_TOL)) return applyFeedback(ctx.fb, x);
  }
  return null;
}

/** Rebuild the cache a response describes.
 *
 * Criterion responses share one feedback across every candidate polytope;
 * rank-deficient candidates are skipped.  Received sets are kept whether
 * or not their polytope is empty: an empty polytope contains nothing, so
 * keeping it cannot change any query.
 */
function contextFromResponse(
  p: ProblemData,
  flags: number,
  sets: number[][]
): Context {
  if (sets.length === 0) {
    throw new ProtocolError("response carried no active sets");
  }
  if (flags & FLAG_CRITERION) {
    const atilde = stageSubset(sets[0], p.qStage);
    for (const cand of sets.slice(1)) {
      if (JSON.stringify(stageSubset(cand, p.qStage)) !== JSON.stringify(atilde)) {
        throw new ProtocolError("candidates do not share a stage subset");
      }
    }
    const fb = simplifiedFeedback(p, atilde);
    const polys: Polytope[] = [];
    for (const cand of sets) {
      try {
        polys.push(polytopeFromActiveSet(p, cand));
      } catch (err) {
        if (err instanceof SingularMatrix) continue;
        throw err;
      }
    }
    return { fb, polys };
  }
  try {
    const fb = feedbackHead(p, sets[0]);
    return { fb, polys: [polytopeFromActiveSet(p, sets[0])] };
  } catch (err) {
    if (err instanceof SingularMatrix) {
      throw new ProtocolError("dependent rows in a cacheable response");
    }
    throw err;
  }
}

/** Request/response client over one TCP connection. */
export class WireClient {
  private sock: Socket;
  private reader = new FrameReader();
  private waiters: {
    resolve: (f: Frame) => void;
    reject: (e: Error) => void;
  }[] = [];
  private failure: Error | null = null;

  private constructor(sock: Socket) {
    this.sock = sock;
    sock.on("data", (chunk: Buffer) => {
      this.reader.push(chunk);
      this.drain();
    });
    sock.on("error", (err: Error) => this.fail(err));
    sock.on("close", () => this.fail(new ProtocolError("central closed mid-session")));
  }

  static connect(host: string, port: number): Promise<WireClient> {
    return new Promise((resolve, reject) => {
      const sock = new Socket();
      sock.once("error", reject);
      sock.connect(port, host, () => {
        sock.removeListener("error", reject);
        resolve(new WireClient(sock));
      });
    });
  }

  private drain(): void {
    for (;;) {
      let frame: Frame | null;
      try {
        frame = this.reader.next();
      } catch (err) {
        this.fail(err as Error);
        return;
      }
      if (frame === null) return;
      const waiter = this.waiters.shift();
      if (waiter) waiter.resolve(frame);
    }
  }

  private fail(err: Error): void {
    if (this.failure) return;
    this.failure = err;
    while (this.waiters.length > 0) this.waiters.shift()!.reject(err);
  }

  request(x: Vec): Promise<Frame> {
    if (this.failure) return Promise.reject(this.failure);
    return new Promise((resolve, reject) => {
      this.waiters.push({ resolve, reject });
      this.sock.write(encodeRequest(x));
    });
  }

  close(): void {
    if (!this.failure) this.failure = new ProtocolError("client closed");
    this.sock.removeAllListeners("close");
    this.sock.destroy();
  }
}

/** Drive one closed loop against a central node.
 *
 * Cached laws answer while any cached polytope holds the state; every
 * miss costs one request.  A no-cache response is evaluated once and
 * discarded.  A landing exactly on a polytope boundary still uses the
 * freshly received law.
 */
export async function closedLoop(
  client: WireClient,
  p: ProblemData,
  x0: Vec,
  maxSteps = 1000
): Promise<SessionResult> {
  let x = x0.slice();
  const states: Vec[] = [x];
  const inputs: Vec[] = [];
  const e: number[] = [];
  let ctx: Context | null = null;

  for (let step = 0; step < maxSteps; step++) {
    if (inTerminalSet(p, x, MEMBERSHIP_TOL)) {
      return {
        states,
        inputs,
        e,
        requests: e.reduce((a, b) => a + b, 0),
        enteredTerminalAt: e.length,
      };
    }
    let u = ctx !== null ? query(ctx, x) : null;
    if (u === null) {
      const frame = await client.request(x);
      if (frame.kind === "error") {
        if (frame.code === ERR_INFEASIBLE) {
          throw new InfeasibleState("central reports infeasible state");
        }
        throw new ProtocolError(`central error code ${frame.code}`);
      }
      if (frame.kind !== "response") {
        throw new ProtocolError(`unexpected ${frame.kind} frame`);
      }
      if (frame.q !== p.q) {
        throw new ProtocolError(`central q=${frame.q}, local q=${p.q}`);
      }
      if (frame.flags & FLAG_NO_CACHE) {
        if (frame.sets.length === 0) {
          throw new ProtocolError("response carried no active sets");
        }
        const { Kbar, bbar } = controlLaw(p, frame.sets[0]);
        ctx = null;
        u = addVec(matVec(Kbar.slice(0, p.m), x), bbar.slice(0, p.m));
      } else {
        ctx = contextFromResponse(p, frame.flags, frame.sets);
        u = query(ctx, x) ?? applyFeedback(ctx.fb, x);
      }
      e.push(1);
    } else {
      e.push(0);
    }
    inputs.push(u);
    x = addVec(matVec(p.A, x), matVec(p.B, u));
    states.push(x);
  }
  throw new MaxSteps(`terminal set not reached in ${maxSteps} steps`);
}
