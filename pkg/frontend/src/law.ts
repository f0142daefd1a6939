/** Affine laws and validity polytopes rebuilt from the condensed data.
 *
 * Same formulas as the solver side; active sets are 1-based row lists.
 */

import {
  addVec,
  inverse,
  matMul,
  matVec,
  pick,
  pickRows,
  solveMat,
  solveVec,
  subVec,
  type Mat,
  type Vec,
} from "./linalg.js";
import type { ProblemData } from "./problem.js";

export interface Polytope {
  T: Mat;
  d: Vec;
}

export interface Feedback {
  K: Mat; // m x n
  b: Vec; // m
}

function zeroBased(active: number[]): number[] {
  return active.map((r) => r - 1);
}

/** Full affine optimizer (Kbar, bbar) for the given active rows. */
export function controlLaw(p: ProblemData, active: number[]): { Kbar: Mat; bbar: Vec } {
  const idx = zeroBased(active);
  if (idx.length === 0) {
    const Kbar = p.HinvFT.map((row) => row.map((v) => -v));
    const bbar = new Array(p.m * p.N).fill(0);
    return { Kbar, bbar };
  }
  const W = inverse(pick(p.GHiG, idx, idx));
  const HiGA = p.HinvGT.map((row) => idx.map((j) => row[j]));
  const HiGAW = matMul(HiGA, W);
  const Kbar = matMul(HiGAW, pickRows(p.S, idx)).map((row, i) =>
    row.map((v, j) => v - p.HinvFT[i][j])
  );
  const bbar = matVec(
    HiGAW,
    idx.map((j) => p.w[j])
  );
  return { Kbar, bbar };
}

/** First m rows of the law: the part applied to the plant. */
export function feedbackHead(p: ProblemData, active: number[]): Feedback {
  const { Kbar, bbar } = controlLaw(p, active);
  return { K: Kbar.slice(0, p.m), b: bbar.slice(0, p.m) };
}

/** Region where the law of ``active`` solves the QP; rows unit-normalized. */
export function polytopeFromActiveSet(p: ProblemData, active: number[]): Polytope {
  const idx = zeroBased(active);
  const inA = new Array(p.q).fill(false);
  for (const j of idx) inA[j] = true;
  const rest: number[] = [];
  for (let j = 0; j < p.q; j++) if (!inA[j]) rest.push(j);
  const S_I = pickRows(p.S, rest);
  const w_I = rest.map((j) => p.w[j]);

  let T: Mat;
  let d: Vec;
  if (idx.length === 0) {
    T = S_I.map((row) => row.map((v) => -v));
    d = w_I.slice();
  } else {
    const W = inverse(pick(p.GHiG, idx, idx));
    const C = pick(p.GHiG, rest, idx);
    const WS = matMul(W, pickRows(p.S, idx));
    const Ww = matVec(
      W,
      idx.map((j) => p.w[j])
    );
    const CWS = matMul(C, WS);
    const CWw = matVec(C, Ww);
    T = WS.concat(CWS.map((row, i) => subVec(row, S_I[i])));
    d = Ww.map((v) => -v).concat(subVec(w_I, CWw));
  }
  for (let i = 0; i < T.length; i++) {
    let norm = 0;
    for (const v of T[i]) norm += v * v;
    norm = Math.sqrt(norm);
    if (norm > 0) {
      T[i] = T[i].map((v) => v / norm);
      d[i] /= norm;
    }
  }
  return { T, d };
}

/** Feedback (K, b) from first-stage rows alone; needs exactly m of them. */
export function simplifiedFeedback(p: ProblemData, atilde: number[]): Feedback {
  if (atilde.length !== p.m) {
    throw new Error(`need exactly ${p.m} first-stage rows, got ${atilde.length}`);
  }
  const idx = zeroBased(atilde);
  for (const j of idx) {
    if (j >= p.qStage) {
      throw new Error("rows beyond the first stage cannot pin down u(0)");
    }
  }
  const G11 = p.G.slice(0, p.qStage).map((row) => row.slice(0, p.m));
  const E1 = p.E.slice(0, p.qStage);
  const w1 = p.w.slice(0, p.qStage);
  const block = pickRows(G11, idx);
  const K = solveMat(block, pickRows(E1, idx));
  const b = solveVec(
    block,
    idx.map((j) => w1[j])
  );
  return { K, b };
}

/** Active rows constraining u(0) and x(1): indices at or below qStage. */
export function stageSubset(active: number[], qStage: number): number[] {
  return active.filter((r) => r <= qStage);
}

export function contains(poly: Polytope, x: Vec, tol = 1e-9): boolean {
  for (let i = 0; i < poly.T.length; i++) {
    let dot = 0;
    for (let j = 0; j < x.length; j++) dot += poly.T[i][j] * x[j];
    if (dot > poly.d[i] + tol) return false;
  }
  return true;
}

export function applyFeedback(fb: Feedback, x: Vec): Vec {
  return addVec(matVec(fb.K, x), fb.b);
}
