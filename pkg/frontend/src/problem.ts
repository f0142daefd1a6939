/** Condensed problem data as exported by `regionalmpc dump`. */

import { readFileSync } from "node:fs";

import { inverse, matMul, transpose, type Mat, type Vec } from "./linalg.js";

export interface ProblemData {
  n: number;
  m: number;
  N: number;
  q: number;
  qStage: number;
  qT: number;
  H: Mat;
  F: Mat;
  G: Mat;
  w: Vec;
  E: Mat;
  S: Mat;
  A: Mat;
  B: Mat;
  TsetC: Mat;
  Tsetc: Vec;
  // derived products, recomputed at load time
  HinvFT: Mat;
  HinvGT: Mat;
  GHiG: Mat;
}

export function loadProblem(path: string): ProblemData {
  const raw = JSON.parse(readFileSync(path, "utf-8"));
  const H: Mat = raw.H;
  const F: Mat = raw.F;
  const G: Mat = raw.G;
  const Hinv = inverse(H);
  const HinvFT = matMul(Hinv, transpose(F));
  const HinvGT = matMul(Hinv, transpose(G));
  const GHiG = matMul(G, HinvGT);
  return {
    n: raw.n,
    m: raw.m,
    N: raw.N,
    q: raw.q,
    qStage: raw.q_stage,
    qT: raw.q_T,
    H,
    F,
    G,
    w: raw.w,
    E: raw.E,
    S: raw.S,
    A: raw.A,
    B: raw.B,
    TsetC: raw.Tset.C,
    Tsetc: raw.Tset.c,
    HinvFT,
    HinvGT,
    GHiG,
  };
}

/** x inside the terminal set, within tol. */
export function inTerminalSet(p: ProblemData, x: Vec, tol = 1e-9): boolean {
  for (let i = 0; i < p.TsetC.length; i++) {
    let dot = 0;
    for (let j = 0; j < x.length; j++) dot += p.TsetC[i][j] * x[j];
    if (dot > p.Tsetc[i] + tol) return false;
  }
  return true;
}
