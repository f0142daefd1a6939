/** Dense helpers sized for the small systems a local node rebuilds. */

export type Mat = number[][];
export type Vec = number[];

export function zeros(rows: number, cols: number): Mat {
  return Array.from({ length: rows }, () => new Array<number>(cols).fill(0));
}

export function matVec(A: Mat, x: Vec): Vec {
  return A.map((row) => row.reduce((acc, v, j) => acc + v * x[j], 0));
}

export function matMul(A: Mat, B: Mat): Mat {
  const out = zeros(A.length, B[0].length);
  for (let i = 0; i < A.length; i++) {
    for (let k = 0; k < B.length; k++) {
      const a = A[i][k];
      if (a === 0) continue;
      for (let j = 0; j < B[0].length; j++) out[i][j] += a * B[k][j];
    }
  }
  return out;
}

export function transpose(A: Mat): Mat {
  return A[0].map((_, j) => A.map((row) => row[j]));
}

export function addVec(a: Vec, b: Vec): Vec {
  return a.map((v, i) => v + b[i]);
}

export function subVec(a: Vec, b: Vec): Vec {
  return a.map((v, i) => v - b[i]);
}

export function norm(v: Vec): number {
  return Math.sqrt(v.reduce((acc, x) => acc + x * x, 0));
}

export class SingularMatrix extends Error {}

/** Solve A X = B by Gaussian elimination with partial pivoting. */
export function solveMat(A: Mat, B: Mat): Mat {
  const n = A.length;
  const w = B[0].length;
  // augmented working copy
  const M = A.map((row, i) => [...row, ...B[i]]);
  for (let col = 0; col < n; col++) {
    let pivot = col;
    for (let r = col + 1; r < n; r++) {
      if (Math.abs(M[r][col]) > Math.abs(M[pivot][col])) pivot = r;
    }
    if (Math.abs(M[pivot][col]) < 1e-13) {
      throw new SingularMatrix(`pivot ${col} is ${M[pivot][col]}`);
    }
    if (pivot !== col) [M[col], M[pivot]] = [M[pivot], M[col]];
    for (let r = 0; r < n; r++) {
      if (r === col) continue;
      const f = M[r][col] / M[col][col];
      if (f === 0) continue;
      for (let j = col; j < n + w; j++) M[r][j] -= f * M[col][j];
    }
  }
  return M.map((row, i) => row.slice(n).map((v) => v / M[i][i]));
}

export function solveVec(A: Mat, b: Vec): Vec {
  return solveMat(A, b.map((v) => [v])).map((row) => row[0]);
}

export function inverse(A: Mat): Mat {
  const n = A.length;
  const eye = zeros(n, n);
  for (let i = 0; i < n; i++) eye[i][i] = 1;
  return solveMat(A, eye);
}

/** Row and column submatrix by index lists. */
export function pick(A: Mat, rows: number[], cols: number[]): Mat {
  return rows.map((r) => cols.map((c) => A[r][c]));
}

export function pickRows(A: Mat, rows: number[]): Mat {
  return rows.map((r) => [...A[r]]);
}
