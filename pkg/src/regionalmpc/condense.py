"""Condensing: eliminate the state sequence and stack the constraints.

Substituting x(k) = A^k x(0) + (controllability terms) U into the cost and
constraints turns the optimal control problem into a QP in the input
sequence only,

    min_U  0.5 U' H U + x' F U + 0.5 x' Y x     s.t.  G U <= w + E x.

Rows are stacked stage-wise, the constraints on u(0) and x(1) first:

    u(0) in U, x(1) in X,
    u(1) in U, x(2) in X,
    ...
    u(N-1) in U, x(N) in T,
    x(0) in X.

With this order the first q_stage = q_U + q_X rows depend on u(0) alone, so
G has an exactly zero upper-right block; that structure is what the row-rank
criterion and the short feedback form build on.  The trailing x(0) rows have
no input dependence at all (zero G rows) and only gate feasibility.
"""

from __future__ import annotations

import json

import numpy as np
from scipy.linalg import block_diag, cho_factor, cho_solve

from .errors import AssumptionError, DimensionError
from .model import OcpSpec


class CondensedQp:
    """Condensed QP data plus the products reused by every online solve.

    Attributes H, F, Y, G, w, E define the QP; S = E + G H^-1 F' is the
    state-to-slack map; Phi and Gamma map (x(0), U) to the stacked states
    x(1..N).  Hinv, HinvFT, HinvGT and GHiG are cached products.
    """

    def __init__(self, spec: OcpSpec):
        if spec.P is None or spec.Tset is None:
            raise AssumptionError("terminal weight and set required; see complete_ocp")
        A, B = spec.sys.A, spec.sys.B
        n, m, N = spec.n, spec.m, spec.N
        X, U, T = spec.Xset, spec.Uset, spec.Tset

        # prediction: stacked x(1..N) = Phi x(0) + Gamma U
        powers = [np.eye(n)]
        for _ in range(N):
            powers.append(A @ powers[-1])
        Phi = np.vstack(powers[1:])
        Gamma = np.zeros((n * N, m * N))
        for k in range(1, N + 1):
            for j in range(k):
                Gamma[(k - 1) * n : k * n, j * m : (j + 1) * m] = powers[k - 1 - j] @ B

        Qbar = block_diag(*([spec.Q] * (N - 1) + [spec.P]))
        Rbar = block_diag(*([spec.R] * N))
        # factor 2 so the QP objective equals the stage cost sum exactly
        H = 2.0 * (Rbar + Gamma.T @ Qbar @ Gamma)
        H = 0.5 * (H + H.T)
        F = 2.0 * Phi.T @ Qbar @ Gamma
        Y = 2.0 * (spec.Q + Phi.T @ Qbar @ Phi)

        G_rows, w_rows, E_rows = [], [], []
        for k in range(N):
            # u(k) in U
            Gu = np.zeros((U.num_rows, m * N))
            Gu[:, k * m : (k + 1) * m] = U.C
            G_rows.append(Gu)
            w_rows.append(U.c)
            E_rows.append(np.zeros((U.num_rows, n)))
            # x(k+1) in X for interior stages, x(N) in T
            poly = X if k < N - 1 else T
            Gx = poly.C @ Gamma[k * n : (k + 1) * n, :]
            G_rows.append(Gx)
            w_rows.append(poly.c)
            E_rows.append(-poly.C @ powers[k + 1])
        # x(0) in X: no input dependence
        G_rows.append(np.zeros((X.num_rows, m * N)))
        w_rows.append(X.c)
        E_rows.append(-X.C)

        self.spec = spec
        self.n, self.m, self.N = n, m, N
        self.q_U, self.q_X, self.q_T = U.num_rows, X.num_rows, T.num_rows
        self.q_stage = self.q_U + self.q_X
        self.H, self.F, self.Y = H, F, Y
        self.G = np.vstack(G_rows)
        self.w = np.concatenate(w_rows)
        self.E = np.vstack(E_rows)
        self.q = self.G.shape[0]
        expected = N * (self.q_U + self.q_X) + self.q_T
        if self.q != expected:
            raise DimensionError(f"{self.q} rows stacked, expected {expected}")
        self.Phi, self.Gamma = Phi, Gamma

        eigmin = np.linalg.eigvalsh(H)[0]
        if eigmin <= 0.0:
            raise AssumptionError("H not positive definite")
        factor = cho_factor(H)
        self.Hinv = cho_solve(factor, np.eye(m * N))
        self.Hinv = 0.5 * (self.Hinv + self.Hinv.T)
        self.HinvFT = cho_solve(factor, F.T)
        self.HinvGT = cho_solve(factor, self.G.T)
        GHiG = self.G @ self.HinvGT
        self.GHiG = 0.5 * (GHiG + GHiG.T)
        self.S = self.E + self.G @ self.HinvFT

    @property
    def G11(self) -> np.ndarray:
        """Input-block of the first stage's rows (acts on u(0) only)."""
        return self.G[: self.q_stage, : self.m]

    @property
    def E1(self) -> np.ndarray:
        return self.E[: self.q_stage]

    @property
    def w1(self) -> np.ndarray:
        return self.w[: self.q_stage]

    def predict_states(self, x, Ubar) -> np.ndarray:
        """Stacked states x(1..N) reached from x under the input sequence."""
        x = np.asarray(x, dtype=float).ravel()
        Ubar = np.asarray(Ubar, dtype=float).ravel()
        return self.Phi @ x + self.Gamma @ Ubar

    def debug_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "N": self.N,
            "q": self.q,
            "q_U": self.q_U,
            "q_X": self.q_X,
            "q_T": self.q_T,
            "q_stage": self.q_stage,
            "H": self.H.tolist(),
            "F": self.F.tolist(),
            "Y": self.Y.tolist(),
            "G": self.G.tolist(),
            "w": self.w.tolist(),
            "E": self.E.tolist(),
            "S": self.S.tolist(),
        }

    def dump_debug(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.debug_dict(), fh)
            fh.write("\n")


def build_condensed_qp(spec: OcpSpec) -> CondensedQp:
    """Condense a completed problem spec (P and T present)."""
    return CondensedQp(spec)


def rollout_cost(spec: OcpSpec, x, Ubar) -> float:
    """Simulate the dynamics and sum the stage costs directly.

    Used to check that the condensed objective reproduces the original one.
    """
    x = np.asarray(x, dtype=float).ravel()
    Ubar = np.asarray(Ubar, dtype=float).reshape(spec.N, spec.m)
    total = 0.0
    xi = x
    for k in range(spec.N):
        u = Ubar[k]
        total += xi @ spec.Q @ xi + u @ spec.R @ u
        xi = spec.sys.A @ xi + spec.sys.B @ u
    total += xi @ spec.P @ xi
    return float(total)
