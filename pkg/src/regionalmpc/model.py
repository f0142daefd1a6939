"""Problem description: plant, constraint polytopes and cost weights.

The optimal control problem minimizes

    |x(N)|_P^2 + sum_{k=0}^{N-1} ( |x(k)|_Q^2 + |u(k)|_R^2 )

subject to x(k+1) = A x(k) + B u(k), state/input polytope constraints and a
terminal constraint x(N) in T.  This module holds the immutable problem data
and the JSON config loader/validator; P and T, when absent from a config, are
filled in by :mod:`regionalmpc.lqr`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import AssumptionError, DimensionError, ParseError

# rank / definiteness tolerances used by the validators
RANK_TOL = 1e-9
PSD_TOL = 1e-9
PD_TOL = 1e-12


@dataclass(frozen=True)
class LtiSystem:
    """Discrete-time plant x(k+1) = A x(k) + B u(k)."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise DimensionError(f"B has {B.shape[0]} rows, expected {A.shape[0]}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class HalfspacePolytope:
    """Polytope {z | C z <= c} given by halfspace rows."""

    C: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        c = np.asarray(self.c, dtype=float).ravel()
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "c", c)
        if C.shape[0] != c.shape[0]:
            raise DimensionError(
                f"{C.shape[0]} halfspace rows but {c.shape[0]} offsets"
            )

    @property
    def dim(self) -> int:
        return self.C.shape[1]

    @property
    def num_rows(self) -> int:
        return self.C.shape[0]

    def contains(self, z, tol: float = 1e-9) -> bool:
        z = np.asarray(z, dtype=float).ravel()
        if z.shape[0] != self.dim:
            raise DimensionError(f"point has dim {z.shape[0]}, polytope {self.dim}")
        return bool(np.all(self.C @ z <= self.c + tol))

    def normalized(self) -> "HalfspacePolytope":
        """Scale every row to unit Euclidean norm (same set)."""
        norms = np.linalg.norm(self.C, axis=1)
        if np.any(norms <= 0.0):
            raise AssumptionError("cannot normalize a zero halfspace row")
        return HalfspacePolytope(self.C / norms[:, None], self.c / norms)

    def origin_interior(self) -> bool:
        """True when the origin is strictly inside (all offsets positive)."""
        return bool(np.all(self.c > 0.0))


def box_polytope(lower, upper) -> HalfspacePolytope:
    """Axis-aligned box with per-variable rows ordered upper bound first."""
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    d = lower.shape[0]
    rows = []
    offs = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        rows.append(e)
        offs.append(upper[i])
        rows.append(-e)
        offs.append(-lower[i])
    return HalfspacePolytope(np.array(rows), np.array(offs))


@dataclass(frozen=True)
class OcpSpec:
    """Validated data of the finite-horizon constrained LQ problem."""

    sys: LtiSystem
    Q: np.ndarray
    R: np.ndarray
    N: int
    Xset: HalfspacePolytope
    Uset: HalfspacePolytope
    Tset: HalfspacePolytope | None = None
    P: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "Q", np.atleast_2d(np.asarray(self.Q, dtype=float)))
        object.__setattr__(self, "R", np.atleast_2d(np.asarray(self.R, dtype=float)))
        if self.P is not None:
            object.__setattr__(
                self, "P", np.atleast_2d(np.asarray(self.P, dtype=float))
            )
        n, m = self.sys.n, self.sys.m
        if self.Q.shape != (n, n):
            raise DimensionError(f"Q must be {n}x{n}, got {self.Q.shape}")
        if self.R.shape != (m, m):
            raise DimensionError(f"R must be {m}x{m}, got {self.R.shape}")
        if self.N < 1:
            raise AssumptionError("horizon N must be a positive integer")
        if self.Xset.dim != n:
            raise DimensionError("state polytope dimension does not match plant")
        if self.Uset.dim != m:
            raise DimensionError("input polytope dimension does not match plant")
        if self.Tset is not None and self.Tset.dim != n:
            raise DimensionError("terminal polytope dimension does not match plant")
        if self.P is not None and self.P.shape != (n, n):
            raise DimensionError(f"P must be {n}x{n}, got {self.P.shape}")

    @property
    def n(self) -> int:
        return self.sys.n

    @property
    def m(self) -> int:
        return self.sys.m

    def with_terminal(self, P: np.ndarray, Tset: HalfspacePolytope) -> "OcpSpec":
        return replace(self, P=P, Tset=Tset)


def _unstable_modes(A: np.ndarray, tol: float = RANK_TOL):
    eigvals = np.linalg.eigvals(A)
    return [lam for lam in eigvals if abs(lam) >= 1.0 - tol]


def is_stabilizable(A: np.ndarray, B: np.ndarray, tol: float = RANK_TOL) -> bool:
    """PBH test: rank [lam*I - A, B] = n for every unstable eigenvalue."""
    n = A.shape[0]
    for lam in _unstable_modes(A, tol):
        M = np.hstack([lam * np.eye(n) - A, B])
        s = np.linalg.svd(M, compute_uv=False)
        if s[n - 1] <= tol * max(1.0, s[0]):
            return False
    return True


def is_detectable(Qsqrt: np.ndarray, A: np.ndarray, tol: float = RANK_TOL) -> bool:
    """PBH test on the observability pair: rank [lam*I - A; Qsqrt] = n."""
    n = A.shape[0]
    for lam in _unstable_modes(A, tol):
        M = np.vstack([lam * np.eye(n) - A, Qsqrt])
        s = np.linalg.svd(M, compute_uv=False)
        if s[n - 1] <= tol * max(1.0, s[0]):
            return False
    return True


def matrix_sqrt_psd(Q: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix (eigenvalue clipping at 0)."""
    w, V = np.linalg.eigh(Q)
    w = np.clip(w, 0.0, None)
    return V @ np.diag(np.sqrt(w)) @ V.T


def validate_ocp(spec: OcpSpec) -> list[str]:
    """Check the standing assumptions; returns human-readable violations.

    An empty list means the spec is well posed: Q symmetric PSD, R symmetric
    PD, (A, B) stabilizable, (Q^(1/2), A) detectable, X and U contain the
    origin strictly, and T (when given) is contained in X.
    """
    v = []
    Q, R = spec.Q, spec.R
    if not np.allclose(Q, Q.T, atol=1e-12):
        v.append("Q not symmetric")
    elif np.linalg.eigvalsh(Q).min() < -PSD_TOL:
        v.append("Q not positive semidefinite")
    if not np.allclose(R, R.T, atol=1e-12):
        v.append("R not symmetric")
    elif np.linalg.eigvalsh(R).min() <= PD_TOL:
        v.append("R not positive definite")
    if not is_stabilizable(spec.sys.A, spec.sys.B):
        v.append("not stabilizable")
    if np.allclose(Q, Q.T, atol=1e-12) and np.linalg.eigvalsh(Q).min() >= -PSD_TOL:
        if not is_detectable(matrix_sqrt_psd(Q), spec.sys.A):
            v.append("not detectable")
    if not spec.Xset.origin_interior():
        v.append("origin not interior to X")
    if not spec.Uset.origin_interior():
        v.append("origin not interior to U")
    if spec.Tset is not None:
        if not spec.Tset.origin_interior():
            v.append("origin not interior to T")
        elif not _poly_subset(spec.Tset, spec.Xset):
            v.append("T not contained in X")
    if spec.P is not None:
        if not np.allclose(spec.P, spec.P.T, atol=1e-10):
            v.append("P not symmetric")
        elif np.linalg.eigvalsh(spec.P).min() <= PD_TOL:
            v.append("P not positive definite")
    return v


def _poly_subset(inner: HalfspacePolytope, outer: HalfspacePolytope) -> bool:
    """inner subseteq outer, decided by one support LP per outer row."""
    from .qp import support_value  # late import: qp builds on model types

    for row, bound in zip(outer.C, outer.c):
        if support_value(inner, row) > bound + 1e-9:
            return False
    return True


def _as_matrix(obj, key: str) -> np.ndarray:
    try:
        return np.array(obj[key], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"config key '{key}' missing or not numeric") from exc


def _as_polytope(obj, key: str) -> HalfspacePolytope:
    try:
        block = obj[key]
        return HalfspacePolytope(
            np.array(block["C"], dtype=float), np.array(block["c"], dtype=float)
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"config key '{key}' must be an object with C and c") from exc


def load_config(path) -> OcpSpec:
    """Load and validate a JSON problem config.

    Expected keys: A, B, Q, R (row-major matrices), N (int), X and U as
    {"C": rows, "c": offsets}; optional T and P in the same formats.
    Raises ParseError / DimensionError / AssumptionError.
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON in {path}: {exc}") from exc

    sys = LtiSystem(_as_matrix(raw, "A"), _as_matrix(raw, "B"))
    try:
        N = int(raw["N"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError("config key 'N' missing or not an integer") from exc
    spec = OcpSpec(
        sys=sys,
        Q=_as_matrix(raw, "Q"),
        R=_as_matrix(raw, "R"),
        N=N,
        Xset=_as_polytope(raw, "X"),
        Uset=_as_polytope(raw, "U"),
        Tset=_as_polytope(raw, "T") if "T" in raw else None,
        P=_as_matrix(raw, "P") if "P" in raw else None,
    )
    violations = validate_ocp(spec)
    if violations:
        raise AssumptionError("; ".join(violations))
    return spec


def config_dict(spec: OcpSpec) -> dict:
    """Plain-JSON representation; floats round-trip exactly through repr."""
    out = {
        "A": spec.sys.A.tolist(),
        "B": spec.sys.B.tolist(),
        "Q": spec.Q.tolist(),
        "R": spec.R.tolist(),
        "N": spec.N,
        "X": {"C": spec.Xset.C.tolist(), "c": spec.Xset.c.tolist()},
        "U": {"C": spec.Uset.C.tolist(), "c": spec.Uset.c.tolist()},
    }
    if spec.Tset is not None:
        out["T"] = {"C": spec.Tset.C.tolist(), "c": spec.Tset.c.tolist()}
    if spec.P is not None:
        out["P"] = spec.P.tolist()
    return out


def save_config(spec: OcpSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_dict(spec), fh, indent=2)
        fh.write("\n")
