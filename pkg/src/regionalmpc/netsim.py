"""Networked split of the controller: central QP node, lean local node.

The central node owns the solver.  Per request it solves one QP and ships
the candidate active sets (sorted by descending binary value, truncated to
the l highest) as fixed-width bitsets.  The local node holds only the
static problem data, rebuilds laws and polytopes from the received sets,
and asks again once the state leaves every cached polytope.

Wire format (little-endian throughout):

    REQUEST   0xA5 0x01 | u16 n | n * float64
    RESPONSE  0xA5 0x02 | u8 flags (bit0 = criterion) | u16 count | u16 q
                         | count * ceil(q/8) bitset payloads
    ERROR     0xA5 0x03 | u8 code (1 = infeasible, 2 = malformed)
"""

from __future__ import annotations

import socket
import struct
import threading
from dataclasses import dataclass

import numpy as np

from .errors import (
    FamilyTooLarge,
    IndexOutOfRange,
    InfeasibleProblem,
    MaxIterations,
    ProtocolError,
    RankDeficient,
)
from .families import candidate_family, criterion_applies, reuse_region_from_sets
from .qp import ActiveSet, solve_qp
from .regions import (
    _row_rank_ok,
    control_law_from_active_set,
    feedback_head,
    regional_law,
)
from .simulate import (
    MEMBERSHIP_TOL,
    ClosedLoopTrace,
    _FamilyContext,
    _PolytopeContext,
)

MAGIC = 0xA5
MSG_REQUEST = 0x01
MSG_RESPONSE = 0x02
MSG_ERROR = 0x03
ERR_INFEASIBLE = 1
ERR_MALFORMED = 2

# response flags
FLAG_CRITERION = 0x01  # bit0: candidate family attached
FLAG_NO_CACHE = 0x02  # bit1: degenerate solve; evaluate once, do not cache


def wire_width(q: int) -> int:
    """Bytes per transmitted active set."""
    return (q + 7) // 8


def encode_active_set(active: ActiveSet, q: int) -> bytes:
    """Bitset of A: bit i-1 (LSB-first per byte) set iff i in A."""
    if len(active) and max(active) > q:
        raise IndexOutOfRange(f"row {max(active)} exceeds q={q}")
    buf = bytearray(wire_width(q))
    for i in active:
        buf[(i - 1) >> 3] |= 1 << ((i - 1) & 7)
    return bytes(buf)


def decode_active_set(data: bytes, q: int) -> ActiveSet:
    """Inverse of encode_active_set; pad bits beyond q are ignored."""
    if len(data) != wire_width(q):
        raise ProtocolError(f"bitset is {len(data)} bytes, expected {wire_width(q)}")
    rows = [
        i
        for i in range(1, q + 1)
        if data[(i - 1) >> 3] >> ((i - 1) & 7) & 1
    ]
    return ActiveSet(rows)


def sort_and_truncate(family, l: int) -> list[ActiveSet]:
    """Highest-value l sets; the full set A always survives (max value)."""
    if l < 1:
        raise IndexOutOfRange("l must be >= 1")
    return sorted(family, key=lambda a: a.value(), reverse=True)[:l]


def encode_request(x) -> bytes:
    x = np.asarray(x, dtype="<f8").ravel()
    return struct.pack("<BBH", MAGIC, MSG_REQUEST, x.size) + x.tobytes()


def encode_response(flags: int, sets, q: int) -> bytes:
    head = struct.pack("<BBBHH", MAGIC, MSG_RESPONSE, flags, len(sets), q)
    return head + b"".join(encode_active_set(a, q) for a in sets)


def encode_error(code: int) -> bytes:
    return struct.pack("<BBB", MAGIC, MSG_ERROR, code)


def _read_exact(sock, count: int, log=None) -> bytes:
    """Read exactly count bytes; b'' only on a clean EOF at a boundary."""
    buf = b""
    while len(buf) < count:
        chunk = sock.recv(count - len(buf))
        if not chunk:
            if buf:
                raise ProtocolError("connection closed inside a frame")
            return b""
        buf += chunk
    if log is not None:
        log.append(buf)
    return buf


def read_frame(sock, log=None):
    """Next frame as a tagged tuple, or None on clean shutdown.

    Returns ("request", x), ("response", flags, [ActiveSet...], q) or
    ("error", code).  An unknown magic or type byte raises ProtocolError
    on the reader side; the central answers those with an error frame
    instead of raising.
    """
    head = _read_exact(sock, 2, log)
    if not head:
        return None
    magic, mtype = head
    if magic != MAGIC:
        raise ProtocolError(f"bad magic byte 0x{magic:02x}")
    if mtype == MSG_REQUEST:
        (n,) = struct.unpack("<H", _read_exact(sock, 2, log))
        x = np.frombuffer(_read_exact(sock, 8 * n, log), dtype="<f8").copy()
        return ("request", x)
    if mtype == MSG_RESPONSE:
        flags, count, q = struct.unpack("<BHH", _read_exact(sock, 5, log))
        width = wire_width(q)
        sets = [
            decode_active_set(_read_exact(sock, width, log), q)
            for _ in range(count)
        ]
        return ("response", flags, sets, q)
    if mtype == MSG_ERROR:
        (code,) = struct.unpack("<B", _read_exact(sock, 1, log))
        return ("error", code)
    raise ProtocolError(f"unknown frame type 0x{mtype:02x}")


def serve_session(sock, cqp, l: int, apply_criterion: bool = True) -> int:
    """Answer one session's requests until EOF; returns requests served.

    Criterion-passing solves ship the truncated candidate family with the
    criterion flag set; other solves ship the bare active set.  When that
    set has dependent rows no law can be attached to it, so the solver's
    working set is shipped instead with the no-cache flag (its equality
    problem reproduces the solver's input at the requested state).  Empty
    candidates are not pruned here (the sort-then-truncate order is part
    of the wire contract); the local node prunes after receipt.
    """
    served = 0
    while True:
        try:
            frame = read_frame(sock)
        except ProtocolError:
            sock.sendall(encode_error(ERR_MALFORMED))
            continue
        if frame is None:
            return served
        if frame[0] != "request" or frame[1].size != cqp.n:
            sock.sendall(encode_error(ERR_MALFORMED))
            continue
        served += 1
        try:
            res = solve_qp(cqp, frame[1])
        except (InfeasibleProblem, MaxIterations):
            sock.sendall(encode_error(ERR_INFEASIBLE))
            continue
        if not _row_rank_ok(cqp.G[res.active.zero_based()]):
            sock.sendall(encode_response(FLAG_NO_CACHE, [res.working], cqp.q))
        elif apply_criterion and criterion_applies(cqp, res.active):
            try:
                sets = sort_and_truncate(
                    candidate_family(res.active, cqp.q_stage), l
                )
            except FamilyTooLarge:
                sets = [res.active]
            sock.sendall(encode_response(FLAG_CRITERION, sets, cqp.q))
        else:
            sock.sendall(encode_response(0, [res.active], cqp.q))


def serve_tcp(host: str, port: int, cqp, l: int, apply_criterion: bool = True):
    """Accept loop on a background thread; returns (bound_port, stop)."""
    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    server.bind((host, port))
    server.listen()
    stopping = threading.Event()

    def loop():
        while not stopping.is_set():
            try:
                conn, _ = server.accept()
            except OSError:
                return
            with conn:
                try:
                    serve_session(conn, cqp, l, apply_criterion)
                except OSError:
                    pass

    thread = threading.Thread(target=loop, daemon=True)
    thread.start()

    def stop():
        stopping.set()
        server.close()
        thread.join(timeout=5)

    return server.getsockname()[1], stop


def in_process_pair():
    """(local, central) byte-stream endpoints inside one process."""
    return socket.socketpair()


@dataclass(frozen=True)
class SessionStats:
    """Local-node accounting for one closed-loop session."""

    requests: int
    steps: int
    l_limit: int


def _context_from_response(cqp, flags, sets):
    """Rebuild the reuse structure a response describes; None = no cache."""
    if not sets:
        raise ProtocolError("response carried no active sets")
    if flags & FLAG_CRITERION:
        rr = reuse_region_from_sets(cqp, sets, prune_empty=True)
        return _FamilyContext(rr)
    try:
        law = regional_law(cqp, sets[0])
    except RankDeficient as exc:
        raise ProtocolError("dependent rows in a cacheable response") from exc
    return _PolytopeContext(law.region, law.K, law.b)


def local_run(
    sock,
    cqp,
    x0,
    max_steps: int = 1000,
    l_limit: int = 0,
    wire_log=None,
):
    """Drive one closed loop over the wire; returns (SessionStats, trace).

    The node evaluates cached affine laws while any cached polytope holds
    the state and requests a fresh solve otherwise.  l_limit is recorded
    in the stats only (the central enforces the actual truncation).
    wire_log, when a list, collects every raw byte received for
    reproducibility checks.
    """
    spec = cqp.spec
    A_sys, B_sys = spec.sys.A, spec.sys.B
    x = np.asarray(x0, dtype=float).ravel()
    states = [x]
    inputs = []
    e = []
    entered = None
    ctx = None
    for _ in range(max_steps):
        if spec.Tset.contains(x, tol=MEMBERSHIP_TOL):
            entered = len(e)
            break
        u = ctx.query(x) if ctx is not None else None
        if u is None:
            sock.sendall(encode_request(x))
            frame = read_frame(sock, wire_log)
            if frame is None:
                raise ProtocolError("central closed mid-session")
            if frame[0] == "error":
                if frame[1] == ERR_INFEASIBLE:
                    raise InfeasibleProblem("central reports infeasible state")
                raise ProtocolError(f"central error code {frame[1]}")
            _, flags, sets, q = frame
            if q != cqp.q:
                raise ProtocolError(f"central q={q}, local q={cqp.q}")
            if flags & FLAG_NO_CACHE:
                if not sets:
                    raise ProtocolError("response carried no active sets")
                Kbar, bbar = control_law_from_active_set(cqp, sets[0])
                K1, b1 = feedback_head(Kbar, bbar, cqp.m)
                ctx = None
                u = K1 @ x + b1
            else:
                ctx = _context_from_response(cqp, flags, sets)
                u = ctx.query(x)
                if u is None:
                    # state on the polytope boundary: fall back to the law
                    u = (
                        ctx.rr.feedback(x)
                        if isinstance(ctx, _FamilyContext)
                        else ctx.K @ x + ctx.b
                    )
            e.append(1)
        else:
            e.append(0)
        inputs.append(u)
        x = A_sys @ x + B_sys @ u
        states.append(x)
    else:
        raise MaxIterations(f"terminal set not reached in {max_steps} steps")
    trace = ClosedLoopTrace(
        states=np.array(states),
        inputs=np.array(inputs).reshape(len(inputs), cqp.m),
        e=tuple(e),
        entered_terminal_at=entered,
        qp_count=int(sum(e)),
    )
    stats = SessionStats(
        requests=trace.qp_count, steps=trace.steps, l_limit=l_limit
    )
    return stats, trace
