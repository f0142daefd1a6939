"""One closed loop split across the wire, with the raw frames shown.

A central node serves QP solves on a loopback socket; the local node
caches the shipped polytopes and only asks again after leaving all of
them.  Run:  python3 demos/wire_session.py
"""

import socket

import numpy as np

from regionalmpc import complete_ocp, load_config
from regionalmpc.condense import build_condensed_qp
from regionalmpc.netsim import local_run, read_frame, serve_tcp, wire_width

cqp = build_condensed_qp(complete_ocp(load_config("configs/ex1.json")))
x0 = np.array([-2.15, 1.05])

port, stop = serve_tcp("127.0.0.1", 0, cqp, l=4)
print(f"central on 127.0.0.1:{port}, l=4 sets per response")

log = []
with socket.create_connection(("127.0.0.1", port)) as sock:
    stats, trace = local_run(sock, cqp, x0, l_limit=4, wire_log=log)
stop()

print(f"{stats.requests} requests over {stats.steps} steps, e = {trace.e}")
print()
print(f"bitset width for q={cqp.q}: {wire_width(cqp.q)} bytes")
print("received frames:")
for chunk in log:
    print(f"  {chunk.hex(' ')}")

# replay the logged bytes through the parser
class Replay:
    def __init__(self, data):
        self.data = data

    def recv(self, count):
        out, self.data = self.data[:count], self.data[count:]
        return out

replay = Replay(b"".join(log))
print()
print("decoded:")
while True:
    frame = read_frame(replay)
    if frame is None:
        break
    _, flags, sets, q = frame
    kind = "family" if flags & 0x01 else "single set"
    print(f"  {kind}: {[list(a) for a in sets]}")
