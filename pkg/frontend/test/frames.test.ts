import { describe, expect, it } from "vitest";

import { ProtocolError } from "../src/bitset.js";
import {
  encodeRequest,
  ERR_INFEASIBLE,
  FLAG_CRITERION,
  FrameReader,
  MAGIC,
} from "../src/frames.js";

function requestBytes(x: number[]): Uint8Array {
  const buf = Buffer.alloc(4 + 8 * x.length);
  buf.writeUInt8(0xa5, 0);
  buf.writeUInt8(0x01, 1);
  buf.writeUInt16LE(x.length, 2);
  x.forEach((v, i) => buf.writeDoubleLE(v, 4 + 8 * i));
  return new Uint8Array(buf);
}

describe("encodeRequest", () => {
  it("emits magic, type, u16 count, then raw doubles", () => {
    const got = encodeRequest([-2.15, 1.05]);
    expect([...got.slice(0, 4)]).toEqual([0xa5, 0x01, 0x02, 0x00]);
    expect([...got]).toEqual([...requestBytes([-2.15, 1.05])]);
    expect(got.length).toBe(20);
  });
});

describe("FrameReader", () => {
  it("parses a request frame fed in one chunk", () => {
    const r = new FrameReader();
    r.push(encodeRequest([-2.15, 1.05]));
    const frame = r.next();
    expect(frame).not.toBeNull();
    expect(frame!.kind).toBe("request");
    if (frame!.kind === "request") {
      expect(frame!.x).toEqual([-2.15, 1.05]);
    }
    expect(r.next()).toBeNull();
  });

  it("parses the response header a5 02 01 02 00 20 00 with two bitsets", () => {
    const payload = new Uint8Array([
      0xa5, 0x02, 0x01, 0x02, 0x00, 0x20, 0x00,
      // {1,7,13} over q=32
      0x41, 0x10, 0x00, 0x00,
      // {1,13} over q=32
      0x01, 0x10, 0x00, 0x00,
    ]);
    const r = new FrameReader();
    r.push(payload);
    const frame = r.next();
    expect(frame).not.toBeNull();
    if (frame!.kind !== "response") throw new Error("expected response");
    expect(frame!.flags).toBe(FLAG_CRITERION);
    expect(frame!.q).toBe(32);
    expect(frame!.sets).toEqual([
      [1, 7, 13],
      [1, 13],
    ]);
  });

  it("parses an error frame", () => {
    const r = new FrameReader();
    r.push(new Uint8Array([0xa5, 0x03, 0x01]));
    const frame = r.next();
    if (frame!.kind !== "error") throw new Error("expected error");
    expect(frame!.code).toBe(ERR_INFEASIBLE);
  });

  it("withholds a frame until the last byte arrives", () => {
    const bytes = new Uint8Array([
      0xa5, 0x02, 0x00, 0x01, 0x00, 0x08, 0x00, 0x05,
    ]);
    const r = new FrameReader();
    for (let i = 0; i < bytes.length - 1; i++) {
      r.push(bytes.subarray(i, i + 1));
      expect(r.next()).toBeNull();
    }
    r.push(bytes.subarray(bytes.length - 1));
    const frame = r.next();
    if (frame!.kind !== "response") throw new Error("expected response");
    expect(frame!.sets).toEqual([[1, 3]]);
  });

  it("parses back-to-back frames from one buffer", () => {
    const r = new FrameReader();
    const joined = new Uint8Array([
      ...encodeRequest([1.0]),
      0xa5, 0x03, 0x02,
    ]);
    r.push(joined);
    expect(r.next()!.kind).toBe("request");
    expect(r.next()!.kind).toBe("error");
    expect(r.next()).toBeNull();
    expect(r.pending).toBe(0);
  });

  it("rejects a bad magic byte", () => {
    const r = new FrameReader();
    r.push(new Uint8Array([0x00, 0x01]));
    expect(() => r.next()).toThrow(ProtocolError);
  });

  it("rejects an unknown frame type", () => {
    const r = new FrameReader();
    r.push(new Uint8Array([MAGIC, 0x7f, 0x00]));
    expect(() => r.next()).toThrow(ProtocolError);
  });
});
