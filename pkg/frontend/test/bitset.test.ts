import { describe, expect, it } from "vitest";

import {
  decodeActiveSet,
  encodeActiveSet,
  IndexOutOfRange,
  ProtocolError,
  wireWidth,
} from "../src/bitset.js";

describe("wireWidth", () => {
  it("rounds bits up to whole bytes", () => {
    expect(wireWidth(8)).toBe(1);
    expect(wireWidth(9)).toBe(2);
    expect(wireWidth(32)).toBe(4);
    expect(wireWidth(138)).toBe(18);
  });
});

describe("encodeActiveSet", () => {
  it("sets bit i-1, LSB-first per byte", () => {
    expect([...encodeActiveSet([1, 3], 8)]).toEqual([0x05]);
    expect([...encodeActiveSet([9], 10)]).toEqual([0x00, 0x01]);
    expect([...encodeActiveSet([13], 32)]).toEqual([0x00, 0x10, 0x00, 0x00]);
    expect([...encodeActiveSet([], 8)]).toEqual([0x00]);
  });

  it("rejects rows beyond q", () => {
    expect(() => encodeActiveSet([9], 8)).toThrow(IndexOutOfRange);
  });
});

describe("decodeActiveSet", () => {
  it("inverts encode for assorted sets and widths", () => {
    const cases: [number[], number][] = [
      [[1, 3], 8],
      [[9], 10],
      [[1, 7, 13], 32],
      [[], 32],
      [[1, 69, 138], 138],
      [Array.from({ length: 138 }, (_, i) => i + 1), 138],
    ];
    for (const [rows, q] of cases) {
      expect(decodeActiveSet(encodeActiveSet(rows, q), q)).toEqual(rows);
    }
  });

  it("rejects a payload of the wrong width", () => {
    expect(() => decodeActiveSet(new Uint8Array(3), 32)).toThrow(ProtocolError);
  });
});
