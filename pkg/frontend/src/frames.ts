/** Frame codec, little-endian throughout.
 *
 *   REQUEST   a5 01 | u16 n | n float64
 *   RESPONSE  a5 02 | u8 flags | u16 count | u16 q | count bitsets
 *   ERROR     a5 03 | u8 code (1 infeasible, 2 malformed)
 */

import { decodeActiveSet, ProtocolError, wireWidth } from "./bitset.js";

export const MAGIC = 0xa5;
export const MSG_REQUEST = 0x01;
export const MSG_RESPONSE = 0x02;
export const MSG_ERROR = 0x03;
export const ERR_INFEASIBLE = 1;
export const ERR_MALFORMED = 2;
export const FLAG_CRITERION = 0x01;
export const FLAG_NO_CACHE = 0x02;

export type RequestFrame = { kind: "request"; x: number[] };
export type ResponseFrame = {
  kind: "response";
  flags: number;
  sets: number[][];
  q: number;
};
export type ErrorFrame = { kind: "error"; code: number };
export type Frame = RequestFrame | ResponseFrame | ErrorFrame;

export function encodeRequest(x: number[]): Uint8Array {
  const buf = Buffer.alloc(4 + 8 * x.length);
  buf.writeUInt8(MAGIC, 0);
  buf.writeUInt8(MSG_REQUEST, 1);
  buf.writeUInt16LE(x.length, 2);
  x.forEach((v, i) => buf.writeDoubleLE(v, 4 + 8 * i));
  return new Uint8Array(buf);
}

/** Incremental parser: feed raw chunks, pull complete frames. */
export class FrameReader {
  private buf = Buffer.alloc(0);

  push(chunk: Uint8Array): void {
    this.buf = Buffer.concat([this.buf, Buffer.from(chunk)]);
  }

  /** One complete frame from the front of the buffer, or null. */
  next(): Frame | null {
    if (this.buf.length < 2) return null;
    const magic = this.buf.readUInt8(0);
    if (magic !== MAGIC) {
      throw new ProtocolError(`bad magic byte 0x${magic.toString(16)}`);
    }
    const mtype = this.buf.readUInt8(1);
    if (mtype === MSG_REQUEST) {
      if (this.buf.length < 4) return null;
      const n = this.buf.readUInt16LE(2);
      const total = 4 + 8 * n;
      if (this.buf.length < total) return null;
      const x: number[] = [];
      for (let i = 0; i < n; i++) x.push(this.buf.readDoubleLE(4 + 8 * i));
      this.buf = this.buf.subarray(total);
      return { kind: "request", x };
    }
    if (mtype === MSG_RESPONSE) {
      if (this.buf.length < 7) return null;
      const flags = this.buf.readUInt8(2);
      const count = this.buf.readUInt16LE(3);
      const q = this.buf.readUInt16LE(5);
      const width = wireWidth(q);
      const total = 7 + count * width;
      if (this.buf.length < total) return null;
      const sets: number[][] = [];
      for (let i = 0; i < count; i++) {
        const start = 7 + i * width;
        sets.push(
          decodeActiveSet(
            new Uint8Array(this.buf.subarray(start, start + width)),
            q
          )
        );
      }
      this.buf = this.buf.subarray(total);
      return { kind: "response", flags, sets, q };
    }
    if (mtype === MSG_ERROR) {
      if (this.buf.length < 3) return null;
      const code = this.buf.readUInt8(2);
      this.buf = this.buf.subarray(3);
      return { kind: "error", code };
    }
    throw new ProtocolError(`unknown frame type 0x${mtype.toString(16)}`);
  }

  get pending(): number {
    return this.buf.length;
  }
}
