/** Active sets on the wire: fixed-width bitsets, LSB-first per byte.
 * Rows are 1-based; bit i-1 set means row i is active. */

export class IndexOutOfRange extends Error {}
export class ProtocolError extends Error {}

export function wireWidth(q: number): number {
  return (q + 7) >> 3;
}

export function encodeActiveSet(rows: number[], q: number): Uint8Array {
  const buf = new Uint8Array(wireWidth(q));
  for (const i of rows) {
    if (i < 1 || i > q) throw new IndexOutOfRange(`row ${i} outside 1..${q}`);
    buf[(i - 1) >> 3] |= 1 << ((i - 1) & 7);
  }
  return buf;
}

export function decodeActiveSet(data: Uint8Array, q: number): number[] {
  if (data.length !== wireWidth(q)) {
    throw new ProtocolError(
      `bitset is ${data.length} bytes, expected ${wireWidth(q)}`
    );
  }
  const rows: number[] = [];
  for (let i = 1; i <= q; i++) {
    if ((data[(i - 1) >> 3] >> ((i - 1) & 7)) & 1) rows.push(i);
  }
  return rows;
}
