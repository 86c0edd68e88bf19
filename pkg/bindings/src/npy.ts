/**
 * Minimal NPY interchange: version 1.0 writing and 1.0/2.0 reading,
 * restricted to little-endian float32/float64 C-order arrays. This mirrors
 * what the pruning CLI accepts and emits; everything else is rejected.
 */

import { readFileSync, writeFileSync } from "node:fs";

export interface HostArray {
  readonly data: Float64Array;
  readonly shape: readonly number[];
}

const MAGIC = Buffer.from("\x93NUMPY", "latin1");

export function elementCount(shape: readonly number[]): number {
  return shape.reduce((acc, dim) => acc * dim, 1);
}

export function hostArray(data: ArrayLike<number>, shape: readonly number[]): HostArray {
  const arr = { data: Float64Array.from(data), shape: [...shape] };
  checkHostArray(arr, "array");
  return arr;
}

export function checkHostArray(arr: HostArray, name: string): void {
  if (arr.shape.length < 1) {
    throw new RangeError(`${name}: rank must be at least 1`);
  }
  if (!arr.shape.every((dim) => Number.isInteger(dim) && dim >= 1)) {
    throw new RangeError(`${name}: dimensions must be positive integers, got ${arr.shape}`);
  }
  if (elementCount(arr.shape) !== arr.data.length) {
    throw new RangeError(
      `${name}: shape (${arr.shape.join(", ")}) implies ${elementCount(arr.shape)} ` +
        `elements but data holds ${arr.data.length}`,
    );
  }
}

function shapeTuple(shape: readonly number[]): string {
  return shape.length === 1 ? `(${shape[0]},)` : `(${shape.join(", ")})`;
}

export function writeNpy(path: string, arr: HostArray): void {
  checkHostArray(arr, path);
  const body = `{'descr': '<f8', 'fortran_order': False, 'shape': ${shapeTuple(arr.shape)}, }`;
  // Magic + version + length field + header must land on a 64-byte boundary,
  // with the header terminated by a newline.
  const base = MAGIC.length + 2 + 2 + body.length + 1;
  const header = body + " ".repeat((64 - (base % 64)) % 64) + "\n";
  const lenField = Buffer.alloc(2);
  lenField.writeUInt16LE(header.length, 0);
  const payload = Buffer.alloc(arr.data.length * 8);
  for (let i = 0; i < arr.data.length; i++) {
    payload.writeDoubleLE(arr.data[i], i * 8);
  }
  writeFileSync(
    path,
    Buffer.concat([MAGIC, Buffer.from([1, 0]), lenField, Buffer.from(header, "latin1"), payload]),
  );
}

const HEADER_RE =
  /^\{'descr':\s*'([^']+)',\s*'fortran_order':\s*(True|False),\s*'shape':\s*\(([^)]*)\),?\s*\}\s*$/;

export function readNpy(path: string): HostArray {
  const raw = readFileSync(path);
  if (raw.length < 10 || !raw.subarray(0, MAGIC.length).equals(MAGIC)) {
    throw new Error(`${path}: not an NPY file (bad magic string)`);
  }
  const major = raw[6];
  const minor = raw[7];
  if (!((major === 1 || major === 2) && minor === 0)) {
    throw new Error(`${path}: unsupported NPY version ${major}.${minor}`);
  }
  const headerStart = major === 1 ? 10 : 12;
  const headerLen = major === 1 ? raw.readUInt16LE(8) : raw.readUInt32LE(8);
  const headerEnd = headerStart + headerLen;
  if (raw.length < headerEnd) {
    throw new Error(`${path}: truncated header`);
  }
  const match = raw.subarray(headerStart, headerEnd).toString("latin1").match(HEADER_RE);
  if (!match) {
    throw new Error(`${path}: unparseable header`);
  }
  const [, descr, fortran, dims] = match;
  if (descr !== "<f8" && descr !== "<f4") {
    throw new Error(`${path}: dtype ${descr} not supported (need little-endian f4/f8)`);
  }
  if (fortran !== "False") {
    throw new Error(`${path}: Fortran-ordered arrays are rejected`);
  }
  const shape = dims
    .split(",")
    .map((part) => part.trim())
    .filter((part) => part.length > 0)
    .map(Number);
  if (!shape.every((dim) => Number.isInteger(dim) && dim >= 0)) {
    throw new Error(`${path}: malformed shape (${dims})`);
  }
  const itemSize = descr === "<f8" ? 8 : 4;
  const count = elementCount(shape);
  const expected = itemSize * count;
  const payload = raw.subarray(headerEnd);
  if (payload.length !== expected) {
    throw new Error(`${path}: payload holds ${payload.length} bytes, header implies ${expected}`);
  }
  const data = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = descr === "<f8" ? payload.readDoubleLE(i * 8) : payload.readFloatLE(i * 4);
  }
  return { data, shape };
}
