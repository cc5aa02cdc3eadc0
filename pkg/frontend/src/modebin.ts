/**
 * Reader for the acoustic mode profile binary.
 *
 * Layout (little endian): 8-byte magic "PHQMODE1", uint32 nx, uint32 ny,
 * float64 dx (meters), 8 reserved bytes; then nx*ny complex64 values
 * (float32 real, float32 imag pairs), row-major.
 */

import { SchemaError } from "./csv.js";

export interface ModeProfile {
  nx: number;
  ny: number;
  dx: number;
  /** squared magnitude, row-major nx*ny */
  intensity: Float64Array;
}

const MAGIC = "PHQMODE1";
const HEADER_BYTES = 32;

export function readModeBinary(buffer: Buffer): ModeProfile {
  if (buffer.length < HEADER_BYTES) {
    throw new SchemaError("mode file too short for its 32-byte header");
  }
  const magic = buffer.subarray(0, 8).toString("latin1");
  if (magic !== MAGIC) {
    throw new SchemaError(`bad magic "${magic}", expected "${MAGIC}"`);
  }
  const nx = buffer.readUInt32LE(8);
  const ny = buffer.readUInt32LE(12);
  const dx = buffer.readDoubleLE(16);
  const expected = HEADER_BYTES + nx * ny * 8;
  if (buffer.length !== expected) {
    throw new SchemaError(
      `mode file has ${buffer.length} bytes, expected ${expected} for ${nx}x${ny}`,
    );
  }
  const intensity = new Float64Array(nx * ny);
  for (let i = 0; i < nx * ny; i++) {
    const re = buffer.readFloatLE(HEADER_BYTES + 8 * i);
    const im = buffer.readFloatLE(HEADER_BYTES + 8 * i + 4);
    intensity[i] = re * re + im * im;
  }
  return { nx, ny, dx, intensity };
}

/** Horizontal cross-section through the grid center row. */
export function centerCrossSection(profile: ModeProfile): { x: number[]; y: number[] } {
  const row = Math.floor(profile.nx / 2);
  const x: number[] = [];
  const y: number[] = [];
  for (let j = 0; j < profile.ny; j++) {
    x.push((j - profile.ny / 2) * profile.dx);
    y.push(profile.intensity[row * profile.ny + j]);
  }
  return { x, y };
}
