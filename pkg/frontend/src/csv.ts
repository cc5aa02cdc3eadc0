/**
 * Parsers for the simulator's CSV artifacts.
 *
 * Schema violations throw SchemaError with the offending column named, so
 * the CLI can report exactly what did not match.
 */

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export interface TwoColumn {
  x: number[];
  y: number[];
}

export interface MatrixCsv {
  /** first row of the file, minus the empty corner cell */
  columnAxis: number[];
  /** first column of each data row */
  rowAxis: number[];
  /** rows.length === rowAxis.length, each of columnAxis.length */
  values: number[][];
}

export interface FitParams {
  model: string;
  params: Map<string, number>;
  stderr: Map<string, number>;
}

function splitLines(text: string): string[] {
  return text
    .split(/\r?\n/)
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
}

function parseNumber(token: string, column: string, line: number): number {
  const value = Number(token);
  if (token === "" || Number.isNaN(value)) {
    throw new SchemaError(
      `column "${column}" has non-numeric value ${JSON.stringify(token)} on line ${line}`,
    );
  }
  return value;
}

/** Two-column CSV with an exact expected header, e.g. "tau_s,value". */
export function readTwoColumn(text: string, header: string): TwoColumn {
  const lines = splitLines(text);
  if (lines.length === 0) throw new SchemaError("empty file");
  if (lines[0] !== header) {
    const got = lines[0].split(",");
    const want = header.split(",");
    for (let i = 0; i < want.length; i++) {
      if (got[i] !== want[i]) {
        throw new SchemaError(
          `expected column "${want[i]}" at position ${i}, found "${got[i] ?? ""}"`,
        );
      }
    }
    throw new SchemaError(`unexpected extra columns: ${lines[0]}`);
  }
  const [nameX, nameY] = header.split(",");
  const x: number[] = [];
  const y: number[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== 2) {
      throw new SchemaError(`expected 2 columns on line ${i + 1}, found ${cells.length}`);
    }
    x.push(parseNumber(cells[0], nameX, i + 1));
    y.push(parseNumber(cells[1], nameY, i + 1));
  }
  return { x, y };
}

/** Matrix CSV: first row is one axis, first column the other, corner empty. */
export function readMatrix(text: string): MatrixCsv {
  const lines = splitLines(text);
  if (lines.length < 2) throw new SchemaError("matrix CSV needs a header row and data");
  const headerCells = lines[0].split(",");
  if (headerCells[0] !== "") {
    throw new SchemaError(
      `matrix corner cell must be empty, found "${headerCells[0]}"`,
    );
  }
  const columnAxis = headerCells
    .slice(1)
    .map((tok, i) => parseNumber(tok, `axis[${i}]`, 1));
  const rowAxis: number[] = [];
  const values: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columnAxis.length + 1) {
      throw new SchemaError(
        `row ${i + 1} has ${cells.length - 1} values, expected ${columnAxis.length}`,
      );
    }
    rowAxis.push(parseNumber(cells[0], "row-axis", i + 1));
    values.push(cells.slice(1).map((tok, j) => parseNumber(tok, `col[${j}]`, i + 1)));
  }
  return { columnAxis, rowAxis, values };
}

/** Fit result CSV: model,param,value,stderr. */
export function readFit(text: string): FitParams {
  const lines = splitLines(text);
  if (lines.length === 0) throw new SchemaError("empty fit file");
  if (lines[0] !== "model,param,value,stderr") {
    throw new SchemaError(
      `expected header "model,param,value,stderr", found "${lines[0]}"`,
    );
  }
  const params = new Map<string, number>();
  const stderr = new Map<string, number>();
  let model = "";
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== 4) {
      throw new SchemaError(`expected 4 columns on line ${i + 1}, found ${cells.length}`);
    }
    model = cells[0];
    params.set(cells[1], parseNumber(cells[2], "value", i + 1));
    stderr.set(cells[1], parseNumber(cells[3], "stderr", i + 1));
  }
  return { model, params, stderr };
}

/** Mode basis CSV: l,m,omega_hz,g_hz,beta,basis_radius_m. */
export interface ModeRow {
  l: number;
  m: number;
  omegaHz: number;
  gHz: number;
}

export function readModes(text: string): ModeRow[] {
  const lines = splitLines(text);
  const header = "l,m,omega_hz,g_hz,beta,basis_radius_m";
  if (lines.length === 0 || lines[0] !== header) {
    throw new SchemaError(`expected header "${header}", found "${lines[0] ?? ""}"`);
  }
  const out: ModeRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== 6) {
      throw new SchemaError(`expected 6 columns on line ${i + 1}, found ${cells.length}`);
    }
    out.push({
      l: parseNumber(cells[0], "l", i + 1),
      m: parseNumber(cells[1], "m", i + 1),
      omegaHz: parseNumber(cells[2], "omega_hz", i + 1),
      gHz: parseNumber(cells[3], "g_hz", i + 1),
    });
  }
  return out;
}
