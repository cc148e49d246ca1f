/**
 * Input schemas for the simulator's result files.
 *
 * The simulator CLI writes three row shapes: SER sweeps (also used by the
 * floor sweeps), outage curves, and per-channel scatter points. CSV files
 * carry one shape each; JSON files hold SER rows under "rows", outage rows
 * under "rows" plus scatter points under "scatter".
 */

import { readFileSync } from "fs";

export class SchemaError extends Error {}

export interface SerRow {
  detector: string;
  snr_db: number;
  n: number;
  rho: number;
  m: number;
  trials: number;
  errors: number;
  ser: number;
  stderr: number;
  analytic_ser: number | null;
}

export interface OutageRow {
  detector: string;
  zeta: number;
  snr_db: number;
  n: number;
  rho: number;
  m: number;
  n_channels: number;
  inner_trials: number;
  p_out: number;
  stderr: number;
}

export interface ScatterRow {
  detector: string;
  snr_db: number;
  n: number;
  rho: number;
  m: number;
  h_norm_sq: number;
  cond_ser: number;
}

export const SER_COLUMNS = [
  "detector", "snr_db", "n", "rho", "m", "trials", "errors", "ser", "stderr", "analytic_ser",
] as const;
export const OUTAGE_COLUMNS = [
  "detector", "zeta", "snr_db", "n", "rho", "m", "n_channels", "inner_trials", "p_out", "stderr",
] as const;
export const SCATTER_COLUMNS = [
  "detector", "snr_db", "n", "rho", "m", "h_norm_sq", "cond_ser",
] as const;

/** Parse a simulator CSV: a header row and unquoted comma-separated values. */
export function parseCsv(text: string, path: string): Record<string, string>[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty file`);
  }
  const header = lines[0].split(",");
  return lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Record<string, string> = {};
    header.forEach((name, i) => {
      row[name] = cells[i] ?? "";
    });
    return row;
  });
}

function requireColumns(
  rows: Record<string, unknown>[],
  columns: readonly string[],
  path: string,
): void {
  if (rows.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  for (const column of columns) {
    if (!(column in rows[0])) {
      throw new SchemaError(`${path}: missing column '${column}'`);
    }
  }
}

function toNumber(value: unknown, column: string, path: string): number {
  const num = typeof value === "number" ? value : Number(value);
  if (!Number.isFinite(num)) {
    throw new SchemaError(`${path}: non-numeric value ${JSON.stringify(value)} in column '${column}'`);
  }
  return num;
}

function toOptionalNumber(value: unknown): number | null {
  if (value === null || value === undefined || value === "") return null;
  const num = typeof value === "number" ? value : Number(value);
  return Number.isFinite(num) ? num : null;
}

function coerceSer(rows: Record<string, unknown>[], path: string): SerRow[] {
  requireColumns(rows, SER_COLUMNS, path);
  return rows.map((r) => ({
    detector: String(r.detector),
    snr_db: toNumber(r.snr_db, "snr_db", path),
    n: toNumber(r.n, "n", path),
    rho: toNumber(r.rho, "rho", path),
    m: toNumber(r.m, "m", path),
    trials: toNumber(r.trials, "trials", path),
    errors: toNumber(r.errors, "errors", path),
    ser: toNumber(r.ser, "ser", path),
    stderr: toNumber(r.stderr, "stderr", path),
    analytic_ser: toOptionalNumber(r.analytic_ser),
  }));
}

function coerceOutage(rows: Record<string, unknown>[], path: string): OutageRow[] {
  requireColumns(rows, OUTAGE_COLUMNS, path);
  return rows.map((r) => ({
    detector: String(r.detector),
    zeta: toNumber(r.zeta, "zeta", path),
    snr_db: toNumber(r.snr_db, "snr_db", path),
    n: toNumber(r.n, "n", path),
    rho: toNumber(r.rho, "rho", path),
    m: toNumber(r.m, "m", path),
    n_channels: toNumber(r.n_channels, "n_channels", path),
    inner_trials: toNumber(r.inner_trials, "inner_trials", path),
    p_out: toNumber(r.p_out, "p_out", path),
    stderr: toNumber(r.stderr, "stderr", path),
  }));
}

function coerceScatter(rows: Record<string, unknown>[], path: string): ScatterRow[] {
  requireColumns(rows, SCATTER_COLUMNS, path);
  return rows.map((r) => ({
    detector: String(r.detector),
    snr_db: toNumber(r.snr_db, "snr_db", path),
    n: toNumber(r.n, "n", path),
    rho: toNumber(r.rho, "rho", path),
    m: toNumber(r.m, "m", path),
    h_norm_sq: toNumber(r.h_norm_sq, "h_norm_sq", path),
    cond_ser: toNumber(r.cond_ser, "cond_ser", path),
  }));
}

function rawRows(path: string, jsonKey: "rows" | "scatter"): Record<string, unknown>[] {
  const text = readFileSync(path, "utf-8");
  if (path.endsWith(".json")) {
    let doc: unknown;
    try {
      doc = JSON.parse(text);
    } catch (e) {
      throw new SchemaError(`${path}: invalid JSON (${(e as Error).message})`);
    }
    const rows = (doc as Record<string, unknown>)[jsonKey];
    if (!Array.isArray(rows)) {
      throw new SchemaError(`${path}: missing '${jsonKey}' array`);
    }
    return rows as Record<string, unknown>[];
  }
  return parseCsv(text, path);
}

export function loadSerRows(path: string): SerRow[] {
  return coerceSer(rawRows(path, "rows"), path);
}

export function loadOutageRows(path: string): OutageRow[] {
  return coerceOutage(rawRows(path, "rows"), path);
}

/** Scatter points live in a sibling *_scatter.csv or the JSON 'scatter' key. */
export function loadScatterRows(path: string): ScatterRow[] {
  return coerceScatter(rawRows(path, "scatter"), path);
}
