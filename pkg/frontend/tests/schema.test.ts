import { describe, expect, it } from "vitest";
import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import {
  SchemaError,
  loadOutageRows,
  loadScatterRows,
  loadSerRows,
  parseCsv,
} from "../src/schema.js";

const FIXTURES = join(__dirname, "fixtures");

function tempFile(name: string, content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "quadet-plots-"));
  const path = join(dir, name);
  writeFileSync(path, content);
  return path;
}

describe("CSV parsing", () => {
  it("round-trips a simulator SER file", () => {
    const rows = loadSerRows(join(FIXTURES, "ser_snr.csv"));
    expect(rows.length).toBe(4 * 7); // four detectors, seven SNR points
    expect(new Set(rows.map((r) => r.detector))).toEqual(new Set(["ed", "bque", "qmmse", "ml"]));
    for (const row of rows) {
      expect(row.ser).toBeGreaterThanOrEqual(0);
      expect(row.ser).toBeLessThanOrEqual(1);
      expect(row.trials).toBe(20000);
    }
    const ml = rows.filter((r) => r.detector === "ml");
    expect(ml.every((r) => r.analytic_ser === null)).toBe(true);
    const ed = rows.filter((r) => r.detector === "ed");
    expect(ed.every((r) => r.analytic_ser !== null)).toBe(true);
  });

  it("reads JSON documents through the rows key", () => {
    const rows = loadSerRows(join(FIXTURES, "ser_snr.json"));
    expect(rows.length).toBe(2 * 3);
  });

  it("reads outage curves and scatter points", () => {
    const curves = loadOutageRows(join(FIXTURES, "outage.csv"));
    expect(curves.length).toBe(3 * 2 * 5); // detectors x antenna grid x zetas
    const scatter = loadScatterRows(join(FIXTURES, "outage_scatter.csv"));
    expect(scatter.length).toBe(3 * 2 * 120);
    const fromJson = loadScatterRows(join(FIXTURES, "outage.json"));
    expect(fromJson.length).toBe(2 * 40);
  });

  it("names the missing column", () => {
    const path = tempFile("bad.csv", "detector,snr_db\ned,1.0\n");
    expect(() => loadSerRows(path)).toThrow(SchemaError);
    expect(() => loadSerRows(path)).toThrow(/missing column 'n'/);
  });

  it("rejects files with no data rows", () => {
    const path = tempFile(
      "empty.csv",
      "detector,snr_db,n,rho,m,trials,errors,ser,stderr,analytic_ser\n",
    );
    expect(() => loadSerRows(path)).toThrow(/no data rows/);
  });

  it("rejects non-numeric cells with column context", () => {
    const path = tempFile(
      "nan.csv",
      "detector,snr_db,n,rho,m,trials,errors,ser,stderr,analytic_ser\ned,x,8,0.5,2,10,1,0.1,0.01,\n",
    );
    expect(() => loadSerRows(path)).toThrow(/column 'snr_db'/);
  });

  it("rejects malformed JSON", () => {
    const path = tempFile("bad.json", "{not json");
    expect(() => loadSerRows(path)).toThrow(/invalid JSON/);
  });

  it("keeps header-cell association for ragged lines", () => {
    const rows = parseCsv("a,b\n1\n", "x.csv");
    expect(rows[0]).toEqual({ a: "1", b: "" });
  });
});
