/**
 * Figure builders: each kind maps result rows onto an echarts option.
 *
 * Conventions shared by all error-rate figures: simulated values are drawn
 * as markers only, analytic predictions as solid lines in the same color,
 * and the error-rate axis is logarithmic (zero estimates cannot be drawn on
 * a log axis and are dropped from the plot).
 */

import type { EChartsOption, SeriesOption } from "echarts";
import {
  OutageRow,
  ScatterRow,
  SchemaError,
  SerRow,
  loadOutageRows,
  loadScatterRows,
  loadSerRows,
} from "./schema.js";

export type FigureKind = "ser_snr" | "floor_n" | "floor_rho" | "outage" | "scatter";

export const FIGURE_KINDS: FigureKind[] = ["ser_snr", "floor_n", "floor_rho", "outage", "scatter"];

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  title?: string;
  width?: number;
  height?: number;
}

const PALETTE = ["#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377", "#bbbbbb"];

function groupBy<T>(rows: T[], key: (row: T) => string): Map<string, T[]> {
  const groups = new Map<string, T[]>();
  for (const row of rows) {
    const k = key(row);
    const bucket = groups.get(k);
    if (bucket) bucket.push(row);
    else groups.set(k, [row]);
  }
  return groups;
}

export function formatTick(value: number): string {
  if (value === 0) return "0";
  const exponent = Math.log10(Math.abs(value));
  if (exponent >= 4 || exponent < -2.5) {
    return value.toExponential(Math.abs(Math.round(exponent) - exponent) < 1e-9 ? 0 : 1);
  }
  return `${Number(value.toPrecision(3))}`;
}

function logAxis(name: string) {
  return {
    type: "log" as const,
    name,
    nameLocation: "middle" as const,
    nameGap: 40,
    axisLabel: { formatter: formatTick },
  };
}

function baseOption(title: string | undefined, xAxis: object, yAxis: object, series: SeriesOption[]): EChartsOption {
  return {
    animation: false,
    title: title ? { text: title, left: "center" } : undefined,
    legend: { bottom: 0, type: "scroll" },
    grid: { left: 70, right: 30, top: 40, bottom: 70 },
    xAxis,
    yAxis,
    series,
  } as EChartsOption;
}

/**
 * Marker series for the simulated values plus a solid-line series for the
 * analytic prediction of every detector that has one.
 */
function errorRateSeries(
  rows: SerRow[],
  x: (row: SerRow) => number,
): SeriesOption[] {
  const series: SeriesOption[] = [];
  const byDetector = groupBy(rows, (r) => r.detector);
  let colorIdx = 0;
  for (const [detector, group] of byDetector) {
    const color = PALETTE[colorIdx++ % PALETTE.length];
    const sorted = [...group].sort((a, b) => x(a) - x(b));
    series.push({
      name: detector,
      type: "line",
      data: sorted.filter((r) => r.ser > 0).map((r) => [x(r), r.ser]),
      lineStyle: { opacity: 0 },
      symbol: "circle",
      symbolSize: 8,
      itemStyle: { color },
    });
    const analytic = sorted.filter((r) => r.analytic_ser !== null && r.analytic_ser > 0);
    if (analytic.length > 0) {
      series.push({
        name: `${detector} (analytic)`,
        type: "line",
        data: analytic.map((r) => [x(r), r.analytic_ser as number]),
        symbol: "none",
        lineStyle: { color, width: 2 },
        itemStyle: { color },
      });
    }
  }
  return series;
}

export function serVsSnrOption(rows: SerRow[], title?: string): EChartsOption {
  return baseOption(
    title,
    { type: "value", name: "SNR (dB)", nameLocation: "middle", nameGap: 30 },
    logAxis("SER"),
    errorRateSeries(rows, (r) => r.snr_db),
  );
}

export function floorVsAntennasOption(rows: SerRow[], title?: string): EChartsOption {
  return baseOption(
    title,
    { ...logAxis("number of antennas N"), nameGap: 30, logBase: 2 },
    logAxis("SER at floor SNR"),
    errorRateSeries(rows, (r) => r.n),
  );
}

/** Floor vs correlation, plotted against 1 - rho so high correlation spreads out. */
export function floorVsCorrelationOption(rows: SerRow[], title?: string): EChartsOption {
  const transformed = rows.filter((r) => r.rho < 1);
  return baseOption(
    title,
    { ...logAxis("1 - rho"), nameGap: 30, inverse: true },
    logAxis("SER at floor SNR"),
    errorRateSeries(transformed, (r) => 1.0 - r.rho),
  );
}

export function outageOption(rows: OutageRow[], title?: string): EChartsOption {
  const series: SeriesOption[] = [];
  const groups = groupBy(rows, (r) => `${r.detector} N=${r.n}`);
  let colorIdx = 0;
  for (const [label, group] of groups) {
    const color = PALETTE[colorIdx++ % PALETTE.length];
    const sorted = [...group].sort((a, b) => a.zeta - b.zeta);
    series.push({
      name: label,
      type: "line",
      data: sorted.filter((r) => r.p_out > 0 && r.zeta > 0).map((r) => [r.zeta, r.p_out]),
      symbol: "diamond",
      symbolSize: 7,
      lineStyle: { color },
      itemStyle: { color },
    });
  }
  return baseOption(title, logAxis("SER threshold"), logAxis("outage probability"), series);
}

export function scatterOption(rows: ScatterRow[], title?: string): EChartsOption {
  const series: SeriesOption[] = [];
  const groups = groupBy(rows, (r) => `${r.detector} N=${r.n}`);
  let colorIdx = 0;
  for (const [label, group] of groups) {
    series.push({
      name: label,
      type: "scatter",
      data: group.filter((r) => r.cond_ser > 0).map((r) => [r.h_norm_sq, r.cond_ser]),
      symbolSize: 5,
      itemStyle: { color: PALETTE[colorIdx++ % PALETTE.length], opacity: 0.6 },
    });
  }
  return baseOption(
    title,
    { type: "value", name: "squared channel norm", nameLocation: "middle", nameGap: 30 },
    logAxis("conditional SER"),
    series,
  );
}

/** Load every input of a figure spec and build its chart option. */
export function buildOption(spec: FigureSpec): EChartsOption {
  if (spec.inputs.length === 0) {
    throw new SchemaError("figure spec has no input files");
  }
  switch (spec.kind) {
    case "ser_snr":
      return serVsSnrOption(spec.inputs.flatMap(loadSerRows), spec.title);
    case "floor_n":
      return floorVsAntennasOption(spec.inputs.flatMap(loadSerRows), spec.title);
    case "floor_rho":
      return floorVsCorrelationOption(spec.inputs.flatMap(loadSerRows), spec.title);
    case "outage":
      return outageOption(spec.inputs.flatMap(loadOutageRows), spec.title);
    case "scatter":
      return scatterOption(spec.inputs.flatMap(loadScatterRows), spec.title);
    default:
      throw new SchemaError(`unknown figure kind '${(spec as FigureSpec).kind}'`);
  }
}
