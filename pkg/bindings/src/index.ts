/**
 * Node bindings for the visprune CLI.
 *
 * boundPrune and boundFlops give host code an array-in/array-out interface:
 * inputs are serialized to NPY files in a private temp directory, the
 * installed CLI (`python3 -m visprune`) runs on them, and its JSON/CSV
 * output comes back as typed arrays and plain numbers. Caller arrays are
 * never modified. CLI failures re-surface as exceptions named after the
 * core error class that raised them.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { HostArray, checkHostArray, writeNpy } from "./npy.js";

export { HostArray, hostArray, readNpy, writeNpy } from "./npy.js";

/** Matches the core package's version. */
export const VERSION = "0.1.0";

export type Weighting = "none" | "uniform" | "middle-peak" | "exponential" | "explicit";

/** Keys mirror the core PruneConfig fields, plus the query-weighting knobs. */
export interface PruneConfigMap {
  r?: number;
  alpha?: number;
  tau?: number;
  cap_m?: number | null;
  beta?: number;
  eps?: number;
  tie_break?: "lowest-index";
  weighting?: Weighting;
  gamma?: number;
  explicit_weights?: readonly number[];
}

export interface FrameSelection {
  readonly frameIndex: number;
  readonly budget: number;
  readonly keptIndices: Int32Array;
  readonly selectionOrder: Int32Array;
  readonly relevance: Float64Array;
}

export interface PruneOutput {
  readonly frames: FrameSelection[];
  /** Configuration echo as the CLI resolved it. */
  readonly config: Record<string, unknown>;
}

/** Keys mirror the core CostModelSpec fields. */
export interface FlopsConfigMap {
  d: number;
  m: number;
  T: number;
  K?: number;
  t?: number;
  v_full?: number;
  v_pruned?: number;
}

export interface FlopsReport {
  readonly flops_full: number;
  readonly flops_pruned: number;
  readonly ratio: number;
}

/** A CLI failure; `name` carries the core error class (e.g. "ShapeError"). */
export class VispruneError extends Error {
  readonly exitCode: number;

  constructor(name: string, message: string, exitCode: number) {
    super(message);
    this.name = name;
    this.exitCode = exitCode;
  }
}

function pythonExecutable(): string {
  return process.env.VISPRUNE_PYTHON ?? "python3";
}

function runCli(args: string[]): string {
  const proc = spawnSync(pythonExecutable(), ["-m", "visprune", ...args], {
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw proc.error;
  }
  if (proc.status !== 0) {
    const match = /error:\s*([A-Za-z_][A-Za-z0-9_]*):\s*([\s\S]*)/.exec(proc.stderr);
    if (match) {
      throw new VispruneError(match[1], match[2].trim(), proc.status ?? -1);
    }
    throw new VispruneError("UsageError", proc.stderr.trim(), proc.status ?? -1);
  }
  return proc.stdout;
}

const PRUNE_KEYS = new Set([
  "r",
  "alpha",
  "tau",
  "cap_m",
  "beta",
  "eps",
  "tie_break",
  "weighting",
  "gamma",
  "explicit_weights",
]);

function pruneFlags(config: PruneConfigMap): string[] {
  for (const key of Object.keys(config)) {
    if (!PRUNE_KEYS.has(key)) {
      throw new TypeError(`unknown config key ${JSON.stringify(key)}`);
    }
  }
  if (config.tie_break !== undefined && config.tie_break !== "lowest-index") {
    throw new RangeError(`unsupported tie_break ${JSON.stringify(config.tie_break)}`);
  }
  const flags: string[] = [];
  if (config.r !== undefined) flags.push("--ratio", String(config.r));
  if (config.alpha !== undefined) flags.push("--alpha", String(config.alpha));
  if (config.tau !== undefined) flags.push("--tau", String(config.tau));
  if (config.cap_m !== undefined && config.cap_m !== null) {
    flags.push("--cap-m", String(config.cap_m));
  }
  if (config.beta !== undefined) flags.push("--beta", String(config.beta));
  if (config.eps !== undefined) flags.push("--eps", String(config.eps));
  if (config.weighting !== undefined) flags.push("--weighting", config.weighting);
  if (config.gamma !== undefined) flags.push("--gamma", String(config.gamma));
  if (config.explicit_weights !== undefined) {
    flags.push("--explicit-weights", config.explicit_weights.join(","));
  }
  return flags;
}

interface SelectionDocument {
  config: Record<string, unknown>;
  frames: Array<{
    frame_index: number;
    budget: number;
    kept_indices: number[];
    selection_order: number[];
    relevance: number[];
  }>;
}

/**
 * Prune visual tokens. `features` is one frame (L x C) or a frame stack
 * (N x L x C); `query` is prompt token embeddings (J x C), a precomputed
 * query vector (length C), or null when `config.weighting` is "none".
 */
export function boundPrune(
  features: HostArray,
  query: HostArray | null,
  config: PruneConfigMap = {},
): PruneOutput {
  checkHostArray(features, "features");
  if (features.shape.length !== 2 && features.shape.length !== 3) {
    throw new RangeError(`features must be rank 2 or 3, got rank ${features.shape.length}`);
  }
  const noText = config.weighting === "none" || query === null;
  if (!noText) {
    checkHostArray(query!, "query");
    if (query!.shape.length !== 1 && query!.shape.length !== 2) {
      throw new RangeError(`query must be rank 1 or 2, got rank ${query!.shape.length}`);
    }
  }

  const dir = mkdtempSync(join(tmpdir(), "visprune-"));
  try {
    const featuresPath = join(dir, "features.npy");
    const outPath = join(dir, "selection.json");
    writeNpy(featuresPath, features);
    const args = ["prune", "--features", featuresPath, "--out", outPath, "--emit-relevance"];
    if (noText) {
      args.push("--no-text");
    } else {
      const queryPath = join(dir, "query.npy");
      writeNpy(queryPath, query!);
      args.push("--query-embeddings", queryPath);
    }
    args.push(...pruneFlags(config));
    runCli(args);
    const doc = JSON.parse(readFileSync(outPath, "utf8")) as SelectionDocument;
    return {
      config: doc.config,
      frames: doc.frames.map((frame) => ({
        frameIndex: frame.frame_index,
        budget: frame.budget,
        keptIndices: Int32Array.from(frame.kept_indices),
        selectionOrder: Int32Array.from(frame.selection_order),
        relevance: Float64Array.from(frame.relevance),
      })),
    };
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/** Decoder FLOPs with and without pruning, as the cost model computes them. */
export function boundFlops(config: FlopsConfigMap): FlopsReport {
  const known = new Set(["d", "m", "T", "K", "t", "v_full", "v_pruned"]);
  for (const key of Object.keys(config)) {
    if (!known.has(key)) {
      throw new TypeError(`unknown config key ${JSON.stringify(key)}`);
    }
  }
  for (const key of ["d", "m", "T"] as const) {
    if (typeof config[key] !== "number") {
      throw new TypeError(`config.${key} is required`);
    }
  }

  const dir = mkdtempSync(join(tmpdir(), "visprune-"));
  try {
    const csvPath = join(dir, "flops.csv");
    runCli([
      "flops",
      "--d", String(config.d),
      "--m", String(config.m),
      "--T", String(config.T),
      "--k-layer", String(config.K ?? 0),
      "--text-tokens", String(config.t ?? 0),
      "--v-full", String(config.v_full ?? 0),
      "--v-pruned", String(config.v_pruned ?? 0),
      "--csv", csvPath,
    ]);
    const lines = readFileSync(csvPath, "utf8").trim().split("\n");
    if (lines.length < 2) {
      throw new VispruneError("DataError", "flops CSV came back empty", 1);
    }
    const [, , flopsFull, flopsPruned, ratio] = lines[1].split(",");
    return {
      flops_full: Number(flopsFull),
      flops_pruned: Number(flopsPruned),
      ratio: Number(ratio),
    };
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
