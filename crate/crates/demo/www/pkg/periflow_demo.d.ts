/* tslint:disable */
/* eslint-disable */

/**
 * Periodic solution sampled at a few frames, with positions on the moving curve.
 */
export class PeriodicRun {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Interleaved `x, y, u` for every node of frame `k`.
     */
    frame(k: number): Float64Array;
    frame_count(): number;
    mean_drift(): number;
    nodes(): number;
    relaxed_residual(): number;
    sigma_min(): number;
    strict_residual(): number;
    time(k: number): number;
}

export function bandDistance(family: string, shape: number, h: number, delta: number): Float64Array;

export function heatDecay(nodes: number, steps: number): Float64Array;

export function periodicSolution(family: string, shape: number, mode: string, coefficient: number, forcing: string, target_mean: number, nodes: number, steps: number, frames: number): PeriodicRun;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_periodicrun_free: (a: number, b: number) => void;
    readonly bandDistance: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly heatDecay: (a: number, b: number) => [number, number, number, number];
    readonly periodicSolution: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number) => [number, number, number];
    readonly periodicrun_frame: (a: number, b: number) => [number, number];
    readonly periodicrun_frame_count: (a: number) => number;
    readonly periodicrun_mean_drift: (a: number) => number;
    readonly periodicrun_nodes: (a: number) => number;
    readonly periodicrun_relaxed_residual: (a: number) => number;
    readonly periodicrun_sigma_min: (a: number) => number;
    readonly periodicrun_strict_residual: (a: number) => number;
    readonly periodicrun_time: (a: number, b: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
