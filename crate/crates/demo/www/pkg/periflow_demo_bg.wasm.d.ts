/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_periodicrun_free: (a: number, b: number) => void;
export const bandDistance: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const heatDecay: (a: number, b: number) => [number, number, number, number];
export const periodicSolution: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number) => [number, number, number];
export const periodicrun_frame: (a: number, b: number) => [number, number];
export const periodicrun_frame_count: (a: number) => number;
export const periodicrun_mean_drift: (a: number) => number;
export const periodicrun_nodes: (a: number) => number;
export const periodicrun_relaxed_residual: (a: number) => number;
export const periodicrun_sigma_min: (a: number) => number;
export const periodicrun_strict_residual: (a: number) => number;
export const periodicrun_time: (a: number, b: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
