/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_degenerate: (a: number) => number;
export const demo_disk_path: (a: number, b: number) => [number, number, number, number];
export const demo_mu: (a: number) => number;
export const demo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const demo_nu: (a: number) => number;
export const demo_numeric_phases: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_period: (a: number) => number;
export const demo_phase_curves: (a: number, b: number, c: number) => [number, number, number, number];
export const demo_simplified_gamma: (a: number, b: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
