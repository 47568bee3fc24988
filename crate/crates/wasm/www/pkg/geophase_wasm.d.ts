/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `(x, y)` pairs: the invariant's direction on the hyperboloid mapped
     * to the Poincaré disk, `(R¹, R²)/(1 + R³)`, over one period.
     */
    disk_path(points: number): Float64Array;
    /**
     * Derives the model from `(M, Ω, m, ω)`; fails when `m ≤ M` or a
     * frequency is not positive.
     */
    constructor(M: number, Omega: number, m: number, omega: number);
    /**
     * Truncated numeric phases at the period for levels `0..=n_max`, five
     * numbers per level: fidelity, total, dynamical, geometric from the
     * total, geometric from the frame integral.
     */
    numeric_phases(dim: number, n_max: number, steps: number): Float64Array;
    /**
     * `[t, δₙ(t), γₙ(t)]` triples on `points + 1` times over one period.
     */
    phase_curves(n: number, points: number): Float64Array;
    /**
     * The one-line simplified geometric phase at the period, for comparison.
     */
    simplified_gamma(n: number): number;
    readonly degenerate: boolean;
    readonly mu: number;
    readonly nu: number;
    readonly period: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_degenerate: (a: number) => number;
    readonly demo_disk_path: (a: number, b: number) => [number, number, number, number];
    readonly demo_mu: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_nu: (a: number) => number;
    readonly demo_numeric_phases: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_period: (a: number) => number;
    readonly demo_phase_curves: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_simplified_gamma: (a: number, b: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
