/* tslint:disable */
/* eslint-disable */

/**
 * Empirical emptiness frequency and truncated `1/zeta` on `points` alphas in `[0, 1]`.
 */
export function emptiness_curve(d: number, alphabet: number, n: number, points: number, trials: number, seed: bigint): string;

/**
 * First trial whose two-dimensional shift has a periodic certificate,
 * rendered as a `side x side` window of the periodic configuration.
 */
export function sample_periodic_tile(alphabet: number, n: number, alpha: number, seed: bigint, side: number, max_trials: number): string;

/**
 * Truncated inverse zeta product on `points` alphas in `[0, 1/|A|]`.
 */
export function zeta_curve(d: number, alphabet: number, j_max: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly emptiness_curve: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
    readonly sample_periodic_tile: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number, number];
    readonly zeta_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
