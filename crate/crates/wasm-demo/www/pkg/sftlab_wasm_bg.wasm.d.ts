/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const emptiness_curve: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
export const sample_periodic_tile: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number, number];
export const zeta_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
