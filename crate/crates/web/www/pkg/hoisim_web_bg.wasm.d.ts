/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const decimatePreview: (a: number, b: number) => [number, number, number, number];
export const demo_new: (a: number) => [number, number, number];
export const demo_nudge: (a: number, b: number, c: number, d: number, e: number) => void;
export const demo_objects: (a: number) => [number, number];
export const demo_render: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const demo_reset: (a: number, b: number) => [number, number];
export const demo_scriptGrasp: (a: number, b: number) => [number, number, number];
export const demo_state: (a: number) => [number, number];
export const demo_step: (a: number) => [number, number];
export const demo_turn: (a: number, b: number, c: number, d: number) => void;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
