/* tslint:disable */
/* eslint-disable */

/**
 * JavaScript handle of a [`Playground`].
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    constructor(seed: number);
    nudge(dx: number, dy: number, dz: number, trigger: number): void;
    objects(): string;
    /**
     * RGBA bytes for an `ImageData` of `width` x `height`.
     */
    render(azimuth: number, elevation: number, radius: number, width: number, height: number): Uint8Array;
    reset(seed: number): void;
    scriptGrasp(target: number): number;
    state(): string;
    step(): string;
    turn(roll: number, pitch: number, yaw: number): void;
}

export function decimatePreview(subdivisions: number, target: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly decimatePreview: (a: number, b: number) => [number, number, number, number];
    readonly demo_new: (a: number) => [number, number, number];
    readonly demo_nudge: (a: number, b: number, c: number, d: number, e: number) => void;
    readonly demo_objects: (a: number) => [number, number];
    readonly demo_render: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly demo_reset: (a: number, b: number) => [number, number];
    readonly demo_scriptGrasp: (a: number, b: number) => [number, number, number];
    readonly demo_state: (a: number) => [number, number];
    readonly demo_step: (a: number) => [number, number];
    readonly demo_turn: (a: number, b: number, c: number, d: number) => void;
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
