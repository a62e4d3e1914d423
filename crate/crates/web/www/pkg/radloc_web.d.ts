/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    frames(): number;
    /**
     * Estimate for `frame` with `method` (pointcloud, fft2d, fft3d,
     * music2d, music3d) as `[x, y, z]`; empty when no target was found.
     */
    locate(frame: number, method: string): Float64Array;
    map_cols(): number;
    map_rows(): number;
    /**
     * Sequence `seed` of the standard benchmark.
     */
    constructor(seed: number);
    /**
     * Range-azimuth magnitude map of `frame`, normalized to its maximum,
     * row-major with [`Demo::map_rows`] range rows (bins 1 and up) by
     * [`Demo::map_cols`] sine-space columns.
     */
    range_azimuth(frame: number): Float32Array;
    /**
     * Range of map row `row`, m.
     */
    row_range(row: number): number;
    /**
     * Ground-truth positions, flattened `x, y, z` per frame.
     */
    track(): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_frames: (a: number) => number;
    readonly demo_locate: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_map_cols: (a: number) => number;
    readonly demo_map_rows: (a: number) => number;
    readonly demo_new: (a: number) => [number, number, number];
    readonly demo_range_azimuth: (a: number, b: number) => [number, number, number, number];
    readonly demo_row_range: (a: number, b: number) => number;
    readonly demo_track: (a: number) => [number, number, number, number];
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
