/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Maximum absolute curvature on a log scale as RGBA.
     */
    curvatureRgba(): Uint8Array;
    /**
     * A normal map uploaded as canvas pixels.
     */
    static fromRgba(width: number, height: number, rgba: Uint8Array): Demo;
    /**
     * Integrate the current mesh; returns its depth at pixel centers as RGBA.
     */
    integrate(): Uint8Array;
    /**
     * Edges of the current mesh as `x0 y0 x1 y1` quadruples in pixels.
     */
    meshEdges(): Float32Array;
    /**
     * One of `sphere`, `cylinder`, `wedge`, `sinusoid`, `plane` at
     * `size × size` pixels.
     */
    constructor(scene: string, size: number);
    /**
     * The input normals as RGBA.
     */
    normalsRgba(): Uint8Array;
    /**
     * Build the adaptive mesh for `epsilon` pixels; returns the vertex count.
     */
    remesh(epsilon: number): number;
    readonly compression: number;
    readonly foregroundPixels: number;
    readonly height: number;
    /**
     * Aligned depth RMSE in pixels for synthetic scenes after integration,
     * NaN otherwise.
     */
    readonly rmse: number;
    readonly width: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_compression: (a: number) => number;
    readonly demo_curvatureRgba: (a: number) => [number, number];
    readonly demo_foregroundPixels: (a: number) => number;
    readonly demo_fromRgba: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_height: (a: number) => number;
    readonly demo_integrate: (a: number) => [number, number, number, number];
    readonly demo_meshEdges: (a: number) => [number, number];
    readonly demo_new: (a: number, b: number, c: number) => [number, number, number];
    readonly demo_normalsRgba: (a: number) => [number, number];
    readonly demo_remesh: (a: number, b: number) => [number, number, number];
    readonly demo_rmse: (a: number) => number;
    readonly demo_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
