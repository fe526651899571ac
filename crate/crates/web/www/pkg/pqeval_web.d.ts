/* tslint:disable */
/* eslint-disable */

/**
 * A generated scene with its images (RGBA, row-major) and scores.
 */
export class SceneView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    gt_rgba(): Uint8Array;
    pred_rgba(): Uint8Array;
    /**
     * Green: matched, red: false positive, orange: missed ground truth,
     * grey: prediction over void that is not counted.
     */
    status_rgba(): Uint8Array;
    summary_json(): string;
    readonly height: number;
    readonly width: number;
}

/**
 * `[pq, sq, rq]` as fractions from raw counts; empty for an absent class.
 */
export function class_pq(tp: number, fp: number, fn_: number, iou_sum: number): Float64Array;

/**
 * The default weight map as JSON.
 */
export function default_weights(): string;

/**
 * Generates and scores a synthetic scene.
 */
export function synth_scene(width: number, height: number, n_segments: number, void_fraction: number, strength: number, seed: number): SceneView;

/**
 * Weighted scores from `[{condition, pq, sq, rq}]` and a
 * `{"fog/day": 1.0, ...}` weight map, both JSON. Returns JSON.
 */
export function weighted(conditions_json: string, weights_json: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_sceneview_free: (a: number, b: number) => void;
    readonly class_pq: (a: number, b: number, c: number, d: number) => [number, number];
    readonly default_weights: () => [number, number];
    readonly sceneview_gt_rgba: (a: number) => [number, number];
    readonly sceneview_height: (a: number) => number;
    readonly sceneview_pred_rgba: (a: number) => [number, number];
    readonly sceneview_status_rgba: (a: number) => [number, number];
    readonly sceneview_summary_json: (a: number) => [number, number];
    readonly sceneview_width: (a: number) => number;
    readonly synth_scene: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly weighted: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
