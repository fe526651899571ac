/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_sceneview_free: (a: number, b: number) => void;
export const class_pq: (a: number, b: number, c: number, d: number) => [number, number];
export const default_weights: () => [number, number];
export const sceneview_gt_rgba: (a: number) => [number, number];
export const sceneview_height: (a: number) => number;
export const sceneview_pred_rgba: (a: number) => [number, number];
export const sceneview_status_rgba: (a: number) => [number, number];
export const sceneview_summary_json: (a: number) => [number, number];
export const sceneview_width: (a: number) => number;
export const synth_scene: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const weighted: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
