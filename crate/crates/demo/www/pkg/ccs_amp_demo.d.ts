/* tslint:disable */
/* eslint-disable */

/**
 * Runs one transmission of `ka` random users at `ebn0_db` and decodes it
 * with the given mode (`"original"` or `"enhanced"`). Returns JSON with the
 * sent and decoded payloads and the per-iteration noise estimate.
 */
export function decode_demo(ka: number, ebn0_db: number, mode: string, seed: number): string;

/**
 * Encodes a random payload, gives each information section a belief that
 * puts `confidence` on the true value and spreads the rest uniformly, and
 * returns the prior this induces on the first parity section as JSON.
 */
export function parity_prior_demo(confidence: number, seed: number): string;

/**
 * Posterior mean of one entry as the effective observation sweeps
 * `[r_min, r_max]`.
 */
export function pme_curve(prior: number, tau: number, amplitude: number, r_min: number, r_max: number, points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly decode_demo: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly parity_prior_demo: (a: number, b: number) => [number, number, number, number];
    readonly pme_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
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
