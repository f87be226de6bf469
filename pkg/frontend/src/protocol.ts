/**
 * Wire protocol for the tokrail hook: one JSON document per line in each
 * direction. Logits cross as flat arrays; suppressed entries (-Infinity)
 * are encoded as null because JSON has no infinities.
 */

/** Value type of one contract key. */
export type ValueType = "string" | "integer" | "number" | "boolean" | "const";

export interface ContractKey {
  name: string;
  type: ValueType;
  value?: string;
}

export interface ContractSpec {
  keys: ContractKey[];
  ordered?: boolean;
  allow_whitespace?: boolean;
  allow_preamble?: boolean;
  permit_raw_newlines?: boolean;
}

export interface OpenRequest {
  op: "open";
  /** Contract spec as a JSON *string* (not an inline object). */
  contract: string;
  /** Policy config as a JSON *string*. */
  policy: string;
  /** Host vocabulary: token text per id, ids are array positions. */
  vocab: string[];
  eos_token_id?: number | null;
  /** Set false when the host cannot truncate its prefix cache; the
   * controller then degrades corrections to masking. */
  supports_rollback?: boolean;
}

export interface StepRequest {
  op: "step";
  session_id: string;
  token_ids: number[];
  logits: (number | null)[];
}

export interface CloseRequest {
  op: "close";
  session_id: string;
}

export type HookRequest = OpenRequest | StepRequest | CloseRequest;

export interface OpenResponse {
  ok: true;
  session_id: string;
}

export interface StepResponse {
  ok: true;
  /** Controlled logits (same length as the input array). */
  logits: (number | null)[];
  /** Drop this many trailing tokens (and truncate the cache), then call
   * step again from the shortened position. 0 means continue normally. */
  rollback_request: number;
  done: boolean;
  reason?: string;
}

export interface CloseResponse {
  ok: true;
  summary: {
    valid_so_far: boolean;
    corrections: number;
    cost: number;
    [extra: string]: unknown;
  };
}

export interface ErrorResponse {
  ok: false;
  error: string;
  /** Byte offset for JSON parse failures. */
  position?: number;
}

export type HookResponse = OpenResponse | StepResponse | CloseResponse | ErrorResponse;

/** Decode a wire logits array into a Float64Array (null -> -Infinity). */
export function decodeLogits(values: (number | null)[]): Float64Array {
  const out = new Float64Array(values.length);
  for (let i = 0; i < values.length; i++) {
    const v = values[i];
    out[i] = v === null ? -Infinity : v;
  }
  return out;
}

/** Encode a Float64Array for the wire (-Infinity -> null). */
export function encodeLogits(values: Float64Array | number[]): (number | null)[] {
  const out: (number | null)[] = new Array(values.length);
  for (let i = 0; i < values.length; i++) {
    const v = values[i];
    out[i] = v === -Infinity ? null : v;
  }
  return out;
}
