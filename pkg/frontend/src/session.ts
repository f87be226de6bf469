/**
 * Typed session wrapper over the hook protocol.
 *
 * One HookSession per generation. The host keeps ownership of sampling and
 * of its prefix cache; when a step result carries rollbackRequest > 0 the
 * host must drop that many trailing tokens, truncate its cache, and call
 * step() again from the shortened position before sampling anything.
 */

import { HookServerProcess, RawReply } from "./client.js";
import {
  CloseResponse,
  OpenResponse,
  StepResponse,
  decodeLogits,
  encodeLogits,
} from "./protocol.js";

export interface OpenOptions {
  /** Contract spec: JSON string or an object that will be stringified. */
  contract: string | object;
  /** Policy config: JSON string or an object that will be stringified. */
  policy: string | object;
  vocab: string[];
  eosTokenId?: number | null;
  supportsRollback?: boolean;
}

export interface StepResult {
  logits: Float64Array;
  rollbackRequest: number;
  done: boolean;
  reason?: string;
  raw: string;
}

export interface SessionSummary {
  validSoFar: boolean;
  corrections: number;
  cost: number;
  raw: string;
}

export class HookError extends Error {
  readonly position?: number;

  constructor(message: string, position?: number) {
    super(message);
    this.position = position;
  }
}

function expectOk(reply: RawReply): void {
  if (!reply.parsed.ok) {
    throw new HookError(reply.parsed.error, reply.parsed.position);
  }
}

export class HookSession {
  private constructor(
    private readonly server: HookServerProcess,
    readonly sessionId: string,
  ) {}

  static async open(server: HookServerProcess, options: OpenOptions): Promise<HookSession> {
    const reply = await server.send({
      op: "open",
      contract:
        typeof options.contract === "string" ? options.contract : JSON.stringify(options.contract),
      policy:
        typeof options.policy === "string" ? options.policy : JSON.stringify(options.policy),
      vocab: options.vocab,
      eos_token_id: options.eosTokenId ?? null,
      supports_rollback: options.supportsRollback ?? true,
    });
    expectOk(reply);
    return new HookSession(server, (reply.parsed as OpenResponse).session_id);
  }

  async step(tokenIds: number[], logits: Float64Array | number[]): Promise<StepResult> {
    const reply = await this.server.send({
      op: "step",
      session_id: this.sessionId,
      token_ids: tokenIds,
      logits: encodeLogits(logits),
    });
    expectOk(reply);
    const parsed = reply.parsed as StepResponse;
    return {
      logits: decodeLogits(parsed.logits),
      rollbackRequest: parsed.rollback_request,
      done: parsed.done,
      reason: parsed.reason,
      raw: reply.raw,
    };
  }

  async close(): Promise<SessionSummary> {
    const reply = await this.server.send({ op: "close", session_id: this.sessionId });
    expectOk(reply);
    const parsed = reply.parsed as CloseResponse;
    return {
      validSoFar: parsed.summary.valid_so_far,
      corrections: parsed.summary.corrections,
      cost: parsed.summary.cost,
      raw: reply.raw,
    };
  }
}
