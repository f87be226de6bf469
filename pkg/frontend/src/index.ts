export { HookServerProcess } from "./client.js";
export type { HookServerOptions, RawReply } from "./client.js";
export { HookSession, HookError } from "./session.js";
export type { OpenOptions, SessionSummary, StepResult } from "./session.js";
export { decodeLogits, encodeLogits } from "./protocol.js";
export type {
  CloseRequest,
  CloseResponse,
  ContractKey,
  ContractSpec,
  ErrorResponse,
  HookRequest,
  HookResponse,
  OpenRequest,
  OpenResponse,
  StepRequest,
  StepResponse,
  ValueType,
} from "./protocol.js";
