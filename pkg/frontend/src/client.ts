/**
 * Line-oriented subprocess client for `tokrail hook-serve`.
 *
 * The binding adds no control logic: requests are serialized as given and
 * responses are returned both parsed and as the raw line, so conformance
 * tests can compare bytes against recorded engine output.
 */

import { ChildProcessWithoutNullStreams, spawn } from "node:child_process";
import { createInterface, Interface } from "node:readline";

import { HookRequest, HookResponse } from "./protocol.js";

export interface HookServerOptions {
  /** Command used to start the engine; defaults to the installed CLI or
   * the TOKRAIL_CMD environment variable (whitespace-separated). */
  command?: string[];
}

export interface RawReply {
  /** Exact response line as emitted by the engine (no trailing newline). */
  raw: string;
  parsed: HookResponse;
}

function defaultCommand(): string[] {
  const env = process.env.TOKRAIL_CMD;
  if (env && env.trim().length > 0) {
    return env.trim().split(/\s+/);
  }
  return ["tokrail", "hook-serve"];
}

export class HookServerProcess {
  private child: ChildProcessWithoutNullStreams;
  private lines: Interface;
  private pending: Array<{
    resolve: (reply: RawReply) => void;
    reject: (err: Error) => void;
  }> = [];
  private closed = false;

  constructor(options: HookServerOptions = {}) {
    const command = options.command ?? defaultCommand();
    this.child = spawn(command[0], command.slice(1), {
      stdio: ["pipe", "pipe", "pipe"],
    });
    this.lines = createInterface({ input: this.child.stdout });
    this.lines.on("line", (line) => {
      const waiter = this.pending.shift();
      if (!waiter) return; // unsolicited output is dropped
      let parsed: HookResponse;
      try {
        parsed = JSON.parse(line) as HookResponse;
      } catch (err) {
        waiter.reject(new Error(`unparseable engine reply: ${line}`));
        return;
      }
      waiter.resolve({ raw: line, parsed });
    });
    this.child.on("exit", () => {
      this.closed = true;
      for (const waiter of this.pending.splice(0)) {
        waiter.reject(new Error("engine process exited"));
      }
    });
  }

  /** Send one raw request line verbatim and await the matching reply line. */
  sendRaw(line: string): Promise<RawReply> {
    if (this.closed) {
      return Promise.reject(new Error("engine process already closed"));
    }
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.child.stdin.write(line + "\n");
    });
  }

  /** Serialize and send one request object. */
  send(request: HookRequest): Promise<RawReply> {
    return this.sendRaw(JSON.stringify(request));
  }

  dispose(): void {
    if (!this.closed) {
      this.child.stdin.end();
      this.child.kill();
      this.closed = true;
    }
  }
}
