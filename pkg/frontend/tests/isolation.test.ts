/**
 * Session isolation: interleaving the steps of two sessions in one engine
 * process must produce exactly the responses each session got when run
 * alone. Request lines are rewritten only to retarget session ids; step and
 * close responses carry no ids, so byte comparison stays valid.
 */

import { afterAll, describe, expect, it } from "vitest";

import { HookServerProcess } from "../src/index";
import { loadFixture } from "./fixtures";

function retarget(line: string, from: string, to: string): string {
  return line.replace(`"session_id":"${from}"`, `"session_id":"${to}"`);
}

describe("session isolation", () => {
  const server = new HookServerProcess();

  afterAll(() => server.dispose());

  it("interleaved sessions match their solo transcripts", async () => {
    const a = loadFixture("isolation_a");
    const b = loadFixture("isolation_b");

    // Solo recordings both used the id s1 on a fresh engine.
    const openA = await server.sendRaw(a.requests[0]);
    expect(openA.parsed.ok).toBe(true);
    const idA = (openA.parsed as { session_id: string }).session_id;
    const openB = await server.sendRaw(b.requests[0]);
    expect(openB.parsed.ok).toBe(true);
    const idB = (openB.parsed as { session_id: string }).session_id;
    expect(idA).not.toBe(idB);

    let ia = 1;
    let ib = 1;
    while (ia < a.requests.length || ib < b.requests.length) {
      if (ia < a.requests.length) {
        const reply = await server.sendRaw(retarget(a.requests[ia], "s1", idA));
        expect(reply.raw).toBe(a.responses[ia]);
        ia++;
      }
      if (ib < b.requests.length) {
        const reply = await server.sendRaw(retarget(b.requests[ib], "s1", idB));
        expect(reply.raw).toBe(b.responses[ib]);
        ib++;
      }
    }
  }, 120_000);
});
