/**
 * Golden-file conformance: every recorded request line, replayed verbatim
 * through the binding and a live engine process, must reproduce the
 * recorded response line byte for byte. The fixtures were produced by
 * direct in-process engine invocation, so equality here proves the binding
 * adds no logic of its own.
 */

import { afterEach, describe, expect, it } from "vitest";

import { HookServerProcess } from "../src/index";
import { allFixtureNames, loadFixture } from "./fixtures";

const sessions = allFixtureNames().filter((n) => n !== "errors");

describe("golden replay", () => {
  let server: HookServerProcess | undefined;

  afterEach(() => {
    server?.dispose();
    server = undefined;
  });

  it("covers at least 50 recorded step exchanges", () => {
    const total = sessions.reduce((acc, n) => acc + loadFixture(n).step_exchanges, 0);
    expect(total).toBeGreaterThanOrEqual(50);
  });

  it("includes a session that exercised rollback", () => {
    const corrected = sessions.filter((n) => (loadFixture(n).corrections ?? 0) > 0);
    expect(corrected.length).toBeGreaterThan(0);
  });

  for (const name of sessions) {
    it(`replays ${name} byte-identically`, async () => {
      const fixture = loadFixture(name);
      server = new HookServerProcess();
      for (let i = 0; i < fixture.requests.length; i++) {
        const reply = await server.sendRaw(fixture.requests[i]);
        expect(reply.raw).toBe(fixture.responses[i]);
      }
    }, 120_000);
  }
});
