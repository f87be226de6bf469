import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 120_000,
    // Engine subprocesses are cheap but not free; keep runs sequential so
    // byte-level fixtures never race on machine load.
    fileParallelism: false,
  },
});
