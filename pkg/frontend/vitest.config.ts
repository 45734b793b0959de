import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // acceptance tests spawn real server processes on fixed ports
    fileParallelism: false,
    testTimeout: 120_000,
    hookTimeout: 60_000,
    // keep the per-criterion "[acceptance] N ... PASS" lines visible
    reporters: ["verbose"],
  },
});
