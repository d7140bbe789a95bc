import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    globalSetup: ["tests/setup/serve.ts"],
    include: ["tests/**/*.test.ts"],
    // tests share one live service and one fixture store; keep files
    // sequential so server-side state changes stay ordered
    fileParallelism: false,
    testTimeout: 30_000,
    hookTimeout: 180_000,
  },
});
