import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts", "tests/**/*.itest.ts"],
    // the contract suite boots the Python service, which needs a moment
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
