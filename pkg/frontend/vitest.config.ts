import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["test/**/*.test.ts"],
    // The round-trip test boots the real analysis service.
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
