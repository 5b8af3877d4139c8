import { defineConfig } from "vitest/config";

// Dev server proxies API calls to a locally running `ballotaudit serve`;
// in production the built assets are served behind the same origin.
export default defineConfig({
  server: {
    proxy: {
      "/v1": "http://127.0.0.1:8000",
      "/healthz": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "jsdom",
    globalSetup: "./tests/service.setup.ts",
    include: ["tests/**/*.test.ts"],
    testTimeout: 30000,
    hookTimeout: 60000,
  },
});
