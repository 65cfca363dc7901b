import { defineConfig } from "vitest/config";

export default defineConfig({
  build: {
    outDir: "dist",
    sourcemap: true,
  },
  server: {
    port: 5173,
    // forward API calls to a locally running service during development
    proxy: {
      "/login": "http://127.0.0.1:8000",
      "/events": "http://127.0.0.1:8000",
      "/labels": "http://127.0.0.1:8000",
      "/drafts": "http://127.0.0.1:8000",
      "/ingest": "http://127.0.0.1:8000",
      "/export": "http://127.0.0.1:8000",
      "/study": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "jsdom",
    globalSetup: "./test/backend.ts",
    testTimeout: 30_000,
    hookTimeout: 60_000,
    fileParallelism: false,
  },
});
