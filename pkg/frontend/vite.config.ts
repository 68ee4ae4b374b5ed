/// <reference types="vitest" />
import { defineConfig } from "vite";

export default defineConfig({
  server: {
    proxy: {
      // during development the training service runs separately
      "/datasets": "http://127.0.0.1:8000",
      "/experiments": "http://127.0.0.1:8000",
      "/meta": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    testTimeout: 15000,
  },
});
