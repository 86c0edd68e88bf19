import { defineConfig } from "vitest/config";

// The parity suite shells out to the Python CLI a few hundred times; give it
// room well beyond the default per-test timeout.
export default defineConfig({
  test: {
    testTimeout: 300_000,
    hookTimeout: 60_000,
  },
});
