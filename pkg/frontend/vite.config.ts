import { defineConfig } from "vitest/config";

// base "./" keeps asset URLs relative so the build works both standalone
// and mounted under the service's static-file route.
export default defineConfig({
  base: "./",
  build: {
    outDir: "dist",
    emptyOutDir: true,
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
  },
});
