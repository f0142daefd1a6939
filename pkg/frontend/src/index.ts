export * from "./linalg.js";
export * from "./bitset.js";
export * from "./frames.js";
export * from "./problem.js";
export * from "./law.js";
export * from "./trace.js";
export * from "./atlas.js";
export * from "./client.js";
