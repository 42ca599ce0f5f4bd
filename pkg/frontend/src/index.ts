export * from "./types.js";
export * from "./api.js";
export * from "./floorplan.js";
export * from "./decision.js";
export * from "./dashboard.js";
