export * from "./protocol.js";
export * from "./viewstate.js";
export * from "./render.js";
export { ApiError, ArenaClient, type ClientOptions } from "./client.js";
export { TeamConsole } from "./teamconsole.js";
export { JudgeConsole, type ClaimReviewRow } from "./judgeconsole.js";
