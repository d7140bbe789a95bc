/** Shared constants for the test harness: where the fixture store
 * lives and where the spawned annotation service listens. */

import { fileURLToPath } from "node:url";
import path from "node:path";

export const FRONTEND_DIR = path.dirname(
  path.dirname(fileURLToPath(import.meta.url)),
);
export const WORK_DIR = path.join(FRONTEND_DIR, ".test-work");
export const STORE_DIR = path.join(WORK_DIR, "store");
export const ORACLE_PATH = path.join(WORK_DIR, "oracle.json");

export const PORT = 8431;
export const BASE_URL = `http://127.0.0.1:${PORT}`;
