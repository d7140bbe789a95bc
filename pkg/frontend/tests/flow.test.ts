/** End-to-end purification flow against the live annotation service. */

import { expect, test } from "vitest";
import { ApiClient, ApiError } from "../src/api.js";
import { idOf } from "../src/palette.js";
import { LabelerState, voxelKey } from "../src/state.js";
import type { VoxelIndex } from "../src/projection.js";
import { BASE_URL } from "./config.js";

function parseKey(key: string): VoxelIndex {
  return key.split(",").map(Number) as VoxelIndex;
}

test("load, erase one voxel, relabel another, submit, finalize", async () => {
  const api = new ApiClient(BASE_URL);
  const state = new LabelerState(api);
  await state.loadFrame("f001");
  expect(state.status).toBe("augmented");
  expect(state.spec?.dims).toEqual([40, 512, 512]);
  const vAug = state.previewRecords();
  expect(vAug.size).toBeGreaterThan(0);

  const entries = [...vAug.entries()];
  const eraseEntry = entries[0]!;
  state.brush = { mode: "erase", label: 0 };
  expect(state.applyPick(parseKey(eraseEntry[0]))).toEqual({ applied: true });

  const truck = idOf("truck");
  const relabelEntry = entries.find(
    ([key, label]) => key !== eraseEntry[0] && label !== truck,
  )!;
  state.brush = { mode: "relabel", label: truck };
  expect(state.applyPick(parseKey(relabelEntry[0]))).toEqual({ applied: true });
  expect(state.pending).toHaveLength(2);

  const submitted = await state.submit();
  expect(submitted).toEqual({ ok: true, journalLength: 2 });
  expect(state.pending).toHaveLength(0);

  // the optimistic preview matches the server's after acknowledgment
  const serverPreview = await api.preview("f001");
  const serverMap = new Map(
    serverPreview.records.map(([z, y, x, label]) => [voxelKey(z, y, x), label]),
  );
  expect(state.previewRecords()).toEqual(serverMap);

  const finalized = await state.finalizeFrame();
  expect(finalized.ok).toBe(true);
  expect(state.finalized).toBe(true);

  // v_final differs from v_aug at exactly the two edited voxels
  const vFinal = await api.occupancy("f001");
  const finalMap = new Map(
    vFinal.records.map(([z, y, x, label]) => [voxelKey(z, y, x), label]),
  );
  const diffs = new Set<string>();
  for (const [key, label] of vAug) {
    if (finalMap.get(key) !== label) diffs.add(key);
  }
  for (const key of finalMap.keys()) {
    if (!vAug.has(key)) diffs.add(key);
  }
  expect([...diffs].sort()).toEqual([eraseEntry[0], relabelEntry[0]].sort());
  expect(finalMap.has(eraseEntry[0])).toBe(false);
  expect(finalMap.get(relabelEntry[0])).toBe(truck);

  // further edits are refused by the server and blocked locally
  await expect(
    api.postEdits("f001", [{ z: 1, y: 1, x: 1, label: 4 }], "after-final"),
  ).rejects.toMatchObject({ status: 409 });
  state.brush = { mode: "erase", label: 0 };
  expect(state.applyPick(parseKey(relabelEntry[0]))).toEqual({
    applied: false,
    reason: "frame is finalized",
  });
});

test("replaying an acknowledged batch token does not duplicate edits", async () => {
  const api = new ApiClient(BASE_URL);
  const edits = [{ z: 5, y: 10, x: 10, label: 4, author: "labeler" }];
  const first = await api.postEdits("f000", edits, "fixed-token");
  const replay = await api.postEdits("f000", edits, "fixed-token");
  expect(replay).toBe(first);
  const fresh = await api.postEdits("f000", edits, "other-token");
  expect(fresh).toBe(first + 1);
});

test("missing frames surface as 404", async () => {
  const api = new ApiClient(BASE_URL);
  const state = new LabelerState(api);
  await expect(state.loadFrame("f999")).rejects.toMatchObject({ status: 404 });
});

test("an unreachable server keeps the pending edits for retry", async () => {
  const live = new ApiClient(BASE_URL);
  const state = new LabelerState(live);
  await state.loadFrame("f002");
  const idx = parseKey([...state.previewRecords().keys()][0]!);
  state.brush = { mode: "erase", label: 0 };
  expect(state.applyPick(idx)).toEqual({ applied: true });

  // swap in a dead endpoint for the submit attempt
  const offline = new LabelerState(new ApiClient("http://127.0.0.1:9"));
  Object.assign(offline, {
    frameId: state.frameId,
    status: state.status,
    spec: state.spec,
    pending: [...state.pending],
  });
  const outcome = await offline.submit();
  expect(outcome).toMatchObject({ ok: false, reason: "offline" });
  expect(offline.pending).toHaveLength(1);
});
