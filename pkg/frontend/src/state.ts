/** Labeler view state: the loaded frame, brush, pending edits, submit
 * and finalize flows.
 *
 * Pending edits are optimistic: the preview map folds them over the
 * served grid immediately, and is clear-on-acknowledgment only — a
 * failed submit keeps both the edits and the batch token, so a retry
 * replays the same idempotent batch.  Every edit starts from a pick
 * that resolved to an in-bounds voxel; the state layer never invents
 * indices.
 */

import { ApiClient, ApiError } from "./api.js";
import type { CameraJson, GridSpecJson, SparseGridJson } from "./api.js";
import { EMPTY_ID } from "./palette.js";
import { inBounds } from "./projection.js";
import type { VoxelIndex } from "./projection.js";

export type BrushMode = "relabel" | "erase" | "add";

export interface Brush {
  mode: BrushMode;
  label: number;
}

export interface PendingEdit {
  z: number;
  y: number;
  x: number;
  label: number;
}

export interface PickOutcome {
  applied: boolean;
  reason?: string;
}

export type SubmitOutcome =
  | { ok: true; journalLength: number }
  | { ok: false; reason: "offline" | "conflict" | "rejected"; detail: string };

export function voxelKey(z: number, y: number, x: number): string {
  return `${z},${y},${x}`;
}

export class LabelerState {
  frameId: string | null = null;
  status = "";
  spec: GridSpecJson | null = null;
  cameras: CameraJson[] = [];
  activeView = 0;
  brush: Brush = { mode: "relabel", label: 4 };
  pending: PendingEdit[] = [];
  /** Served occupancy plus acknowledged edits; key "z,y,x" -> label. */
  private base = new Map<string, number>();
  /** Token of the in-flight batch; reused on retry, dropped on ack. */
  private batchToken: string | null = null;

  constructor(readonly api: ApiClient) {}

  get finalized(): boolean {
    return this.status === "finalized";
  }

  async loadFrame(id: string): Promise<void> {
    const frames = await this.api.listFrames();
    const summary = frames.find((f) => f.id === id);
    if (summary === undefined) throw new ApiError(404, `unknown frame ${id}`);
    const grid = await this.api.occupancy(id);
    let cameras: CameraJson[] = [];
    try {
      cameras = await this.api.views(id);
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 404)) throw err;
    }
    this.frameId = id;
    this.status = summary.status;
    this.spec = grid.spec;
    this.cameras = cameras;
    this.activeView = 0;
    this.pending = [];
    this.batchToken = null;
    this.base = new Map(
      grid.records.map(([z, y, x, label]) => [voxelKey(z, y, x), label]),
    );
  }

  /** Current label of a voxel with pending edits applied (empty if bare). */
  labelAt(idx: VoxelIndex): number {
    const key = voxelKey(idx[0], idx[1], idx[2]);
    for (let i = this.pending.length - 1; i >= 0; i--) {
      const e = this.pending[i]!;
      if (voxelKey(e.z, e.y, e.x) === key) return e.label;
    }
    return this.base.get(key) ?? EMPTY_ID;
  }

  /** Occupied voxels as the annotator sees them right now. */
  previewRecords(): Map<string, number> {
    const out = new Map(this.base);
    for (const e of this.pending) {
      const key = voxelKey(e.z, e.y, e.x);
      if (e.label === EMPTY_ID) out.delete(key);
      else out.set(key, e.label);
    }
    return out;
  }

  /** Route a resolved pick through the brush; appends at most one edit. */
  applyPick(idx: VoxelIndex): PickOutcome {
    if (this.spec === null) return { applied: false, reason: "no frame loaded" };
    if (this.finalized) {
      return { applied: false, reason: "frame is finalized" };
    }
    if (!inBounds(this.spec, idx)) {
      return { applied: false, reason: "pick outside the grid" };
    }
    const current = this.labelAt(idx);
    const occupied = current !== EMPTY_ID;
    const [z, y, x] = idx;
    switch (this.brush.mode) {
      case "erase":
        if (!occupied) return { applied: false, reason: "nothing to erase" };
        this.pending.push({ z, y, x, label: EMPTY_ID });
        return { applied: true };
      case "add":
        if (occupied) {
          return { applied: false, reason: "voxel already occupied" };
        }
        this.pending.push({ z, y, x, label: this.brush.label });
        return { applied: true };
      case "relabel":
        if (!occupied) return { applied: false, reason: "nothing to relabel" };
        if (current === this.brush.label) {
          return { applied: false, reason: "voxel already has that label" };
        }
        this.pending.push({ z, y, x, label: this.brush.label });
        return { applied: true };
    }
  }

  async submit(): Promise<SubmitOutcome> {
    if (this.frameId === null) {
      return { ok: false, reason: "rejected", detail: "no frame loaded" };
    }
    if (this.pending.length === 0) return { ok: true, journalLength: 0 };
    if (this.batchToken === null) this.batchToken = crypto.randomUUID();
    try {
      const length = await this.api.postEdits(
        this.frameId,
        this.pending.map((e) => ({ ...e, author: "labeler" })),
        this.batchToken,
      );
      // acknowledged: fold into base so the optimistic preview stays
      // equal to the server's /preview
      for (const e of this.pending) {
        const key = voxelKey(e.z, e.y, e.x);
        if (e.label === EMPTY_ID) this.base.delete(key);
        else this.base.set(key, e.label);
      }
      this.pending = [];
      this.batchToken = null;
      if (this.status === "raw" || this.status === "augmented") {
        this.status = "in_review";
      }
      return { ok: true, journalLength: length };
    } catch (err) {
      if (err instanceof ApiError) {
        const reason = err.status === 409 ? "conflict" : "rejected";
        return { ok: false, reason, detail: err.detail };
      }
      // network failure: keep edits and token for an identical retry
      return { ok: false, reason: "offline", detail: String(err) };
    }
  }

  async finalizeFrame(): Promise<SubmitOutcome> {
    if (this.frameId === null) {
      return { ok: false, reason: "rejected", detail: "no frame loaded" };
    }
    try {
      await this.api.finalize(this.frameId);
      this.status = "finalized";
      return { ok: true, journalLength: this.pending.length };
    } catch (err) {
      if (err instanceof ApiError) {
        const reason = err.status === 409 ? "conflict" : "rejected";
        return { ok: false, reason, detail: err.detail };
      }
      return { ok: false, reason: "offline", detail: String(err) };
    }
  }
}
