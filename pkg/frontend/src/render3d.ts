/** Canvas 3D view: occupied voxels as painter-sorted colored squares.
 *
 * An orbit camera circles the grid center; voxel centers project
 * through the same pinhole math as the service cameras, far-to-near,
 * sized by 1/depth.  Dense grids draw a uniform-stride subset capped at
 * MAX_DRAW (the status line reports drawn/total), but picking only ever
 * returns a voxel that was actually drawn, so picks stay honest.
 */

import type { VoxelRecord } from "./api.js";
import { labelColor, NOISE_ID } from "./palette.js";
import type { PoseLike, Vec3, VoxelIndex } from "./projection.js";
import { applyPose, voxelCenter } from "./projection.js";
import type { GridSpecJson } from "./api.js";

export const MAX_DRAW = 60_000;

export interface OrbitParams {
  yawRad: number;
  pitchRad: number;
  distance: number;
  target: Vec3;
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

function normalize(a: Vec3): Vec3 {
  const n = Math.hypot(a[0], a[1], a[2]);
  return [a[0] / n, a[1] / n, a[2] / n];
}

/** cam_from_world pose of the orbit camera: +x right, +y down, +z
 * toward the target. */
export function orbitPose(o: OrbitParams): PoseLike {
  const cp = Math.cos(o.pitchRad);
  const position: Vec3 = [
    o.target[0] + o.distance * cp * Math.cos(o.yawRad),
    o.target[1] + o.distance * cp * Math.sin(o.yawRad),
    o.target[2] + o.distance * Math.sin(o.pitchRad),
  ];
  const forward = normalize([
    o.target[0] - position[0],
    o.target[1] - position[1],
    o.target[2] - position[2],
  ]);
  const right = normalize(cross(forward, [0, 0, 1]));
  const down = cross(forward, right);
  const rotation: [number, number, number][] = [right, down, forward];
  const rp = applyPose({ rotation, translation: [0, 0, 0] }, position);
  return { rotation, translation: [-rp[0], -rp[1], -rp[2]] };
}

/** Every n-th record so at most cap survive; 1 when already under cap. */
export function subsampleStride(total: number, cap: number): number {
  return total <= cap ? 1 : Math.ceil(total / cap);
}

interface DrawnVoxel {
  sx: number;
  sy: number;
  half: number;
  depth: number;
  record: VoxelRecord;
}

export interface DrawStats {
  drawn: number;
  total: number;
}

export class VoxelRenderer {
  orbit: OrbitParams = {
    yawRad: -2.3,
    pitchRad: 0.55,
    distance: 70,
    target: [0, 0, 0],
  };
  private drawn: DrawnVoxel[] = [];

  constructor(private readonly canvas: HTMLCanvasElement) {}

  draw(spec: GridSpecJson, records: Map<string, number>): DrawStats {
    const ctx = this.canvas.getContext("2d");
    if (ctx === null) return { drawn: 0, total: records.size };
    const w = this.canvas.width;
    const h = this.canvas.height;
    ctx.fillStyle = "#11151c";
    ctx.fillRect(0, 0, w, h);

    const pose = orbitPose(this.orbit);
    const f = 0.9 * Math.min(w, h);
    const stride = subsampleStride(records.size, MAX_DRAW);
    this.drawn = [];
    let i = 0;
    for (const [key, label] of records) {
      if (i++ % stride !== 0) continue;
      const [z, y, x] = key.split(",").map(Number) as VoxelIndex;
      const pc = applyPose(pose, voxelCenter(spec, [z, y, x]));
      if (pc[2] < 0.5) continue;
      const sx = (f * pc[0]) / pc[2] + w / 2;
      const sy = (f * pc[1]) / pc[2] + h / 2;
      const half = Math.max(0.7, (f * spec.voxel_size) / (2 * pc[2]));
      if (sx < -half || sx > w + half || sy < -half || sy > h + half) continue;
      this.drawn.push({ sx, sy, half, depth: pc[2], record: [z, y, x, label] });
    }
    this.drawn.sort((a, b) => b.depth - a.depth);
    for (const v of this.drawn) {
      const label = v.record[3];
      ctx.fillStyle = label === NOISE_ID ? "#303030" : labelColor(label);
      ctx.fillRect(v.sx - v.half, v.sy - v.half, 2 * v.half, 2 * v.half);
    }
    return { drawn: this.drawn.length, total: records.size };
  }

  /** Nearest drawn voxel whose square covers the click (ties: closest
   * to the camera); null when the click hits background. */
  pick(px: number, py: number): VoxelIndex | null {
    let best: DrawnVoxel | null = null;
    for (const v of this.drawn) {
      const margin = Math.max(v.half, 3);
      if (Math.abs(px - v.sx) > margin || Math.abs(py - v.sy) > margin) continue;
      if (best === null || v.depth < best.depth) best = v;
    }
    return best === null ? null : [best.record[0], best.record[1], best.record[2]];
  }
}
