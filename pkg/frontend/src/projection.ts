/** Pinhole projection and voxel resolution, mirroring the service's
 * camera model bit-for-bit.
 *
 * The service renders pixel (row j, col i) through pixel center
 * (i+0.5, j+0.5) and stores optical-axis depth (camera-frame z, not ray
 * range).  The arithmetic below keeps the exact operation order of the
 * server implementation so a pick resolves to the identical voxel even
 * on floor() boundaries: rotate-then-add for poses, inverse built as
 * (R^T, -(R^T t)), and (p - origin) / voxel_size per component.
 */

import type { CameraJson, GridSpecJson } from "./api.js";

export type Vec3 = [number, number, number];
/** Voxel index in grid order (z, y, x). */
export type VoxelIndex = [number, number, number];

export interface PoseLike {
  rotation: [number, number, number][];
  translation: [number, number, number];
}

function rotate(r: [number, number, number][], p: Vec3): Vec3 {
  return [
    r[0]![0] * p[0] + r[0]![1] * p[1] + r[0]![2] * p[2],
    r[1]![0] * p[0] + r[1]![1] * p[1] + r[1]![2] * p[2],
    r[2]![0] * p[0] + r[2]![1] * p[1] + r[2]![2] * p[2],
  ];
}

export function applyPose(pose: PoseLike, p: Vec3): Vec3 {
  const q = rotate(pose.rotation, p);
  return [
    q[0] + pose.translation[0],
    q[1] + pose.translation[1],
    q[2] + pose.translation[2],
  ];
}

export function inversePose(pose: PoseLike): PoseLike {
  const r = pose.rotation;
  const rt: [number, number, number][] = [
    [r[0]![0], r[1]![0], r[2]![0]],
    [r[0]![1], r[1]![1], r[2]![1]],
    [r[0]![2], r[1]![2], r[2]![2]],
  ];
  const ti = rotate(rt, pose.translation);
  return { rotation: rt, translation: [-ti[0], -ti[1], -ti[2]] };
}

export interface Projected {
  u: number;
  v: number;
  depth: number;
  valid: boolean;
}

/** Reference-frame point through the pinhole; valid iff in front of the
 * camera and the pixel lands inside the image. */
export function projectToCamera(cam: CameraJson, p: Vec3): Projected {
  const pc = applyPose(
    { rotation: cam.rotation, translation: cam.translation },
    p,
  );
  const z = pc[2];
  const safeZ = Math.abs(z) > 1e-12 ? z : 1e-12;
  const u = (cam.fx * pc[0]) / safeZ + cam.cx;
  const v = (cam.fy * pc[1]) / safeZ + cam.cy;
  const valid =
    z > 1e-6 && u >= 0 && u < cam.width && v >= 0 && v < cam.height;
  return { u, v, depth: z, valid };
}

/** Back-project continuous pixel (u, v) at optical-axis depth z meters
 * into the frame's reference coordinates. */
export function pixelToPoint(
  cam: CameraJson,
  u: number,
  v: number,
  depth: number,
): Vec3 {
  const pc: Vec3 = [
    ((u - cam.cx) / cam.fx) * depth,
    ((v - cam.cy) / cam.fy) * depth,
    depth,
  ];
  return applyPose(
    inversePose({ rotation: cam.rotation, translation: cam.translation }),
    pc,
  );
}

/** Continuous grid coordinates (z, y, x) of a world point (x, y, z). */
export function worldToVoxel(spec: GridSpecJson, p: Vec3): Vec3 {
  const gx = (p[0] - spec.origin[0]) / spec.voxel_size;
  const gy = (p[1] - spec.origin[1]) / spec.voxel_size;
  const gz = (p[2] - spec.origin[2]) / spec.voxel_size;
  return [gz, gy, gx];
}

/** World coordinates (x, y, z) of the center of voxel (z, y, x). */
export function voxelCenter(spec: GridSpecJson, idx: VoxelIndex): Vec3 {
  return [
    spec.origin[0] + (idx[2] + 0.5) * spec.voxel_size,
    spec.origin[1] + (idx[1] + 0.5) * spec.voxel_size,
    spec.origin[2] + (idx[0] + 0.5) * spec.voxel_size,
  ];
}

export function inBounds(spec: GridSpecJson, idx: VoxelIndex): boolean {
  return (
    idx[0] >= 0 &&
    idx[0] < spec.dims[0] &&
    idx[1] >= 0 &&
    idx[1] < spec.dims[1] &&
    idx[2] >= 0 &&
    idx[2] < spec.dims[2]
  );
}

/** Resolve an integer-pixel pick (col i, row j) against served depth.
 *
 * Returns null for sky pixels (depth 0) and for hits outside the grid;
 * a non-null result is always a valid in-bounds voxel index.
 */
export function resolvePixelPick(
  spec: GridSpecJson,
  cam: CameraJson,
  i: number,
  j: number,
  depthMeters: number,
): VoxelIndex | null {
  if (depthMeters <= 0) return null;
  const p = pixelToPoint(cam, i + 0.5, j + 0.5, depthMeters);
  const g = worldToVoxel(spec, p);
  const idx: VoxelIndex = [Math.floor(g[0]), Math.floor(g[1]), Math.floor(g[2])];
  return inBounds(spec, idx) ? idx : null;
}
