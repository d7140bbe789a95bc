/** The 18-way label vocabulary served by the annotation service.
 *
 * Ids and order are part of the HTTP contract: noise (0), sixteen
 * semantic classes (1..16), empty (17).
 */

export const NOISE_ID = 0;
export const EMPTY_ID = 17;
export const N_LABELS = 18;

export const LABEL_NAMES: readonly string[] = [
  "noise",
  "barrier",
  "bicycle",
  "bus",
  "car",
  "construction_vehicle",
  "motorcycle",
  "pedestrian",
  "traffic_cone",
  "trailer",
  "truck",
  "driveable_surface",
  "other_flat",
  "sidewalk",
  "terrain",
  "manmade",
  "vegetation",
  "empty",
];

export const SEMANTIC_IDS: readonly number[] = Array.from(
  { length: 16 },
  (_, i) => i + 1,
);

/** One distinct color per semantic class; noise is black, empty is never
 * drawn (returns a sentinel that callers treat as "skip"). */
const CLASS_COLORS: readonly string[] = [
  "#000000", // noise
  "#ff7832", // barrier
  "#ffc0cb", // bicycle
  "#ffff00", // bus
  "#0096f5", // car
  "#00ffff", // construction_vehicle
  "#c8b400", // motorcycle
  "#ff0000", // pedestrian
  "#fff096", // traffic_cone
  "#873c00", // trailer
  "#a020f0", // truck
  "#ff00ff", // driveable_surface
  "#8b8989", // other_flat
  "#4b004b", // sidewalk
  "#96f050", // terrain
  "#e6e6fa", // manmade
  "#00af00", // vegetation
  "none", // empty: not a drawable color
];

export function labelColor(id: number): string {
  const c = CLASS_COLORS[id];
  if (c === undefined) throw new RangeError(`label id out of range: ${id}`);
  return c;
}

export function labelName(id: number): string {
  const n = LABEL_NAMES[id];
  if (n === undefined) throw new RangeError(`label id out of range: ${id}`);
  return n;
}

export function idOf(name: string): number {
  const i = LABEL_NAMES.indexOf(name);
  if (i < 0) throw new RangeError(`unknown label name: ${name}`);
  return i;
}
