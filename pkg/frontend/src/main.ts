/** DOM glue: wires the state layer, renderer, and API into the page.
 *
 * All labeling logic lives in state.ts; handlers here only translate
 * browser events into picks and repaint.
 */

import { ApiClient, ApiError } from "./api.js";
import type { CameraJson } from "./api.js";
import { decodeGrayPng } from "./png.js";
import type { GrayImage } from "./png.js";
import {
  EMPTY_ID,
  LABEL_NAMES,
  labelColor,
  NOISE_ID,
  SEMANTIC_IDS,
} from "./palette.js";
import { projectToCamera, resolvePixelPick, voxelCenter } from "./projection.js";
import { VoxelRenderer } from "./render3d.js";
import { LabelerState } from "./state.js";
import type { BrushMode } from "./state.js";

const api = new ApiClient("");
const state = new LabelerState(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const frameSelect = el<HTMLSelectElement>("frame-select");
const statusBar = el<HTMLElement>("status-bar");
const banner = el<HTMLElement>("banner");
const canvas3d = el<HTMLCanvasElement>("view3d");
const viewCanvas = el<HTMLCanvasElement>("view2d");
const viewTabs = el<HTMLElement>("view-tabs");
const modeSelect = el<HTMLSelectElement>("brush-mode");
const labelSelect = el<HTMLSelectElement>("brush-label");
const pendingCount = el<HTMLElement>("pending-count");
const submitBtn = el<HTMLButtonElement>("submit-btn");
const finalizeBtn = el<HTMLButtonElement>("finalize-btn");

const renderer = new VoxelRenderer(canvas3d);
const viewImages = new Map<number, { sem: GrayImage; depth: GrayImage }>();

function showBanner(text: string, kind: "info" | "error"): void {
  banner.textContent = text;
  banner.className = kind;
  banner.hidden = text === "";
}

function refreshControls(): void {
  const locked = state.finalized;
  modeSelect.disabled = locked;
  labelSelect.disabled = locked;
  submitBtn.disabled = locked;
  finalizeBtn.disabled = locked || state.frameId === null;
  pendingCount.textContent = String(state.pending.length);
}

function repaint3d(): void {
  if (state.spec === null) return;
  const stats = renderer.draw(state.spec, state.previewRecords());
  const shown =
    stats.drawn === stats.total
      ? `${stats.total} voxels`
      : `${stats.drawn} of ${stats.total} voxels (subsampled)`;
  statusBar.textContent = `${state.frameId} [${state.status}] ${shown}`;
}

function repaint2d(): void {
  const cam = state.cameras[state.activeView];
  const images = viewImages.get(state.activeView);
  const ctx = viewCanvas.getContext("2d");
  if (cam === undefined || images === undefined || ctx === null) return;
  viewCanvas.width = cam.width;
  viewCanvas.height = cam.height;
  const rgba = ctx.createImageData(cam.width, cam.height);
  for (let i = 0; i < images.sem.values.length; i++) {
    const label = images.sem.values[i]!;
    const hex = label === EMPTY_ID || label === NOISE_ID
      ? "#11151c"
      : labelColor(label);
    rgba.data[4 * i] = parseInt(hex.slice(1, 3), 16);
    rgba.data[4 * i + 1] = parseInt(hex.slice(3, 5), 16);
    rgba.data[4 * i + 2] = parseInt(hex.slice(5, 7), 16);
    rgba.data[4 * i + 3] = 255;
  }
  ctx.putImageData(rgba, 0, 0);
  if (state.spec === null) return;
  // projected footprints of the pending edits
  ctx.strokeStyle = "#ffffff";
  for (const e of state.pending) {
    const p = projectToCamera(cam, voxelCenter(state.spec, [e.z, e.y, e.x]));
    if (!p.valid) continue;
    const r = Math.max(
      2,
      (cam.fx * state.spec.voxel_size) / (2 * Math.max(p.depth, 0.1)),
    );
    ctx.strokeRect(p.u - r, p.v - r, 2 * r, 2 * r);
  }
}

async function loadViewImages(): Promise<void> {
  viewImages.clear();
  await Promise.all(
    state.cameras.map(async (cam: CameraJson, k: number) => {
      const [sem, depth] = await Promise.all([
        api.imageBytes(cam.semantic_url).then(decodeGrayPng),
        api.imageBytes(cam.depth_url).then(decodeGrayPng),
      ]);
      viewImages.set(k, { sem, depth });
    }),
  );
}

function rebuildViewTabs(): void {
  viewTabs.textContent = "";
  state.cameras.forEach((cam, k) => {
    const tab = document.createElement("button");
    tab.textContent = cam.name;
    tab.className = k === state.activeView ? "tab active" : "tab";
    tab.addEventListener("click", () => {
      state.activeView = k;
      rebuildViewTabs();
      repaint2d();
    });
    viewTabs.appendChild(tab);
  });
}

async function loadFrame(id: string): Promise<void> {
  showBanner("", "info");
  try {
    await state.loadFrame(id);
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      showBanner(`frame ${id} is missing on the server`, "error");
      return;
    }
    throw err;
  }
  await loadViewImages();
  rebuildViewTabs();
  refreshControls();
  repaint3d();
  repaint2d();
}

function handlePick(idx: [number, number, number] | null, origin: string): void {
  if (idx === null) {
    showBanner(`${origin}: nothing to pick there`, "info");
    return;
  }
  const outcome = state.applyPick(idx);
  if (!outcome.applied) {
    showBanner(outcome.reason ?? "pick ignored", "info");
    return;
  }
  showBanner("", "info");
  refreshControls();
  repaint3d();
  repaint2d();
}

function wireEvents(): void {
  frameSelect.addEventListener("change", () => {
    void loadFrame(frameSelect.value);
  });
  modeSelect.addEventListener("change", () => {
    state.brush.mode = modeSelect.value as BrushMode;
  });
  labelSelect.addEventListener("change", () => {
    state.brush.label = Number(labelSelect.value);
  });

  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  canvas3d.addEventListener("mousedown", (ev) => {
    dragging = false;
    lastX = ev.offsetX;
    lastY = ev.offsetY;
  });
  canvas3d.addEventListener("mousemove", (ev) => {
    if ((ev.buttons & 1) === 0) return;
    dragging = true;
    renderer.orbit.yawRad += (ev.offsetX - lastX) * 0.01;
    renderer.orbit.pitchRad = Math.min(
      1.5,
      Math.max(-1.5, renderer.orbit.pitchRad + (ev.offsetY - lastY) * 0.01),
    );
    lastX = ev.offsetX;
    lastY = ev.offsetY;
    repaint3d();
  });
  canvas3d.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    renderer.orbit.distance = Math.min(
      300,
      Math.max(5, renderer.orbit.distance * (ev.deltaY > 0 ? 1.1 : 0.9)),
    );
    repaint3d();
  });
  canvas3d.addEventListener("click", (ev) => {
    if (dragging) return;
    handlePick(renderer.pick(ev.offsetX, ev.offsetY), "3D view");
  });

  viewCanvas.addEventListener("click", (ev) => {
    const cam = state.cameras[state.activeView];
    const images = viewImages.get(state.activeView);
    if (cam === undefined || images === undefined || state.spec === null) return;
    const i = Math.floor((ev.offsetX / viewCanvas.clientWidth) * cam.width);
    const j = Math.floor((ev.offsetY / viewCanvas.clientHeight) * cam.height);
    const mm = images.depth.values[j * cam.width + i] ?? 0;
    handlePick(
      resolvePixelPick(state.spec, cam, i, j, mm / 1000.0),
      "camera view",
    );
  });

  submitBtn.addEventListener("click", () => {
    void (async () => {
      const outcome = await state.submit();
      if (outcome.ok) {
        showBanner(`submitted; journal length ${outcome.journalLength}`, "info");
      } else if (outcome.reason === "offline") {
        showBanner("server unreachable; edits kept, try again", "error");
      } else {
        showBanner(`submit failed: ${outcome.detail}`, "error");
      }
      refreshControls();
      repaint3d();
      repaint2d();
    })();
  });

  finalizeBtn.addEventListener("click", () => {
    void (async () => {
      if (state.pending.length > 0) {
        const sent = await state.submit();
        if (!sent.ok) {
          showBanner(`cannot finalize: ${sent.detail}`, "error");
          return;
        }
      }
      const outcome = await state.finalizeFrame();
      if (outcome.ok) showBanner("frame finalized", "info");
      else showBanner(`finalize failed: ${outcome.detail}`, "error");
      refreshControls();
      repaint3d();
    })();
  });
}

async function init(): Promise<void> {
  for (const mode of ["relabel", "erase", "add"] as const) {
    const opt = document.createElement("option");
    opt.value = mode;
    opt.textContent = mode;
    modeSelect.appendChild(opt);
  }
  for (const id of SEMANTIC_IDS) {
    const opt = document.createElement("option");
    opt.value = String(id);
    opt.textContent = LABEL_NAMES[id] ?? String(id);
    labelSelect.appendChild(opt);
  }
  labelSelect.value = String(state.brush.label);
  wireEvents();

  const frames = await api.listFrames();
  for (const f of frames) {
    const opt = document.createElement("option");
    opt.value = f.id;
    opt.textContent = `${f.id} (${f.status}, ${f.occupied_count})`;
    frameSelect.appendChild(opt);
  }
  const first = frames[0];
  if (first !== undefined) await loadFrame(first.id);
}

void init();
