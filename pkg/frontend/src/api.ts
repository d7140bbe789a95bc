/** Typed client for the annotation service HTTP API.
 *
 * Every method maps one endpoint; non-2xx responses throw ApiError with
 * the status code so callers can branch on 404/409/422.  Network-level
 * failures propagate as the runtime's fetch errors (TypeError), which
 * the state layer treats as "offline, retry later".
 */

export interface GridSpecJson {
  origin: [number, number, number];
  voxel_size: number;
  dims: [number, number, number];
}

/** One occupied voxel: [z, y, x, label]. */
export type VoxelRecord = [number, number, number, number];

export interface SparseGridJson {
  spec: GridSpecJson;
  records: VoxelRecord[];
}

export interface FrameSummary {
  id: string;
  status: string;
  occupied_count: number;
}

export interface CameraJson {
  name: string;
  width: number;
  height: number;
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  rotation: [number, number, number][];
  translation: [number, number, number];
  semantic_url: string;
  depth_url: string;
}

export interface EditPayload {
  z: number;
  y: number;
  x: number;
  label: number;
  author?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function raiseForStatus(res: Response): Promise<void> {
  if (res.ok) return;
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (typeof body?.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(res.status, detail);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async getJson<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    await raiseForStatus(res);
    return (await res.json()) as T;
  }

  listFrames(): Promise<FrameSummary[]> {
    return this.getJson("/api/frames");
  }

  occupancy(frameId: string): Promise<SparseGridJson> {
    return this.getJson(`/api/frames/${frameId}/occupancy`);
  }

  async views(frameId: string): Promise<CameraJson[]> {
    const body = await this.getJson<{ cameras: CameraJson[] }>(
      `/api/frames/${frameId}/views`,
    );
    return body.cameras;
  }

  async imageBytes(url: string): Promise<Uint8Array> {
    const res = await fetch(this.baseUrl + url);
    await raiseForStatus(res);
    return new Uint8Array(await res.arrayBuffer());
  }

  async postEdits(
    frameId: string,
    edits: EditPayload[],
    token: string,
  ): Promise<number> {
    const res = await fetch(`${this.baseUrl}/api/frames/${frameId}/edits`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ edits, token }),
    });
    await raiseForStatus(res);
    const body = (await res.json()) as { journal_length: number };
    return body.journal_length;
  }

  preview(frameId: string): Promise<SparseGridJson> {
    return this.getJson(`/api/frames/${frameId}/preview`);
  }

  async finalize(
    frameId: string,
  ): Promise<{ id: string; status: string; occupied_count: number }> {
    const res = await fetch(`${this.baseUrl}/api/frames/${frameId}/finalize`, {
      method: "POST",
    });
    await raiseForStatus(res);
    return (await res.json()) as {
      id: string;
      status: string;
      occupied_count: number;
    };
  }
}
