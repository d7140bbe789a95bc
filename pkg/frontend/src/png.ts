/** Decoder for the service's grayscale PNGs.
 *
 * The service stores semantic images as 8-bit grayscale and depth as
 * 16-bit grayscale millimeters.  Canvas drawImage would quantize the
 * 16-bit channel to 8 bits, so depth must be decoded from the raw
 * bytes.  Only the subset the service emits is supported: color type 0
 * (grayscale), bit depth 8 or 16, non-interlaced.  Inflate goes through
 * the runtime's native DecompressionStream.
 */

export interface GrayImage {
  width: number;
  height: number;
  bitDepth: 8 | 16;
  /** Row-major samples; 8-bit values are widened, not scaled. */
  values: Uint16Array;
}

const SIGNATURE = [137, 80, 78, 71, 13, 10, 26, 10];

function u32be(b: Uint8Array, off: number): number {
  return (
    ((b[off]! << 24) | (b[off + 1]! << 16) | (b[off + 2]! << 8) | b[off + 3]!) >>>
    0
  );
}

async function inflate(data: Uint8Array): Promise<Uint8Array> {
  const stream = new Blob([data.buffer.slice(data.byteOffset, data.byteOffset + data.byteLength) as ArrayBuffer])
    .stream()
    .pipeThrough(new DecompressionStream("deflate"));
  return new Uint8Array(await new Response(stream).arrayBuffer());
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

function unfilter(raw: Uint8Array, width: number, height: number, bpp: number): Uint8Array {
  const stride = width * bpp;
  const out = new Uint8Array(stride * height);
  for (let row = 0; row < height; row++) {
    const filter = raw[row * (stride + 1)]!;
    const src = row * (stride + 1) + 1;
    const dst = row * stride;
    for (let i = 0; i < stride; i++) {
      const x = raw[src + i]!;
      const left = i >= bpp ? out[dst + i - bpp]! : 0;
      const up = row > 0 ? out[dst + i - stride]! : 0;
      const upLeft = row > 0 && i >= bpp ? out[dst + i - bpp - stride]! : 0;
      let value: number;
      switch (filter) {
        case 0:
          value = x;
          break;
        case 1:
          value = x + left;
          break;
        case 2:
          value = x + up;
          break;
        case 3:
          value = x + ((left + up) >> 1);
          break;
        case 4:
          value = x + paeth(left, up, upLeft);
          break;
        default:
          throw new Error(`unsupported PNG filter ${filter}`);
      }
      out[dst + i] = value & 0xff;
    }
  }
  return out;
}

export async function decodeGrayPng(bytes: Uint8Array): Promise<GrayImage> {
  if (bytes.length < 8 || SIGNATURE.some((v, i) => bytes[i] !== v)) {
    throw new Error("not a PNG file");
  }
  let width = 0;
  let height = 0;
  let bitDepth = 0;
  const idat: Uint8Array[] = [];
  let off = 8;
  while (off + 8 <= bytes.length) {
    const length = u32be(bytes, off);
    const type = String.fromCharCode(
      bytes[off + 4]!,
      bytes[off + 5]!,
      bytes[off + 6]!,
      bytes[off + 7]!,
    );
    const data = bytes.subarray(off + 8, off + 8 + length);
    if (type === "IHDR") {
      width = u32be(data, 0);
      height = u32be(data, 4);
      bitDepth = data[8]!;
      const colorType = data[9]!;
      const interlace = data[12]!;
      if (colorType !== 0 || (bitDepth !== 8 && bitDepth !== 16) || interlace !== 0) {
        throw new Error(
          `unsupported PNG layout: color ${colorType}, depth ${bitDepth}, interlace ${interlace}`,
        );
      }
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    off += 12 + length; // length + type + data + crc
  }
  if (width === 0 || height === 0) throw new Error("PNG missing IHDR");

  const compressed = new Uint8Array(idat.reduce((n, c) => n + c.length, 0));
  let pos = 0;
  for (const chunk of idat) {
    compressed.set(chunk, pos);
    pos += chunk.length;
  }
  const bpp = bitDepth === 16 ? 2 : 1;
  const raw = await inflate(compressed);
  if (raw.length !== height * (width * bpp + 1)) {
    throw new Error("PNG payload size mismatch");
  }
  const plain = unfilter(raw, width, height, bpp);
  const values = new Uint16Array(width * height);
  if (bitDepth === 16) {
    for (let i = 0; i < values.length; i++) {
      values[i] = (plain[2 * i]! << 8) | plain[2 * i + 1]!;
    }
  } else {
    values.set(plain);
  }
  return { width, height, bitDepth: bitDepth as 8 | 16, values };
}
