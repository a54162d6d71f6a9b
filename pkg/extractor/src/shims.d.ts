declare module "pngjs" {
  export class PNG {
    static sync: {
      read(buf: Buffer): { width: number; height: number; data: Buffer };
      write(png: PNG): Buffer;
    };
    constructor(opts?: { width: number; height: number });
    width: number;
    height: number;
    data: Buffer;
  }
}

declare module "jpeg-js" {
  interface RawImage {
    width: number;
    height: number;
    data: Uint8Array;
  }
  const jpeg: {
    decode(buf: Buffer, opts?: { useTArray?: boolean; maxMemoryUsageInMB?: number }): RawImage;
    encode(img: { width: number; height: number; data: Buffer | Uint8Array }, quality?: number): { data: Buffer };
  };
  export default jpeg;
}
