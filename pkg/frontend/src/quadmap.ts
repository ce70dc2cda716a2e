// Unit-square -> quad projective map, for drawing layout glyphs inside
// the recovered display surface. Corners arrive TL, TR, BR, BL.

export type Corner = [number, number];

export interface QuadMap {
  (u: number, v: number): Corner;
}

export function quadMapper(corners: Corner[]): QuadMap {
  if (corners.length !== 4) throw new Error("quad needs 4 corners");
  const [[x0, y0], [x1, y1], [x2, y2], [x3, y3]] = corners as [
    Corner,
    Corner,
    Corner,
    Corner,
  ];
  const sx = x0 - x1 + x2 - x3;
  const sy = y0 - y1 + y2 - y3;
  let g = 0;
  let h = 0;
  if (Math.abs(sx) > 1e-9 || Math.abs(sy) > 1e-9) {
    const dx1 = x1 - x2;
    const dx2 = x3 - x2;
    const dy1 = y1 - y2;
    const dy2 = y3 - y2;
    const den = dx1 * dy2 - dx2 * dy1;
    g = (sx * dy2 - sy * dx2) / den;
    h = (dx1 * sy - dy1 * sx) / den;
  }
  const a = x1 - x0 + g * x1;
  const b = x3 - x0 + h * x3;
  const c = y1 - y0 + g * y1;
  const d = y3 - y0 + h * y3;
  return (u, v) => {
    const w = g * u + h * v + 1;
    return [(a * u + b * v + x0) / w, (c * u + d * v + y0) / w];
  };
}
