/** Viridis colormap, 32 anchor colors, linearly interpolated. */

const ANCHORS: [number, number, number][] = [
  [68, 1, 84], [71, 13, 96], [72, 24, 106], [72, 35, 116],
  [71, 46, 124], [69, 56, 130], [66, 65, 134], [62, 74, 137],
  [58, 84, 140], [54, 93, 141], [50, 101, 142], [46, 109, 142],
  [43, 117, 142], [40, 125, 142], [37, 132, 142], [34, 140, 141],
  [31, 148, 140], [30, 156, 137], [32, 163, 134], [37, 171, 130],
  [46, 179, 124], [58, 186, 118], [72, 193, 110], [88, 199, 101],
  [108, 205, 90], [127, 211, 78], [147, 215, 65], [168, 219, 52],
  [192, 223, 37], [213, 226, 26], [234, 229, 26], [253, 231, 37],
];

export function viridis(t: number): string {
  const clamped = Math.min(1, Math.max(0, t));
  const pos = clamped * (ANCHORS.length - 1);
  const i = Math.min(Math.floor(pos), ANCHORS.length - 2);
  const frac = pos - i;
  const mix = (a: number, b: number) => Math.round(a + (b - a) * frac);
  const [r0, g0, b0] = ANCHORS[i];
  const [r1, g1, b1] = ANCHORS[i + 1];
  const hex = (v: number) => v.toString(16).padStart(2, "0");
  return `#${hex(mix(r0, r1))}${hex(mix(g0, g1))}${hex(mix(b0, b1))}`;
}
