// Speed colormap over [0, v_max]: dark blue -> cyan -> yellow, matching the
// usual zenithal-plot convention of cold=slow, hot=fast.

const STOPS: Array<[number, [number, number, number]]> = [
  [0.0, [28, 33, 120]],
  [0.35, [26, 125, 190]],
  [0.65, [60, 200, 160]],
  [1.0, [250, 220, 60]],
];

export function speedColor(speed: number, vMax: number): string {
  const x = vMax > 0 ? Math.min(Math.max(speed / vMax, 0), 1) : 0;
  for (let i = 1; i < STOPS.length; i++) {
    const [x1, c1] = STOPS[i];
    const [x0, c0] = STOPS[i - 1];
    if (x <= x1) {
      const f = (x - x0) / (x1 - x0);
      const rgb = c0.map((v, k) => Math.round(v + f * (c1[k] - v)));
      return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
    }
  }
  const last = STOPS[STOPS.length - 1][1];
  return `rgb(${last[0]},${last[1]},${last[2]})`;
}
