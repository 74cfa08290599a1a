/** Times are handled at millisecond resolution everywhere: values are rounded
 * to the nearest ms before display or submission, so a round trip through the
 * API reproduces them exactly. */

export function roundMs(seconds: number): number {
  return Math.round(seconds * 1000) / 1000;
}

export function clamp(x: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, x));
}

/** Seconds with exactly three decimals, e.g. 1.25 -> "1.250". */
export function formatSeconds(seconds: number): string {
  return roundMs(seconds).toFixed(3);
}

/** Parse a seconds field; NaN for junk or blank input. */
export function parseSeconds(text: string): number {
  const trimmed = text.trim();
  if (!trimmed) return NaN;
  const value = Number(trimmed);
  return Number.isFinite(value) ? roundMs(value) : NaN;
}
