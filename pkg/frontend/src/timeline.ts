import { DraftAnnotation, TimelineSelection } from "./types";
import { clamp, roundMs } from "./time";

/** Two handles can never cross: dragging is clamped so start + MIN_GAP_S <= end
 * holds in every committed state. */
export const MIN_GAP_S = 0.001;

export function initialSelection(clipId: string, durationS: number): TimelineSelection {
  return {
    clipId,
    startS: 0,
    endS: roundMs(durationS),
    playheadS: 0,
  };
}

export function isValidSelection(sel: TimelineSelection, durationS: number): boolean {
  return (
    sel.startS >= 0 &&
    sel.startS < sel.endS &&
    sel.endS <= roundMs(durationS) &&
    sel.playheadS >= 0 &&
    sel.playheadS <= roundMs(durationS)
  );
}

export function moveHandle(
  sel: TimelineSelection,
  handle: "start" | "end",
  seconds: number,
  durationS: number,
): TimelineSelection {
  const t = roundMs(clamp(seconds, 0, durationS));
  if (handle === "start") {
    return { ...sel, startS: Math.min(t, roundMs(sel.endS - MIN_GAP_S)) };
  }
  return { ...sel, endS: Math.max(t, roundMs(sel.startS + MIN_GAP_S)) };
}

export function movePlayhead(
  sel: TimelineSelection,
  seconds: number,
  durationS: number,
): TimelineSelection {
  return { ...sel, playheadS: roundMs(clamp(seconds, 0, durationS)) };
}

export function canSubmit(draft: DraftAnnotation, durationS: number): boolean {
  return draft.instruction.trim().length > 0 && isValidSelection(draft.selection, durationS);
}

/** Map a pointer x offset on the timeline track to clip seconds. */
export function trackToSeconds(
  offsetPx: number,
  trackWidthPx: number,
  durationS: number,
): number {
  if (trackWidthPx <= 0) return 0;
  return roundMs(clamp(offsetPx / trackWidthPx, 0, 1) * durationS);
}

export function secondsToTrackFraction(seconds: number, durationS: number): number {
  if (durationS <= 0) return 0;
  return clamp(seconds / durationS, 0, 1);
}
