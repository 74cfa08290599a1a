import { describe, expect, it } from "vitest";

import {
  MIN_GAP_S,
  canSubmit,
  initialSelection,
  isValidSelection,
  moveHandle,
  movePlayhead,
  secondsToTrackFraction,
  trackToSeconds,
} from "../src/timeline";

const DURATION = 3.0;

function freshSelection() {
  return initialSelection("clip-a", DURATION);
}

describe("selection constraints", () => {
  it("starts valid, spanning the whole clip", () => {
    const sel = freshSelection();
    expect(sel.startS).toBe(0);
    expect(sel.endS).toBe(DURATION);
    expect(isValidSelection(sel, DURATION)).toBe(true);
  });

  it("start handle can never reach or cross the end handle", () => {
    let sel = freshSelection();
    sel = moveHandle(sel, "end", 1.0, DURATION);
    for (const t of [0.5, 0.999, 1.0, 1.5, 99]) {
      sel = moveHandle(sel, "start", t, DURATION);
      expect(sel.startS).toBeLessThan(sel.endS);
      expect(isValidSelection(sel, DURATION)).toBe(true);
    }
    expect(sel.startS).toBe(1.0 - MIN_GAP_S);
  });

  it("end handle can never reach or cross the start handle", () => {
    let sel = freshSelection();
    sel = moveHandle(sel, "start", 2.0, DURATION);
    for (const t of [2.5, 2.001, 2.0, 0.0, -5]) {
      sel = moveHandle(sel, "end", t, DURATION);
      expect(sel.endS).toBeGreaterThan(sel.startS);
      expect(isValidSelection(sel, DURATION)).toBe(true);
    }
  });

  it("random drag storms keep every committed state valid", () => {
    let sel = freshSelection();
    let seed = 12345;
    const next = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    for (let i = 0; i < 500; i++) {
      const which = next() < 0.5 ? "start" : "end";
      sel = moveHandle(sel, which, next() * 4 - 0.5, DURATION);
      expect(sel.startS).toBeLessThan(sel.endS);
      expect(isValidSelection(sel, DURATION)).toBe(true);
    }
  });

  it("values are committed at millisecond resolution", () => {
    const sel = moveHandle(freshSelection(), "start", 1.23456789, DURATION);
    expect(sel.startS).toBe(1.235);
  });

  it("playhead clamps to the clip", () => {
    const sel = movePlayhead(freshSelection(), 99, DURATION);
    expect(sel.playheadS).toBe(DURATION);
    expect(movePlayhead(sel, -1, DURATION).playheadS).toBe(0);
  });
});

describe("submit gating", () => {
  it("requires non-empty instruction and a valid selection", () => {
    const selection = freshSelection();
    expect(canSubmit({ selection, instruction: "" }, DURATION)).toBe(false);
    expect(canSubmit({ selection, instruction: "   " }, DURATION)).toBe(false);
    expect(canSubmit({ selection, instruction: "bend knees" }, DURATION)).toBe(true);
    const broken = { ...selection, startS: 2.5, endS: 2.5 };
    expect(canSubmit({ selection: broken, instruction: "bend knees" }, DURATION)).toBe(false);
  });
});

describe("track geometry", () => {
  it("maps pixels to seconds and back", () => {
    expect(trackToSeconds(0, 400, DURATION)).toBe(0);
    expect(trackToSeconds(400, 400, DURATION)).toBe(DURATION);
    expect(trackToSeconds(200, 400, DURATION)).toBe(1.5);
    expect(trackToSeconds(9999, 400, DURATION)).toBe(DURATION);
    expect(secondsToTrackFraction(1.5, DURATION)).toBe(0.5);
  });
});
