import { ApiClient, ApiError, NetworkError, NoModelError } from "./api";
import { drawFrame, frameIndexFor, settingsFor } from "./projection";
import { formatSeconds, parseSeconds, roundMs } from "./time";
import {
  canSubmit,
  initialSelection,
  moveHandle,
  movePlayhead,
  secondsToTrackFraction,
  trackToSeconds,
} from "./timeline";
import { ClipInfo, FramesPayload, TimelineSelection } from "./types";

const api = new ApiClient("");

interface AppState {
  clips: ClipInfo[];
  current?: ClipInfo;
  frames?: FramesPayload;
  selection?: TimelineSelection;
  instruction: string;
  playing: boolean;
}

const state: AppState = { clips: [], instruction: "", playing: false };

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function setBanner(text: string, kind: "error" | "info" | "" = "", retry?: () => void): void {
  const banner = $("banner");
  banner.textContent = text;
  banner.className = kind;
  banner.style.display = text ? "block" : "none";
  const button = $("retry") as HTMLButtonElement;
  if (retry) {
    button.style.display = "inline-block";
    button.onclick = () => {
      setBanner("");
      retry();
    };
  } else {
    button.style.display = "none";
  }
}

function describeError(e: unknown): string {
  if (e instanceof NoModelError) return "no model loaded on the server";
  if (e instanceof NetworkError) return "cannot reach the annotation service";
  if (e instanceof ApiError && e.fieldErrors.length) {
    return e.fieldErrors.map((f) => `${f.field}: ${f.message}`).join("; ");
  }
  return String(e instanceof Error ? e.message : e);
}

// ── rendering ────────────────────────────────────────────────────────

function redrawSkeleton(): void {
  const canvas = $("viewer") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx || !state.frames || !state.selection) return;
  const settings = settingsFor(state.frames.frames, canvas.width, canvas.height);
  const idx = frameIndexFor(state.selection.playheadS, state.frames.fps, state.frames.frames.length);
  drawFrame(ctx, state.frames.frames[idx], settings);
  $("frame-label").textContent =
    `frame ${idx} / ${state.frames.frames.length - 1} @ ${formatSeconds(state.selection.playheadS)}s`;
}

function redrawTimeline(): void {
  if (!state.current || !state.selection) return;
  const duration = state.current.duration_s;
  const startPct = 100 * secondsToTrackFraction(state.selection.startS, duration);
  const endPct = 100 * secondsToTrackFraction(state.selection.endS, duration);
  const playheadPct = 100 * secondsToTrackFraction(state.selection.playheadS, duration);
  $("band").style.left = `${startPct}%`;
  $("band").style.width = `${endPct - startPct}%`;
  $("handle-start").style.left = `${startPct}%`;
  $("handle-end").style.left = `${endPct}%`;
  $("playhead-mark").style.left = `${playheadPct}%`;
  ($("start-input") as HTMLInputElement).value = formatSeconds(state.selection.startS);
  ($("end-input") as HTMLInputElement).value = formatSeconds(state.selection.endS);
  updateSubmitGate();
}

function updateSubmitGate(): void {
  const button = $("submit") as HTMLButtonElement;
  const note = $("gate-note");
  if (!state.current || !state.selection) {
    button.disabled = true;
    note.textContent = "select a clip first";
    return;
  }
  const draft = { selection: state.selection, instruction: state.instruction };
  const valid = canSubmit(draft, state.current.duration_s);
  button.disabled = !valid;
  note.textContent = valid
    ? ""
    : state.instruction.trim()
      ? "interval start must precede its end"
      : "enter an instruction to submit";
}

async function refreshAnnotations(): Promise<void> {
  const list = $("annotations");
  try {
    const rows = await api.listAnnotations();
    list.innerHTML = "";
    for (const row of rows) {
      const li = document.createElement("li");
      li.textContent =
        `#${row.id} ${row.video_id} [${formatSeconds(row.start_s)} – ` +
        `${formatSeconds(row.end_s)}] ${row.instruction}`;
      list.appendChild(li);
    }
  } catch (e) {
    setBanner(describeError(e), "error", refreshAnnotations);
  }
}

// ── clip loading ─────────────────────────────────────────────────────

async function selectClip(info: ClipInfo): Promise<void> {
  state.current = info;
  state.selection = initialSelection(info.clip_id, info.duration_s);
  const slider = $("playhead") as HTMLInputElement;
  slider.max = String(info.duration_s);
  slider.value = "0";
  try {
    state.frames = await api.getFrames(info.clip_id);
  } catch (e) {
    state.frames = undefined;
    setBanner(describeError(e), "error", () => void selectClip(info));
    return;
  }
  redrawTimeline();
  redrawSkeleton();
}

async function loadClips(): Promise<void> {
  try {
    state.clips = await api.listClips();
  } catch (e) {
    setBanner(describeError(e), "error", loadClips);
    return;
  }
  const select = $("clip-select") as HTMLSelectElement;
  select.innerHTML = "";
  for (const clip of state.clips) {
    const option = document.createElement("option");
    option.value = clip.clip_id;
    option.textContent = `${clip.clip_id} (${formatSeconds(clip.duration_s)}s @ ${clip.fps}fps)`;
    select.appendChild(option);
  }
  if (state.clips.length) {
    await selectClip(state.clips[0]);
  }
}

// ── interactions ─────────────────────────────────────────────────────

function wireTimeline(): void {
  const track = $("track");
  let dragging: "start" | "end" | null = null;

  const toSeconds = (event: PointerEvent): number => {
    const rect = track.getBoundingClientRect();
    return trackToSeconds(event.clientX - rect.left, rect.width, state.current?.duration_s ?? 0);
  };

  for (const which of ["start", "end"] as const) {
    $(`handle-${which}`).addEventListener("pointerdown", (event) => {
      dragging = which;
      (event.target as HTMLElement).setPointerCapture(event.pointerId);
    });
  }
  window.addEventListener("pointermove", (event) => {
    if (!dragging || !state.current || !state.selection) return;
    state.selection = moveHandle(
      state.selection, dragging, toSeconds(event), state.current.duration_s,
    );
    redrawTimeline();
  });
  window.addEventListener("pointerup", () => {
    dragging = null;
  });

  for (const which of ["start", "end"] as const) {
    $(`${which}-input`).addEventListener("change", (event) => {
      if (!state.current || !state.selection) return;
      const seconds = parseSeconds((event.target as HTMLInputElement).value);
      if (!Number.isNaN(seconds)) {
        state.selection = moveHandle(state.selection, which, seconds, state.current.duration_s);
      }
      redrawTimeline();
    });
  }

  const slider = $("playhead") as HTMLInputElement;
  slider.addEventListener("input", () => {
    if (!state.current || !state.selection) return;
    state.selection = movePlayhead(state.selection, Number(slider.value), state.current.duration_s);
    redrawTimeline();
    redrawSkeleton();
  });

  $("play").addEventListener("click", () => {
    state.playing = !state.playing;
    $("play").textContent = state.playing ? "pause" : "play";
  });
  window.setInterval(() => {
    if (!state.playing || !state.current || !state.selection) return;
    let next = state.selection.playheadS + 0.05;
    if (next > state.current.duration_s) next = 0;
    state.selection = movePlayhead(state.selection, next, state.current.duration_s);
    slider.value = String(state.selection.playheadS);
    redrawTimeline();
    redrawSkeleton();
  }, 50);
}

function wireAnnotationForm(): void {
  const textarea = $("instruction") as HTMLTextAreaElement;
  textarea.addEventListener("input", () => {
    state.instruction = textarea.value;
    updateSubmitGate();
  });

  $("submit").addEventListener("click", async () => {
    if (!state.current || !state.selection) return;
    const record = {
      video_id: state.current.clip_id,
      start_s: roundMs(state.selection.startS),
      end_s: roundMs(state.selection.endS),
      instruction: state.instruction,
    };
    try {
      const { id } = await api.postAnnotation(record);
      setBanner(`saved annotation #${id}`, "info");
      state.instruction = "";
      textarea.value = "";
      updateSubmitGate();
      await refreshAnnotations();
    } catch (e) {
      // keep the typed text; surface field-level messages
      setBanner(describeError(e), "error");
    }
  });

  $("preview").addEventListener("click", async () => {
    if (!state.current || !state.selection) return;
    const output = $("preview-output");
    output.textContent = "…";
    try {
      const { instruction } = await api.generate(
        state.current.clip_id,
        roundMs(state.selection.startS),
        roundMs(state.selection.endS),
      );
      output.textContent = instruction;
    } catch (e) {
      output.textContent = "";
      setBanner(describeError(e), "error");
    }
  });
}

function wireClipPicker(): void {
  ($("clip-select") as HTMLSelectElement).addEventListener("change", (event) => {
    const id = (event.target as HTMLSelectElement).value;
    const clip = state.clips.find((c) => c.clip_id === id);
    if (clip) void selectClip(clip);
  });
}

export function start(): void {
  wireTimeline();
  wireAnnotationForm();
  wireClipPicker();
  void loadClips();
  void refreshAnnotations();
}

if (typeof document !== "undefined" && document.getElementById("viewer")) {
  start();
}
