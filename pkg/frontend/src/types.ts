export interface ClipInfo {
  clip_id: string;
  duration_s: number;
  fps: number;
}

export interface FramesPayload {
  clip_id: string;
  fps: number;
  coord: "world" | "local";
  frames: number[][][]; // [frame][joint][x, y, z]
}

export interface AnnotationIn {
  video_id: string;
  start_s: number;
  end_s: number;
  instruction: string;
  annotator?: string;
}

export interface StoredAnnotation extends AnnotationIn {
  id: number;
}

export interface TimelineSelection {
  clipId: string;
  startS: number;
  endS: number;
  playheadS: number;
}

export interface DraftAnnotation {
  selection: TimelineSelection;
  instruction: string;
}
