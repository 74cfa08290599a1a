/** Orthographic side-view projection of 22-joint skeleton frames onto a
 * canvas: world x maps to canvas x, world z (up) to canvas y (down). Local
 * clips keep the root pinned at the canvas center. */

// Parent joint per index, -1 for the root pelvis (SMPL order).
export const PARENTS = [
  -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19,
];

export const N_JOINTS = 22;

export interface Projected {
  x: number;
  y: number;
}

export function frameIndexFor(playheadS: number, fps: number, nFrames: number): number {
  const idx = Math.round(playheadS * fps);
  return Math.min(nFrames - 1, Math.max(0, idx));
}

export interface ProjectionSettings {
  canvasW: number;
  canvasH: number;
  scalePxPerM: number;
  centerX: number; // world x drawn at canvas center
  centerZ: number; // world z drawn at canvas center
}

/** Center on the first frame's root so local clips sit at the canvas middle. */
export function settingsFor(
  frames: number[][][],
  canvasW: number,
  canvasH: number,
  scalePxPerM = 140,
): ProjectionSettings {
  const root = frames.length ? frames[0][0] : [0, 0, 0];
  return { canvasW, canvasH, scalePxPerM, centerX: root[0], centerZ: root[2] };
}

export function projectJoint(joint: number[], s: ProjectionSettings): Projected {
  return {
    x: s.canvasW / 2 + (joint[0] - s.centerX) * s.scalePxPerM,
    y: s.canvasH / 2 - (joint[2] - s.centerZ) * s.scalePxPerM,
  };
}

export interface Bone {
  from: Projected;
  to: Projected;
}

export function projectFrame(frame: number[][], s: ProjectionSettings): {
  joints: Projected[];
  bones: Bone[];
} {
  const joints = frame.map((j) => projectJoint(j, s));
  const bones: Bone[] = [];
  for (let i = 0; i < frame.length; i++) {
    const parent = PARENTS[i];
    if (parent >= 0) {
      bones.push({ from: joints[parent], to: joints[i] });
    }
  }
  return { joints, bones };
}

export function drawFrame(
  ctx: CanvasRenderingContext2D,
  frame: number[][],
  s: ProjectionSettings,
): void {
  ctx.clearRect(0, 0, s.canvasW, s.canvasH);
  const { joints, bones } = projectFrame(frame, s);
  ctx.strokeStyle = "#4878b0";
  ctx.lineWidth = 2;
  for (const bone of bones) {
    ctx.beginPath();
    ctx.moveTo(bone.from.x, bone.from.y);
    ctx.lineTo(bone.to.x, bone.to.y);
    ctx.stroke();
  }
  ctx.fillStyle = "#1f3b5c";
  for (const joint of joints) {
    ctx.beginPath();
    ctx.arc(joint.x, joint.y, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
}
