// Free-fly camera with yaw snapping. No roll. Yaw snap actions always land
// on multiples of 45 degrees; smooth look is allowed in between.

export interface Vec3 { x: number; y: number; z: number }

const DEG = Math.PI / 180;
const SNAP_DEG = 45;

export class FlyCamera {
  position: Vec3 = { x: 0, y: 0, z: 250 };
  yawDeg = 0;     // rotation about +Y, 0 looks down -Z
  pitchDeg = 0;   // clamped to avoid gimbal flip
  fovYDeg = 60;

  /** Unit view direction from yaw/pitch. */
  forward(): Vec3 {
    const yaw = this.yawDeg * DEG;
    const pitch = this.pitchDeg * DEG;
    const cp = Math.cos(pitch);
    return {
      x: -Math.sin(yaw) * cp,
      y: Math.sin(pitch),
      z: -Math.cos(yaw) * cp,
    };
  }

  right(): Vec3 {
    const yaw = this.yawDeg * DEG;
    return { x: Math.cos(yaw), y: 0, z: -Math.sin(yaw) };
  }

  look(dYawDeg: number, dPitchDeg: number): void {
    this.yawDeg = normalizeDeg(this.yawDeg + dYawDeg);
    this.pitchDeg = Math.max(-89, Math.min(89, this.pitchDeg + dPitchDeg));
  }

  /**
   * Rotate to the next multiple of 45 degrees in the given direction.
   * Starting on a multiple moves a full step; anywhere else rounds outward.
   */
  snapYaw(direction: 'left' | 'right'): void {
    const steps = this.yawDeg / SNAP_DEG;
    const epsilon = 1e-9;
    let target: number;
    if (direction === 'right') {
      target = Math.floor(steps + epsilon + 1) * SNAP_DEG;
    } else {
      target = Math.ceil(steps - epsilon - 1) * SNAP_DEG;
    }
    this.yawDeg = normalizeDeg(target);
  }

  move(forwardAmount: number, rightAmount: number, upAmount: number): void {
    const f = this.forward();
    const r = this.right();
    this.position = {
      x: this.position.x + f.x * forwardAmount + r.x * rightAmount,
      y: this.position.y + f.y * forwardAmount + upAmount,
      z: this.position.z + f.z * forwardAmount + r.z * rightAmount,
    };
  }

  /** Teleport analog: jump the camera to stand at a picked ground target. */
  jumpTo(target: Vec3, standoff = 30): void {
    const f = this.forward();
    this.position = {
      x: target.x - f.x * standoff,
      y: target.y - f.y * standoff,
      z: target.z - f.z * standoff,
    };
  }

  /**
   * World-space unit ray through a viewport point, for server-side picking.
   * x, y in pixels with the origin at the top-left corner.
   */
  rayThrough(px: number, py: number, width: number, height: number): {
    origin: [number, number, number];
    direction: [number, number, number];
  } {
    const aspect = width / height;
    const halfTan = Math.tan((this.fovYDeg / 2) * DEG);
    const ndcX = (2 * px / width - 1) * halfTan * aspect;
    const ndcY = (1 - 2 * py / height) * halfTan;
    const f = this.forward();
    const r = this.right();
    const up = cross(r, f); // already unit: r ⟂ f by construction
    const d = {
      x: f.x + r.x * ndcX + up.x * ndcY,
      y: f.y + r.y * ndcX + up.y * ndcY,
      z: f.z + r.z * ndcX + up.z * ndcY,
    };
    const len = Math.hypot(d.x, d.y, d.z);
    return {
      origin: [this.position.x, this.position.y, this.position.z],
      direction: [d.x / len, d.y / len, d.z / len],
    };
  }

  /** Column-major view-projection matrix for rendering and label overlay. */
  viewProjection(aspect: number, near = 0.1, far = 5000): Float32Array {
    const f = this.forward();
    const r = this.right();
    const u = cross(r, f);
    const p = this.position;
    // view = [right, up, -forward]^T with translation
    const view = [
      r.x, u.x, -f.x, 0,
      r.y, u.y, -f.y, 0,
      r.z, u.z, -f.z, 0,
      -(r.x * p.x + r.y * p.y + r.z * p.z),
      -(u.x * p.x + u.y * p.y + u.z * p.z),
      f.x * p.x + f.y * p.y + f.z * p.z,
      1,
    ];
    const t = 1 / Math.tan((this.fovYDeg / 2) * DEG);
    const proj = [
      t / aspect, 0, 0, 0,
      0, t, 0, 0,
      0, 0, (far + near) / (near - far), -1,
      0, 0, (2 * far * near) / (near - far), 0,
    ];
    return multiply4(proj, view);
  }
}

export function normalizeDeg(deg: number): number {
  let d = deg % 360;
  if (d > 180) d -= 360;
  if (d <= -180) d += 360;
  return d === 0 ? 0 : d; // never hand back negative zero
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return {
    x: a.y * b.z - a.z * b.y,
    y: a.z * b.x - a.x * b.z,
    z: a.x * b.y - a.y * b.x,
  };
}

function multiply4(a: number[], b: number[]): Float32Array {
  const out = new Float32Array(16);
  for (let col = 0; col < 4; col++) {
    for (let row = 0; row < 4; row++) {
      let sum = 0;
      for (let k = 0; k < 4; k++) sum += a[k * 4 + row] * b[col * 4 + k];
      out[col * 4 + row] = sum;
    }
  }
  return out;
}

/** Project a world point to pixel coordinates; null when behind the camera. */
export function projectToScreen(
  vp: Float32Array, point: [number, number, number], width: number, height: number,
): { x: number; y: number } | null {
  const [x, y, z] = point;
  const cx = vp[0] * x + vp[4] * y + vp[8] * z + vp[12];
  const cy = vp[1] * x + vp[5] * y + vp[9] * z + vp[13];
  const cw = vp[3] * x + vp[7] * y + vp[11] * z + vp[15];
  if (cw <= 0) return null;
  return {
    x: (cx / cw * 0.5 + 0.5) * width,
    y: (0.5 - cy / cw * 0.5) * height,
  };
}
