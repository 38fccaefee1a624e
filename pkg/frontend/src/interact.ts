/**
 * Pointer interaction → outbound protocol messages.
 *
 * pointer-down sends a GRAB pick ray, pointer-move sends DRAG targets
 * throttled to 60 Hz, pointer-up sends RELEASE; the spawn hotkey throws one
 * projectile along the view ray per press. When the server says another
 * session owns interaction, messages are suppressed and HUD state flips.
 */

import { encodeDrag, encodeGrab, encodeRelease, encodeSpawn, ERR_NOT_OWNER } from "./protocol.js";
import type { Vec3 } from "./protocol.js";

export interface Ray {
  origin: Vec3;
  direction: Vec3;
}

const DRAG_MIN_INTERVAL_MS = 1000 / 60;

export class InteractionController {
  grabbing = false;
  suppressed = false; // another session owns interaction
  dragsSent = 0;
  private lastDragMs = -Infinity;
  /** world-space distance from camera of the grabbed point; DRAG targets
   * stay on the sphere of that radius along the pointer ray */
  private grabDepth = 1.0;

  constructor(
    private send: (data: ArrayBuffer) => void,
    private spawnSpeed = 4.0,
    private spawnRadius = 0.05,
    private spawnMass = 0.2
  ) {}

  pointerDown(ray: Ray, grabDepth: number, timeMs: number): void {
    if (this.suppressed) return;
    this.grabbing = true;
    this.grabDepth = grabDepth;
    this.lastDragMs = timeMs;
    this.send(encodeGrab(ray.origin, ray.direction));
  }

  pointerMove(ray: Ray, timeMs: number): boolean {
    if (!this.grabbing || this.suppressed) return false;
    if (timeMs - this.lastDragMs < DRAG_MIN_INTERVAL_MS) return false;
    this.lastDragMs = timeMs;
    const target: Vec3 = [
      ray.origin[0] + ray.direction[0] * this.grabDepth,
      ray.origin[1] + ray.direction[1] * this.grabDepth,
      ray.origin[2] + ray.direction[2] * this.grabDepth,
    ];
    this.send(encodeDrag(target));
    this.dragsSent++;
    return true;
  }

  pointerUp(): void {
    if (!this.grabbing) return;
    this.grabbing = false;
    if (!this.suppressed) this.send(encodeRelease());
  }

  spawn(ray: Ray): void {
    if (this.suppressed) return;
    const v: Vec3 = [
      ray.direction[0] * this.spawnSpeed,
      ray.direction[1] * this.spawnSpeed,
      ray.direction[2] * this.spawnSpeed,
    ];
    this.send(encodeSpawn(ray.origin, v, this.spawnRadius, this.spawnMass));
  }

  onServerError(code: number): void {
    if (code === ERR_NOT_OWNER) {
      this.suppressed = true;
      this.grabbing = false;
    }
  }

  /** ownership may free up again after the other session releases */
  resetSuppression(): void {
    this.suppressed = false;
  }
}
