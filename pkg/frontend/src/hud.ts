/** Minimal HUD: connection status, FPS, object labels, error banner. */

import type { InitMessage } from "./protocol.js";

export class Hud {
  private fpsWindow: number[] = [];

  constructor(private root: HTMLElement) {}

  private section(id: string): HTMLElement {
    let el = this.root.querySelector<HTMLElement>(`#${id}`);
    if (!el) {
      el = document.createElement("div");
      el.id = id;
      this.root.appendChild(el);
    }
    return el;
  }

  status(text: string): void {
    this.section("hud-status").textContent = `status: ${text}`;
  }

  banner(text: string | null): void {
    const el = this.section("hud-banner");
    el.textContent = text ?? "";
    el.style.display = text ? "block" : "none";
  }

  scene(init: InitMessage): void {
    const total = init.environment.count + init.objects.reduce((n, o) => n + o.scene.count, 0);
    const lines = [
      `kernels: ${total} (env ${init.environment.count})`,
      ...init.meta.objects.map(
        (o) => `#${o.id} ${o.category} ${o.mass_kg} kg — ${o.kernels} kernels / ${o.particles} particles`
      ),
    ];
    this.section("hud-scene").innerHTML = lines.map((l) => `<div>${l}</div>`).join("");
  }

  tick(nowMs: number, droppedFrames: number): void {
    this.fpsWindow.push(nowMs);
    while (this.fpsWindow.length > 2 && nowMs - this.fpsWindow[0] > 1000) {
      this.fpsWindow.shift();
    }
    const span = nowMs - this.fpsWindow[0];
    const fps = span > 0 ? ((this.fpsWindow.length - 1) * 1000) / span : 0;
    this.section("hud-fps").textContent = `render: ${fps.toFixed(0)} fps, dropped frames: ${droppedFrames}`;
  }
}
