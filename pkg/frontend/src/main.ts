/** Viewer entry point: connect, skin incoming frames, render, interact. */

import { OrbitCamera } from "./camera.js";
import { Hud } from "./hud.js";
import { InteractionController } from "./interact.js";
import { StreamClient } from "./net.js";
import type { InitMessage, SceneBlock } from "./protocol.js";
import { SplatRenderer, SplatGroup } from "./renderer.js";
import { allocateSkinned, applyFrame, SkinnedBuffers } from "./skinning.js";

function groupFromScene(scene: SceneBlock, dynamic: boolean): SplatGroup {
  return {
    count: scene.count,
    positions: scene.positions,
    rotations: scene.rotations,
    scales: scene.scales,
    colors: scene.colors,
    opacities: scene.opacities,
    dynamic,
  };
}

function boot(): void {
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const hudRoot = document.getElementById("hud") as HTMLElement;
  const hud = new Hud(hudRoot);
  const camera = new OrbitCamera();
  const renderer = new SplatRenderer(canvas);

  const params = new URLSearchParams(location.search);
  const url = params.get("ws") ?? `ws://${location.hostname}:8765`;

  let init: InitMessage | null = null;
  let groups: SplatGroup[] = [];
  const skinned = new Map<number, SkinnedBuffers>();

  const client = new StreamClient(url, {
    onInit: (msg) => {
      init = msg;
      hud.scene(msg);
      groups = [groupFromScene(msg.environment, false)];
      for (const obj of msg.objects) {
        const buffers = allocateSkinned(obj.scene.count);
        buffers.positions.set(obj.scene.positions);
        buffers.rotations.set(obj.scene.rotations);
        skinned.set(obj.objectId, buffers);
        const g = groupFromScene(obj.scene, true);
        g.positions = buffers.positions;
        g.rotations = buffers.rotations;
        groups.push(g);
      }
    },
    onServerError: (code, message) => {
      interaction.onServerError(code);
      hud.banner(`server: ${message}`);
      setTimeout(() => {
        hud.banner(null);
        interaction.resetSuppression();
      }, 2500);
    },
    onStatus: (s) => hud.status(s),
    onBadMessage: (err) => hud.banner(`bad message: ${err}`),
  });
  client.connect();

  const interaction = new InteractionController((data) => client.send(data));

  const resize = () => {
    canvas.width = canvas.clientWidth * devicePixelRatio;
    canvas.height = canvas.clientHeight * devicePixelRatio;
  };
  window.addEventListener("resize", resize);
  resize();

  const rayFromEvent = (ev: PointerEvent | MouseEvent) => {
    const rect = canvas.getBoundingClientRect();
    const ndcX = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
    const ndcY = -(((ev.clientY - rect.top) / rect.height) * 2 - 1);
    return camera.rayThrough(ndcX, ndcY, rect.width / rect.height);
  };

  let orbiting = false;
  canvas.addEventListener("pointerdown", (ev) => {
    if (ev.button === 0 && ev.shiftKey === false) {
      interaction.pointerDown(rayFromEvent(ev), camera.distance, performance.now());
      if (!interaction.grabbing) orbiting = true;
    } else {
      orbiting = true;
    }
    canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (interaction.grabbing) {
      interaction.pointerMove(rayFromEvent(ev), performance.now());
    } else if (orbiting) {
      camera.orbit(-ev.movementX * 0.005, ev.movementY * 0.005);
    }
  });
  canvas.addEventListener("pointerup", () => {
    interaction.pointerUp();
    orbiting = false;
  });
  canvas.addEventListener("wheel", (ev) => {
    camera.dolly(Math.exp(ev.deltaY * 0.001));
    ev.preventDefault();
  });
  window.addEventListener("keydown", (ev) => {
    if (ev.code === "Space" && !ev.repeat) {
      interaction.spawn(camera.rayThrough(0, 0, canvas.width / canvas.height));
    }
  });

  const tick = (nowMs: number) => {
    const frame = client.frames.take();
    if (frame && init) {
      if (!applyFrame(init.objects, frame, skinned)) {
        client.badFrames++;
      }
    }
    if (groups.length) renderer.render(groups, camera);
    hud.tick(nowMs, client.frames.dropped);
    requestAnimationFrame(tick);
  };
  requestAnimationFrame(tick);
}

boot();
