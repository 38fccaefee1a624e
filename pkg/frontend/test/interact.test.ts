/** Interaction controller: message sequences from pointer gestures. */

import { describe, expect, it } from "vitest";

import { InteractionController, Ray } from "../src/interact.js";
import { ERR_NOT_OWNER, messageType, MSG_DRAG, MSG_GRAB, MSG_RELEASE, MSG_SPAWN } from "../src/protocol.js";

const RAY: Ray = { origin: [0, 1, -2], direction: [0, 0, 1] };

function harness() {
  const sent: ArrayBuffer[] = [];
  const ctl = new InteractionController((d) => sent.push(d));
  return { sent, ctl, types: () => sent.map((d) => messageType(d)) };
}

describe("grab / drag / release", () => {
  it("down-move-up yields GRAB, DRAGs, RELEASE", () => {
    const { ctl, types } = harness();
    ctl.pointerDown(RAY, 1.5, 0);
    for (let i = 1; i <= 5; i++) ctl.pointerMove(RAY, i * 100);
    ctl.pointerUp();
    const seq = types();
    expect(seq[0]).toBe(MSG_GRAB);
    expect(seq.slice(1, 6).every((t) => t === MSG_DRAG)).toBe(true);
    expect(seq[seq.length - 1]).toBe(MSG_RELEASE);
  });

  it("drag messages are throttled to 60 Hz", () => {
    const { ctl } = harness();
    ctl.pointerDown(RAY, 1.0, 0);
    let accepted = 0;
    for (let t = 1; t <= 100; t++) {
      if (ctl.pointerMove(RAY, t)) accepted++; // 1 ms apart: at most every ~17 ms
    }
    expect(accepted).toBeLessThanOrEqual(7);
    expect(accepted).toBeGreaterThan(3);
  });

  it("drag timestamps are monotone", () => {
    const { ctl } = harness();
    ctl.pointerDown(RAY, 1.0, 0);
    const times: number[] = [];
    for (let t = 0; t <= 500; t += 20) {
      if (ctl.pointerMove(RAY, t)) times.push(t);
    }
    expect(times.length).toBeGreaterThan(10);
    expect([...times].sort((a, b) => a - b)).toEqual(times);
  });

  it("no DRAG without a grab", () => {
    const { ctl, sent } = harness();
    ctl.pointerMove(RAY, 10);
    ctl.pointerUp();
    expect(sent.length).toBe(0);
  });
});

describe("spawn", () => {
  it("exactly one SPAWN per press", () => {
    const { ctl, types } = harness();
    ctl.spawn(RAY);
    ctl.spawn(RAY);
    expect(types()).toEqual([MSG_SPAWN, MSG_SPAWN]);
  });
});

describe("ownership", () => {
  it("NOT_OWNER suppresses further messages until reset", () => {
    const { ctl, sent } = harness();
    ctl.pointerDown(RAY, 1.0, 0);
    ctl.onServerError(ERR_NOT_OWNER);
    const before = sent.length;
    ctl.pointerMove(RAY, 100);
    ctl.spawn(RAY);
    ctl.pointerDown(RAY, 1.0, 200);
    expect(sent.length).toBe(before);
    ctl.resetSuppression();
    ctl.pointerDown(RAY, 1.0, 300);
    expect(sent.length).toBe(before + 1);
  });
});
