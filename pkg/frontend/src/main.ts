// Page wiring: create or resume a session, replay the two candidate
// trajectories side by side, submit the preferred one.

import { SessionClient } from "./client.js";
import { renderFrame } from "./renderer.js";
import type { QueryDTO, TrajectoryDTO } from "./types.js";

const PANEL_W = 260;
const PANEL_H = 480;
const FRAME_MS = 40;
const POLL_MS = 1000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class Replay {
  frame = 0;
  private timer: number | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private traj: TrajectoryDTO,
  ) {
    canvas.width = PANEL_W;
    canvas.height = PANEL_H;
  }

  draw() {
    const ctx = this.canvas.getContext("2d");
    if (ctx) renderFrame(ctx, this.traj, this.frame, PANEL_W, PANEL_H);
  }

  play() {
    this.stop();
    this.frame = 0;
    this.timer = window.setInterval(() => {
      this.frame += 1;
      if (this.frame >= this.traj.states.length) {
        this.frame = this.traj.states.length - 1;
        this.stop();
      }
      this.draw();
    }, FRAME_MS);
    this.draw();
  }

  stop() {
    if (this.timer !== null) {
      window.clearInterval(this.timer);
      this.timer = null;
    }
  }
}

async function run() {
  const status = el<HTMLDivElement>("status");
  const progress = el<HTMLDivElement>("progress");
  const banner = el<HTMLDivElement>("banner");
  const buttons = {
    A: el<HTMLButtonElement>("choose-a"),
    B: el<HTMLButtonElement>("choose-b"),
    replayA: el<HTMLButtonElement>("replay-a"),
    replayB: el<HTMLButtonElement>("replay-b"),
  };
  const canvases = {
    A: el<HTMLCanvasElement>("panel-a"),
    B: el<HTMLCanvasElement>("panel-b"),
  };

  const params = new URLSearchParams(window.location.search);
  const nQueries = Number(params.get("n") ?? "100");
  const seed = Number(params.get("seed") ?? "0");

  let client: SessionClient;
  try {
    client = await SessionClient.create("", nQueries, seed);
  } catch (e) {
    banner.textContent = `Could not start a session: ${e}`;
    return;
  }
  status.textContent = `session ${client.sessionId}`;

  let replays: { A: Replay; B: Replay } | null = null;

  const setChoicesEnabled = (on: boolean) => {
    buttons.A.disabled = !on;
    buttons.B.disabled = !on;
    buttons.replayA.disabled = !on;
    buttons.replayB.disabled = !on;
  };

  const showQuery = (q: QueryDTO) => {
    replays = {
      A: new Replay(canvases.A, q.traj_a),
      B: new Replay(canvases.B, q.traj_b),
    };
    replays.A.play();
    replays.B.play();
    setChoicesEnabled(true);
    banner.textContent = "Which trajectory would you prefer the blue car to take?";
  };

  const loop = async () => {
    for (;;) {
      await client.refreshState();
      if (client.state) {
        progress.textContent = `${client.state.answered} / ${client.state.total}`;
      }
      if (client.phase === "complete") {
        banner.textContent = "Session complete. Thank you!";
        setChoicesEnabled(false);
        return;
      }
      setChoicesEnabled(false);
      banner.textContent = "Preparing the next query…";
      const q = await client.waitForQuery(POLL_MS);
      if (q === null) {
        if (client.phase === "error") {
          banner.textContent = `Connection problem: ${client.lastError}. Retrying…`;
          await new Promise((r) => setTimeout(r, POLL_MS));
          continue;
        }
        continue; // complete; loop exits on next state refresh
      }
      showQuery(q);
      await new Promise<void>((resolve) => {
        const pick = (choice: "A" | "B") => async () => {
          buttons.A.onclick = null;
          buttons.B.onclick = null;
          replays?.A.stop();
          replays?.B.stop();
          await client.submitChoice(choice);
          resolve();
        };
        buttons.A.onclick = pick("A");
        buttons.B.onclick = pick("B");
        buttons.replayA.onclick = () => replays?.A.play();
        buttons.replayB.onclick = () => replays?.B.play();
      });
    }
  };

  await loop();
}

window.addEventListener("DOMContentLoaded", () => {
  void run();
});
