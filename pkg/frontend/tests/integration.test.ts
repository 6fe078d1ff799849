// Scripted session against a live service: the [frontend + backend] path a
// browser would take, driven headless through the same controller the DOM
// uses. The service and its corpus are built once for the whole file.

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, DinApi } from "../src/api.js";
import { SilentPlayer } from "../src/audio.js";
import { SessionController } from "../src/session.js";

const PORT = 8761;
const BASE = `http://127.0.0.1:${PORT}`;
const META = { age: 28, self_reported_normal_hearing: true, prior_din_test: false };

let workDir: string;
let server: ChildProcess;

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/api/calibration/loud.wav`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "din-ui-"));
  // build a small but complete corpus with pass-through vocoder conditions
  const py = `
import sys
from ngvoc.synth import make_triplet_corpus
from ngvoc.din.corpus import prepare_stimuli
root = sys.argv[1]
make_triplet_corpus(root + "/triplets", n_triplets=30, sample_rate=16000, token_duration=0.05)
prepare_stimuli(root + "/triplets", root + "/corpus",
                vocoders={"nh_vocoded": lambda a: a, "eh_vocoded": lambda a: a},
                expected_triplets=30, seed=5)
`;
  execFileSync("python3", ["-c", py, workDir], { stdio: "inherit" });

  const serve = `
import sys
from ngvoc.din.service import DinServiceConfig, run_service
root = sys.argv[1]
run_service(DinServiceConfig(corpus_dir=root + "/corpus", data_dir=root + "/data",
                             port=${PORT}, rng_seed=11))
`;
  server = spawn("python3", ["-c", serve, workDir], { stdio: "ignore" });
  await waitForServer();
}, 120000);

afterAll(() => {
  server?.kill();
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

describe("scripted browser session against the live service", () => {
  it("completes 3 x 24 trials and shows the server's thresholds", async () => {
    const api = new DinApi(BASE);
    const controller = new SessionController(api, new SilentPlayer());
    await controller.start(META);
    expect(controller.view().phase).toBe("calibration");

    await controller.playCalibration("loud");
    await controller.playCalibration("soft");
    await controller.confirmCalibration();
    expect(controller.view().practice).toBe(true);

    let singleUseChecked = false;
    let scored = 0;
    let guard = 0;
    while (controller.view().phase !== "results" && guard++ < 200) {
      const view = controller.view();
      if (view.phase === "transition") {
        await controller.continueToNextCondition();
        continue;
      }

      await controller.playStimulus();
      expect(controller.view().playback).toBe("consumed");

      if (!singleUseChecked && !view.practice) {
        // a second direct fetch of the same trial audio must be refused
        const pending = await api.pendingTrial(controller.id!);
        await expect(api.fetchAudio(pending!.audio_url)).rejects.toSatisfy(
          (err: unknown) => err instanceof ApiError && err.status === 410,
        );
        singleUseChecked = true;
      }

      // submit must stay blocked until exactly 3 digits are entered
      controller.pressDigit(1);
      controller.pressDigit(2);
      expect(controller.view().canSubmit).toBe(false);
      await expect(controller.submit()).rejects.toThrow();
      controller.pressDigit(3);
      expect(controller.view().canSubmit).toBe(true);

      const wasPractice = controller.view().practice;
      await controller.submit();
      if (!wasPractice) scored++;
    }

    expect(scored).toBe(3 * 24);
    expect(singleUseChecked).toBe(true);

    const shown = controller.view().results!;
    expect(Object.keys(shown).sort()).toEqual(
      ["eh_vocoded", "nh_vocoded", "unprocessed"].sort(),
    );

    // the displayed values equal what the server reports directly
    const direct = await api.results(controller.id!);
    expect(direct).not.toBeNull();
    for (const [condition, srt] of Object.entries(direct!.srt_db)) {
      expect(shown[condition]).toBe(srt);
      expect(srt).toBeGreaterThanOrEqual(-20);
      expect(srt).toBeLessThanOrEqual(10);
    }
  }, 120000);

  it("an abandoned session can be resumed by a fresh client", async () => {
    const api = new DinApi(BASE);
    const storage = new Map<string, string>();
    const fakeStorage = {
      getItem: (k: string) => storage.get(k) ?? null,
      setItem: (k: string, v: string) => void storage.set(k, v),
      removeItem: (k: string) => void storage.delete(k),
    } as Storage;

    const first = new SessionController(api, new SilentPlayer(), fakeStorage);
    await first.start(META);
    await first.playCalibration("loud");
    await first.playCalibration("soft");
    await first.confirmCalibration();
    await first.playStimulus();

    const second = new SessionController(api, new SilentPlayer(), fakeStorage);
    expect(await second.restore()).toBe(true);
    const view = second.view();
    expect(view.phase).toBe("trial");
    expect(view.playback).toBe("consumed");
  }, 60000);
});
