// Session flow state machine. Everything the screens need to render lives
// here; the server stays the source of truth for all test logic (SNR,
// scoring, ordering), and this controller never learns whether an answer
// was right.

import { ApiError, DinApi, ParticipantMeta, Results, TrialInfo } from "./api.js";
import { AudioPlayer } from "./audio.js";

export type Phase =
  | "start"
  | "calibration"
  | "trial"
  | "transition"
  | "results"
  | "error";

export type PlaybackState = "ready" | "playing" | "consumed";

export interface SessionView {
  phase: Phase;
  error: string | null;
  conditionNumber: number | null; // 1-based position, order itself hidden
  conditionsTotal: number;
  trialIndex: number;
  trialsPerCondition: number;
  practice: boolean;
  playback: PlaybackState;
  digits: number[];
  canSubmit: boolean;
  calibrationLoudPlayed: boolean;
  calibrationSoftPlayed: boolean;
  canConfirmCalibration: boolean;
  results: Record<string, number> | null;
}

const STORAGE_KEY = "din-session-id";

export class SessionController {
  private phase: Phase = "start";
  private sessionId: string | null = null;
  private trial: TrialInfo | null = null;
  private playback: PlaybackState = "ready";
  private digits: number[] = [];
  private loudPlayed = false;
  private softPlayed = false;
  private results: Results | null = null;
  private lastError: string | null = null;
  private conditionsTotal = 3;
  private trialsPerCondition = 24;
  private listeners: Array<(view: SessionView) => void> = [];

  constructor(
    private api: DinApi,
    private player: AudioPlayer,
    private storage: Storage | null = null,
  ) {}

  // -- view plumbing -------------------------------------------------------

  subscribe(listener: (view: SessionView) => void): void {
    this.listeners.push(listener);
    listener(this.view());
  }

  private notify(): void {
    const view = this.view();
    for (const listener of this.listeners) listener(view);
  }

  view(): SessionView {
    return {
      phase: this.phase,
      error: this.lastError,
      conditionNumber: this.trial?.condition_index ?? null,
      conditionsTotal: this.conditionsTotal,
      trialIndex: this.trial?.trial_index ?? 0,
      trialsPerCondition: this.trialsPerCondition,
      practice: this.trial?.practice ?? false,
      playback: this.playback,
      digits: [...this.digits],
      canSubmit: this.phase === "trial" && this.digits.length === 3,
      calibrationLoudPlayed: this.loudPlayed,
      calibrationSoftPlayed: this.softPlayed,
      canConfirmCalibration: this.loudPlayed && this.softPlayed,
      results: this.results?.srt_db ?? null,
    };
  }

  get id(): string | null {
    return this.sessionId;
  }

  // -- start / restore -----------------------------------------------------

  async start(meta: ParticipantMeta): Promise<void> {
    const info = await this.api.createSession(meta);
    this.sessionId = info.session_id;
    this.conditionsTotal = info.condition_order.length;
    this.trialsPerCondition = info.trials_per_condition;
    this.storage?.setItem(STORAGE_KEY, info.session_id);
    this.phase = "calibration";
    this.notify();
  }

  /** Resume after a reload; returns false when there is nothing to resume. */
  async restore(): Promise<boolean> {
    const stored = this.storage?.getItem(STORAGE_KEY);
    if (!stored) return false;
    this.sessionId = stored;
    try {
      const results = await this.api.results(stored);
      if (results && results.complete) {
        this.results = results;
        this.phase = "results";
        this.notify();
        return true;
      }
      const pending = await this.api.pendingTrial(stored);
      if (pending) {
        this.trial = pending;
        this.trialsPerCondition = pending.trials_per_condition;
        this.conditionsTotal = pending.conditions_total;
        this.playback = pending.audio_consumed ? "consumed" : "ready";
        this.digits = [];
        this.phase = "trial";
      } else {
        await this.requestTrial();
      }
      this.notify();
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.storage?.removeItem(STORAGE_KEY);
        this.sessionId = null;
        return false;
      }
      throw err;
    }
  }

  // -- calibration ---------------------------------------------------------

  async playCalibration(which: "loud" | "soft"): Promise<void> {
    if (!this.sessionId) throw new Error("no session");
    const calib = await this.api.calibration(this.sessionId);
    const url = which === "loud" ? calib.loud_url : calib.soft_url;
    try {
      const bytes = await this.api.fetchAudio(url); // repeatable by design
      await this.player.play(bytes);
      if (which === "loud") this.loudPlayed = true;
      else this.softPlayed = true;
      this.lastError = null;
    } catch (err) {
      this.lastError = "calibration audio failed to load; please retry";
    }
    this.notify();
  }

  async confirmCalibration(): Promise<void> {
    if (!(this.loudPlayed && this.softPlayed)) {
      throw new Error("play both calibration sentences before continuing");
    }
    await this.requestTrial();
    this.notify();
  }

  // -- trial loop ----------------------------------------------------------

  private async requestTrial(): Promise<void> {
    if (!this.sessionId) throw new Error("no session");
    this.trial = await this.api.nextTrial(this.sessionId);
    this.trialsPerCondition = this.trial.trials_per_condition;
    this.conditionsTotal = this.trial.conditions_total;
    this.playback = "ready";
    this.digits = [];
    this.phase = "trial";
  }

  /** Plays the stimulus. Single use: the button must be disabled afterwards,
   * and the server refuses a second fetch anyway. */
  async playStimulus(): Promise<void> {
    if (this.phase !== "trial" || !this.trial) throw new Error("no trial active");
    if (this.playback !== "ready") return; // already used
    this.playback = "playing";
    this.notify();
    try {
      const bytes = await this.api.fetchAudio(this.trial.audio_url);
      this.playback = "consumed";
      this.notify();
      await this.player.play(bytes);
    } catch (err) {
      if (err instanceof ApiError && err.status === 410) {
        this.playback = "consumed"; // already delivered once
      } else {
        this.playback = "ready"; // network hiccup: token not consumed
        this.lastError = "playback failed; try again";
      }
      this.notify();
    }
  }

  pressDigit(d: number): void {
    if (this.phase !== "trial" || this.digits.length >= 3) return;
    if (d < 0 || d > 9) return;
    this.digits.push(d);
    this.notify();
  }

  backspace(): void {
    if (this.phase !== "trial") return;
    this.digits.pop();
    this.notify();
  }

  async submit(): Promise<void> {
    if (!this.sessionId || !this.trial) throw new Error("no trial active");
    if (this.digits.length !== 3) {
      throw new Error("submit requires exactly 3 digits");
    }
    const outcome = await this.api.submitResponse(
      this.sessionId,
      this.trial.trial_token,
      this.digits,
    );
    this.trial = null;
    this.digits = [];
    if (outcome.test_complete) {
      this.results = await this.api.results(this.sessionId);
      this.phase = "results";
    } else if (outcome.condition_complete) {
      this.phase = "transition";
    } else {
      await this.requestTrial();
    }
    this.notify();
  }

  /** From the between-conditions screen into the next condition. */
  async continueToNextCondition(): Promise<void> {
    if (this.phase !== "transition") throw new Error("not between conditions");
    await this.requestTrial();
    this.notify();
  }
}
