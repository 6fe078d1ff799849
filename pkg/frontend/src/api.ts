// Typed client for the digits-in-noise HTTP API. The server owns all test
// logic; this layer only moves JSON and audio bytes.

export interface ParticipantMeta {
  age: number;
  self_reported_normal_hearing: boolean;
  prior_din_test: boolean;
}

export interface SessionInfo {
  session_id: string;
  condition_order: string[];
  trials_per_condition: number;
}

export interface CalibrationInfo {
  loud_url: string;
  soft_url: string;
  separation_db: number;
}

export interface TrialInfo {
  trial_token: string;
  practice: boolean;
  condition_index: number | null;
  trial_index: number;
  trials_per_condition: number;
  conditions_total: number;
  audio_url: string;
  audio_consumed?: boolean;
}

export interface ResponseOutcome {
  accepted: boolean;
  practice: boolean;
  condition_complete: boolean;
  test_complete: boolean;
}

export interface Results {
  complete: boolean;
  srt_db: Record<string, number>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function expectJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class DinApi {
  constructor(private baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl + path;
  }

  async createSession(meta: ParticipantMeta): Promise<SessionInfo> {
    const resp = await fetch(this.url("/api/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(meta),
    });
    return expectJson<SessionInfo>(resp);
  }

  async calibration(sessionId: string): Promise<CalibrationInfo> {
    return expectJson(await fetch(this.url(`/api/sessions/${sessionId}/calibration`)));
  }

  async nextTrial(sessionId: string): Promise<TrialInfo> {
    return expectJson(
      await fetch(this.url(`/api/sessions/${sessionId}/trials`), { method: "POST" }),
    );
  }

  async pendingTrial(sessionId: string): Promise<TrialInfo | null> {
    const resp = await fetch(this.url(`/api/sessions/${sessionId}/trial`));
    if (resp.status === 404) return null;
    return expectJson<TrialInfo>(resp);
  }

  /** Single use: the server rejects a second fetch of the same trial. */
  async fetchAudio(audioUrl: string): Promise<ArrayBuffer> {
    const resp = await fetch(this.url(audioUrl));
    if (!resp.ok) throw new ApiError(resp.status, `audio fetch failed (${resp.status})`);
    return await resp.arrayBuffer();
  }

  async submitResponse(
    sessionId: string,
    trialToken: string,
    digits: number[],
  ): Promise<ResponseOutcome> {
    const resp = await fetch(this.url(`/api/sessions/${sessionId}/responses`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ trial_token: trialToken, digits }),
    });
    return expectJson<ResponseOutcome>(resp);
  }

  async results(sessionId: string): Promise<Results | null> {
    const resp = await fetch(this.url(`/api/sessions/${sessionId}/results`));
    if (resp.status === 409) return null;
    return expectJson<Results>(resp);
  }
}
