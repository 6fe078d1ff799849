// Playback behind an interface so the session logic can run headless in
// tests. The browser implementation decodes WAV bytes through Web Audio and
// plays them diotically (one buffer, both ears).

export interface AudioPlayer {
  play(bytes: ArrayBuffer): Promise<void>; // resolves when playback ends
}

export class WebAudioPlayer implements AudioPlayer {
  private ctx: AudioContext | null = null;

  private async context(): Promise<AudioContext> {
    if (!this.ctx) {
      this.ctx = new AudioContext();
    }
    if (this.ctx.state === "suspended") {
      await this.ctx.resume();
    }
    return this.ctx;
  }

  async play(bytes: ArrayBuffer): Promise<void> {
    const ctx = await this.context();
    const buffer = await ctx.decodeAudioData(bytes.slice(0));
    return new Promise((resolve) => {
      const source = ctx.createBufferSource();
      source.buffer = buffer;
      source.connect(ctx.destination);
      source.onended = () => resolve();
      source.start();
    });
  }
}

/** Test double: records sizes, "plays" instantly. */
export class SilentPlayer implements AudioPlayer {
  played: number[] = [];

  async play(bytes: ArrayBuffer): Promise<void> {
    this.played.push(bytes.byteLength);
  }
}
