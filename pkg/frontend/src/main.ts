import { DinApi } from "./api.js";
import { WebAudioPlayer } from "./audio.js";
import { SessionController } from "./session.js";
import { mount } from "./ui.js";

const API_BASE = (window as any).DIN_API_BASE ?? "";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const controller = new SessionController(
    new DinApi(API_BASE),
    new WebAudioPlayer(),
    window.sessionStorage,
  );
  mount(root, controller);
  await controller.restore(); // no-op when there is no session to resume
}

void boot();
