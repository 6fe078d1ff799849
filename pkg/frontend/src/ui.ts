// DOM rendering: one render function per phase, driven entirely by the
// controller's view snapshots.

import { SessionController, SessionView } from "./session.js";

function el(tag: string, attrs: Record<string, string> = {}, text = ""): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

export function mount(root: HTMLElement, controller: SessionController): void {
  controller.subscribe((view) => render(root, controller, view));
}

function render(root: HTMLElement, c: SessionController, view: SessionView): void {
  root.innerHTML = "";
  if (view.error) {
    root.appendChild(el("p", { class: "error" }, view.error));
  }
  switch (view.phase) {
    case "start":
      renderStart(root, c);
      break;
    case "calibration":
      renderCalibration(root, c, view);
      break;
    case "trial":
      renderTrial(root, c, view);
      break;
    case "transition":
      renderTransition(root, c, view);
      break;
    case "results":
      renderResults(root, view);
      break;
    case "error":
      root.appendChild(el("p", { class: "error" }, view.error ?? "something went wrong"));
      break;
  }
}

function renderStart(root: HTMLElement, c: SessionController): void {
  root.appendChild(el("h1", {}, "Digits in noise test"));
  root.appendChild(el("p", {}, "You will hear three spoken digits in noise and type what you heard. The test is anonymous; only your age and two yes/no answers are stored."));

  const form = el("form", { id: "start-form" });
  const age = el("input", { type: "number", id: "age", min: "10", max: "110", required: "true", placeholder: "Age" }) as HTMLInputElement;
  const nh = el("input", { type: "checkbox", id: "nh" }) as HTMLInputElement;
  const prior = el("input", { type: "checkbox", id: "prior" }) as HTMLInputElement;

  form.appendChild(labeled("Your age", age));
  form.appendChild(labeled("I believe I have normal hearing", nh));
  form.appendChild(labeled("I have done a digits-in-noise test before", prior));
  const go = el("button", { type: "submit", id: "start-btn" }, "Start");
  form.appendChild(go);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void c.start({
      age: parseInt(age.value || "0", 10),
      self_reported_normal_hearing: nh.checked,
      prior_din_test: prior.checked,
    });
  });
  root.appendChild(form);
}

function labeled(text: string, input: HTMLElement): HTMLElement {
  const wrap = el("label", { class: "field" });
  wrap.appendChild(input);
  wrap.appendChild(el("span", {}, " " + text));
  return wrap;
}

function renderCalibration(root: HTMLElement, c: SessionController, view: SessionView): void {
  root.appendChild(el("h1", {}, "Set your volume"));
  root.appendChild(el("p", {}, "Use headphones. Play both sentences as often as you like and adjust your device volume so the loud one is loud but comfortable and the soft one is clearly audible."));

  const loud = el("button", { id: "cal-loud" },
    view.calibrationLoudPlayed ? "Play loud sentence (played)" : "Play loud sentence");
  const soft = el("button", { id: "cal-soft" },
    view.calibrationSoftPlayed ? "Play soft sentence (played)" : "Play soft sentence");
  loud.addEventListener("click", () => void c.playCalibration("loud"));
  soft.addEventListener("click", () => void c.playCalibration("soft"));
  root.appendChild(loud);
  root.appendChild(soft);

  const confirm = el("button", { id: "cal-confirm" }, "My volume is set, begin practice");
  if (!view.canConfirmCalibration) confirm.setAttribute("disabled", "true");
  confirm.addEventListener("click", () => void c.confirmCalibration());
  root.appendChild(confirm);
}

function renderTrial(root: HTMLElement, c: SessionController, view: SessionView): void {
  const heading = view.practice
    ? "Practice round"
    : `Test ${view.conditionNumber} of ${view.conditionsTotal} - trial ${view.trialIndex} of ${view.trialsPerCondition}`;
  root.appendChild(el("h1", {}, heading));

  const play = el("button", { id: "play-btn", class: "play" },
    view.playback === "ready" ? "Play" : view.playback === "playing" ? "Playing..." : "Played");
  if (view.playback !== "ready") play.setAttribute("disabled", "true");
  play.addEventListener("click", () => void c.playStimulus());
  root.appendChild(play);

  const display = el("div", { id: "digit-display", class: "digits" },
    view.digits.map(String).join(" ") || "_ _ _");
  root.appendChild(display);

  const pad = el("div", { id: "keypad", class: "keypad" });
  for (let d = 0; d <= 9; d++) {
    const key = el("button", { id: `digit-${d}`, class: "key" }, String(d));
    if (view.digits.length >= 3) key.setAttribute("disabled", "true");
    key.addEventListener("click", () => c.pressDigit(d));
    pad.appendChild(key);
  }
  const back = el("button", { id: "backspace", class: "key wide" }, "Delete");
  if (view.digits.length === 0) back.setAttribute("disabled", "true");
  back.addEventListener("click", () => c.backspace());
  pad.appendChild(back);
  root.appendChild(pad);

  const submit = el("button", { id: "submit-btn", class: "submit" }, "Submit answer");
  if (!view.canSubmit) submit.setAttribute("disabled", "true");
  submit.addEventListener("click", () => void c.submit());
  root.appendChild(submit);
}

function renderTransition(root: HTMLElement, c: SessionController, view: SessionView): void {
  root.appendChild(el("h1", {}, "Part complete"));
  root.appendChild(el("p", {}, "Take a short break if you like. The next part sounds different; the task stays the same."));
  const go = el("button", { id: "next-condition" }, "Start next part");
  go.addEventListener("click", () => void c.continueToNextCondition());
  root.appendChild(go);
}

function renderResults(root: HTMLElement, view: SessionView): void {
  root.appendChild(el("h1", {}, "Your results"));
  root.appendChild(el("p", {}, "Speech reception threshold per test (lower SNR = better):"));
  const list = el("ul", { id: "results-list" });
  for (const [condition, srt] of Object.entries(view.results ?? {})) {
    list.appendChild(el("li", { "data-condition": condition },
      `${condition}: ${srt.toFixed(2)} dB SNR`));
  }
  root.appendChild(list);
  root.appendChild(el("p", {}, "Thank you for participating."));
}
