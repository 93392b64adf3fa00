/** DOM composition: left gallery, center preview, right controls. */

import { HttpEditorApi } from "./api.js";
import { Editor } from "./editor.js";
import type { EditorState } from "./state.js";

const SESSION_KEY = "winvert.session";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function mountApp(root: HTMLElement, maxCodes = 18): Editor {
  const api = new HttpEditorApi("");
  const editor = new Editor(api, maxCodes);

  const banner = el("div", "error-banner");
  banner.style.display = "none";

  const gallery = el("div", "gallery");
  const uploadInput = el("input") as HTMLInputElement;
  uploadInput.type = "file";
  uploadInput.accept = "image/*";
  const stagesInput = el("input") as HTMLInputElement;
  stagesInput.type = "number";
  stagesInput.value = "2";
  stagesInput.min = "1";

  const preview = el("img", "preview") as HTMLImageElement;
  const spinner = el("div", "spinner", "rendering…");
  spinner.style.display = "none";

  const controls = el("div", "controls");

  const left = el("div", "panel left");
  left.append(el("h2", undefined, "Inversions"), uploadInput, stagesInput, gallery);
  const center = el("div", "panel center");
  center.append(banner, preview, spinner);
  const right = el("div", "panel right");
  right.append(el("h2", undefined, "Edits"), controls);
  root.append(left, center, right);

  uploadInput.addEventListener("change", () => {
    const file = uploadInput.files?.[0];
    if (file) void editor.upload(file, Number(stagesInput.value) || 1);
  });

  function renderControls(s: EditorState): void {
    controls.replaceChildren();
    for (const d of s.directions) {
      const row = el("label", "slider-row", `${d.name} `);
      const slider = el("input") as HTMLInputElement;
      slider.type = "range";
      slider.min = String(d.alpha_range[0]);
      slider.max = String(d.alpha_range[1]);
      slider.step = "0.1";
      slider.value = String(s.sliders[d.name] ?? 0);
      slider.addEventListener("input", () => {
        void editor.onSliderChange(d.name, Number(slider.value));
      });
      row.append(slider);
      controls.append(row);
    }
    if (s.latents.length >= 2) {
      const [a, b] = s.latents.slice(-2);
      const lamRow = el("label", "slider-row", "interpolate ");
      const lam = el("input") as HTMLInputElement;
      lam.type = "range";
      lam.min = "0";
      lam.max = "1";
      lam.step = "0.01";
      lam.value = String(s.interpolation.lambda);
      lam.addEventListener("input", () => {
        void editor.onInterpolationChange(a.latentId, b.latentId, Number(lam.value));
      });
      lamRow.append(lam);
      controls.append(lamRow);

      const mixRow = el("label", "slider-row", "mix keep ");
      const keep = el("input") as HTMLInputElement;
      keep.type = "range";
      keep.min = "0";
      keep.max = String(s.maxCodes);
      keep.step = "1";
      keep.value = String(s.mixKeep);
      keep.addEventListener("input", () => {
        void editor.onMixChange(a.latentId, b.latentId, Number(keep.value));
      });
      mixRow.append(keep);
      controls.append(mixRow);
    } else {
      controls.append(
        el("p", "hint", "invert a second image to enable interpolation and mixing"),
      );
    }
  }

  editor.subscribe((s) => {
    banner.style.display = s.error ? "block" : "none";
    banner.textContent = s.error ?? "";
    spinner.style.display = s.pending ? "block" : "none";
    if (s.previewUrl) preview.src = s.previewUrl;
    gallery.replaceChildren(
      ...s.latents.map((l) => {
        const thumb = el("img", "thumb") as HTMLImageElement;
        thumb.src = l.preview;
        thumb.addEventListener("click", () => editor.selectLatent(l.latentId));
        return thumb;
      }),
    );
    renderControls(s);
    if (s.sessionId) window.localStorage.setItem(SESSION_KEY, s.sessionId);
  });

  void editor.start(window.localStorage.getItem(SESSION_KEY) ?? undefined);
  return editor;
}
