/** DOM wiring: binds the dashboard controller and corner editor to the
 * page. All state lives in the controller; this file only renders it and
 * forwards events. */

import { ServiceClient } from "./api.js";
import { DashboardController } from "./dashboard.js";
import { imageToScreen, type Point } from "./geometry.js";

const HANDLE_RADIUS = 7;
const EDITOR_MAX_WIDTH = 640;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const client = new ServiceClient("");
const controller = new DashboardController(client, { onChange: render });

const videoSelect = el<HTMLSelectElement>("video-select");
const advertSelect = el<HTMLSelectElement>("advert-select");
const createButton = el<HTMLButtonElement>("create-job");
const stateLabel = el<HTMLSpanElement>("job-state");
const connectionBanner = el<HTMLDivElement>("connection-banner");
const errorBanner = el<HTMLDivElement>("error-banner");
const editorSection = el<HTMLElement>("editor-section");
const editorCanvas = el<HTMLCanvasElement>("editor-canvas");
const editorMessage = el<HTMLParagraphElement>("editor-message");
const confirmButton = el<HTMLButtonElement>("confirm-corners");
const resetButton = el<HTMLButtonElement>("reset-corners");
const renderButton = el<HTMLButtonElement>("start-render");
const progressBar = el<HTMLProgressElement>("render-progress");
const progressLabel = el<HTMLSpanElement>("progress-label");
const previewStrip = el<HTMLDivElement>("preview-strip");
const resultLink = el<HTMLAnchorElement>("result-link");

function fillSelect(select: HTMLSelectElement, entries: { id: string; name: string }[]): void {
  const current = select.value;
  select.innerHTML = "";
  for (const entry of entries) {
    const option = document.createElement("option");
    option.value = entry.id;
    option.textContent = entry.name;
    select.appendChild(option);
  }
  if (entries.some((e) => e.id === current)) {
    select.value = current;
  }
}

function drawEditor(): void {
  const editor = controller.editor;
  const job = controller.job;
  if (editor === null || job === null) {
    return;
  }
  const zoom = Math.min(EDITOR_MAX_WIDTH / job.width, 2);
  editor.view = { zoom, panX: 0, panY: 0 };
  editorCanvas.width = Math.round(job.width * zoom);
  editorCanvas.height = Math.round(job.height * zoom);
  const ctx = editorCanvas.getContext("2d");
  if (ctx === null) {
    return;
  }

  // neutral checker backdrop at the video's dimensions (the API exposes
  // rendered frames only, so the keyframe is edited over a placeholder)
  ctx.fillStyle = "#3a3a3a";
  ctx.fillRect(0, 0, editorCanvas.width, editorCanvas.height);
  ctx.fillStyle = "#444";
  const cell = 16;
  for (let y = 0; y < editorCanvas.height; y += cell) {
    for (let x = (y / cell) % 2 === 0 ? 0 : cell; x < editorCanvas.width; x += 2 * cell) {
      ctx.fillRect(x, y, cell, cell);
    }
  }

  const screen = editor.screenHandles();
  ctx.beginPath();
  const first = screen[0]!;
  ctx.moveTo(first[0], first[1]);
  for (const p of screen.slice(1)) {
    ctx.lineTo(p[0], p[1]);
  }
  ctx.closePath();
  ctx.strokeStyle = editor.isConvex() ? "#4caf50" : "#e53935";
  ctx.lineWidth = 2;
  ctx.stroke();
  ctx.fillStyle = "rgba(76, 175, 80, 0.15)";
  if (editor.isConvex()) {
    ctx.fill();
  }

  screen.forEach((p, i) => {
    ctx.beginPath();
    ctx.arc(p[0], p[1], HANDLE_RADIUS, 0, 2 * Math.PI);
    ctx.fillStyle = i === editor.activeHandle ? "#ffca28" : "#fff";
    ctx.fill();
    ctx.strokeStyle = "#222";
    ctx.stroke();
  });
}

function canvasPoint(event: MouseEvent): Point {
  const rect = editorCanvas.getBoundingClientRect();
  return [event.clientX - rect.left, event.clientY - rect.top];
}

editorCanvas.addEventListener("mousedown", (event) => {
  const editor = controller.editor;
  if (editor === null) {
    return;
  }
  const [mx, my] = canvasPoint(event);
  const screen = editor.screenHandles();
  for (let i = 0; i < screen.length; i++) {
    const p = screen[i]!;
    if (Math.hypot(p[0] - mx, p[1] - my) <= HANDLE_RADIUS + 3) {
      editor.beginDrag(i);
      render();
      return;
    }
  }
});

editorCanvas.addEventListener("mousemove", (event) => {
  const editor = controller.editor;
  if (editor === null || editor.activeHandle === null) {
    return;
  }
  const [mx, my] = canvasPoint(event);
  editor.dragTo(mx, my);
  render();
});

window.addEventListener("mouseup", () => {
  const editor = controller.editor;
  if (editor !== null && editor.activeHandle !== null) {
    editor.endDrag();
    render();
  }
});

createButton.addEventListener("click", () => {
  void controller.createJob(videoSelect.value, advertSelect.value);
});
confirmButton.addEventListener("click", () => {
  void controller.confirmCorners();
});
resetButton.addEventListener("click", () => {
  controller.editor?.reset();
  render();
});
renderButton.addEventListener("click", () => {
  void controller.startRender();
});

function render(): void {
  fillSelect(videoSelect, controller.videos);
  fillSelect(advertSelect, controller.adverts);
  createButton.disabled = controller.videos.length === 0 || controller.adverts.length === 0;

  connectionBanner.hidden = controller.connectionBanner === null;
  connectionBanner.textContent = controller.connectionBanner ?? "";
  errorBanner.hidden = controller.apiError === null;
  errorBanner.textContent = controller.apiError ?? "";

  const job = controller.job;
  stateLabel.textContent = job === null ? "no job" : job.state;
  if (job?.error) {
    errorBanner.hidden = false;
    errorBanner.textContent = job.error;
  }

  const editor = controller.editor;
  editorSection.hidden = editor === null;
  if (editor !== null) {
    drawEditor();
    confirmButton.disabled = !editor.submitEnabled;
    editorMessage.textContent = editor.blockedMessage ?? "";
    renderButton.disabled = job === null || job.state !== "corners_confirmed";
  }

  progressBar.value = controller.progressPercent;
  progressLabel.textContent =
    job === null ? "" : `${controller.progressPercent}% (${job.state})`;

  const previews = controller.previewFrameIndices();
  previewStrip.innerHTML = "";
  if (controller.jobId !== null) {
    for (const index of previews) {
      const img = document.createElement("img");
      img.src = client.previewUrl(controller.jobId, index);
      img.alt = `rendered frame ${index}`;
      img.width = 160;
      previewStrip.appendChild(img);
    }
  }

  const url = controller.resultUrl();
  resultLink.hidden = url === null;
  if (url !== null) {
    resultLink.href = url;
  }
}

void controller.loadCatalogs();
render();

export { controller, imageToScreen };
