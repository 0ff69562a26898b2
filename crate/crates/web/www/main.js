import init, { Demo } from "./pkg/screenmesh_web.js";

const $ = (id) => document.getElementById(id);
const status = (text) => { $("status").textContent = text; };
let demo = null;

function epsilon() {
  return 2 ** Number($("epsilon").value);
}

function blit(canvas, rgba, width, height) {
  canvas.width = width;
  canvas.height = height;
  canvas.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), width, height), 0, 0);
}

function clear(canvas) {
  canvas.getContext("2d").clearRect(0, 0, canvas.width, canvas.height);
}

function showInput() {
  blit($("curvature"), demo.curvatureRgba(), demo.width, demo.height);
  blit($("mesh"), demo.normalsRgba(), demo.width, demo.height);
  clear($("depth"));
  status(`${demo.width}×${demo.height}, ${demo.foregroundPixels} foreground pixels`);
}

function timed(label, f) {
  const start = performance.now();
  const result = f();
  return [result, `${label} ${(performance.now() - start).toFixed(0)} ms`];
}

function remesh() {
  const [vertices, time] = timed("remesh", () => demo.remesh(epsilon()));
  const canvas = $("mesh");
  const scale = Math.max(1, Math.floor(960 / Math.max(demo.width, demo.height)));
  blit(canvas, demo.normalsRgba(), demo.width, demo.height);
  const image = canvas.getContext("2d").getImageData(0, 0, demo.width, demo.height);
  canvas.width = demo.width * scale;
  canvas.height = demo.height * scale;
  const ctx = canvas.getContext("2d");
  createImageBitmap(image).then((bitmap) => {
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(bitmap, 0, 0, canvas.width, canvas.height);
    const edges = demo.meshEdges();
    ctx.strokeStyle = "rgba(0, 0, 0, 0.8)";
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (let i = 0; i < edges.length; i += 4) {
      ctx.moveTo(edges[i] * scale, edges[i + 1] * scale);
      ctx.lineTo(edges[i + 2] * scale, edges[i + 3] * scale);
    }
    ctx.stroke();
  });
  clear($("depth"));
  status(`${vertices} vertices, compression ${(100 * demo.compression).toFixed(2)} %, ${time}`);
}

function integrate() {
  const [rgba, time] = timed("integrate", () => demo.integrate());
  blit($("depth"), rgba, demo.width, demo.height);
  const rmse = demo.rmse;
  const error = Number.isNaN(rmse) ? "" : `, depth RMSE ${rmse.toFixed(4)} px`;
  status(`${$("status").textContent.split("\n")[0]}\n${time}${error}`);
}

function guard(f) {
  return () => {
    try {
      f();
    } catch (e) {
      status(`error: ${e.message ?? e}`);
    }
  };
}

async function loadFile(file) {
  const bitmap = await createImageBitmap(file);
  const canvas = new OffscreenCanvas(bitmap.width, bitmap.height);
  const ctx = canvas.getContext("2d");
  ctx.drawImage(bitmap, 0, 0);
  const pixels = ctx.getImageData(0, 0, bitmap.width, bitmap.height).data;
  demo?.free();
  demo = Demo.fromRgba(bitmap.width, bitmap.height, new Uint8Array(pixels.buffer));
  showInput();
}

await init();
const updateEpsilon = () => { $("epsilon-value").textContent = epsilon().toString(); };
$("epsilon").addEventListener("input", updateEpsilon);
$("load").addEventListener("click", guard(() => {
  demo?.free();
  demo = new Demo($("scene").value, Number($("size").value));
  showInput();
}));
$("file").addEventListener("change", (e) => {
  const file = e.target.files[0];
  if (file) loadFile(file).catch((err) => status(`error: ${err.message ?? err}`));
});
$("remesh").addEventListener("click", guard(remesh));
$("integrate").addEventListener("click", guard(() => {
  if (Number.isNaN(demo.compression)) remesh();
  integrate();
}));
updateEpsilon();
$("load").click();
