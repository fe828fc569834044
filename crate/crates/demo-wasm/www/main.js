// Built with: wasm-pack build crates/demo-wasm --target web --out-dir www/pkg
import init, { tile_size, render_tile, lr_curve, train_synthetic } from "./pkg/roadgnn_demo.js";

const $ = (id) => document.getElementById(id);

function showError(target, err) {
  target.textContent = String(err.message ?? err);
  target.classList.add("error");
}

function drawTile() {
  const bearing = Number($("bearing").value);
  if ($("lock").checked) $("heading").value = bearing;
  const heading = Number($("heading").value);
  $("bearing-value").textContent = bearing;
  $("heading-value").textContent = heading;
  const size = tile_size();
  const canvas = $("tile");
  canvas.width = size;
  canvas.height = size;
  const pixels = render_tile(bearing, heading);
  const image = new ImageData(new Uint8ClampedArray(pixels), size, size);
  canvas.getContext("2d").putImageData(image, 0, 0);
}

// Line chart of one or more series sharing the x axis.
function plot(canvas, series, yMax) {
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  const pad = 30;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, 10, width - pad - 10, height - pad - 10);
  ctx.fillStyle = "#333";
  ctx.fillText(yMax.toPrecision(2), 2, 16);
  ctx.fillText("0", 2, height - pad);
  const n = Math.max(...series.map((s) => s.values.length));
  const x = (i) => pad + ((width - pad - 10) * i) / Math.max(n - 1, 1);
  const y = (v) => height - pad - ((height - pad - 20) * v) / yMax;
  series.forEach(({ values, color, label }, k) => {
    ctx.strokeStyle = color;
    ctx.beginPath();
    values.forEach((v, i) => (i === 0 ? ctx.moveTo(x(i), y(v)) : ctx.lineTo(x(i), y(v))));
    ctx.stroke();
    ctx.fillStyle = color;
    ctx.fillText(label, width - 160, 24 + 14 * k);
  });
  ctx.fillStyle = "#333";
  ctx.fillText(`epochs 0..${n - 1}`, pad, height - 8);
}

function drawSchedule() {
  const epochs = Math.min(Math.max(Number($("lr-epochs").value) || 1, 1), 100);
  const values = Array.from(lr_curve(Number($("lr").value), Number($("gamma").value), epochs));
  plot($("lr-plot"), [{ values, color: "#1565c0", label: "learning rate" }], values[0]);
}

function runTraining() {
  const out = $("train-result");
  out.classList.remove("error");
  out.textContent = "training...";
  const blocks = [...document.querySelectorAll("input[name=block]:checked")].map((b) => b.value).join(",");
  // let the status text paint before the blocking run
  setTimeout(() => {
    try {
      const run = JSON.parse(
        train_synthetic(
          Number($("nodes").value),
          Number($("epochs").value),
          Number($("hidden").value),
          $("variant").value,
          blocks,
          BigInt($("seed").value || 0),
        ),
      );
      const loss = run.epochs.map((e) => e.train_loss);
      const f1 = run.epochs.map((e) => e.val_micro_f1);
      plot(
        $("train-plot"),
        [
          { values: loss, color: "#c62828", label: "train loss" },
          { values: f1, color: "#2e7d32", label: "val micro-F1" },
        ],
        Math.max(1, ...loss),
      );
      const fmt = (v) => (v == null ? "n/a" : v.toFixed(4));
      out.textContent =
        `${run.nodes} roads, ${run.feature_width} input features\n` +
        `best epoch ${run.best_epoch}: val micro-F1 ${fmt(run.val_micro_f1)}, test micro-F1 ${fmt(run.test_micro_f1)}`;
    } catch (err) {
      showError(out, err);
    }
  }, 20);
}

async function main() {
  try {
    await init();
  } catch (err) {
    showError($("status"), err);
    return;
  }
  $("status").textContent = "Ready.";
  for (const id of ["bearing", "heading", "lock"]) $(id).addEventListener("input", drawTile);
  for (const id of ["lr", "gamma", "lr-epochs"]) $(id).addEventListener("input", drawSchedule);
  $("train").addEventListener("click", runTraining);
  drawTile();
  drawSchedule();
}

main();
