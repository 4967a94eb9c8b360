import init, { dilation_quotient, field_modulus, separation } from "./pkg/parext_wasm.js";

const X = 20;
const POINTS = 800;

function values(fieldset) {
  const out = {};
  for (const input of fieldset.querySelectorAll("input")) out[input.name] = Number(input.value);
  return out;
}

function show(fieldset, text) {
  fieldset.querySelector("output").textContent = text;
}

function plot(canvas, ys) {
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const top = Math.max(...ys, 1e-12);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(width / 2, 0);
  ctx.lineTo(width / 2, height);
  ctx.stroke();
  ctx.strokeStyle = "#1f5fa8";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ys.forEach((y, i) => {
    const px = (i + 0.5) * width / ys.length;
    const py = height - 8 - (height - 16) * y / top;
    if (i === 0) ctx.moveTo(px, py); else ctx.lineTo(px, py);
  });
  ctx.stroke();
}

function drawField() {
  const fs = document.getElementById("field");
  const v = values(fs);
  try {
    const ys = field_modulus(v.width, v.center, v.tau0, v.xi0, v.t, X, POINTS);
    plot(fs.querySelector("canvas"), ys);
    show(fs, `t = ${v.t.toFixed(2)}, x in [-${X}, ${X}], peak ${Math.max(...ys).toFixed(4)}`);
  } catch (e) {
    show(fs, String(e));
  }
}

function computeQuotient() {
  const fs = document.getElementById("quotient");
  const v = values(fs);
  show(fs, "computing...");
  setTimeout(() => {
    try {
      const [q, err, target] = dilation_quotient(v.tau0, v.xi0, v.lambda);
      show(fs, `quotient  ${q.toFixed(6)} (+${err.toExponential(2)} certified)\n` +
               `bound     ${target.toFixed(6)}\ngap       ${(100 * (target - q) / target).toFixed(3)} %`);
    } catch (e) {
      show(fs, String(e));
    }
  }, 0);
}

function computeSeparation() {
  const fs = document.getElementById("separation");
  const v = values(fs);
  try {
    const [c, offset, degenerate] = separation(v.tau0, v.xi0, v.tau_n, v.xi_n, v.s, v.r);
    show(fs, degenerate ? "paraboloids coincide" :
      `c estimate      ${c.toFixed(6)}\nzero set at ξ = ${Number.isNaN(offset) ? "none" : offset.toFixed(6)}`);
  } catch (e) {
    show(fs, String(e));
  }
}

await init();
document.getElementById("field").addEventListener("input", drawField);
document.querySelector("#quotient button").addEventListener("click", computeQuotient);
document.getElementById("separation").addEventListener("input", computeSeparation);
drawField();
computeSeparation();
