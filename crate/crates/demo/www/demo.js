// Expects `wasm-pack build --target web --out-dir www/pkg` to have been run.
import init, { compare, rate_scan, gamma_table } from "./pkg/corrected_poisson_demo.js";

const $ = (id) => document.getElementById(id);

function fmt(x) {
  return Math.abs(x) < 1e-3 && x !== 0 ? x.toExponential(4) : x.toFixed(6);
}

function draw(canvas, exact, approx) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 20;
  ctx.clearRect(0, 0, w, h);
  const hi = Math.max(...exact, ...approx);
  const lo = Math.min(0, ...approx);
  const y = (v) => pad + (h - 2 * pad) * (hi - v) / (hi - lo);
  const step = (w - 2 * pad) / exact.length;
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, y(0));
  ctx.lineTo(w - pad, y(0));
  ctx.stroke();
  exact.forEach((v, k) => {
    ctx.fillStyle = "#4a7bd0";
    ctx.fillRect(pad + k * step, Math.min(y(v), y(0)), step * 0.45, Math.abs(y(v) - y(0)));
    ctx.fillStyle = approx[k] < 0 ? "#d04a4a" : "#e0a030";
    ctx.fillRect(pad + k * step + step * 0.45, Math.min(y(approx[k]), y(0)), step * 0.45, Math.abs(y(approx[k]) - y(0)));
  });
}

function runCompare() {
  try {
    const r = JSON.parse(compare(+$("cmp-n").value, +$("cmp-lambda").value, $("cmp-order").value));
    draw($("cmp-canvas"), r.exact, r.approx);
    $("cmp-out").textContent =
      `blue: Bin(${r.n}, ${r.lambda}/${r.n})   orange/red: order ${r.order} (red bars are negative)\n` +
      `d_tv = ${fmt(r.tv)}   d_2 = ${fmt(r.d2)} (${r.d2_method})`;
  } catch (e) {
    $("cmp-out").textContent = String(e);
  }
}

function runScan() {
  try {
    const fits = JSON.parse(rate_scan(+$("scan-lambda").value, $("scan-orders").value, $("scan-grid").value));
    $("scan-out").textContent = fits
      .map((f) => `order ${f.order}: slope ${f.slope.toFixed(3)}, r² ${f.r_squared.toFixed(5)}\n  d2 = ${f.distances.map(fmt).join(", ")}`)
      .join("\n");
  } catch (e) {
    $("scan-out").textContent = String(e);
  }
}

function runGamma() {
  try {
    const t = JSON.parse(gamma_table(+$("gamma-nu").value));
    const bad = new Set(t.mismatches.map((m) => `${m.j}:${m.power}`));
    let html = "<table><tr><th>j</th><th>terms (power of 1/n : coefficient)</th></tr>";
    for (const [j, terms] of Object.entries(t.gamma)) {
      const cells = terms.map(([p, c]) => {
        const cls = bad.has(`${j}:${p}`) ? ' class="typo"' : "";
        return `<span${cls}>n<sup>-${p}</sup>: ${c}</span>`;
      });
      html += `<tr><td>${j}</td><td style="text-align:left">${cells.join(", ")}</td></tr>`;
    }
    html += "</table>";
    for (const m of t.mismatches) {
      html += `<p class="typo">j = ${m.j}, n<sup>-${m.power}</sup>: published ${m.published}, solved ${m.computed}</p>`;
    }
    $("gamma-out").innerHTML = html;
  } catch (e) {
    $("gamma-out").textContent = String(e);
  }
}

await init();
$("cmp-run").onclick = runCompare;
$("scan-run").onclick = runScan;
$("gamma-run").onclick = runGamma;
runCompare();
