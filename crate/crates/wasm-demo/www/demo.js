import init, { threshold_curve, recover_trajectory, screening, version } from "./pkg/twf_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function frame(canvas, xr, yr, opts = {}) {
  const ctx = canvas.getContext("2d");
  const pad = { l: 50, r: 10, t: 10, b: 30 };
  const w = canvas.width - pad.l - pad.r;
  const h = canvas.height - pad.t - pad.b;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad.l, pad.t, w, h);
  const sx = (x) => pad.l + ((x - xr[0]) / (xr[1] - xr[0])) * w;
  const sy = opts.log
    ? (y) => pad.t + h - ((Math.log10(y) - Math.log10(yr[0])) / (Math.log10(yr[1]) - Math.log10(yr[0]))) * h
    : (y) => pad.t + h - ((y - yr[0]) / (yr[1] - yr[0])) * h;
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.fillText(String(+xr[0].toPrecision(3)), pad.l, canvas.height - 10);
  ctx.fillText(String(+xr[1].toPrecision(3)), pad.l + w - 30, canvas.height - 10);
  ctx.fillText(String(+yr[1].toPrecision(3)), 2, pad.t + 10);
  ctx.fillText(String(+yr[0].toPrecision(3)), 2, pad.t + h);
  return { ctx, sx, sy };
}

function line(ctx, xs, ys, sx, sy, color) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  let pen = false;
  for (let i = 0; i < xs.length; i++) {
    if (!Number.isFinite(ys[i])) { pen = false; continue; }
    const [px, py] = [sx(xs[i]), sy(ys[i])];
    pen ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
    pen = true;
  }
  ctx.stroke();
}

function drawThreshold() {
  const tau = num("th-tau");
  $("th-tau-val").textContent = tau.toFixed(2);
  const n = 401, xmax = 3;
  const xs = Array.from({ length: n }, (_, i) => -xmax + (2 * xmax * i) / (n - 1));
  const { ctx, sx, sy } = frame($("th-canvas"), [-xmax, xmax], [-xmax, xmax]);
  line(ctx, xs, xs, sx, sy, "#ddd");
  line(ctx, xs, Array.from(threshold_curve("hard", tau, xmax, n)), sx, sy, "#2471a3");
  line(ctx, xs, Array.from(threshold_curve("soft", tau, xmax, n)), sx, sy, "#c0392b");
  ctx.fillStyle = "#c0392b"; ctx.fillText("soft", 60, 25);
  ctx.fillStyle = "#2471a3"; ctx.fillText("hard", 60, 40);
}

function runScreening() {
  try {
    const r = JSON.parse(screening(num("sc-p"), num("sc-m"), num("sc-k"), num("sc-nsr"), num("sc-alpha"), num("sc-seed")));
    const p = r.marginals.length;
    const ymax = Math.max(...r.marginals, r.cutoff) * 1.05;
    const { ctx, sx, sy } = frame($("sc-canvas"), [0, p - 1], [0, ymax]);
    const truth = new Set(r.support);
    const picked = new Set(r.selected);
    r.marginals.forEach((v, l) => {
      ctx.fillStyle = truth.has(l) ? "#c0392b" : "#888";
      ctx.fillRect(sx(l) - 1, sy(v) - 1, 3, 3);
      if (picked.has(l)) { ctx.strokeStyle = "#27ae60"; ctx.strokeRect(sx(l) - 3, sy(v) - 3, 7, 7); }
    });
    line(ctx, [0, p - 1], [r.cutoff, r.cutoff], sx, sy, "#27ae60");
    const hits = r.selected.filter((l) => truth.has(l)).length;
    $("sc-status").textContent =
      `selected ${r.selected.length} coordinates, ${hits} of ${r.support.length} true; red = true support, green line = cutoff`;
  } catch (e) {
    $("sc-status").textContent = String(e);
  }
}

function runRecovery() {
  $("rc-status").textContent = "running...";
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const errs = Array.from(recover_trajectory(num("rc-p"), num("rc-m"), num("rc-k"), num("rc-nsr"),
        num("rc-beta"), num("rc-mu"), num("rc-iters"), $("rc-op").value, num("rc-seed")));
      const floor = Math.max(Math.min(...errs), 1e-16);
      const { ctx, sx, sy } = frame($("rc-canvas"), [0, errs.length - 1], [floor, Math.max(...errs)], { log: true });
      line(ctx, errs.map((_, i) => i), errs, sx, sy, "#c0392b");
      $("rc-status").textContent =
        `final relative error ${errs[errs.length - 1].toExponential(3)} (log scale, ${(performance.now() - t0).toFixed(0)} ms)`;
    } catch (e) {
      $("rc-status").textContent = String(e);
    }
  }, 10);
}

await init();
document.title += ` ${version()}`;
$("th-tau").addEventListener("input", drawThreshold);
$("sc-run").addEventListener("click", runScreening);
$("rc-run").addEventListener("click", runRecovery);
drawThreshold();
runScreening();
