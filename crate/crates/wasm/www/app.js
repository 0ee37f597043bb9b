import init, { epsilon_curve, bound_comparison, recommend_csv, sample_csv } from "./pkg/vizrec_wasm.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"];
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function fail(where, err) {
  where.innerHTML = '<span class="err"></span>';
  where.firstChild.textContent = String(err.message ?? err);
}

// Line chart with a linear y axis starting at zero and a linear or log10 x axis.
function drawLines(canvas, xs, series, { logX = false, xLabel = "", yMax = null } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 55, R = 10, T = 10, B = 35;
  ctx.clearRect(0, 0, W, H);
  const fx = logX ? Math.log10 : (v) => v;
  const x0 = fx(xs[0]), x1 = fx(xs[xs.length - 1]);
  const top = yMax ?? Math.max(...series.flatMap((s) => s.ys.filter(Number.isFinite)));
  const px = (v) => L + ((fx(v) - x0) / (x1 - x0)) * (W - L - R);
  const py = (v) => H - B - (Math.min(v, top) / top) * (H - T - B);

  ctx.strokeStyle = "#888"; ctx.fillStyle = "#444"; ctx.font = "11px sans-serif";
  ctx.beginPath(); ctx.moveTo(L, T); ctx.lineTo(L, H - B); ctx.lineTo(W - R, H - B); ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const v = (top * i) / 4;
    ctx.fillText(v.toPrecision(2), 4, py(v) + 4);
  }
  const ticks = logX
    ? Array.from({ length: Math.floor(x1) - Math.ceil(x0) + 1 }, (_, i) => 10 ** (Math.ceil(x0) + i))
    : [0, 0.25, 0.5, 0.75, 1].map((f) => xs[0] + f * (xs[xs.length - 1] - xs[0]));
  for (const t of ticks) ctx.fillText(logX ? `1e${Math.round(Math.log10(t))}` : t.toPrecision(2), px(t) - 10, H - B + 14);
  ctx.fillText(xLabel, W / 2, H - 4);

  series.forEach((s, i) => {
    ctx.strokeStyle = s.color ?? COLORS[i % COLORS.length];
    ctx.setLineDash(s.dashed ? [5, 4] : []);
    ctx.beginPath();
    xs.forEach((x, j) => (j ? ctx.lineTo(px(x), py(s.ys[j])) : ctx.moveTo(px(x), py(s.ys[j]))));
    ctx.stroke();
  });
  ctx.setLineDash([]);
}

function legend(el, series) {
  el.innerHTML = series
    .map((s, i) => `<span style="color:${s.color ?? COLORS[i % COLORS.length]}">&#9644; ${s.name}</span>`)
    .join("");
}

function renderCurve() {
  try {
    const points = JSON.parse(epsilon_curve(num("c-n"), num("c-d"), num("c-delta"), $("c-ln").checked, 100));
    const xs = points.map((p) => p.selectivity);
    const series = [
      { name: "candidate radius", ys: points.map((p) => p.epsilon_candidate) },
      { name: "candidate + reference radius", ys: points.map((p) => p.uncertainty) },
    ];
    const yMax = Math.min(1, 4 * points[points.length - 1].uncertainty);
    drawLines($("c-canvas"), xs, series, { xLabel: "selectivity", yMax });
    legend($("c-legend"), series);
  } catch (e) {
    fail($("c-legend"), e);
  }
}

function renderBounds() {
  try {
    const curves = JSON.parse(bound_comparison(num("b-m"), num("b-d"), num("b-delta")));
    const xs = curves.rows.map((r) => r[0]);
    const series = curves.columns.slice(1).map((name, i) => ({
      name: name.replace("chernoff_k", "Chernoff K=").replace("vc_d", "VC d="),
      ys: curves.rows.map((r) => r[i + 1]),
      dashed: name.startsWith("vc"),
    }));
    drawLines($("b-canvas"), xs, series, { logX: true, xLabel: "sample size", yMax: 0.5 });
    legend($("b-legend"), series);
  } catch (e) {
    fail($("b-legend"), e);
  }
}

// Paired bars: reference in grey, candidate in blue, whiskers at each radius.
function drawPmfs(reference, rec) {
  const canvas = $("r-canvas"), ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, B = 25, T = 10;
  ctx.clearRect(0, 0, W, H);
  if (!rec) return;
  const labels = reference.pmf.labels;
  const top = Math.min(1, Math.max(...reference.pmf.probabilities, ...rec.pmf.probabilities) + rec.uncertainty);
  const slot = (W - 40) / labels.length, bw = slot / 3;
  const py = (v) => H - B - (v / top) * (H - T - B);
  const bar = (x, p, eps, color) => {
    ctx.fillStyle = color;
    ctx.fillRect(x, py(p), bw, H - B - py(p));
    ctx.strokeStyle = "#000";
    ctx.beginPath();
    ctx.moveTo(x + bw / 2, py(Math.max(0, p - eps)));
    ctx.lineTo(x + bw / 2, py(Math.min(top, p + eps)));
    ctx.stroke();
  };
  labels.forEach((label, i) => {
    const x = 20 + i * slot + slot / 6;
    bar(x, reference.pmf.probabilities[i], rec.epsilon_reference, "#bbb");
    const j = rec.pmf.labels.indexOf(label);
    bar(x + bw, j < 0 ? 0 : rec.pmf.probabilities[j], rec.epsilon_candidate, "#1f77b4");
    ctx.fillStyle = "#444";
    ctx.fillText(label, x + bw / 2, H - 8);
  });
}

function renderRecommendations() {
  const summary = $("r-summary"), body = $("r-rows-body");
  body.innerHTML = "";
  drawPmfs(null, null);
  try {
    const epsV = $("r-epsv").value === "" ? -1 : num("r-epsv");
    const set = JSON.parse(
      recommend_csv($("r-csv").value, $("r-group").value, $("r-ref").value, num("r-delta"), epsV, $("r-ops").value),
    );
    summary.textContent =
      `${set.recommendations.length} safe recommendations against "${set.reference.description}" ` +
      `(d = ${set.bound.d}, delta = ${set.bound.delta}, min selectivity ${set.gamma_min.toFixed(5)})`;
    const select = (i) => {
      [...body.children].forEach((tr, k) => tr.classList.toggle("sel", k === i));
      drawPmfs(set.reference, set.recommendations[i]);
    };
    set.recommendations.slice(0, 200).forEach((r, i) => {
      const tr = document.createElement("tr");
      tr.innerHTML =
        `<td>${i + 1}</td><td>${r.distance.toFixed(4)}</td><td>${r.uncertainty.toFixed(4)}</td>` +
        `<td>${r.interest.toFixed(4)}</td><td>${r.support}</td><td></td>`;
      tr.lastChild.textContent = r.description;
      tr.onclick = () => select(i);
      body.appendChild(tr);
    });
    if (set.recommendations.length) select(0);
  } catch (e) {
    fail(summary, e);
  }
}

function loadSample(kind) {
  try {
    $("r-csv").value = sample_csv(kind, num("r-rows"), num("r-seed"));
    $("r-group").value = "agg";
  } catch (e) {
    fail($("r-summary"), e);
  }
}

await init();
for (const id of ["c-n", "c-d", "c-delta", "c-ln"]) $(id).addEventListener("input", renderCurve);
for (const id of ["b-m", "b-d", "b-delta"]) $(id).addEventListener("input", renderBounds);
$("r-planted").onclick = () => loadSample("planted");
$("r-uniform").onclick = () => loadSample("uniform");
$("r-run").onclick = renderRecommendations;
renderCurve();
renderBounds();
loadSample("planted");
