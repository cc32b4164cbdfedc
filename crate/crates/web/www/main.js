import init, { compare_rankings, score_rule, synth_baskets, cluster_measures } from "./pkg/rulerank_web.js";

const $ = (id) => document.getElementById(id);

function guarded(errId, f) {
  return () => {
    $(errId).textContent = "";
    try { f(); } catch (e) { $(errId).textContent = e.message ?? String(e); }
  };
}

function fillTable(table, header, rows) {
  table.replaceChildren();
  const head = table.insertRow();
  for (const h of header) { const th = document.createElement("th"); th.textContent = h; head.appendChild(th); }
  for (const r of rows) {
    const tr = table.insertRow();
    for (const c of r) tr.insertCell().textContent = c;
  }
}

const fmt = (v) => typeof v === "number" ? v.toPrecision(6) : v;

function compareRankings() {
  const out = JSON.parse(compare_rankings($("rk-a").value, $("rk-b").value, Number($("rk-k").value)));
  fillTable($("rk-out"), ["coefficient", "value"], [
    ["Spearman", fmt(out.spearman)],
    ["Kendall", fmt(out.kendall)],
    [`Overlap@${out.k}`, fmt(out.overlap)],
    ["NDCC", fmt(out.ndcc)],
  ]);
}

function scoreRule() {
  const n = (id) => BigInt(Math.max(0, Math.floor(Number($(id).value))));
  const rows = JSON.parse(score_rule(n("sc-a"), n("sc-b"), n("sc-ab"), n("sc-n")));
  fillTable($("sc-out"), ["measure", "family", "value"], rows.map((r) => [r.measure, r.group, fmt(r.value)]));
}

// Diverging colour: red for -1, white for 0, blue for 1.
function colour(v, lo, hi) {
  const t = Math.max(-1, Math.min(1, (2 * (v - lo)) / (hi - lo) - 1));
  const a = Math.round(255 * (1 - Math.abs(t)));
  return t >= 0 ? `rgb(${a},${a},255)` : `rgb(255,${a},${a})`;
}

function drawHeatmap(result) {
  const { measures, values, method } = result.matrix;
  const lo = method === "kendall" || method === "spearman" || method === "ndcc" ? -1 : 0;
  const order = result.leaf_order.map((name) => measures.indexOf(name));
  const canvas = $("heat");
  const ctx = canvas.getContext("2d");
  const n = order.length;
  const cell = Math.floor(canvas.width / n);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  order.forEach((i, r) => order.forEach((j, c) => {
    ctx.fillStyle = colour(values[i][j], lo, 1);
    ctx.fillRect(c * cell, r * cell, cell, cell);
  }));
  canvas.onmousemove = (ev) => {
    const r = Math.floor(ev.offsetY / cell), c = Math.floor(ev.offsetX / cell);
    if (r < n && c < n) canvas.title = `${measures[order[r]]} / ${measures[order[c]]}: ${fmt(values[order[r]][order[c]])}`;
  };
}

function cluster() {
  const result = JSON.parse(cluster_measures(
    $("cl-baskets").value, $("cl-targets").value, Number($("cl-eps").value), $("cl-method").value));
  $("cl-info").textContent =
    `${result.transactions} baskets, ${result.rules} rules, targets ${result.targets.join(", ")}`;
  drawHeatmap(result);
  fillTable($("cl-groups"), ["group", "representative", "top recall", "top confidence", "members"],
    result.groups.map((g) => [g.label, g.representative ?? "", fmt(g.mean_top_recall ?? ""),
      fmt(g.mean_top_confidence ?? ""), g.members.join(", ")]));
}

await init();
$("rk-go").onclick = guarded("rk-err", compareRankings);
$("sc-go").onclick = guarded("sc-err", scoreRule);
$("cl-go").onclick = guarded("cl-err", cluster);
$("cl-synth").onclick = guarded("cl-err", () => {
  $("cl-baskets").value = synth_baskets(BigInt(Date.now() % 1000), 3000);
  $("cl-targets").value = "";
  $("cl-eps").value = 10;
});
compareRankings();
scoreRule();
guarded("cl-err", cluster)();
