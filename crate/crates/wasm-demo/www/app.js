import init, { er_sample, analyze_pajek, verdict, presets } from "./pkg/chaingraph_wasm.js";

const $ = (id) => document.getElementById(id);

function fmt(x) {
  if (x === null || x === undefined) return "n/a";
  if (typeof x === "string") return x;
  if (Number.isInteger(x)) return String(x);
  return Math.abs(x) < 1e-3 && x !== 0 ? x.toExponential(3) : x.toFixed(4);
}

function table(rows) {
  return "<table>" + rows.map(([k, v]) => `<tr><td>${k}</td><td>${fmt(v)}</td></tr>`).join("") + "</table>";
}

function reportRows(r) {
  return [
    ["nodes", r.node_count],
    ["edges", r.edge_count],
    ["average degree", r.avg_degree],
    ["components", r.components.count],
    ["main component size", r.components.main_component_size],
    ["graph ACC", r.graph_acc],
    ["main component ACC", r.main_component_acc],
    [r.aspl_is_estimate ? "main component ASPL (sampled)" : "main component ASPL", r.main_component_aspl],
    ["diameter", r.main_component_max_eccentricity],
  ];
}

function drawHistogram(canvas, pairs) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  if (!pairs.length) return;
  const maxDeg = pairs[pairs.length - 1][0];
  const maxCount = Math.max(...pairs.map((p) => p[1]));
  const pad = 24;
  const bar = (w - 2 * pad) / (maxDeg + 1);
  ctx.fillStyle = "#4a7fb5";
  for (const [d, c] of pairs) {
    const bh = ((h - 2 * pad) * c) / maxCount;
    ctx.fillRect(pad + d * bar, h - pad - bh, Math.max(bar - 1, 1), bh);
  }
  ctx.fillStyle = "#222";
  ctx.font = "12px sans-serif";
  ctx.fillText("degree 0", pad, h - 6);
  ctx.fillText(`degree ${maxDeg}`, w - pad - 70, h - 6);
  ctx.fillText(`max count ${maxCount}`, pad, 14);
}

function showError(el, e) {
  el.innerHTML = `<p class="error">${e.message ?? e}</p>`;
}

function runEr() {
  const out = $("er-out");
  try {
    const v = JSON.parse(er_sample(+$("er-n").value, +$("er-m").value, BigInt($("er-seed").value)));
    out.innerHTML = table(reportRows(v.report));
    drawHistogram($("er-hist"), v.report.degrees.total_histogram);
  } catch (e) {
    showError(out, e);
  }
}

function runPajek() {
  const out = $("pj-out");
  try {
    const v = JSON.parse(analyze_pajek($("pj-text").value, +$("pj-samples").value, BigInt($("pj-seed").value)));
    let html = table(reportRows(v.subject));
    if (v.error) {
      html += `<p class="error">no verdict: ${v.error}</p>`;
    } else {
      const vd = v.verdict;
      html += table([
        ["ACC ratio", vd.acc_ratio],
        ["ASPL ratio", vd.aspl_ratio],
        ["baseline ACC mean", vd.baseline_acc.mean],
        ["baseline ASPL mean", vd.baseline_aspl.mean],
      ]);
      html += verdictLine(vd.is_small_world);
    }
    out.innerHTML = html;
    drawHistogram($("pj-hist"), v.subject.degrees.total_histogram);
  } catch (e) {
    showError(out, e);
  }
}

function verdictLine(yes) {
  return yes ? '<p class="yes">small-world</p>' : '<p class="no">not small-world</p>';
}

const verdictFields = ["v-sacc", "v-saspl", "v-bacc", "v-baspl", "v-tacc", "v-taspl"];

function runVerdict() {
  const out = $("v-out");
  try {
    const vd = JSON.parse(verdict(...verdictFields.map((id) => +$(id).value)));
    out.innerHTML = table([["ACC ratio", vd.acc_ratio], ["ASPL ratio", vd.aspl_ratio]]) + verdictLine(vd.is_small_world);
  } catch (e) {
    showError(out, e);
  }
}

function loadPreset(p) {
  $("v-sacc").value = p.subject_acc;
  $("v-saspl").value = p.subject_aspl;
  $("v-bacc").value = p.baseline_acc;
  $("v-baspl").value = p.baseline_aspl;
  runVerdict();
}

await init();

$("er-run").addEventListener("click", runEr);
$("pj-run").addEventListener("click", runPajek);
const list = JSON.parse(presets());
const select = $("v-preset");
list.forEach((p, i) => select.add(new Option(p.name, i)));
select.addEventListener("change", () => loadPreset(list[+select.value]));
verdictFields.forEach((id) => $(id).addEventListener("input", runVerdict));
loadPreset(list[0]);
runEr();
