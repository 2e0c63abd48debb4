import init, { fidelityCurve, executionTimes, simulateModes } from "./pkg/qcloud_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c"];

function num(form, name) {
  return Number(form.elements[name].value);
}

function call(fn, request) {
  const result = JSON.parse(fn(JSON.stringify(request)));
  if (result && result.error) throw new Error(result.error);
  return result;
}

function table(headers, rows) {
  const head = "<tr>" + headers.map((h) => `<th>${h}</th>`).join("") + "</tr>";
  const body = rows.map((r) => "<tr>" + r.map((c) => `<td>${c}</td>`).join("") + "</tr>").join("");
  return `<table>${head}${body}</table>`;
}

// series: [{ points: [[x, y], ...], color }]
function lineChart(series, { width = 560, height = 220, xLabel = "", yLabel = "" } = {}) {
  const pad = 40;
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [0, Math.max(...ys, 1e-9)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (width - 2 * pad);
  const sy = (y) => height - pad + -((y - y0) / (y1 - y0)) * (height - 2 * pad);
  const lines = series
    .map((s) => {
      const d = s.points.map((p, i) => `${i ? "L" : "M"}${sx(p[0]).toFixed(1)},${sy(p[1]).toFixed(1)}`).join("");
      const dots = s.points.map((p) => `<circle cx="${sx(p[0])}" cy="${sy(p[1])}" r="3" fill="${s.color}"/>`).join("");
      return `<path d="${d}" fill="none" stroke="${s.color}" stroke-width="2"/>${dots}`;
    })
    .join("");
  return `<svg width="${width}" height="${height}">
    <line x1="${pad}" y1="${height - pad}" x2="${width - pad}" y2="${height - pad}" stroke="#999"/>
    <line x1="${pad}" y1="${pad}" x2="${pad}" y2="${height - pad}" stroke="#999"/>
    <text x="${width / 2}" y="${height - 8}" text-anchor="middle">${xLabel}</text>
    <text x="4" y="${pad - 10}">${yLabel} (max ${y1.toFixed(3)})</text>
    ${lines}</svg>`;
}

function bars(series, binWidth, { width = 560, height = 200 } = {}) {
  const pad = 30;
  const n = series[0].counts.length;
  let lo = n, hi = 0;
  for (const s of series) s.counts.forEach((c, i) => { if (c) { lo = Math.min(lo, i); hi = Math.max(hi, i); } });
  const span = Math.max(hi - lo + 1, 1);
  const top = Math.max(...series.flatMap((s) => s.counts), 1);
  const w = (width - 2 * pad) / span / series.length;
  let rects = "";
  series.forEach((s, j) => {
    for (let i = lo; i <= hi; i++) {
      const h = (s.counts[i] / top) * (height - 2 * pad);
      const x = pad + ((i - lo) * series.length + j) * w;
      rects += `<rect x="${x}" y="${height - pad - h}" width="${w}" height="${h}" fill="${s.color}"/>`;
    }
  });
  const legend = series.map((s, j) => `<text x="${width - 120}" y="${16 + 14 * j}" fill="${s.color}">${s.label}</text>`).join("");
  return `<svg width="${width}" height="${height}">${rects}${legend}
    <text x="${pad}" y="${height - 8}">${(lo * binWidth).toFixed(2)}</text>
    <text x="${width - pad}" y="${height - 8}" text-anchor="end">${((hi + 1) * binWidth).toFixed(2)}</text></svg>`;
}

function wire(id, run) {
  const section = document.getElementById(id);
  const form = section.querySelector("form");
  const out = section.querySelector(".out");
  const go = (ev) => {
    if (ev) ev.preventDefault();
    try {
      out.innerHTML = run(form);
    } catch (e) {
      out.innerHTML = `<p class="error">${e.message}</p>`;
    }
  };
  form.addEventListener("submit", go);
  go();
}

await init();

wire("curve", (f) => {
  const points = call(fidelityCurve, {
    readout_error: num(f, "readout_error"),
    single_qubit_error: num(f, "single_qubit_error"),
    two_qubit_error: num(f, "two_qubit_error"),
    num_qubits: num(f, "num_qubits"),
    depth: num(f, "depth"),
    two_qubit_gates: num(f, "two_qubit_gates"),
    phi: num(f, "phi"),
    max_devices: num(f, "max_devices"),
  });
  const chart = lineChart(
    [
      { points: points.map((p) => [p.k, p.mean_device_fidelity]), color: COLORS[0] },
      { points: points.map((p) => [p.k, p.fidelity]), color: COLORS[1] },
    ],
    { xLabel: "devices k", yLabel: "blue: mean device fidelity, red: with penalty" },
  );
  const rows = points.map((p) => [p.k, p.mean_device_fidelity.toFixed(4), p.fidelity.toFixed(4), p.comm_time.toFixed(2)]);
  return chart + table(["k", "mean device F", "job F", "comm (s)"], rows);
});

wire("time", (f) => {
  const clops = f.elements.clops.value.split(",").map((s) => Number(s.trim())).filter((x) => !Number.isNaN(x));
  const rows = call(executionTimes, { shots: num(f, "shots"), quantum_volume: num(f, "quantum_volume"), clops });
  return table(["CLOPS", "seconds", "minutes"], rows.map((r) => [r.clops, r.seconds.toFixed(1), (r.seconds / 60).toFixed(2)]));
});

wire("sim", (f) => {
  const res = call(simulateModes, {
    jobs: num(f, "jobs"),
    qubit_range: [num(f, "q_lo"), num(f, "q_hi")],
    seed: num(f, "seed"),
    phi: num(f, "phi"),
    lambda_per_qubit: num(f, "lambda_per_qubit"),
  });
  const rows = res.modes.map(({ summary: s }) => [
    s.label,
    s.jobs,
    s.t_sim.toFixed(0),
    `${s.mean_fidelity.toFixed(4)} ± ${s.std_fidelity.toFixed(4)}`,
    s.total_comm.toFixed(1),
  ]);
  const series = res.modes.map((m, j) => ({ label: m.summary.label, counts: m.histogram, color: COLORS[j] }));
  return table(["mode", "jobs", "T_sim (s)", "μF ± σF", "T_comm (s)"], rows) + bars(series, res.bin_width);
});
