import init, { sample_instance, price, plot, hedge } from "./pkg/gamehedge_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = { value: "#1f5fbf", rebalanced: "#d9822b", continuation: "#3a9a4a" };

function guard(target, fn) {
  try {
    target.classList.remove("err");
    fn();
  } catch (e) {
    target.classList.add("err");
    target.textContent = String(e.message ?? e);
  }
}

function loadSample() {
  guard($("prices"), () => {
    const text = sample_instance($("sample").value, Number($("seed").value) >>> 0);
    $("instance").value = JSON.stringify(JSON.parse(text), null, 1);
    runPrice();
  });
}

function runPrice() {
  guard($("prices"), () => {
    const view = JSON.parse(price($("instance").value, Number($("decimals").value)));
    $("prices").textContent =
      `V^a = ${view.ask.exact} (${view.ask.approx}), V^b = ${view.bid.exact} (${view.bid.approx})`;
    const select = $("plot-node");
    const keep = select.value;
    select.replaceChildren(...view.nodes.map((n) => new Option(`${n.id} (t=${n.date}, ${n.bid}/${n.ask})`, n.id)));
    if (view.nodes.some((n) => n.id === keep)) select.value = keep;
    $("cash").placeholder = $("hedge-side").value === "seller" ? view.ask.exact : `-${view.bid.exact}`;
  });
}

function draw(view) {
  const canvas = $("canvas");
  const g = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 40;
  g.clearRect(0, 0, W, H);

  const xs = view.curves[0].points.map((p) => p[0]);
  const ys = view.curves.flatMap((c) => c.points.map((p) => p[1]).filter((v) => v !== null));
  if (ys.length === 0) {
    g.fillText("-inf on the whole range", pad, H / 2);
    return;
  }
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (W - 2 * pad);
  const sy = (y) => H - pad - ((y - y0) / (y1 - y0)) * (H - 2 * pad);

  g.strokeStyle = "#999";
  g.fillStyle = "#555";
  g.beginPath();
  if (y0 <= 0 && 0 <= y1) { g.moveTo(pad, sy(0)); g.lineTo(W - pad, sy(0)); }
  if (x0 <= 0 && 0 <= x1) { g.moveTo(sx(0), pad); g.lineTo(sx(0), H - pad); }
  g.stroke();
  g.fillText(x0.toString(), pad, H - pad / 3);
  g.fillText(x1.toString(), W - pad - 10, H - pad / 3);
  g.fillText(y1.toPrecision(4), 2, pad);
  g.fillText(y0.toPrecision(4), 2, H - pad);

  for (const c of view.curves) {
    g.strokeStyle = COLORS[c.name];
    g.lineWidth = c.name === "value" ? 2.5 : 1.5;
    g.beginPath();
    let pen = false;
    for (const [x, y] of c.points) {
      if (y === null) { pen = false; continue; }
      pen ? g.lineTo(sx(x), sy(y)) : g.moveTo(sx(x), sy(y));
      pen = true;
    }
    g.stroke();
    g.fillStyle = COLORS[c.name];
    for (const b of c.breakpoints) {
      if (b >= x0 && b <= x1) g.fillRect(sx(b) - 1.5, H - pad - 4, 3, 8);
    }
  }
  $("legend").replaceChildren(...view.curves.map((c) => {
    const s = document.createElement("span");
    s.style.color = COLORS[c.name];
    s.textContent = `${c.name} (breakpoints: ${c.breakpoints.map((b) => +b.toFixed(4)).join(", ") || "none"})`;
    return s;
  }));
}

function runPlot() {
  guard($("legend"), () => {
    const view = JSON.parse(plot($("instance").value, $("plot-side").value, $("plot-node").value,
      Number($("lo").value), Number($("hi").value), 241));
    draw(view);
  });
}

function runHedge() {
  guard($("verdict"), () => {
    const cash = $("cash").value.trim() || $("cash").placeholder;
    const view = JSON.parse(hedge($("instance").value, $("hedge-side").value, cash, $("shares").value || "0"));
    $("verdict").textContent = view.passed
      ? `PASS: superhedges from budget ${view.strategy.initial_budget}, stopping region {${view.strategy.stop_nodes.join(",")}}`
      : `FAIL: ${view.violations} violation(s)`;
    $("strategy").textContent = JSON.stringify(view.strategy, null, 1);
  });
}

await init();
$("load").onclick = loadSample;
$("price").onclick = runPrice;
$("plot").onclick = runPlot;
$("hedge").onclick = runHedge;
$("hedge-side").onchange = runPrice;
loadSample();
runPlot();
