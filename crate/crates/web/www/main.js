// Build the bindings first:
//   cargo build -p stiffopt-web --release --target wasm32-unknown-unknown
//   wasm-bindgen --target web --out-dir crates/web/www/pkg \
//       target/wasm32-unknown-unknown/release/stiffopt_web.wasm
import init, { optimizeReport, elementMatrix, emitKernel } from "./pkg/stiffopt_web.js";

const $ = (id) => document.getElementById(id);

function target() {
  return { form: $("form").value, degree: Number($("degree").value), dim: Number($("dim").value) };
}

function guard(out, f) {
  out.classList.remove("err");
  try {
    f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
  }
}

function showMatrix(el, { nbasis, maps, matrix }) {
  const rows = [];
  for (let i = 0; i < nbasis; i++) {
    const cells = matrix.slice(i * nbasis, (i + 1) * nbasis).map((v) => `<td>${v.toFixed(4)}</td>`);
    rows.push(`<tr>${cells.join("")}</tr>`);
  }
  el.innerHTML = `<p>${nbasis}×${nbasis}, generated kernel costs ${maps} MAPs</p><table class="k">${rows.join("")}</table>`;
}

await init();

$("run-report").onclick = () =>
  guard($("report"), () => {
    const t = target();
    $("report").textContent = JSON.stringify(JSON.parse(optimizeReport(t.form, t.degree, t.dim)), null, 2);
  });

$("run-matrix").onclick = () =>
  guard($("matrix"), () => {
    const coords = $("vertices").value.split(/[\s,]+/).filter(Boolean).map(Number);
    showMatrix($("matrix"), JSON.parse(elementMatrix(target().degree, new Float64Array(coords))));
  });

$("run-source").onclick = () =>
  guard($("source"), () => {
    const t = target();
    $("source").textContent = emitKernel(t.form, t.degree, t.dim, $("backend").value);
  });
