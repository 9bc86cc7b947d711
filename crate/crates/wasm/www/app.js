import init, { agreement, effect_sizes, strategies, triage } from "./pkg/fptriage_wasm.js";

const $ = (id) => document.getElementById(id);

function show(target, fn) {
  try {
    const result = JSON.parse(fn());
    $(target).textContent = JSON.stringify(result, null, 2);
    $(target).classList.remove("error");
    return result;
  } catch (err) {
    $(target).textContent = String(err.message ?? err);
    $(target).classList.add("error");
    return null;
  }
}

await init();
$("status").textContent = "Ready.";

for (const name of JSON.parse(strategies())) {
  const option = document.createElement("option");
  option.value = option.textContent = name;
  $("tr-strategy").append(option);
}

$("es-run").onclick = () => show("es-out", () => effect_sizes($("es-a").value, $("es-b").value));
$("ka-run").onclick = () => show("ka-out", () => agreement($("ka-a").value, $("ka-b").value));
$("tr-run").onclick = () => {
  const result = show("tr-out", () => {
    const r = JSON.parse(triage($("tr-title").value, $("tr-desc").value, $("tr-strategy").value));
    $("tr-prompt").textContent = r.prompt;
    delete r.prompt;
    return JSON.stringify(r);
  });
  if (!result) $("tr-prompt").textContent = "";
};
