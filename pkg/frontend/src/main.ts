import { ApiClient, ApiError } from "./api";
import { packetDiff } from "./diff";
import { FEATURES } from "./features";
import { emptyForm, formToState, validateForm } from "./form";
import { renderDiff, renderPacket } from "./render";
import type { DecisionPacket } from "./schema";

/** Browser entry point; exported pieces are unit-tested without a DOM. */
export function mountConsole(rootEl: HTMLElement, client: ApiClient): void {
  const form = emptyForm();
  let basePacket: DecisionPacket | null = null;
  let requestCounter = 0;

  const formEl = document.createElement("form");
  for (const f of FEATURES) {
    const label = document.createElement("label");
    label.textContent = `${f.name} (${f.unit})`;
    const input = document.createElement("input");
    input.name = f.name;
    input.addEventListener("input", () => {
      form.values[f.name] = input.value;
    });
    label.appendChild(input);
    formEl.appendChild(label);
  }
  const submit = document.createElement("button");
  submit.textContent = "Evaluate";
  formEl.appendChild(submit);
  const errorsEl = document.createElement("div");
  const packetEl = document.createElement("div");
  const diffEl = document.createElement("div");
  rootEl.append(formEl, errorsEl, packetEl, diffEl);

  formEl.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const errors = validateForm(form);
    if (errors.length > 0) {
      errorsEl.innerHTML = errors
        .map((e) => `<p class="field-error" data-field="${e.field}">${e.message}</p>`)
        .join("");
      return; // invalid forms never reach the network
    }
    errorsEl.innerHTML = "";
    const requestId = ++requestCounter;
    try {
      const packet = await client.recommend(formToState(form));
      if (requestId !== requestCounter) return; // stale response
      packetEl.innerHTML = renderPacket(packet);
      if (basePacket !== null) {
        diffEl.innerHTML = renderDiff(packetDiff(basePacket, packet));
      }
      basePacket = packet;
    } catch (err) {
      if (err instanceof ApiError) {
        errorsEl.innerHTML = Object.entries(err.fields)
          .map(([f, m]) => `<p class="field-error" data-field="${f}">${m}</p>`)
          .join("");
      } else {
        errorsEl.innerHTML = `<p class="retry-banner">Request failed; edits preserved. Retry.</p>`;
      }
    }
  });
}

declare const window: { document?: Document } | undefined;
if (typeof window !== "undefined" && window?.document) {
  const root = window.document.getElementById("console-root");
  if (root) mountConsole(root as HTMLElement, new ApiClient(""));
}
