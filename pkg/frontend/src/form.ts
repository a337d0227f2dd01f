import { FEATURES } from "./features";

export interface FieldError {
  field: string;
  message: string;
}

export interface FormState {
  values: Record<string, string>;
  history: Record<string, number>[];
}

export function emptyForm(): FormState {
  const values: Record<string, string> = {};
  for (const f of FEATURES) values[f.name] = "";
  return { values, history: [] };
}

export function formFromState(state: Record<string, number>): FormState {
  const form = emptyForm();
  for (const [name, value] of Object.entries(state)) {
    form.values[name] = String(value);
  }
  return form;
}

/** Client-side validation mirroring the server's plausibility bounds. */
export function validateForm(form: FormState): FieldError[] {
  const errors: FieldError[] = [];
  for (const f of FEATURES) {
    const raw = form.values[f.name];
    if (raw === undefined || raw.trim() === "") {
      errors.push({ field: f.name, message: "required" });
      continue;
    }
    const v = Number(raw);
    if (!Number.isFinite(v)) {
      errors.push({ field: f.name, message: "not a number" });
      continue;
    }
    if (v < f.min || v > f.max) {
      errors.push({
        field: f.name,
        message: `outside plausible range [${f.min}, ${f.max}] ${f.unit}`,
      });
    }
  }
  return errors;
}

/** Numeric state for submission; only valid for a form with no errors. */
export function formToState(form: FormState): Record<string, number> {
  const state: Record<string, number> = {};
  for (const f of FEATURES) state[f.name] = Number(form.values[f.name]);
  return state;
}

export function pushHistory(form: FormState): FormState {
  return { ...form, history: [...form.history, formToState(form)] };
}
