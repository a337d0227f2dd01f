// Generated from the backend's canonical feature table; keep in sync
// by re-running scripts/gen_features.py.
export interface FeatureSpec {
  name: string;
  unit: string;
  kind: string;
  min: number;
  max: number;
}

export const FEATURES: FeatureSpec[] = [
  { name: "heart_rate", unit: "bpm", kind: "vital", min: 20, max: 220 },
  { name: "map", unit: "mmHg", kind: "vital", min: 20, max: 180 },
  { name: "sbp", unit: "mmHg", kind: "vital", min: 40, max: 250 },
  { name: "dbp", unit: "mmHg", kind: "vital", min: 20, max: 150 },
  { name: "resp_rate", unit: "breaths/min", kind: "vital", min: 4, max: 60 },
  { name: "temp_c", unit: "degC", kind: "vital", min: 30, max: 43 },
  { name: "spo2", unit: "%", kind: "vital", min: 50, max: 100 },
  { name: "gcs_total", unit: "score", kind: "vital", min: 3, max: 15 },
  { name: "urine_output", unit: "mL/4h", kind: "vital", min: 0, max: 4000 },
  { name: "lactate", unit: "mmol/L", kind: "lab", min: 0.1, max: 20 },
  { name: "creatinine", unit: "mg/dL", kind: "lab", min: 0.2, max: 15 },
  { name: "wbc", unit: "10^3/uL", kind: "lab", min: 0.5, max: 80 },
  { name: "platelets", unit: "10^3/uL", kind: "lab", min: 5, max: 1000 },
  { name: "bun", unit: "mg/dL", kind: "lab", min: 2, max: 150 },
  { name: "glucose", unit: "mg/dL", kind: "lab", min: 20, max: 800 },
  { name: "sodium", unit: "mEq/L", kind: "lab", min: 110, max: 175 },
  { name: "potassium", unit: "mEq/L", kind: "lab", min: 1.5, max: 9 },
  { name: "chloride", unit: "mEq/L", kind: "lab", min: 70, max: 140 },
  { name: "bicarbonate", unit: "mEq/L", kind: "lab", min: 5, max: 50 },
  { name: "hemoglobin", unit: "g/dL", kind: "lab", min: 3, max: 20 },
  { name: "bilirubin", unit: "mg/dL", kind: "lab", min: 0.1, max: 40 },
  { name: "inr", unit: "ratio", kind: "lab", min: 0.5, max: 12 },
  { name: "ph", unit: "pH", kind: "lab", min: 6.8, max: 7.8 },
  { name: "pao2", unit: "mmHg", kind: "lab", min: 30, max: 600 },
  { name: "paco2", unit: "mmHg", kind: "lab", min: 10, max: 120 },
  { name: "albumin", unit: "g/dL", kind: "lab", min: 1, max: 6 },
  { name: "age", unit: "years", kind: "demographic", min: 18, max: 100 },
  { name: "weight", unit: "kg", kind: "demographic", min: 30, max: 250 },
  { name: "prior_fluids", unit: "0/1", kind: "treatment-indicator", min: 0, max: 1 },
  { name: "prior_vasopressors", unit: "0/1", kind: "treatment-indicator", min: 0, max: 1 },
];
