"""Regenerate src/features.ts from the backend's canonical feature table."""

from pathlib import Path

from sepsisflow.cohort import CANONICAL_FEATURES

OUT = Path(__file__).resolve().parent.parent / "src" / "features.ts"

lines = [
    "// Generated from the backend's canonical feature table; keep in sync",
    "// by re-running scripts/gen_features.py.",
    "export interface FeatureSpec {",
    "  name: string;",
    "  unit: string;",
    "  kind: string;",
    "  min: number;",
    "  max: number;",
    "}",
    "",
    "export const FEATURES: FeatureSpec[] = [",
]
for f in CANONICAL_FEATURES:
    lines.append(
        f'  {{ name: "{f.name}", unit: "{f.unit}", kind: "{f.kind}", '
        f"min: {f.plausible_min}, max: {f.plausible_max} }},")
lines.append("];\n")
OUT.write_text("\n".join(lines), encoding="utf-8")
print(f"wrote {len(CANONICAL_FEATURES)} features to {OUT}")
