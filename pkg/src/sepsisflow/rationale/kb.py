"""Knowledge-base ingestion: one tab-delimited record per guideline chunk."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path


@dataclass(frozen=True)
class KnowledgeChunk:
    id: str
    text: str
    tags: frozenset

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"chunk {self.id!r} has empty text")


def parse_knowledge(lines) -> list[KnowledgeChunk]:
    chunks, seen = [], set()
    for line_no, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"line {line_no}: expected 3 tab-separated fields")
        cid, tags, text = parts
        if cid in seen:
            raise ValueError(f"line {line_no}: duplicate chunk id {cid!r}")
        seen.add(cid)
        chunks.append(KnowledgeChunk(
            id=cid, text=text,
            tags=frozenset(t.strip() for t in tags.split(",") if t.strip())))
    return chunks


def load_knowledge(path) -> list[KnowledgeChunk]:
    return parse_knowledge(Path(path).read_text(encoding="utf-8").splitlines())


def default_knowledge() -> list[KnowledgeChunk]:
    """The sepsis knowledge base shipped with the package."""
    text = (resources.files("sepsisflow.rationale") / "data" / "sepsis_kb.tsv")
    return parse_knowledge(text.read_text(encoding="utf-8").splitlines())
