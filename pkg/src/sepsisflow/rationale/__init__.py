from .client import (
    PAPER_PRESET, GenerationConfig, GenerationError, HttpGenerationClient,
    MockGenerationClient, generate_rationale,
)
from .embed import HashedTfidfEmbedder, bucket, tokenize
from .index import (
    RetrievalIndex, index_knowledge, load_index, query_text, retrieve,
    save_index,
)
from .kb import KnowledgeChunk, default_knowledge, load_knowledge, parse_knowledge
from .prompt import (
    DEFAULT_TEMPLATE, RationaleRequest, build_prompt, render_state_table,
)

__all__ = [
    "DEFAULT_TEMPLATE", "GenerationConfig", "GenerationError",
    "HashedTfidfEmbedder", "HttpGenerationClient", "KnowledgeChunk",
    "MockGenerationClient", "PAPER_PRESET", "RationaleRequest",
    "RetrievalIndex", "bucket", "build_prompt", "default_knowledge",
    "generate_rationale", "index_knowledge", "load_index", "load_knowledge",
    "parse_knowledge", "query_text", "render_state_table", "retrieve",
    "save_index", "tokenize",
]
