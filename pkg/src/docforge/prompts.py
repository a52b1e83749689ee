"""Prompt templates shipped as text assets and loaded byte-for-byte."""

from functools import lru_cache
from importlib import resources

ANSWER_PLAIN = "answer_plain.txt"
ANSWER_SCORED = "answer_scored.txt"
JUDGE = "judge.txt"


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return (
        resources.files("docforge")
        .joinpath("prompts", name)
        .read_text(encoding="utf-8")
    )
