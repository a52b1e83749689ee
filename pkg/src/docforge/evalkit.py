"""Benchmark harness: QA sets, retrieval metrics, judged generation, grid runner.

Retrieval is scored at file level with recall@k and MRR@k against each
question's gold reference file. Generation is scored by a judge model that
must answer in strict JSON; accuracy is the yes-fraction and mean confidence
averages over yes verdicts only. The grid runner evaluates a matrix of
pipeline configurations, reusing one index per distinct (strategy,
translation) pair, and isolates per-config failures.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import gateway
from .corpus import Corpus, LANGUAGES
from .engine import (
    PipelineConfig,
    PromptVariant,
    answer_query,
    build_chunk_map,
    build_index,
)
from .errors import DocforgeError
from .gateway import ModelEndpointConfig
from .prompts import JUDGE, load_template
from .vector_index import ScoredChunk, VectorIndex

log = logging.getLogger(__name__)

QA_SUFFIX = ".qa.jsonl"
JUDGE_ATTEMPTS = 3


class QASetError(DocforgeError):
    pass


class JudgeUnparseable(DocforgeError):
    def __init__(self, raw_outputs: list[str]):
        super().__init__(
            f"judge produced no parseable verdict in {len(raw_outputs)} attempts: "
            + " | ".join(repr(r[:80]) for r in raw_outputs)
        )
        self.raw_outputs = raw_outputs


@dataclass(frozen=True)
class QAPair:
    qa_id: str
    question: str
    gold_answer: str
    gold_file_id: str
    language: str


@dataclass(frozen=True)
class QAFailure:
    qa_id: str
    reason: str


@dataclass(frozen=True)
class LanguageMetrics:
    recall: float
    mrr: float
    n: int


@dataclass(frozen=True)
class RetrievalReport:
    config_label: str
    k: int
    recall_at_k: float
    mrr_at_k: float
    per_language: dict[str, LanguageMetrics]
    n: int
    failures: tuple[QAFailure, ...] = ()


@dataclass(frozen=True)
class JudgeVerdict:
    label: str  # "yes" | "no"
    confidence: float


@dataclass(frozen=True)
class GenerationReport:
    config_label: str
    accuracy: float
    mean_confidence: float | None
    n: int
    failures: tuple[QAFailure, ...] = ()
    truncations: int = 0


def load_qa_set(path: str | Path) -> list[QAPair]:
    """Read a JSON Lines QA set; one object per line."""
    pairs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except ValueError as exc:
                raise QASetError(f"{path}:{lineno}: invalid JSON") from exc
            try:
                pair = QAPair(
                    qa_id=data["qa_id"],
                    question=data["question"],
                    gold_answer=data["gold_answer"],
                    gold_file_id=data["gold_file_id"],
                    language=data["language"],
                )
            except KeyError as exc:
                raise QASetError(f"{path}:{lineno}: missing field {exc}") from exc
            if pair.language not in LANGUAGES:
                raise QASetError(f"{path}:{lineno}: invalid language {pair.language!r}")
            if not pair.qa_id or pair.qa_id in seen:
                raise QASetError(f"{path}:{lineno}: missing or duplicate qa_id")
            seen.add(pair.qa_id)
            pairs.append(pair)
    return pairs


def write_qa_set(pairs: Sequence[QAPair], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(
                json.dumps(
                    {
                        "qa_id": p.qa_id,
                        "question": p.question,
                        "gold_answer": p.gold_answer,
                        "gold_file_id": p.gold_file_id,
                        "language": p.language,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    return path


def recall_at_k(ranked: Sequence[ScoredChunk], gold_file_id: str, k: int) -> int:
    """1 iff any of the top min(k, n) chunks belongs to the gold file."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return int(any(sc.doc_id == gold_file_id for sc in ranked[:k]))


def mrr_at_k(ranked: Sequence[ScoredChunk], gold_file_id: str, k: int) -> float:
    """1/rank of the first gold-file chunk within the top k, else 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    for rank, sc in enumerate(ranked[:k], start=1):
        if sc.doc_id == gold_file_id:
            return 1.0 / rank
    return 0.0


def evaluate_retrieval(
    qaset: Sequence[QAPair],
    index: VectorIndex,
    cfg: PipelineConfig,
    config_label: str = "",
) -> RetrievalReport:
    """Embed every question, search top-k, and aggregate recall/MRR per language."""
    if not qaset:
        raise ValueError("qaset must be non-empty")
    recalls: dict[str, list[float]] = {lang: [] for lang in LANGUAGES}
    mrrs: dict[str, list[float]] = {lang: [] for lang in LANGUAGES}
    failures = []
    for qa in qaset:
        try:
            vec = gateway.embed_texts([qa.question], cfg.endpoints)[0]
            ranked = index.search(vec, cfg.k)
            r = float(recall_at_k(ranked, qa.gold_file_id, cfg.k))
            m = mrr_at_k(ranked, qa.gold_file_id, cfg.k)
        except DocforgeError as exc:
            failures.append(QAFailure(qa.qa_id, str(exc)))
            r, m = 0.0, 0.0
        recalls[qa.language].append(r)
        mrrs[qa.language].append(m)

    per_language = {
        lang: LanguageMetrics(
            recall=_mean(recalls[lang]), mrr=_mean(mrrs[lang]), n=len(recalls[lang])
        )
        for lang in LANGUAGES
        if recalls[lang]
    }
    all_recalls = [r for lang in LANGUAGES for r in recalls[lang]]
    all_mrrs = [m for lang in LANGUAGES for m in mrrs[lang]]
    return RetrievalReport(
        config_label=config_label,
        k=cfg.k,
        recall_at_k=_mean(all_recalls),
        mrr_at_k=_mean(all_mrrs),
        per_language=per_language,
        n=len(qaset),
        failures=tuple(failures),
    )


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _parse_verdict(raw: str) -> JudgeVerdict | None:
    try:
        data = json.loads(raw.strip())
    except ValueError:
        return None
    if not isinstance(data, dict) or set(data.keys()) != {"label", "confidence"}:
        return None
    label = data["label"]
    confidence = data["confidence"]
    if label not in ("yes", "no"):
        return None
    if isinstance(confidence, bool) or not isinstance(confidence, (int, float)):
        return None
    return JudgeVerdict(label=label, confidence=min(1.0, max(0.0, float(confidence))))


def judge_answer(
    question: str, gold_answer: str, generated: str, cfg: ModelEndpointConfig
) -> JudgeVerdict:
    """Grade a generated answer against the gold answer via the judge model.

    The judge must reply in strict JSON with exactly the keys label and
    confidence; the call is retried up to three attempts before giving up.
    """
    if not question or not gold_answer or not generated:
        raise ValueError("question, gold_answer, and generated must be non-empty")
    prompt = (
        load_template(JUDGE)
        .replace("<QUESTION>", question)
        .replace("<GOLD>", gold_answer)
        .replace("<GENERATED>", generated)
    )
    raw_outputs = []
    for _ in range(JUDGE_ATTEMPTS):
        raw = gateway.generate(prompt, cfg, model=cfg.judge_model)
        raw_outputs.append(raw)
        verdict = _parse_verdict(raw)
        if verdict is not None:
            return verdict
    raise JudgeUnparseable(raw_outputs)


def evaluate_generation(
    qaset: Sequence[QAPair],
    index: VectorIndex,
    corpus: Corpus,
    cfg: PipelineConfig,
    config_label: str = "",
) -> GenerationReport:
    """Answer and judge every QA pair; failures are recorded, not fatal.

    n counts judged answers; accuracy = yes / n. Mean confidence averages
    over yes verdicts only and is absent (None) when there are none.
    """
    if not qaset:
        raise ValueError("qaset must be non-empty")
    chunk_map = build_chunk_map(corpus, cfg.strategy)
    yes_confidences = []
    judged = 0
    yes = 0
    truncations = 0
    failures = []
    for qa in qaset:
        try:
            bundle = answer_query(qa.question, index, corpus, cfg, chunk_map=chunk_map)
            truncations += int(bundle.truncation_flag)
            verdict = judge_answer(qa.question, qa.gold_answer, bundle.answer, cfg.endpoints)
        except DocforgeError as exc:
            failures.append(QAFailure(qa.qa_id, str(exc)))
            continue
        judged += 1
        if verdict.label == "yes":
            yes += 1
            yes_confidences.append(verdict.confidence)

    return GenerationReport(
        config_label=config_label,
        accuracy=yes / judged if judged else 0.0,
        mean_confidence=_mean(yes_confidences) if yes_confidences else None,
        n=judged,
        failures=tuple(failures),
        truncations=truncations,
    )


@dataclass(frozen=True)
class BenchmarkConfig:
    """One cell of the benchmark grid."""

    pipeline: PipelineConfig
    generation: bool = False

    @property
    def label(self) -> str:
        p = self.pipeline
        base = f"{p.strategy.label}|{'tr' if p.translate_german else 'raw'}|k{p.k}"
        if self.generation:
            base += f"|{p.prompt_variant.value}"
        return base


@dataclass(frozen=True)
class BenchmarkRow:
    config_label: str
    k: int
    variant: str
    retrieval: RetrievalReport | None
    generation: GenerationReport | None
    error: str | None = None


def run_benchmark(
    corpus: Corpus,
    qaset: Sequence[QAPair],
    grid: Sequence[BenchmarkConfig],
    out_dir: str | Path | None = None,
) -> list[BenchmarkRow]:
    """Evaluate every grid cell, reusing indices across cells that share one.

    A failing cell produces a row with its error recorded; the rest of the
    grid still runs. Rows come back sorted by config_label. When out_dir is
    given, report.csv, report.txt, and the figures are written there.
    """
    if not grid:
        raise ValueError("grid must be non-empty")
    indices: dict[tuple[str, bool], VectorIndex] = {}
    rows = []
    for item in grid:
        p = item.pipeline
        key = (p.strategy.label, p.translate_german)
        try:
            index = indices.get(key)
            if index is None:
                index = build_index(corpus, p)
                indices[key] = index
            retrieval = evaluate_retrieval(qaset, index, p, config_label=item.label)
            generation = (
                evaluate_generation(qaset, index, corpus, p, config_label=item.label)
                if item.generation
                else None
            )
            rows.append(
                BenchmarkRow(item.label, p.k, p.prompt_variant.value if item.generation else "",
                             retrieval, generation)
            )
        except (DocforgeError, OSError) as exc:
            log.error("grid cell %s failed: %s", item.label, exc)
            rows.append(
                BenchmarkRow(item.label, p.k, p.prompt_variant.value if item.generation else "",
                             None, None, error=str(exc))
            )
    rows.sort(key=lambda r: r.config_label)
    if out_dir is not None:
        from .reporting import write_report_bundle

        write_report_bundle(rows, out_dir)
    return rows


def load_grid(
    path: str | Path,
    endpoints: ModelEndpointConfig,
    safe_num_ctx: int = 6000,
) -> list[BenchmarkConfig]:
    """Read a benchmark grid file.

    Two forms are accepted: an explicit {"configs": [...]} list with per-item
    strategy/translate/k/variant/generation fields, or a cross-product form
    with "strategies", "translate", and "k" arrays (plus optional "variants",
    applied to translated cells when generation is on; untranslated cells
    always use k-N).
    """
    from .chunker import ChunkingStrategy

    data = json.loads(Path(path).read_text(encoding="utf-8"))
    items: list[BenchmarkConfig] = []

    def make(strategy: str, translate: bool, k: int, variant: str, generation: bool):
        items.append(
            BenchmarkConfig(
                pipeline=PipelineConfig(
                    strategy=ChunkingStrategy.parse(strategy),
                    translate_german=translate,
                    k=k,
                    prompt_variant=PromptVariant.parse(variant),
                    endpoints=endpoints,
                    safe_num_ctx=safe_num_ctx,
                ),
                generation=generation,
            )
        )

    if "configs" in data:
        for c in data["configs"]:
            make(
                c["strategy"],
                bool(c.get("translate", False)),
                int(c.get("k", 5)),
                c.get("variant", "k-T" if c.get("translate") else "k-N"),
                bool(c.get("generation", False)),
            )
        return items

    generation = bool(data.get("generation", False))
    variants = data.get("variants", ["k-T"])
    for strategy in data["strategies"]:
        for translate in data.get("translate", [False]):
            for k in data.get("k", [5]):
                if generation and translate:
                    for variant in variants:
                        make(strategy, True, k, variant, True)
                else:
                    make(strategy, translate, k, "k-N", generation)
    return items
