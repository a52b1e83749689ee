from docforge.chunker import ChunkingStrategy
from docforge.engine import PipelineConfig
from docforge.evalkit import (
    BenchmarkConfig,
    BenchmarkRow,
    GenerationReport,
    LanguageMetrics,
    QAFailure,
    RetrievalReport,
    run_benchmark,
)
from docforge.reporting import (
    CSV_COLUMNS,
    render_figures,
    write_csv,
    write_report_bundle,
    write_table,
)
from synthcorpus import synth_corpus, synth_qa


def retrieval_report(label, recall=0.5, mrr=0.25, failures=()):
    return RetrievalReport(
        config_label=label,
        k=5,
        recall_at_k=recall,
        mrr_at_k=mrr,
        per_language={"en": LanguageMetrics(recall, mrr, 4)},
        n=4,
        failures=failures,
    )


def sample_rows():
    return [
        BenchmarkRow("fixed-800|raw|k5", 5, "", retrieval_report("fixed-800|raw|k5"), None),
        BenchmarkRow(
            "fixed-800|tr|k5|k-T",
            5,
            "k-T",
            retrieval_report("fixed-800|tr|k5|k-T", 1.0, 1.0),
            GenerationReport("fixed-800|tr|k5|k-T", accuracy=0.75,
                             mean_confidence=0.92, n=4),
        ),
        BenchmarkRow("paragraph|raw|k3", 3, "", None, None, error="endpoint unreachable"),
    ]


def test_csv_layout(tmp_path):
    path = write_csv(sample_rows(), tmp_path / "report.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1] == "fixed-800|raw|k5,5,,0.5000,0.2500,,,4,0"
    assert lines[2] == "fixed-800|tr|k5|k-T,5,k-T,1.0000,1.0000,0.7500,0.9200,4,0"
    assert lines[3].startswith("paragraph|raw|k3,3,,,,,,,error: endpoint unreachable")


def test_csv_counts_failures(tmp_path):
    rows = [
        BenchmarkRow(
            "x", 5, "",
            retrieval_report("x", failures=(QAFailure("qa1", "boom"),)),
            GenerationReport("x", 0.5, None, 2, failures=(QAFailure("qa2", "boom"),)),
        )
    ]
    path = write_csv(rows, tmp_path / "report.csv")
    assert path.read_text().splitlines()[1].endswith(",2")


def test_csv_mean_confidence_absent_is_empty(tmp_path):
    rows = [
        BenchmarkRow("x", 5, "k-N", retrieval_report("x"),
                     GenerationReport("x", 0.0, None, 4)),
    ]
    line = write_csv(rows, tmp_path / "r.csv").read_text().splitlines()[1]
    assert line == "x,5,k-N,0.5000,0.2500,0.0000,,4,0"


def test_table_is_aligned(tmp_path):
    path = write_table(sample_rows(), tmp_path / "report.txt")
    lines = path.read_text().splitlines()
    assert lines[0].split()[:3] == ["config_label", "k", "variant"]
    assert set(lines[1]) <= {"-", " "}
    assert len(lines) == 2 + len(sample_rows())


def test_figures_rendered(tmp_path):
    paths = render_figures(sample_rows(), tmp_path)
    names = {p.name for p in paths}
    assert names == {"retrieval.png", "generation.png"}
    for p in paths:
        assert p.stat().st_size > 1000


def test_no_generation_rows_no_generation_figure(tmp_path):
    rows = [sample_rows()[0]]
    paths = render_figures(rows, tmp_path)
    assert [p.name for p in paths] == ["retrieval.png"]


def test_bundle_writes_everything(tmp_path):
    written = write_report_bundle(sample_rows(), tmp_path)
    assert (tmp_path / "report.csv").exists()
    assert (tmp_path / "report.txt").exists()
    assert (tmp_path / "retrieval.png").exists()
    assert set(written) >= {"csv", "table"}


def test_benchmark_csv_deterministic(mock, endpoints, tmp_path):
    corpus, qaset = synth_corpus(), synth_qa()[:4]
    grid = [
        BenchmarkConfig(
            PipelineConfig(strategy=ChunkingStrategy.parse(s), k=k, endpoints=endpoints)
        )
        for s in ("fixed-800", "paragraph")
        for k in (3, 5)
    ]
    first = write_csv(run_benchmark(corpus, qaset, grid), tmp_path / "a.csv").read_bytes()
    second = write_csv(run_benchmark(corpus, qaset, grid), tmp_path / "b.csv").read_bytes()
    assert first == second
