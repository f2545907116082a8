"""Command-line interface: index, analyze, eval, sweep, gen.

Exit codes: 0 = clean run, 3 = findings present, 10+ = operational error.
Every threshold flag falls back to an environment variable with the
``PHRASE_FORENSICS_`` prefix (for example ``PHRASE_FORENSICS_T_ANOMALY``),
then to the built-in default. Output files are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .backends import (
    BigramTable,
    EmbedderBackend,
    MlmScorerBackend,
    ReferenceEmbedder,
    ReferenceMlmScorer,
    RemoteEmbedder,
    RemoteMlmScorer,
)
from .detector import DetectorConfig
from .errors import BackendError, PhraseForensicsError
from .evaluation import (
    EvalMode,
    format_results_table,
    load_dictionary,
    load_labeled_phrases,
    load_pairs_jsonl,
    load_parallel_pairs,
    run_alignment_robustness,
    run_restoration_eval,
    run_threshold_sweep,
)
from .fixtures import (
    generate_labeled_fixture,
    generate_planted_pairs,
    generate_spun_pairs,
    load_swap_table,
    write_case_study_fixture,
    write_labeled_fixture,
    write_parallel_pairs,
    write_planted_pairs,
)
from .index import (
    DEFAULT_CHUNK_BYTES,
    DirectoryCorpusReader,
    CorpusIndex,
    ingest_corpus,
    load_index,
    save_index,
    write_manifest,
)
from .pipeline import PipelineConfig, analyze
from .restoration import RestorationConfig

EXIT_CLEAN = 0
EXIT_FINDINGS = 3
EXIT_ERROR = 10

ENV_PREFIX = "PHRASE_FORENSICS_"


def _env_default(name: str, fallback, cast):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise SystemExit(f"invalid value for {ENV_PREFIX + name}: {raw!r}")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--t-anomaly", type=float, default=_env_default("T_ANOMALY", -8.0, float),
                        help="anomaly threshold (default -8.0)")
    parser.add_argument("--t-align", type=float, default=_env_default("T_ALIGN", 0.45, float),
                        help="alignment gate (default 0.45)")
    parser.add_argument("--gamma", type=float, default=_env_default("GAMMA", 0.60, float),
                        help="restoration confidence gate (default 0.60)")
    parser.add_argument("--max-ngram", type=int, default=_env_default("MAX_NGRAM", 5, int),
                        help="largest source n-gram scanned (default 5)")
    parser.add_argument("--min-window", type=int, default=_env_default("MIN_WINDOW", 2, int),
                        help="smallest detection window in words (default 2)")
    parser.add_argument("--max-window", type=int, default=_env_default("MAX_WINDOW", 4, int),
                        help="largest detection window in words (default 4)")
    parser.add_argument("--chunk-bytes", type=int, default=_env_default("CHUNK_BYTES", DEFAULT_CHUNK_BYTES, int),
                        help="ingestion chunk size in bytes (default 5 MiB)")
    parser.add_argument("--backend", choices=("reference", "remote"),
                        default=_env_default("BACKEND", "reference", str),
                        help="model backend (default reference)")
    parser.add_argument("--endpoint", default=_env_default("ENDPOINT", None, str),
                        help="inference sidecar URL for --backend remote")
    parser.add_argument("--dim", type=int, default=_env_default("DIM", 64, int),
                        help="reference embedder dimension (default 64)")
    parser.add_argument("--embedder-seed", type=int, default=_env_default("EMBEDDER_SEED", 0, int),
                        help="seed of the reference embedder's hash streams (default 0)")
    parser.add_argument("--seed", type=int, default=_env_default("SEED", 0, int),
                        help="seed for randomized fixture generation")
    parser.add_argument("--jobs", type=int, default=_env_default("JOBS", 1, int),
                        help="worker parallelism bound (default 1)")
    parser.add_argument("--out", help="output file path")
    parser.add_argument("-v", "--verbose", action="store_true")


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        detector=DetectorConfig(t_anomaly=args.t_anomaly, min_window=args.min_window, max_window=args.max_window),
        restoration=RestorationConfig(t_align=args.t_align, gamma=args.gamma, max_ngram=args.max_ngram),
    )


def _embedder(args) -> EmbedderBackend:
    if args.backend == "remote":
        if not args.endpoint:
            raise SystemExit("--backend remote requires --endpoint")
        return RemoteEmbedder(args.endpoint)
    return ReferenceEmbedder(dim=args.dim, seed=args.embedder_seed)


def _reference_scorer_from_dir(corpus_dir: str, chunk_bytes: int) -> ReferenceMlmScorer:
    from .index import iter_text_chunks

    paths = sorted(p for p in Path(corpus_dir).rglob("*.txt") if p.is_file())
    if not paths:
        raise SystemExit(f"no .txt files under {corpus_dir} to build the reference scorer")

    def texts():
        for path in paths:
            yield "".join(iter_text_chunks(path, chunk_bytes))

    return ReferenceMlmScorer(BigramTable.from_texts(texts()))


def _scorer(args, corpus_dir: str | None) -> MlmScorerBackend:
    if args.backend == "remote":
        if not args.endpoint:
            raise SystemExit("--backend remote requires --endpoint")
        return RemoteMlmScorer(args.endpoint)
    if not corpus_dir:
        raise SystemExit("the reference scorer needs --corpus-dir to build its language model")
    return _reference_scorer_from_dir(corpus_dir, args.chunk_bytes)


def _write_atomic(path: str, data: bytes) -> None:
    tmp = Path(path + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def _emit(args, payload: dict, default_name: str) -> None:
    data = (json.dumps(payload, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    out = args.out or default_name
    _write_atomic(out, data)
    if args.verbose:
        print(f"wrote {out}", file=sys.stderr)


def cmd_index(args) -> int:
    embedder = _embedder(args)
    result = ingest_corpus(args.corpus_dir, embedder, chunk_bytes=args.chunk_bytes)
    out = args.out or "corpus.pfidx"
    save_index(result.index, out)
    write_manifest(result.manifest, out + ".manifest.json")
    print(
        f"indexed {len(result.index)} documents ({len(result.manifest.skipped)} skipped) "
        f"-> {out}"
    )
    for skip in result.manifest.skipped:
        print(f"  skipped {skip['path']}: {skip['reason']}", file=sys.stderr)
    return EXIT_CLEAN


def cmd_analyze(args) -> int:
    config = _pipeline_config(args)
    embedder = _embedder(args)
    scorer = _scorer(args, args.corpus_dir)
    if args.index:
        index = load_index(args.index)
        if len(index) > 0 and not args.corpus_dir:
            raise SystemExit("--corpus-dir is required to read source documents for restoration")
        reader = DirectoryCorpusReader(args.corpus_dir) if args.corpus_dir else None
    else:
        index = CorpusIndex(dim=embedder.dim, backend_name=embedder.name)
        reader = None
    suspect_text = Path(args.suspect).read_text(encoding="utf-8")
    report = analyze(
        suspect_text,
        index,
        scorer,
        embedder,
        config,
        source_reader=reader,
        doc_id=Path(args.suspect).name,
        jobs=args.jobs,
    )
    out = args.out or "report.json"
    _write_atomic(out, report.to_json_bytes())
    summary = report.summary()
    print(f"{report.suspect_doc_id}: {summary['total']} finding(s) -> {out}")
    if args.verbose:
        for finding in report.findings:
            print(f"  {finding.status.value}: {finding.phrase!r} (score {finding.s_phrase:.2f})")
    return EXIT_FINDINGS if report.findings else EXIT_CLEAN


def cmd_eval(args) -> int:
    if args.experiment == "alignment":
        pairs = load_parallel_pairs(args.pairs_dir)
        report = run_alignment_robustness(pairs, _embedder(args), RestorationConfig(
            t_align=args.t_align, gamma=args.gamma, max_ngram=args.max_ngram))
        _emit(args, report.to_json_dict(), "alignment_eval.json")
        print(
            f"alignment robustness over {report.n_pairs} pairs / {report.n_sentences} sentences: "
            f"min {report.min_similarity:.3f}, median {report.median_similarity:.3f}, "
            f"max {report.max_similarity:.3f}, fraction >= gate {report.fraction_above_gate:.3f}"
        )
        return EXIT_CLEAN

    pairs = load_pairs_jsonl(args.pairs)
    config = _pipeline_config(args)
    embedder = _embedder(args)
    mode = EvalMode(args.mode)
    if args.backend == "remote":
        scorer: MlmScorerBackend = RemoteMlmScorer(args.endpoint)
    else:
        from .evaluation import reference_scorer_for_pairs

        scorer = reference_scorer_for_pairs(pairs)
    dictionary = load_dictionary(args.dictionary) if args.dictionary else None
    report = run_restoration_eval(
        pairs, mode, scorer, embedder, config,
        dictionary_terms=dictionary, jobs=args.jobs, multi_doc=args.multi_doc,
    )
    _emit(args, report.to_json_dict(), "eval_report.json")
    print(format_results_table([report]), end="")
    return EXIT_CLEAN


def cmd_sweep(args) -> int:
    labeled = load_labeled_phrases(args.labeled)
    scorer = _scorer(args, args.corpus_dir)
    points = run_threshold_sweep(labeled, scorer, args.thresholds)
    payload = {"thresholds": args.thresholds, "points": [p.to_json_dict() for p in points]}
    _emit(args, payload, "sweep.json")
    print(f"{'threshold':>10}  {'flagged':>7}  {'tpr':>6}  {'fpr':>6}  {'f1':>6}")
    for p in points:
        print(
            f"{p.threshold:>10.2f}  {p.flagged_count:>7d}  {p.true_positive_rate:>6.3f}  "
            f"{p.false_positive_rate:>6.3f}  {p.f1:>6.3f}"
        )
    return EXIT_CLEAN


def cmd_gen(args) -> int:
    if args.kind == "planted":
        table = load_swap_table(args.swap_table) if args.swap_table else None
        pairs = generate_planted_pairs(
            args.pairs,
            seed=args.seed,
            swap_table=table,
            embedder=_embedder(args),
            config=_pipeline_config(args),
        )
        out = args.out or "planted_pairs.jsonl"
        write_planted_pairs(pairs, out)
        print(f"wrote {len(pairs)} planted pairs -> {out}")
    elif args.kind == "spun":
        pairs = generate_spun_pairs(args.pairs, seed=args.seed, swap_fraction=args.swap_fraction)
        out = args.out or "spun_pairs"
        write_parallel_pairs(pairs, out)
        print(f"wrote {len(pairs)} original/spun pairs -> {out}/")
    elif args.kind == "labeled":
        fixture = generate_labeled_fixture(seed=args.seed)
        out = args.out or "labeled_fixture"
        corpus_path, labeled_path = write_labeled_fixture(fixture, out)
        print(f"wrote {len(fixture.phrases)} labeled phrases -> {labeled_path} (corpus: {corpus_path})")
    else:
        out = args.out or "case_study"
        write_case_study_fixture(out)
        print(f"wrote case-study fixture -> {out}/")
    return EXIT_CLEAN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phrase-forensics",
        description="Detect statistically anomalous phrases and restore the original terms from indexed sources.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="embed a corpus directory into a vector index")
    p_index.add_argument("corpus_dir")
    _add_common_flags(p_index)
    p_index.set_defaults(func=cmd_index)

    p_analyze = sub.add_parser("analyze", help="run the forensic pipeline over a suspect document")
    p_analyze.add_argument("suspect")
    p_analyze.add_argument("--index", help="path to a saved index (omit for the no-corpus condition)")
    p_analyze.add_argument("--corpus-dir", help="corpus root for source texts and the reference scorer")
    _add_common_flags(p_analyze)
    p_analyze.set_defaults(func=cmd_analyze)

    p_eval = sub.add_parser("eval", help="run the restoration or alignment experiments")
    p_eval.add_argument("--experiment", choices=("restoration", "alignment"), default="restoration")
    p_eval.add_argument("--pairs", help="annotated pairs JSONL (restoration experiment)")
    p_eval.add_argument("--pairs-dir", help="directory of *.orig.txt/*.spun.txt (alignment experiment)")
    p_eval.add_argument("--mode", choices=[m.value for m in EvalMode], default="retrieval")
    p_eval.add_argument("--multi-doc", action="store_true",
                        help="index all pair contexts as one shared corpus (imperfect retrieval)")
    p_eval.add_argument("--dictionary", help="term dictionary file for --mode dictionary")
    _add_common_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="sweep detection thresholds over labeled phrases")
    p_sweep.add_argument("--labeled", required=True, help="labeled phrases JSONL")
    p_sweep.add_argument("--corpus-dir", help="corpus for the reference scorer's language model")
    p_sweep.add_argument("--thresholds", type=float, nargs="+", default=[-13.0, -8.0, -5.0])
    _add_common_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_gen = sub.add_parser("gen", help="generate deterministic evaluation fixtures")
    p_gen.add_argument("kind", choices=("planted", "spun", "labeled", "case-study"))
    p_gen.add_argument("--pairs", type=int, default=50)
    p_gen.add_argument("--swap-fraction", type=float, default=0.4)
    p_gen.add_argument("--swap-table", help="alternate swap table JSON")
    _add_common_flags(p_gen)
    p_gen.set_defaults(func=cmd_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "eval" and args.experiment == "restoration" and not args.pairs:
        parser.error("eval --experiment restoration requires --pairs")
    if args.command == "eval" and args.experiment == "alignment" and not args.pairs_dir:
        parser.error("eval --experiment alignment requires --pairs-dir")
    try:
        return args.func(args)
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.partial_report is not None:
            done = exc.partial_report.summary()["total"]
            print(f"aborted with a partial report ({done} finding(s) assembled before the failure)", file=sys.stderr)
        return EXIT_ERROR
    except PhraseForensicsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
