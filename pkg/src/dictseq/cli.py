"""Command-line front end: one executable, one subcommand per pipeline stage.

Run files are TOML; relative paths inside them resolve against the run file's
directory, or against $DICTSEQ_DATA_ROOT when that is set. Usage problems
(unknown keys, missing files, bad flags) exit with status 2; runtime failures
exit with status 1.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .corpus import Concept, LabeledSequence, Source, read_conll, write_conll
from .embeddings import (
    StaticEmbeddingTable,
    load_piece_vocab,
    load_word2vec_text,
    store_read,
)
from .errors import DictseqError, UsageError
from .evaluation import MetricsReport, evaluate, render_table
from .gazetteer import (
    DictRegistry,
    Dictionary,
    SemanticFlag,
    load_dictionary,
    write_dictionary,
)
from .network import (
    Attention,
    DictMode,
    ModelConfig,
    Variant,
    load_checkpoint,
    save_checkpoint,
)
from .training import (
    Resources,
    RunManifest,
    Stopwatch,
    TrainConfig,
    corpus_digest,
    cross_validate,
    label_vocabulary,
    predict_sequences,
    registry_digest,
    train_fold,
)
from .weaklabel import build_mixture, run_weak_label

_CONCEPTS = {c.value: c for c in Concept}
_SEMFLAGS = {f.value: f for f in SemanticFlag}
_SOURCES = {s.value: s for s in Source}

DATA_ROOT_ENV = "DICTSEQ_DATA_ROOT"


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise UsageError(f"unknown key(s) {sorted(unknown)} in {where}")


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise UsageError(f"missing required key {key!r} in {where}")
    return section[key]


@dataclass
class DictionarySpec:
    name: str
    path: Path
    concept: Concept | SemanticFlag
    bit: int | None = None  # 1-based d1..d7 override


@dataclass
class ExperimentSpec:
    """A fully validated run file; every path is resolved."""

    path: Path
    corpora: dict[str, Path]
    source: Source
    dictionaries: list[DictionarySpec]
    concepts: list[Concept]
    model: ModelConfig
    training: TrainConfig
    word2vec: Path | None
    oov_seed: int
    static_dim: int
    contextual_store: Path | None
    piece_vocab: Path | None
    weaklabel: dict = field(default_factory=dict)
    output_dir: Path = Path("runs")


def _resolve(base: Path, value: str) -> Path:
    root = os.environ.get(DATA_ROOT_ENV)
    anchor = Path(root) if root else base
    p = Path(value)
    return p if p.is_absolute() else anchor / p


def load_spec(path: str | Path) -> ExperimentSpec:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"run file not found: {path}")
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"{path}: not valid TOML: {exc}") from None
    _check_keys(
        data,
        {"corpora", "dictionaries", "model", "embeddings", "training", "weaklabel", "output"},
        str(path),
    )
    base = path.parent

    corpora_sec = data.get("corpora", {})
    _check_keys(corpora_sec, {"train", "dev", "test", "ground_truth", "source"}, "[corpora]")
    source_name = corpora_sec.get("source", Source.FORUM.value)
    if source_name not in _SOURCES:
        raise UsageError(f"unknown corpora.source {source_name!r}")
    corpora = {
        k: _resolve(base, v) for k, v in corpora_sec.items() if k != "source"
    }

    dictionaries = []
    for i, d in enumerate(data.get("dictionaries", [])):
        where = f"[[dictionaries]] #{i}"
        _check_keys(d, {"name", "path", "concept", "bit"}, where)
        cname = _require(d, "concept", where)
        concept = _CONCEPTS.get(cname) or _SEMFLAGS.get(cname)
        if concept is None:
            raise UsageError(f"{where}: unknown concept {cname!r}")
        bit = d.get("bit")
        if bit is not None and not 1 <= int(bit) <= 7:
            raise UsageError(f"{where}: bit must be 1..7")
        dictionaries.append(
            DictionarySpec(
                _require(d, "name", where),
                _resolve(base, _require(d, "path", where)),
                concept,
                int(bit) if bit is not None else None,
            )
        )

    model_sec = data.get("model", {})
    _check_keys(
        model_sec,
        {"variant", "dict_mode", "attention", "hidden_size", "static_dim",
         "contextual_dim", "concepts", "seed"},
        "[model]",
    )
    concepts = []
    for cname in model_sec.get("concepts", ["SYM"]):
        if cname not in _CONCEPTS:
            raise UsageError(f"[model].concepts: unknown concept {cname!r}")
        concepts.append(_CONCEPTS[cname])

    emb_sec = data.get("embeddings", {})
    _check_keys(
        emb_sec,
        {"word2vec", "oov_seed", "static_dim", "contextual_store", "piece_vocab"},
        "[embeddings]",
    )
    static_dim = int(model_sec.get("static_dim", emb_sec.get("static_dim", 300)))

    try:
        model = ModelConfig(
            variant=Variant(model_sec.get("variant", "lstm-crf")),
            dict_mode=DictMode(model_sec.get("dict_mode", "none")),
            attention=Attention(model_sec.get("attention", "none")),
            hidden_size=int(model_sec.get("hidden_size", 100)),
            static_dim=static_dim,
            contextual_dim=int(model_sec.get("contextual_dim", 0)),
            label_count=len(label_vocabulary(concepts)),
            seed=int(model_sec.get("seed", 0)),
        )
    except ValueError as exc:
        raise UsageError(f"[model]: {exc}") from None

    train_sec = dict(data.get("training", {}))
    _check_keys(
        train_sec,
        {"batch_size", "learning_rate", "weight_decay", "epochs", "adam_beta1",
         "adam_beta2", "adam_epsilon", "grad_clip", "seed", "folds", "patience"},
        "[training]",
    )
    training = TrainConfig(**train_sec)

    weak_sec = data.get("weaklabel", {})
    _check_keys(weak_sec, {"base", "donor", "seed", "fractions"}, "[weaklabel]")

    out_sec = data.get("output", {})
    _check_keys(out_sec, {"dir"}, "[output]")

    return ExperimentSpec(
        path=path,
        corpora=corpora,
        source=_SOURCES[source_name],
        dictionaries=dictionaries,
        concepts=concepts,
        model=model,
        training=training,
        word2vec=_resolve(base, emb_sec["word2vec"]) if "word2vec" in emb_sec else None,
        oov_seed=int(emb_sec.get("oov_seed", 0)),
        static_dim=static_dim,
        contextual_store=(
            _resolve(base, emb_sec["contextual_store"])
            if "contextual_store" in emb_sec else None
        ),
        piece_vocab=(
            _resolve(base, emb_sec["piece_vocab"]) if "piece_vocab" in emb_sec else None
        ),
        weaklabel=dict(weak_sec),
        output_dir=_resolve(base, out_sec.get("dir", "runs")),
    )


def _load_corpus(spec: ExperimentSpec, name: str) -> list[LabeledSequence]:
    if name not in spec.corpora:
        raise UsageError(f"run file does not define corpora.{name}")
    path = spec.corpora[name]
    if not path.is_file():
        raise UsageError(f"corpus file not found: {path}")
    return read_conll(path, spec.source)


def _load_dictionaries(spec: ExperimentSpec) -> dict[str, Dictionary]:
    out = {}
    for d in spec.dictionaries:
        if not d.path.is_file():
            raise UsageError(f"dictionary file not found: {d.path}")
        out[d.name] = load_dictionary(d.path, d.name, d.concept)
    return out


def _build_registry(spec: ExperimentSpec, loaded: dict[str, Dictionary]) -> DictRegistry:
    overrides = {d.name: d.bit - 1 for d in spec.dictionaries if d.bit is not None}
    return DictRegistry(list(loaded.values()), overrides)


def _load_resources(spec: ExperimentSpec, registry: DictRegistry | None) -> Resources:
    if spec.word2vec is not None:
        if not spec.word2vec.is_file():
            raise UsageError(f"embedding file not found: {spec.word2vec}")
        table = load_word2vec_text(spec.word2vec, spec.oov_seed)
        if table.dimension != spec.model.static_dim:
            raise UsageError(
                f"embedding dimension {table.dimension} != model static_dim "
                f"{spec.model.static_dim}"
            )
    else:
        table = StaticEmbeddingTable(spec.model.static_dim, {}, spec.oov_seed)
    store = None
    vocab = None
    if spec.model.variant is Variant.BERT_LSTM_CRF:
        if spec.contextual_store is None or spec.piece_vocab is None:
            raise UsageError(
                "bert-lstm-crf requires embeddings.contextual_store and embeddings.piece_vocab"
            )
        store = store_read(spec.contextual_store)
        vocab = frozenset(load_piece_vocab(spec.piece_vocab))
    return Resources(
        table, label_vocabulary(spec.concepts), registry, store, vocab
    )


def _write_report(path: Path, report: MetricsReport, meta: dict) -> None:
    path.write_text(
        json.dumps(report.to_json(meta), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def cmd_train(args) -> int:
    spec = load_spec(args.spec)
    out_dir = Path(args.output_dir) if args.output_dir else spec.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    loaded = _load_dictionaries(spec)
    registry = _build_registry(spec, loaded) if loaded else None
    resources = _load_resources(spec, registry)
    train_corpus = _load_corpus(spec, "train")
    training = spec.training if args.seed is None else TrainConfig(
        **{**spec.training.to_json(), "seed": args.seed}
    )

    manifest = RunManifest(
        spec.model, training, resources.labels,
        registry_digest(registry),
        {"train": corpus_digest(train_corpus)},
    )
    with Stopwatch() as watch:
        if args.cv:
            reports, mean, fa, results = cross_validate(
                spec.model, training, train_corpus, resources
            )
            names = [f"fold-{k}" for k in range(training.folds)]
            for k, result in enumerate(results):
                save_checkpoint(out_dir / f"fold-{k}.ckpt", result.params, resources.labels)
            text, payload = render_table(reports + [mean], names + ["mean"])
            (out_dir / "cv-report.json").write_text(
                json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            print(text)
            manifest.fold_assignment = fa.assignment
            manifest.fold_fragments = [r.fragment() for r in results]
            manifest.metrics = {"mean_macro_f1": mean.macro_f1}
        else:
            dev_corpus = _load_corpus(spec, "dev")
            manifest.corpus_digests["dev"] = corpus_digest(dev_corpus)
            result = train_fold(spec.model, training, train_corpus, dev_corpus, resources)
            save_checkpoint(
                out_dir / "model.ckpt", result.params, resources.labels,
                {"best_epoch": result.best_epoch},
            )
            predicted = predict_sequences(result.params, dev_corpus, resources,
                                          training.batch_size)
            report = evaluate(dev_corpus, predicted)
            _write_report(out_dir / "dev-report.json", report, {"corpus": "dev"})
            text, _ = render_table([report], ["dev"])
            print(text)
            manifest.fold_fragments = [result.fragment()]
            manifest.metrics = {"dev_macro_f1": report.macro_f1}
    manifest.wall_clock_seconds = watch.seconds
    manifest.write(out_dir / "manifest.json")
    return 0


def cmd_tag(args) -> int:
    spec = load_spec(args.spec)
    params, labels, _ = load_checkpoint(args.checkpoint)
    loaded = _load_dictionaries(spec)
    registry = _build_registry(spec, loaded) if loaded else None
    resources = _load_resources(spec, registry)
    if resources.labels != labels:
        raise UsageError(
            f"checkpoint labels {labels} do not match run file concepts "
            f"{resources.labels}"
        )
    corpus = read_conll(Path(args.input), spec.source)
    predicted = predict_sequences(params, corpus, resources)
    write_conll(predicted, args.output)
    manifest = {
        "checkpoint": str(args.checkpoint),
        "input": str(args.input),
        "input_digest": corpus_digest(corpus),
        "output_digest": corpus_digest(predicted),
    }
    Path(str(args.output) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return 0


def _mixture_from_args(args) -> tuple:
    base = load_dictionary(Path(args.base), args.base_name, Concept.SYM)
    if args.donor:
        donor = load_dictionary(Path(args.donor), args.donor_name, Concept.SYM)
    else:
        donor = base  # no donor: plain single-dictionary tagging
    return build_mixture(base, donor, args.fraction, args.seed)


def cmd_weak_label(args) -> int:
    for path in (args.base, args.corpus):
        if not Path(path).is_file():
            raise UsageError(f"file not found: {path}")
    mixture = _mixture_from_args(args)
    corpus = read_conll(Path(args.corpus), _SOURCES[args.source])
    run = run_weak_label(mixture, corpus_digest(corpus), corpus)
    tagged = list(run.tagged)
    if args.only_matches:
        keep = {s.id for s in tagged if any(t.position != "O" for t in s.labels)}
        tagged = [s for s in tagged if s.id in keep]
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_conll(tagged, out_dir / "tagged.conll")
    (out_dir / "manifest.json").write_text(
        json.dumps(run.manifest_json(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"tagged {len(tagged)} sequences, {run.span_count} spans")
    return 0


def cmd_dict_merge(args) -> int:
    if not Path(args.base).is_file() or not Path(args.donor).is_file():
        raise UsageError("base and donor dictionary files are required")
    mixture = _mixture_from_args(args)
    write_dictionary(mixture.dictionary, args.output)
    mixture.write_manifest(str(args.output) + ".manifest.json")
    print(f"{len(mixture.dictionary.terms)} terms -> {args.output}")
    return 0


def cmd_eval(args) -> int:
    for path in (args.gold, args.predicted):
        if not Path(path).is_file():
            raise UsageError(f"file not found: {path}")
    gold = read_conll(Path(args.gold))
    predicted = read_conll(Path(args.predicted))
    report = evaluate(gold, predicted)
    text, payload = render_table([report], [args.name])
    print(text)
    if args.json:
        payload["meta"] = {
            "gold_digest": corpus_digest(gold),
            "predicted_digest": corpus_digest(predicted),
        }
        Path(args.json).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def _sweep_cell(cell_args: dict) -> dict:
    """One grid cell: build the mixture, weak-label, train, evaluate."""
    spec = load_spec(cell_args["spec_path"])
    loaded = _load_dictionaries(spec)
    base = loaded[cell_args["base"]]
    donor = loaded[cell_args["donor"]]
    fraction = cell_args["fraction"]
    seed = cell_args["seed"]

    mixture = build_mixture(base, donor, fraction, seed)
    mix_dict = mixture.dictionary
    registry = DictRegistry([mix_dict])
    resources = _load_resources(spec, registry)

    train_corpus = _load_corpus(spec, "train")
    test_corpus = _load_corpus(spec, "test")
    tagged_train = run_weak_label(mixture, "train", train_corpus).tagged

    combined = Dictionary("combined", Concept.SYM, base.terms | donor.terms)
    from .weaklabel import weak_label as _tag

    gold_variants = {
        "combined": _tag(combined, test_corpus),
        cell_args["base"]: _tag(base, test_corpus),
        cell_args["donor"]: _tag(donor, test_corpus),
    }
    if "ground_truth" in spec.corpora:
        gold_variants["ground-truth"] = _load_corpus(spec, "ground_truth")

    result = train_fold(spec.model, spec.training, list(tagged_train),
                        list(tagged_train), resources)
    predicted = predict_sequences(result.params, test_corpus, resources,
                                  spec.training.batch_size)

    out_dir = Path(cell_args["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    write_conll(tagged_train, out_dir / "tagged-train.conll")
    mixture.write_manifest(out_dir / "mixture.json")
    save_checkpoint(out_dir / "model.ckpt", result.params, resources.labels)
    write_conll(predicted, out_dir / "predicted.conll")

    scores = {}
    for name, gold in gold_variants.items():
        report = evaluate(gold, predicted)
        _write_report(out_dir / f"report-{name}.json", report,
                      {"test_set": name, "fraction": fraction})
        sym = report.per_label.get("SYM")
        scores[name] = {
            "p": sym.precision if sym else 0.0,
            "r": sym.recall if sym else 0.0,
            "f1": sym.f1 if sym else 0.0,
            "macro_f1": report.macro_f1,
        }
    return {
        "baseline": cell_args["base"],
        "donor": cell_args["donor"],
        "fraction": fraction,
        "scores": scores,
    }


def cmd_sweep(args) -> int:
    spec = load_spec(args.spec)
    weak = spec.weaklabel
    for key in ("base", "donor"):
        if key not in weak:
            raise UsageError(f"[weaklabel].{key} is required for sweep")
    names = {d.name for d in spec.dictionaries}
    for key in ("base", "donor"):
        if weak[key] not in names:
            raise UsageError(f"[weaklabel].{key}={weak[key]!r} is not a declared dictionary")
    if [c.value for c in spec.concepts] != ["SYM"]:
        raise UsageError("sweep requires [model].concepts = ['SYM']")
    fractions = weak.get("fractions", [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    seed = int(weak.get("seed", spec.training.seed))
    out_dir = Path(args.output_dir) if args.output_dir else spec.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    cells = []
    for base, donor in ((weak["base"], weak["donor"]), (weak["donor"], weak["base"])):
        for fraction in fractions:
            pct = int(round(float(fraction) * 100))
            cells.append(
                {
                    "spec_path": str(spec.path),
                    "base": base,
                    "donor": donor,
                    "fraction": float(fraction),
                    "seed": seed,
                    "out_dir": str(out_dir / "cells" / f"{base}-{pct:03d}"),
                }
            )

    with Stopwatch() as watch:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_sweep_cell, cells))
        else:
            results = [_sweep_cell(c) for c in cells]

    summary: dict[str, dict] = {}
    for row in results:
        summary.setdefault(row["baseline"], {})[row["fraction"]] = row["scores"]
    lines = []
    for baseline, by_fraction in summary.items():
        test_sets = list(next(iter(by_fraction.values())))
        lines.append(f"baseline: {baseline}")
        header = ["  %"] + [f"{t}:{c}" for t in test_sets for c in ("P", "R", "F1")]
        lines.append("  ".join(header))
        for fraction in sorted(by_fraction):
            row = [f"{int(round(fraction * 100)):3d}"]
            for t in test_sets:
                s = by_fraction[fraction][t]
                row.extend(f"{s[k]:.2f}" for k in ("p", "r", "f1"))
            lines.append("  ".join(row))
        lines.append("")
    text = "\n".join(lines)
    print(text)
    (out_dir / "sweep.txt").write_text(text, encoding="utf-8")
    payload = {
        "seed": seed,
        "fractions": [float(f) for f in fractions],
        "cells": results,
        "wall_clock_seconds": watch.seconds,
    }
    (out_dir / "sweep.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dictseq",
        description="Dictionary-augmented BiLSTM-CRF sequence labeling toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a run file")
    p.add_argument("--spec", required=True, help="TOML run file")
    p.add_argument("--cv", action="store_true", help="cross-validate instead of train/dev")
    p.add_argument("--output-dir", default=None)
    p.add_argument("--seed", type=int, default=None, help="override training seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tag", help="tag a corpus with a trained checkpoint")
    p.add_argument("--spec", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("weak-label", help="tag a corpus with a dictionary mixture")
    p.add_argument("--base", required=True, help="base dictionary file")
    p.add_argument("--base-name", default="base")
    p.add_argument("--donor", default=None, help="donor dictionary file")
    p.add_argument("--donor-name", default="donor")
    p.add_argument("--fraction", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corpus", required=True)
    p.add_argument("--source", choices=sorted(_SOURCES), default=Source.FORUM.value)
    p.add_argument("--only-matches", action="store_true",
                   help="keep only sequences containing at least one match")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_weak_label)

    p = sub.add_parser("dict-merge", help="merge two dictionaries at a fraction")
    p.add_argument("--base", required=True)
    p.add_argument("--base-name", default="base")
    p.add_argument("--donor", required=True)
    p.add_argument("--donor-name", default="donor")
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_dict_merge)

    p = sub.add_parser("eval", help="score a predicted corpus against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--predicted", required=True)
    p.add_argument("--json", default=None, help="write the full-precision report here")
    p.add_argument("--name", default="model")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="full mixture-fraction grid, both baselines")
    p.add_argument("--spec", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except DictseqError as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
