"""``prodsearch`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

Options may also come from a ``key = value`` file passed with ``--config``;
flags given on the command line override it.  Keys are the long flag names
without dashes (``gamma``, ``k1``, ``lambda``, ``train`` ...).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .corpus import FIELDS, corpus_stats, load_instances, load_tables
from .embeddings import EmbeddingTable, ParagraphVectors, SkipgramConfig
from .errors import DataError, NumericError, ProdsearchError
from .features import Bm25Params, IndriParams
from .index import build_index, save_index
from .models import (
    MODEL_NAMES,
    SVR_MODELS,
    FittedModel,
    ModelSettings,
    PreparedCorpus,
    UnknownModel,
    evaluate_model,
    fit_model,
    prepare_embeddings,
)
from .svr import SvrConfig
from .text import PipelineConfig

log = logging.getLogger("prodsearch")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_GAMMAS = tuple(10.0 ** e for e in range(-10, 1))
FEATURE_MODELS = ("unigram", "boolean6", "ir_full", "combined")
EMBEDDING_MODELS = ("word2vec", "doc2vec")

# option name -> (type, default); these may come from the config file
OPTIONS = {
    "data": (str, None),
    "train": (str, None),
    "descriptions": (str, None),
    "attributes": (str, None),
    "test": (str, None),
    "model": (str, "boolean6"),
    "model_file": (str, None),
    "k": (int, 10),
    "seed": (int, 42),
    "gamma": (float, 0.01),
    "c": (float, 1.0),
    "epsilon": (float, 0.001),
    "tolerance": (float, 0.001),
    "lambda": (float, 0.4),
    "mu": (float, 2500.0),
    "k1": (float, 1.2),
    "b": (float, 0.75),
    "dim": (int, 100),
    "epochs": (int, 5),
    "min_count": (int, 5),
    "window": (int, 5),
    "negatives": (int, 5),
    "workers": (int, 1),
    "top_k": (int, 200),
    "decoder": (str, "direct"),
    "gammas": (str, None),
    "out": (str, None),
    "no_spell": (bool, False),
}


class UsageError(ProdsearchError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_options(p: argparse.ArgumentParser, names) -> None:
    for name in names:
        typ, _ = OPTIONS[name]
        flag = "--" + name.replace("_", "-")
        dest = "lam" if name == "lambda" else name
        if typ is bool:
            p.add_argument(flag, dest=dest, action="store_const", const=True, default=None)
        else:
            p.add_argument(flag, dest=dest, type=typ, default=None, metavar=name.upper())


DATA = ("data", "train", "descriptions", "attributes", "no_spell")
SVR = ("gamma", "c", "epsilon", "tolerance")
IR = ("lambda", "mu", "k1", "b")
EMB = ("dim", "epochs", "min_count", "window", "negatives", "workers")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prodsearch", description="Product search relevance prediction.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key = value file of option defaults")
    parser.add_argument("--deterministic", action="store_true", help="force single-threaded numerics")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ingest", help="load the tables and write per-field index caches")
    _add_options(p, DATA + ("test", "out"))
    p = sub.add_parser("stats", help="corpus statistics")
    _add_options(p, DATA + ("test",))
    p = sub.add_parser("featurize", help="write a feature-matrix CSV")
    _add_options(p, DATA + ("model", "out", "seed", "top_k") + IR + EMB)
    p = sub.add_parser("embed-train", help="train word or paragraph vectors")
    _add_options(p, DATA + ("test", "model", "out", "seed") + EMB)
    p = sub.add_parser("train", help="fit a model on the whole training table")
    _add_options(p, DATA + ("model", "out", "seed", "top_k", "decoder") + SVR + IR + EMB)
    p = sub.add_parser("predict", help="score a test table with a trained model")
    _add_options(p, DATA + ("test", "model_file", "out"))
    p = sub.add_parser("evaluate", help="k-fold cross-validation report")
    _add_options(p, DATA + ("model", "k", "seed", "out", "top_k", "decoder") + SVR + IR + EMB)
    p = sub.add_parser("grid-gamma", help="cross-validate over a grid of RBF widths")
    _add_options(p, DATA + ("model", "k", "seed", "out", "gammas", "top_k") + SVR + IR + EMB)
    return parser


def _read_config(path: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from exc
    out = {}
    for key, raw in cp["run"].items():
        key = key.replace("-", "_")
        if key not in OPTIONS:
            raise UsageError(f"unknown config key {key!r} in {path}")
        typ, _ = OPTIONS[key]
        try:
            out[key] = raw.strip().lower() in ("1", "true", "yes", "on") if typ is bool else typ(raw.strip())
        except ValueError as exc:
            raise UsageError(f"config key {key!r}: {exc}") from exc
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    opts = {k: d for k, (_, d) in OPTIONS.items()}
    if args.config:
        opts.update(_read_config(args.config))
    for k in OPTIONS:
        v = getattr(args, "lam" if k == "lambda" else k, None)
        if v is not None:
            opts[k] = v
    opts["deterministic"] = args.deterministic
    if args.deterministic:
        opts["workers"] = 1
    return opts


# ---------------------------------------------------------------------------
# helpers


def _paths(o: dict) -> tuple[Path, Path, Path | None]:
    data = Path(o["data"]) if o["data"] else None

    def pick(key, default_name, required=True):
        if o[key]:
            return Path(o[key])
        if data is not None:
            p = data / default_name
            if p.exists() or required:
                return p
        if required:
            raise UsageError(f"--{key} (or --data) is required")
        return None

    return pick("train", "train.csv"), pick("descriptions", "product_descriptions.csv"), pick("attributes", "attributes.csv", False)


def _test_path(o: dict, required: bool) -> Path | None:
    if o["test"]:
        return Path(o["test"])
    if o["data"] and (Path(o["data"]) / "test.csv").exists():
        return Path(o["data"]) / "test.csv"
    if required:
        raise UsageError("--test (or a test.csv under --data) is required")
    return None


def _pipeline_config(o: dict) -> PipelineConfig:
    return PipelineConfig(spell_correct=not o["no_spell"])


def _settings(o: dict) -> ModelSettings:
    try:
        return ModelSettings(
            svr=SvrConfig(c=o["c"], gamma=o["gamma"], epsilon=o["epsilon"], tolerance=o["tolerance"]),
            indri=IndriParams(lam=o["lambda"], mu=o["mu"]),
            bm25=Bm25Params(k1=o["k1"], b=o["b"]),
            embedding=SkipgramConfig(
                dimension=o["dim"],
                window=o["window"],
                negatives=o["negatives"],
                epochs=o["epochs"],
                min_count=o["min_count"],
                seed=o["seed"],
                workers=o["workers"],
            ),
            unigram_top_k=o["top_k"],
            decoder=o["decoder"],
            seed=o["seed"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _check_model(name: str, allowed=MODEL_NAMES) -> None:
    if name not in allowed:
        raise UsageError(f"unknown model {name!r}; choose from {', '.join(allowed)}")


def _load(o: dict, with_test: bool = False):
    train, desc, attrs = _paths(o)
    test = _test_path(o, False) if with_test else None
    instances, products = load_tables(train, desc, attrs, [test] if test else [])
    return instances, products


def _require_out(o: dict) -> Path:
    if not o["out"]:
        raise UsageError("--out is required")
    return Path(o["out"])


def _header(o: dict, corpus: PreparedCorpus, name: str) -> dict:
    s = _settings(o)
    h = {
        "prodsearch_version": __version__,
        "model": name,
        "pipeline_fingerprint": corpus.pipeline.config.fingerprint(),
        "svr": asdict(s.svr),
        "indri": asdict(s.indri),
        "bm25": asdict(s.bm25),
        "deterministic": o["deterministic"],
    }
    if name == "unigram" or name == "stacked":
        h["unigram_top_k"] = s.unigram_top_k
    if name in ("word2vec", "doc2vec", "combined"):
        h["embedding"] = asdict(s.embedding)
        h["decoder"] = s.decoder
    return h


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(o: dict) -> int:
    out = _require_out(o)
    instances, products = _load(o, with_test=True)
    out.mkdir(parents=True, exist_ok=True)
    cfg = _pipeline_config(o)
    for fld in FIELDS:
        idx, stats = build_index(products, fld, cfg)
        save_index(out / f"index_{fld}.bin", idx, cfg.fingerprint())
        print(f"{fld}: {stats.num_documents} documents, {len(idx.postings)} terms, {stats.collection_length} tokens")
    print(f"{len(instances)} training instances, {len(products)} products")
    return EXIT_OK


def cmd_stats(o: dict) -> int:
    instances, products = _load(o, with_test=True)
    s = corpus_stats(products, instances, _pipeline_config(o))

    def rng(v):
        return "-" if v is None else f"[{v[0]} to {v[1]}]"

    print(f"Number of unique products: {s.num_products}")
    print(f"Number of training instances: {len(instances)}")
    for fld in ("title", "description", "search_term"):
        print(f"Unique unigrams in {fld}: {s.unique_unigrams_per_field[fld]}")
        print(f"Words per {fld}: {rng(s.word_count_range_per_field[fld])}")
        print(f"Term frequency range in {fld}: {rng(s.term_frequency_range_per_field[fld])}")
    return EXIT_OK


def cmd_featurize(o: dict) -> int:
    _check_model(o["model"], FEATURE_MODELS)
    out = _require_out(o)
    instances, products = _load(o)
    corpus = PreparedCorpus.build(products, _pipeline_config(o))
    settings = _settings(o)
    prepare_embeddings(o["model"], corpus, instances, settings)
    model = FittedModel(o["model"], settings=settings)
    if o["model"] == "unigram":
        from .features import UnigramVocabulary

        model.vocabulary = UnigramVocabulary(settings.unigram_top_k).fit(corpus.unigram_documents(instances)).terms
    model.features(corpus, instances).to_csv(out)
    print(f"wrote {len(instances)} rows to {out}")
    return EXIT_OK


def cmd_embed_train(o: dict) -> int:
    _check_model(o["model"], EMBEDDING_MODELS)
    out = _require_out(o)
    instances, products = _load(o, with_test=True)
    corpus = PreparedCorpus.build(products, _pipeline_config(o))
    settings = _settings(o)
    if o["model"] == "word2vec":
        table = corpus.train_word_vectors(settings.embedding, instances)
        table.save(out)
        print(f"wrote {table.vocab_size} x {table.dimension} word vectors to {out}")
    else:
        pv = corpus.train_paragraph_vectors(settings.embedding)
        pv.save(out)
        print(f"wrote {len(pv.doc_ids)} x {pv.dimension} paragraph vectors to {out}.*")
    return EXIT_OK


def cmd_train(o: dict) -> int:
    name = o["model"]
    _check_model(name)
    out = _require_out(o)
    instances, products = _load(o)
    corpus = PreparedCorpus.build(products, _pipeline_config(o))
    settings = _settings(o)
    prepare_embeddings(name, corpus, instances, settings)
    model = fit_model(name, corpus, instances, settings)
    bundle = model.to_dict()
    bundle["pipeline"] = {"spell_correct": not o["no_spell"]}
    if corpus.word_table is not None:
        bundle["word_vectors"] = out.name + ".w2v.txt"
        corpus.word_table.save(out.parent / bundle["word_vectors"])
    if corpus.paragraphs is not None:
        bundle["paragraph_vectors"] = out.name + ".pv"
        corpus.paragraphs.save(out.parent / bundle["paragraph_vectors"])
    out.write_text(json.dumps(bundle, indent=1), encoding="utf-8")
    print(f"trained {name} on {len(instances)} instances -> {out}")
    return EXIT_OK


def cmd_predict(o: dict) -> int:
    if not o["model_file"]:
        raise UsageError("--model-file is required")
    mpath = Path(o["model_file"])
    if not mpath.exists():
        raise DataError(f"model file not found: {mpath}")
    out = _require_out(o)
    try:
        bundle = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{mpath}: not a model file ({exc})") from exc
    model = FittedModel.from_dict(bundle)
    test = _test_path(o, True)
    rows = load_instances(test)
    _, products = load_tables(_paths(o)[0], _paths(o)[1], _paths(o)[2], [test])
    cfg = PipelineConfig(spell_correct=bundle.get("pipeline", {}).get("spell_correct", True))
    corpus = PreparedCorpus.build(products, cfg)
    if "word_vectors" in bundle:
        corpus.word_table = EmbeddingTable.load(mpath.parent / bundle["word_vectors"])
    if "paragraph_vectors" in bundle:
        corpus.paragraphs = ParagraphVectors.load(mpath.parent / bundle["paragraph_vectors"], model.settings.embedding)
    pred = model.predict(corpus, rows)
    pred = np.clip(pred, 1.0, 3.0)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "relevance"])
        for r, p in zip(rows, pred):
            w.writerow([r.id, repr(float(p))])
    print(f"wrote {len(rows)} predictions to {out}")
    return EXIT_OK


def _evaluate_one(o: dict, corpus, instances, name: str):
    settings = _settings(o)
    return evaluate_model(name, corpus, instances, o["k"], o["seed"], settings, header=_header(o, corpus, name))


def cmd_evaluate(o: dict) -> int:
    name = o["model"]
    _check_model(name)
    out = _require_out(o)
    instances, products = _load(o)
    corpus = PreparedCorpus.build(products, _pipeline_config(o))
    report = _evaluate_one(o, corpus, instances, name)
    out.mkdir(parents=True, exist_ok=True)
    report.write(out / "report.json")
    report.write_predictions(out / "predictions.csv")
    flag = " (undefined: constant predictions)" if report.pearson_undefined else ""
    print(f"{name}: RMSE {report.rmse:.4f}  Pearson {report.pearson:.4f}{flag}  n={report.n} k={o['k']}")
    return EXIT_OK


def cmd_grid_gamma(o: dict) -> int:
    name = o["model"]
    _check_model(name, SVR_MODELS)
    out = _require_out(o)
    if o["gammas"]:
        try:
            gammas = [float(g) for g in o["gammas"].split(",") if g.strip()]
        except ValueError as exc:
            raise UsageError(f"--gammas: {exc}") from exc
    else:
        gammas = list(DEFAULT_GAMMAS)
    instances, products = _load(o)
    corpus = PreparedCorpus.build(products, _pipeline_config(o))
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for g in gammas:
        og = dict(o, gamma=g)
        rep = _evaluate_one(og, corpus, instances, name)
        rep.write(out / f"report_gamma_{g:.0e}.json")
        rows.append({"gamma": g, "rmse": rep.rmse, "pearson": rep.pearson})
    best = min(range(len(rows)), key=lambda i: (rows[i]["rmse"], i))
    for i, r in enumerate(rows):
        mark = "  <- best" if i == best else ""
        print(f"gamma {r['gamma']:.0e}: RMSE {r['rmse']:.4f}  Pearson {r['pearson']:.4f}{mark}")
    summary = {"model": name, "seed": o["seed"], "k": o["k"], "reports": rows, "best_gamma": rows[best]["gamma"]}
    (out / "grid.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "featurize": cmd_featurize,
    "embed-train": cmd_embed_train,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "grid-gamma": cmd_grid_gamma,
}


def _single_thread() -> None:
    if _accel.USE_JIT:
        import numba

        numba.set_num_threads(1)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
        opts = resolve(args)
        if args.deterministic:
            _single_thread()
        return COMMANDS[args.command](opts)
    except (UsageError, UnknownModel) as exc:
        print(f"prodsearch: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"prodsearch: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"prodsearch: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"prodsearch: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ProdsearchError as exc:
        print(f"prodsearch: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
