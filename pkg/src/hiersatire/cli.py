"""``hiersatire`` command line: one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, baseline, postag
from .checkpoint import Bundle, load_checkpoint, save_checkpoint
from .config import DEFAULTS, provenance, require, require_paths, resolve
from .corpus import load_corpus, load_split_spec, split_by_source, tokenize, write_corpus
from .errors import ConfigError, DataError, UsageError
from .hiernet import VARIANTS, HierNet, evaluate, load_embeddings, train
from .lingfeat import FeatureSchema, FeatureVector, Lexicon, stub_lexicon_text, write_features_csv
from .pipeline import Preprocessor, analyze, corpus_stats

log = logging.getLogger("hiersatire")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- helpers -----------------------------------------------------------------

def _out(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _stamp_csv(path: Path, cfg) -> None:
    prov = provenance(cfg)
    line = f"# seed={prov['seed']} config_hash={prov['config_hash']} version={prov['version']}\n"
    path.write_text(line + path.read_text(encoding="utf-8"), encoding="utf-8")


def _lexicon(cfg) -> tuple[Lexicon, str]:
    if cfg["lexicon"]:
        text = Path(cfg["lexicon"]).read_text(encoding="utf-8")
    else:
        text = stub_lexicon_text()
    return Lexicon.parse(text), text


def _tagger(cfg) -> postag.TaggerModel | None:
    if cfg["pretagged"]:
        return None
    corpus = (postag.read_tagged(cfg["tagger_corpus"]) if cfg["tagger_corpus"]
              else postag.sample_corpus())
    return postag.train_tagger(corpus, epochs=int(cfg["tagger_epochs"]), seed=int(cfg["seed"]))


def _metrics_row(m) -> dict:
    return m.as_percentages()


def _seed_everything(cfg) -> None:
    np.random.seed(int(cfg["seed"]) % 2**32)


def _bundle_data(bundle: Bundle, docs, cfg):
    tagger = bundle.tagger
    if tagger is None and not cfg["pretagged"]:
        raise UsageError("checkpoint has no tagger; missing required flag --pretagged")
    return analyze(docs, bundle.lexicon, tagger, cfg["pretagged"] if tagger is None else None)


def _find(docs, doc_id):
    for d in docs:
        if d.id == doc_id:
            return d
    raise DataError(f"document {doc_id!r} not found in corpus")


# -- commands ----------------------------------------------------------------

def cmd_ingest(cfg) -> str:
    require(cfg, "corpus")
    docs = load_corpus(cfg["corpus"])
    stats = corpus_stats(docs)
    _write_json(_out(cfg) / "corpus_stats.json", {"stats": stats, **provenance(cfg)})
    n_sat = stats["satire"]["documents"]
    return (f"ingest: {len(docs)} documents ({n_sat} satire, {len(docs) - n_sat} true) "
            f"from {len(stats['by_source'])} sources seed={cfg['seed']}")


def cmd_split(cfg) -> str:
    require(cfg, "corpus", "split")
    docs = load_corpus(cfg["corpus"])
    parts = dict(zip(("train", "validation", "test"), split_by_source(docs, load_split_spec(cfg["split"]))))
    out = _out(cfg)
    for name, part in parts.items():
        write_corpus(part, out / f"{name}.jsonl")
    _write_json(out / "split_manifest.json",
                {"counts": {k: len(v) for k, v in parts.items()}, **provenance(cfg)})
    counts = " ".join(f"{k}={len(v)}" for k, v in parts.items())
    return f"split: {counts} seed={cfg['seed']}"


def cmd_tag(cfg) -> str:
    require(cfg, "corpus")
    docs = load_corpus(cfg["corpus"])
    tagger = _tagger({**cfg, "pretagged": None})
    out = _out(cfg) / "tags"
    out.mkdir(exist_ok=True)
    n_tok = 0
    for raw in docs:
        doc = tokenize(raw)
        sents = [list(zip([t.surface for t in s], postag.tag(tagger, s))) for s in doc.sentences]
        n_tok += sum(len(s) for s in sents)
        postag.write_tagged(out / f"{raw.id}.tsv", sents)
    tagger.save(_out(cfg) / "tagger.json")
    _write_json(_out(cfg) / "tag_manifest.json", {"documents": len(docs), "tokens": n_tok,
                                                  **provenance(cfg)})
    return f"tag: {n_tok} tokens in {len(docs)} documents -> {out} seed={cfg['seed']}"


def cmd_features(cfg) -> str:
    require(cfg, "corpus")
    docs = load_corpus(cfg["corpus"])
    lex, _ = _lexicon(cfg)
    schema = FeatureSchema.build(lex)
    data = analyze(docs, lex, _tagger(cfg), cfg["pretagged"], schema)
    rows = [(d.id, [FeatureVector("paragraph", schema, r) for r in d.para_features],
             FeatureVector("document", schema, d.doc_features)) for d in data]
    path = _out(cfg) / "features.csv"
    write_features_csv(path, schema, rows)
    _stamp_csv(path, cfg)
    return f"features: {len(schema)} features x {len(data)} documents -> {path} seed={cfg['seed']}"


def _model_overrides(cfg) -> dict:
    keys = ("variant", "seed", "dropout", "hidden", "filters", "window",
            "char_embed_dim", "word_embed_dim")
    return {k: cfg[k] for k in keys}


def cmd_train(cfg) -> str:
    require(cfg, "corpus", "split")
    _seed_everything(cfg)
    docs = load_corpus(cfg["corpus"])
    tr, va, te = split_by_source(docs, load_split_spec(cfg["split"]))
    if not tr:
        raise DataError("training partition is empty")
    if not va:
        raise DataError("validation partition is empty")
    lex, lex_text = _lexicon(cfg)
    schema = FeatureSchema.build(lex)
    tagger = _tagger(cfg)
    d_tr, d_va, d_te = (analyze(p, lex, tagger, cfg["pretagged"], schema) if p else []
                        for p in (tr, va, te))
    if cfg["resume"]:
        bundle = load_checkpoint(cfg["resume"])
        if bundle.model.config.variant != cfg["variant"]:
            raise DataError(f"cannot resume: checkpoint variant {bundle.model.config.variant} "
                            f"differs from --variant {cfg['variant']}")
        model, pre = bundle.model, bundle.preprocessor
    else:
        pre = Preprocessor.fit(d_tr, schema, int(cfg["min_count"]), int(cfg["max_paragraphs"]),
                               int(cfg["max_words"]), int(cfg["max_chars"]))
        mc = pre.model_config(**_model_overrides(cfg))
        pretrained = (load_embeddings(cfg["embeddings"], pre.vocab, mc.word_embed_dim)
                      if cfg["embeddings"] else None)
        model = HierNet(mc, pretrained)
    history = train(model, pre.examples(d_tr), pre.examples(d_va), max_epochs=int(cfg["max_epochs"]),
                    patience=int(cfg["patience"]), initial_lr=float(cfg["learning_rate"]),
                    decay=float(cfg["decay"]))
    out = _out(cfg)
    run_cfg = {k: cfg[k] for k in DEFAULTS}
    save_checkpoint(Bundle(model, pre, lex_text, tagger, run_cfg), out / "model.bin")
    split = {"validation": _metrics_row(evaluate(model, pre.examples(d_va))),
             "test": _metrics_row(evaluate(model, pre.examples(d_te))) if d_te else None}
    metrics = {"variant": cfg["variant"], "split": split, "epochs": len(history.f1),
               "best_epoch": history.best_epoch, **provenance(cfg)}
    _write_json(out / "metrics.json", metrics)
    test_f1 = split["test"]["f1"] if split["test"] else "n/a"
    return (f"train: {cfg['variant']} seed={cfg['seed']} epochs={len(history.f1)} "
            f"best_epoch={history.best_epoch} val_f1={split['validation']['f1']} "
            f"test_f1={test_f1} -> {out / 'model.bin'}")


def cmd_evaluate(cfg) -> str:
    require(cfg, "checkpoint", "corpus")
    bundle = load_checkpoint(cfg["checkpoint"])
    docs = load_corpus(cfg["corpus"])
    if cfg["split"]:
        _, va, te = split_by_source(docs, load_split_spec(cfg["split"]))
        parts = {"validation": va, "test": te}
    else:
        parts = {"validation": [], "test": docs}
    pre, model = bundle.preprocessor, bundle.model
    split = {name: (_metrics_row(evaluate(model, pre.examples(_bundle_data(bundle, part, cfg))))
                    if part else None) for name, part in parts.items()}
    variant = model.config.variant
    result = {"variant": variant, "split": split, "checkpoint_seed": model.config.seed,
              **provenance(cfg)}
    out = _out(cfg)
    _write_json(out / "evaluation.json", result)
    cols = ["acc", "pre", "rec", "f1"]
    header = ["model"] + [f"{p}_{c}" for p in ("validation", "test") for c in cols]
    row = [variant] + [("" if split[p] is None else f"{split[p][c]:.2f}")
                       for p in ("validation", "test") for c in cols]
    (out / "evaluation.tsv").write_text("\t".join(header) + "\n" + "\t".join(row) + "\n",
                                        encoding="utf-8")
    return "evaluate: " + " ".join(f"{h}={v}" for h, v in zip(header, row) if v) + \
        f" seed={cfg['seed']}"


def cmd_predict(cfg) -> str:
    require(cfg, "checkpoint", "corpus")
    bundle = load_checkpoint(cfg["checkpoint"])
    docs = load_corpus(cfg["corpus"])
    data = _bundle_data(bundle, docs, cfg)
    path = _out(cfg) / "predictions.jsonl"
    n_sat = 0
    prov = provenance(cfg)
    with open(path, "w", encoding="utf-8") as fh:
        for ex in bundle.preprocessor.examples(data):
            p = bundle.model.predict_proba(ex)
            n_sat += p > 0.5
            fh.write(json.dumps({"id": ex.id, "prob_satire": p,
                                 "label": "satire" if p > 0.5 else "true", **prov},
                                sort_keys=True) + "\n")
    return f"predict: {len(docs)} documents, {n_sat} predicted satire -> {path} seed={cfg['seed']}"


def cmd_attention(cfg) -> str:
    require(cfg, "checkpoint", "corpus", "doc_id")
    bundle = load_checkpoint(cfg["checkpoint"])
    raw = _find(load_corpus(cfg["corpus"]), cfg["doc_id"])
    (data,) = _bundle_data(bundle, [raw], cfg)
    ex = bundle.preprocessor.example(data)
    html_text = analysis.attention_report(bundle.model, ex, raw.paragraphs, meta=provenance(cfg))
    path = analysis.write_attention_report(_out(cfg), raw.id, html_text)
    alpha = bundle.model.attention(ex).alpha
    return (f"attention: {raw.id} {alpha.size} paragraphs, top paragraph {int(np.argmax(alpha))} "
            f"-> {path} seed={cfg['seed']}")


def _schema_for(bundle: Bundle) -> FeatureSchema:
    schema = FeatureSchema.build(bundle.lexicon)
    if schema.names != bundle.preprocessor.feature_names:
        raise DataError("checkpoint feature names do not match its embedded lexicon")
    return schema


def cmd_importance(cfg) -> str:
    require(cfg, "checkpoint")
    bundle = load_checkpoint(cfg["checkpoint"])
    report = analysis.importance_report(bundle.model, _schema_for(bundle))
    fams = analysis.family_importance(report)
    out = _out(cfg)
    report.write_csv(out / "importance.csv")
    analysis.write_family_csv(out / "family_importance.csv", fams)
    for p in ("importance.csv", "family_importance.csv"):
        _stamp_csv(out / p, cfg)
    top = max(((lvl, f) for lvl, fs in fams.items() for f in fs),
              key=lambda lf: fams[lf[0]][lf[1]]["scaled"])
    return f"importance: top family {top[1]} ({top[0]}) -> {out / 'family_importance.csv'} seed={cfg['seed']}"


def cmd_stats(cfg) -> str:
    require(cfg, "checkpoint", "corpus")
    bundle = load_checkpoint(cfg["checkpoint"])
    schema = _schema_for(bundle)
    data = _bundle_data(bundle, load_corpus(cfg["corpus"]), cfg)
    examples = bundle.preprocessor.examples(data)
    doc_rows = {lab: np.array([d.doc_features for d in data if d.label == lab]).reshape(-1, len(schema))
                for lab in (0, 1)}
    raw_para = {d.id: d.para_features for d in data}
    top = analysis.top_k_paragraph_stats(bundle.model, examples, raw_para, int(cfg["top_k"]))
    stats = (analysis.feature_stats(schema, "document", doc_rows[1], doc_rows[0])
             + analysis.feature_stats(schema, f"top{cfg['top_k']}_paragraph", top[1], top[0]))
    path = _out(cfg) / "feature_stats.csv"
    analysis.write_stats_csv(path, stats)
    _stamp_csv(path, cfg)
    sig = sum(1 for s in stats if s.p == s.p and s.p < 0.01)
    return f"stats: {len(stats)} rows, {sig} with p<0.01 -> {path} seed={cfg['seed']}"


def cmd_baseline(cfg) -> str:
    require(cfg, "corpus", "split")
    docs = load_corpus(cfg["corpus"])
    tr, va, te = split_by_source(docs, load_split_spec(cfg["split"]))
    if not tr or not va:
        raise DataError("baseline needs non-empty train and validation partitions")
    grams = cfg["grams"]
    if grams not in ("word", "char", "both"):
        raise UsageError("--grams must be word, char or both")
    feat = baseline.NGramFeaturizer(word_orders=(1, 2) if grams in ("word", "both") else (),
                                    char_orders=(2, 3) if grams in ("char", "both") else ())
    t_tr, t_va, t_te = ([tokenize(d) for d in p] for p in (tr, va, te))
    lf = {}
    if cfg["with_lf"]:
        lex, _ = _lexicon(cfg)
        schema = FeatureSchema.build(lex)
        tagger = _tagger(cfg)
        for name, part in (("train", tr), ("validation", va), ("test", te)):
            lf[name] = np.array([d.doc_features for d in analyze(part, lex, tagger, cfg["pretagged"], schema)]) \
                if part else None
        feat.fit(t_tr, lf["train"], schema.names)
    else:
        feat.fit(t_tr)
    X = {n: feat.transform(p, lf.get(n)) if p else None
         for n, p in (("train", t_tr), ("validation", t_va), ("test", t_te))}
    y = {n: np.array([int(d.label) for d in p]) for n, p in (("train", tr), ("validation", va), ("test", te))}
    epochs = int(cfg["baseline_epochs"])
    if cfg["c"] is not None:
        model = baseline.train_linear(X["train"], y["train"], float(cfg["c"]), epochs, int(cfg["seed"]))
        grid_f1 = {}
    else:
        model, grid_f1 = baseline.select_C(X["train"], y["train"], X["validation"], y["validation"],
                                           epochs=epochs, seed=int(cfg["seed"]))
    name = f"SVM-{grams}" + ("+LF" if cfg["with_lf"] else "")
    split = {"validation": _metrics_row(baseline.evaluate_linear(model, X["validation"], y["validation"])),
             "test": _metrics_row(baseline.evaluate_linear(model, X["test"], y["test"])) if te else None}
    sat, true = baseline.top_weighted(model, feat.columns, 20)
    out = _out(cfg)
    _write_json(out / "baseline_model.json", {**model.to_json(feat.columns), **provenance(cfg)})
    _write_json(out / "baseline_metrics.json", {
        "variant": name, "split": split, "C": model.C,
        "validation_f1_by_C": {repr(c): round(100 * f, 2) for c, f in grid_f1.items()},
        "top_satire": sat, "top_true": true,
        "solver": "primal subgradient descent (class-balanced hinge), not an external SVM library",
        **provenance(cfg)})
    return (f"baseline: {name} C={model.C:g} columns={len(feat.columns)} "
            f"val_f1={split['validation']['f1']} seed={cfg['seed']}")


COMMANDS = {
    "ingest": (cmd_ingest, "validate a corpus and write per-label statistics"),
    "split": (cmd_split, "partition a corpus by source"),
    "tag": (cmd_tag, "POS-tag a corpus with the averaged perceptron"),
    "features": (cmd_features, "extract paragraph and document linguistic features"),
    "train": (cmd_train, "train a hierarchical model and write checkpoint + metrics"),
    "evaluate": (cmd_evaluate, "score a checkpoint on a corpus"),
    "predict": (cmd_predict, "write per-document satire probabilities"),
    "attention": (cmd_attention, "write an attention heatmap for one document"),
    "importance": (cmd_importance, "linguistic feature and family importance"),
    "stats": (cmd_stats, "satire-vs-true feature statistics with Welch tests"),
    "baseline": (cmd_baseline, "n-gram linear max-margin baseline"),
}

# flag -> (commands, argparse kwargs)
_FLAGS = {
    "corpus": ("ingest split tag features train evaluate predict attention stats baseline", {}),
    "split": ("split train evaluate baseline", {}),
    "embeddings": ("train", {}),
    "lexicon": ("features train baseline", {}),
    "tagger-corpus": ("tag features train baseline", {}),
    "pretagged": ("features train evaluate predict attention stats baseline", {}),
    "checkpoint": ("evaluate predict attention importance stats", {}),
    "resume": ("train", {}),
    "variant": ("train", {"choices": VARIANTS}),
    "max-epochs": ("train", {"type": int}),
    "patience": ("train", {"type": int}),
    "learning-rate": ("train", {"type": float}),
    "decay": ("train", {"type": float}),
    "dropout": ("train", {"type": float}),
    "hidden": ("train", {"type": int}),
    "filters": ("train", {"type": int}),
    "window": ("train", {"type": int}),
    "char-embed-dim": ("train", {"type": int}),
    "word-embed-dim": ("train", {"type": int}),
    "max-chars": ("train", {"type": int}),
    "max-words": ("train", {"type": int}),
    "max-paragraphs": ("train", {"type": int}),
    "min-count": ("train", {"type": int}),
    "tagger-epochs": ("tag features train baseline", {"type": int}),
    "doc-id": ("attention", {}),
    "top-k": ("stats", {"type": int}),
    "grams": ("baseline", {"choices": ("word", "char", "both")}),
    "c": ("baseline", {"type": float}),
    "baseline-epochs": ("baseline", {"type": int}),
}

_PATH_KEYS = ("corpus", "split", "embeddings", "lexicon", "tagger_corpus", "pretagged",
              "checkpoint", "resume")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hiersatire", description="Satirical news detection toolkit.")
    parser.add_argument("--version", action="version", version=f"hiersatire {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON file with flat keys mirroring flag names")
        p.add_argument("--out", help="output directory (default: $SATIRE_HOME or ./satire-out)")
        p.add_argument("--seed", type=int)
        p.add_argument("--verbose", action="store_true")
        for flag, (cmds, kw) in _FLAGS.items():
            if name in cmds.split():
                p.add_argument(f"--{flag}", default=None, **kw)
        if name == "baseline":
            p.add_argument("--with-lf", action="store_true", default=None,
                           help="append scaled document linguistic features")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
        cfg = resolve(flags, args.config)
        require_paths(cfg, *_PATH_KEYS)
        summary = COMMANDS[args.command][0](cfg)
    except (UsageError, ConfigError) as exc:
        print(f"hiersatire: error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"hiersatire: data error: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
