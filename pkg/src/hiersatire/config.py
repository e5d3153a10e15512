"""Run configuration: flat JSON keys mirroring CLI flag names."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from . import __version__
from .errors import UsageError

DEFAULTS: dict = {
    "corpus": None,
    "split": None,
    "embeddings": None,
    "lexicon": None,
    "tagger_corpus": None,
    "pretagged": None,
    "checkpoint": None,
    "resume": None,
    "out": None,
    "variant": "4LHNPD",
    "seed": 0,
    "max_epochs": 100,
    "patience": 5,
    "learning_rate": 0.3,
    "decay": 0.9,
    "dropout": 0.5,
    "hidden": 60,
    "filters": 30,
    "window": 3,
    "char_embed_dim": 30,
    "word_embed_dim": 100,
    "max_chars": 24,
    "max_words": 128,
    "max_paragraphs": 16,
    "min_count": 2,
    "tagger_epochs": 10,
    "doc_id": None,
    "top_k": 3,
    "grams": "word",
    "with_lf": False,
    "c": None,
    "baseline_epochs": 2000,
}

# Keys that do not change any computed number.
_UNHASHED = {"out", "checkpoint", "resume", "doc_id"}


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"--config: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: malformed JSON in {path}: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(obj, dict):
        raise UsageError("--config: top level must be a JSON object")
    out = {}
    for key, value in obj.items():
        k = key.replace("-", "_")
        if k not in DEFAULTS:
            raise UsageError(f"--config: unknown key {key!r}")
        out[k] = value
    return out


def resolve(flags: dict, config_path=None) -> dict:
    """Defaults, then the config file, then explicitly given flags."""
    cfg = dict(DEFAULTS)
    if config_path:
        cfg.update(load_config_file(config_path))
    cfg.update({k: v for k, v in flags.items() if v is not None and k in DEFAULTS})
    if cfg["out"] is None:
        cfg["out"] = os.environ.get("SATIRE_HOME") or "satire-out"
    return cfg


def require(cfg: dict, *keys: str) -> None:
    for k in keys:
        if cfg.get(k) in (None, ""):
            raise UsageError(f"missing required flag --{k.replace('_', '-')}")


def require_paths(cfg: dict, *keys: str) -> None:
    for k in keys:
        value = cfg.get(k)
        if value is not None and not Path(value).exists():
            raise UsageError(f"--{k.replace('_', '-')}: no such file or directory: {value}")


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in sorted(cfg.items()) if k not in _UNHASHED}
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def provenance(cfg: dict) -> dict:
    """The fields every artifact embeds."""
    return {"seed": cfg["seed"], "config_hash": config_hash(cfg), "version": __version__}
