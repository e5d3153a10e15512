"""Single-file checkpoint container.

Layout::

    b"4LHN1" | u64 little-endian header length | UTF-8 JSON header | payload

The payload is the concatenation of every named array as little-endian
float64; the header's manifest gives each array's name, shape and byte
offset into the payload. The header also embeds the model and run
configuration, vocabulary, feature names, lexicon text and tagger weights,
so a checkpoint is self-sufficient for evaluation.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_hash
from .corpus import Vocabulary
from .errors import CheckpointError, DataError
from .hiernet import HierNet, ModelConfig
from .lingfeat import FeatureScaler, Lexicon
from .pipeline import Preprocessor
from .postag import TaggerModel

MAGIC = b"4LHN1"
FORMAT_VERSION = 1
_SCALERS = ("paragraph", "document")


@dataclass
class Bundle:
    """A trained model with everything needed to featurize new documents."""

    model: HierNet
    preprocessor: Preprocessor
    lexicon_text: str
    tagger: TaggerModel | None
    run_config: dict

    @property
    def lexicon(self) -> Lexicon:
        return Lexicon.parse(self.lexicon_text)


def _arrays(bundle: Bundle) -> dict[str, np.ndarray]:
    arrays = dict(bundle.model.state_dict())
    pre = bundle.preprocessor
    for level, sc in zip(_SCALERS, (pre.para_scaler, pre.doc_scaler)):
        arrays[f"scaler.{level}.mean"] = sc.mean
        arrays[f"scaler.{level}.std"] = sc.std
    return arrays


def save_checkpoint(bundle: Bundle, path) -> Path:
    arrays = _arrays(bundle)
    manifest, offset = [], 0
    for name, arr in arrays.items():
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size * 8
    pre = bundle.preprocessor
    header = {
        "format": FORMAT_VERSION,
        "version": __version__,
        "manifest": manifest,
        "payload_bytes": offset,
        "model_config": bundle.model.config.to_json(),
        "run_config": bundle.run_config,
        "seed": bundle.model.config.seed,
        "vocab": pre.vocab.to_json(),
        "feature_names": list(pre.feature_names),
        "dims": [pre.max_paragraphs, pre.max_words, pre.max_chars],
        "lexicon": bundle.lexicon_text,
        "tagger": bundle.tagger.to_json() if bundle.tagger is not None else None,
    }
    header["config_hash"] = config_hash(bundle.run_config) if bundle.run_config else None
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for arr in arrays.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return path


def read_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Header and named arrays, validated against the container layout."""
    try:
        raw = Path(path).read_bytes()
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint not found: {path}") from None
    if raw[:len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad checkpoint magic")
    pos = len(MAGIC)
    if len(raw) < pos + 8:
        raise CheckpointError("checkpoint payload truncated (file ends inside the header)")
    (n,) = struct.unpack("<Q", raw[pos:pos + 8])
    pos += 8
    if len(raw) < pos + n:
        raise CheckpointError("checkpoint payload truncated (file ends inside the header)")
    try:
        header = json.loads(raw[pos:pos + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise CheckpointError(f"{path}: corrupt checkpoint header") from None
    if header.get("format") != FORMAT_VERSION:
        raise CheckpointError(f"checkpoint format version {header.get('format')} "
                              f"(written by hiersatire {header.get('version')}) does not match "
                              f"supported version {FORMAT_VERSION} (hiersatire {__version__})")
    payload = memoryview(raw)[pos + n:]
    if len(payload) < header["payload_bytes"]:
        raise CheckpointError("checkpoint payload truncated")
    arrays = {}
    for entry in header["manifest"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        start = entry["offset"]
        if start + 8 * count > len(payload):
            raise CheckpointError("checkpoint payload truncated")
        arrays[entry["name"]] = np.frombuffer(payload[start:start + 8 * count],
                                              dtype="<f8").astype(np.float64).reshape(shape)
    return header, arrays


def load_checkpoint(path) -> Bundle:
    header, arrays = read_checkpoint(path)
    scalers = {}
    for level in _SCALERS:
        try:
            scalers[level] = FeatureScaler(arrays.pop(f"scaler.{level}.mean"),
                                           arrays.pop(f"scaler.{level}.std"))
        except KeyError as exc:
            raise CheckpointError(f"checkpoint lacks array {exc.args[0]!r}") from None
    config = ModelConfig.from_json(header["model_config"])
    model = HierNet(config)
    try:
        model.load_state(arrays)
    except DataError as exc:
        raise CheckpointError(str(exc)) from None
    P, W, C = header["dims"]
    pre = Preprocessor(Vocabulary.from_json(header["vocab"]), scalers["paragraph"],
                       scalers["document"], tuple(header["feature_names"]), P, W, C)
    tagger = TaggerModel.from_json(header["tagger"]) if header.get("tagger") else None
    return Bundle(model, pre, header["lexicon"], tagger, header.get("run_config") or {})
