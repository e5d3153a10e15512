"""Post-hoc interpretation: feature importance, satire-vs-true feature
statistics with Welch tests, and attention heatmaps."""
from __future__ import annotations

import csv
import html
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import betainc

from .errors import DataError
from .lingfeat import FAMILIES, FeatureSchema

LEVELS = ("paragraph", "document")


def feature_importance(W) -> np.ndarray:
    """Mean absolute outgoing weight per feature row of ``W`` (features x outputs)."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.size == 0:
        raise DataError("feature_importance needs a non-empty 2-D weight matrix")
    return np.abs(W).mean(axis=1)


@dataclass(frozen=True)
class ImportanceEntry:
    name: str
    family: str
    level: str
    importance: float


@dataclass
class ImportanceReport:
    entries: list[ImportanceEntry]

    def level(self, level: str) -> list[ImportanceEntry]:
        return [e for e in self.entries if e.level == level]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "family", "feature", "importance"])
            for e in self.entries:
                w.writerow([e.level, e.family, e.name, repr(e.importance)])


def importance_report(model, schema: FeatureSchema) -> ImportanceReport:
    """Importance from the first layer of each feature MLP present in ``model``."""
    entries = []
    for level, key in (("paragraph", "para_mlp.W1"), ("document", "doc_mlp.W1")):
        if key not in model.state_dict():
            continue
        I = feature_importance(model[key].data)
        if I.size != len(schema):
            raise DataError(f"{key} has {I.size} rows but the schema has {len(schema)} features")
        entries += [ImportanceEntry(n, f, level, float(v))
                    for n, f, v in zip(schema.names, schema.families, I)]
    if not entries:
        raise DataError("model has no linguistic-feature pathway")
    return ImportanceReport(entries)


def family_importance(report: ImportanceReport) -> dict[str, dict[str, dict[str, float]]]:
    """``{level: {family: {"mean": .., "scaled": ..}}}``; scaling divides by the
    largest family mean over both levels."""
    raw: dict[str, dict[str, float]] = {}
    for level in LEVELS:
        rows = report.level(level)
        if not rows:
            continue
        fams = [f for f in FAMILIES if any(e.family == f for e in rows)]
        fams += sorted({e.family for e in rows} - set(fams))
        raw[level] = {f: float(np.mean([e.importance for e in rows if e.family == f])) for f in fams}
    top = max((v for fams in raw.values() for v in fams.values()), default=0.0)
    return {level: {f: {"mean": v, "scaled": v / top if top > 0 else 0.0} for f, v in fams.items()}
            for level, fams in raw.items()}


def write_family_csv(path, families) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "family", "mean_importance", "scaled_global_max"])
        for level, fams in families.items():
            for f, v in fams.items():
                w.writerow([level, f, repr(v["mean"]), repr(v["scaled"])])


# -- statistics --------------------------------------------------------------

def welch_t_test(a, b) -> tuple[float, float]:
    """Two-sided Welch t-test; returns ``(t, p)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise DataError("each sample needs at least two values")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    se2 = va + vb
    if not se2 > 0:
        raise DataError("both samples have zero variance")
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    df = se2 ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return float(t), min(p, 1.0)


def top_k_indices(alpha, k: int = 3) -> np.ndarray:
    """Indices of the k largest weights, ties to the lower index."""
    alpha = np.asarray(alpha)
    return np.argsort(-alpha, kind="stable")[:k]


def top_k_paragraph_stats(model, examples, raw_paragraph_features: Mapping[str, np.ndarray],
                          k: int = 3) -> dict[int, np.ndarray]:
    """Pool raw paragraph features of each document's k most-attended
    paragraphs, per class label. Returns ``{label: rows}``."""
    pooled: dict[int, list] = {0: [], 1: []}
    for ex in examples:
        alpha = model.attention(ex).alpha
        feats = np.asarray(raw_paragraph_features[ex.id], dtype=float)
        for i in top_k_indices(alpha, k):
            pooled[int(ex.label)].append(feats[i])
    width = next((len(r) for rows in pooled.values() for r in rows), 0)
    return {lab: np.array(rows).reshape(-1, width) for lab, rows in pooled.items()}


@dataclass(frozen=True)
class FeatureStat:
    name: str
    family: str
    level: str
    satire_mean: float
    satire_std: float
    true_mean: float
    true_std: float
    t: float
    p: float


def feature_stats(schema: FeatureSchema, level: str, satire: np.ndarray,
                  true: np.ndarray) -> list[FeatureStat]:
    """Per-feature class means/stds with a Welch test; t and p are NaN when
    the test is undefined (constant feature or fewer than two samples)."""
    satire = np.asarray(satire, dtype=float).reshape(-1, len(schema))
    true = np.asarray(true, dtype=float).reshape(-1, len(schema))
    out = []
    for j, (name, fam) in enumerate(zip(schema.names, schema.families)):
        a, b = satire[:, j], true[:, j]
        try:
            t, p = welch_t_test(a, b)
        except DataError:
            t = p = float("nan")

        def ms(x):
            return (float(x.mean()), float(x.std(ddof=1))) if x.size > 1 else \
                (float(x.mean()) if x.size else float("nan"), float("nan"))
        (sm, ss), (tm, ts) = ms(a), ms(b)
        out.append(FeatureStat(name, fam, level, sm, ss, tm, ts, t, p))
    return out


def write_stats_csv(path, stats: Sequence[FeatureStat]) -> None:
    cols = ["level", "family", "feature", "satire_mean", "satire_std",
            "true_mean", "true_std", "t", "p"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for s in stats:
            nums = [s.satire_mean, s.satire_std, s.true_mean, s.true_std, s.t, s.p]
            w.writerow([s.level, s.family, s.name,
                        *("" if math.isnan(x) else repr(x) for x in nums)])


# -- attention heatmap -------------------------------------------------------

def scaled_attention(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    return alpha / alpha.max()


def render_attention(doc_id: str, paragraphs: Sequence[str], alpha, prob: float | None = None,
                     meta: Mapping[str, object] | None = None) -> str:
    """Self-contained HTML: one shaded block per paragraph with raw and scaled scores."""
    alpha = np.asarray(alpha, dtype=float)
    if len(paragraphs) != alpha.size:
        raise DataError(f"document {doc_id!r}: {len(paragraphs)} paragraphs but {alpha.size} weights")
    scaled = scaled_attention(alpha)
    head = (f"<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
            f"<title>attention: {html.escape(doc_id)}</title>"
            + "".join(f"<meta name=\"{html.escape(str(k))}\" content=\"{html.escape(str(v))}\">"
                      for k, v in (meta or {}).items())
            + "</head>\n"
            "<body style=\"font-family:Georgia,serif;max-width:50em;margin:2em auto\">\n"
            f"<h1 style=\"font-size:1.2em\">{html.escape(doc_id)}</h1>\n")
    if prob is not None:
        head += f"<p style=\"color:#555\">P(satire) = {prob:.4f}</p>\n"
    blocks = []
    for i, (text, a, s) in enumerate(zip(paragraphs, alpha, scaled)):
        blocks.append(
            f"<div class=\"para\" data-index=\"{i}\" style=\"display:flex;gap:1em;margin:.4em 0;"
            f"padding:.5em;background:rgba(220,40,40,{s:.3f})\">"
            f"<div style=\"flex:1\">{html.escape(text)}</div>"
            f"<div style=\"white-space:nowrap;font-family:monospace\">"
            f"<span class=\"alpha\">{a:.4f}</span> "
            f"<span class=\"scaled\" style=\"font-weight:bold\">{s:.2f}</span></div></div>")
    return head + "\n".join(blocks) + "\n</body></html>\n"


def attention_report(model, example, paragraphs: Sequence[str], meta=None) -> str:
    """HTML heatmap for the true paragraphs of ``example`` under ``model``."""
    out = model.forward(example)
    return render_attention(example.id, list(paragraphs)[:out.alpha.size], out.alpha,
                            float(out.prob.data[0]), meta)


def write_attention_report(out_dir, doc_id: str, html_text: str) -> Path:
    path = Path(out_dir) / f"{doc_id}.attention.html"
    path.write_text(html_text, encoding="utf-8")
    return path
