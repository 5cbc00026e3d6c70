"""Precision/recall/F1, cross-lingual evaluation matrices, and AVG/delta reports.

Counts are micro-aggregated over documents. The cross-lingual summary
averages F1 over all targets including source->source; the fluctuation is
the source->source F1 minus the mean over the other targets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .corpus import Document
from .encoder import EmbeddingCache
from .errors import DataError
from .trainer import ModelParams, TrainConfig, prepare_document, run_document


def round1(x: float) -> float:
    """One-decimal display rounding, half away from zero."""
    quantized = Decimal(repr(round(x, 9))).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return float(quantized)


@dataclass
class MetricsReport:
    tp: int
    fp: int
    fn: int
    precision: float  # percentages, full precision
    recall: float
    f1: float

    def rounded(self) -> tuple[float, float, float]:
        return round1(self.precision), round1(self.recall), round1(self.f1)


def prf1(tp: int, fp: int, fn: int) -> MetricsReport:
    """Percent precision/recall/F1 with zero-denominator conventions."""
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be non-negative")
    p = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    r = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return MetricsReport(tp=tp, fp=fp, fn=fn, precision=p, recall=r, f1=f)


def f1_from_pr(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


def evaluate(
    params: ModelParams,
    corpus: list[Document],
    config: TrainConfig,
    cache: EmbeddingCache | None = None,
) -> MetricsReport:
    """Argmax predictions per candidate pair, counted against gold labels."""
    tp = fp = fn = 0
    for doc in corpus:
        bundle = prepare_document(doc)
        result = run_document(bundle, params, config, cache=cache, compute_grads=False)
        predicted = result.probs.argmax(axis=1) == 0 if len(result.probs) else []
        for k, pair in enumerate(bundle.pairs):
            if predicted[k] and pair.causal:
                tp += 1
            elif predicted[k]:
                fp += 1
            elif pair.causal:
                fn += 1
    return prf1(tp, fp, fn)


@dataclass
class CrossLingualReport:
    source_lang: str
    per_target: dict[str, MetricsReport]
    avg: float
    delta: float | None  # None when no source->source target was evaluated


def cross_lingual_summary(f1_by_target: dict[str, float], source_lang: str) -> tuple[float, float | None]:
    """AVG over all targets (source->source included) and the fluctuation."""
    if not f1_by_target:
        raise ValueError("no targets to summarize")
    avg = float(np.mean(list(f1_by_target.values())))
    if source_lang not in f1_by_target:
        return avg, None
    others = [f for lang, f in f1_by_target.items() if lang != source_lang]
    if not others:
        return avg, 0.0
    delta = f1_by_target[source_lang] - float(np.mean(others))
    return avg, delta


def run_cross_lingual(
    params: ModelParams,
    targets: dict[str, list[Document]],
    source_lang: str,
    config: TrainConfig,
    cache: EmbeddingCache | None = None,
) -> CrossLingualReport:
    """Evaluate one source-trained model on every target corpus."""
    if not targets:
        raise ValueError("at least one target corpus is required")
    per_target = {lang: evaluate(params, corpus, config, cache) for lang, corpus in targets.items()}
    avg, delta = cross_lingual_summary({lang: m.f1 for lang, m in per_target.items()}, source_lang)
    return CrossLingualReport(source_lang=source_lang, per_target=per_target, avg=avg, delta=delta)


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------


def _metrics_dict(m: MetricsReport) -> dict:
    return {
        "tp": m.tp,
        "fp": m.fp,
        "fn": m.fn,
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
    }


def metrics_from_dict(data: dict) -> MetricsReport:
    return MetricsReport(
        tp=data["tp"],
        fp=data["fp"],
        fn=data["fn"],
        precision=data["precision"],
        recall=data["recall"],
        f1=data["f1"],
    )


def report_to_dict(report) -> dict:
    if isinstance(report, MetricsReport):
        return _metrics_dict(report)
    return {
        "source_lang": report.source_lang,
        "per_target": {lang: _metrics_dict(m) for lang, m in report.per_target.items()},
        "avg": report.avg,
        "delta": report.delta,
    }


def cross_lingual_from_dict(data: dict) -> CrossLingualReport:
    return CrossLingualReport(
        source_lang=data["source_lang"],
        per_target={lang: metrics_from_dict(m) for lang, m in data["per_target"].items()},
        avg=data["avg"],
        delta=data["delta"],
    )


def emit_report(report, format: str = "json") -> str:
    """Render a metrics or cross-lingual report as json or markdown."""
    if format == "json":
        return json.dumps(report_to_dict(report), indent=1)
    if format != "markdown":
        raise DataError(f"unknown report format {format!r}")
    if isinstance(report, MetricsReport):
        p, r, f = report.rounded()
        lines = [
            "| P | R | F |",
            "| --- | --- | --- |",
            f"| {p} | {r} | {f} |",
        ]
        return "\n".join(lines)
    langs = list(report.per_target)
    header = ["source"] + [f"{lang} (P / R / F)" for lang in langs] + ["AVG", "Δ"]
    cells = [report.source_lang]
    for lang in langs:
        p, r, f = report.per_target[lang].rounded()
        cells.append(f"{p} / {r} / {f}")
    cells.append(f"{round1(report.avg)}")
    cells.append("-" if report.delta is None else f"{round1(report.delta)}")
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join(["---"] * len(header)) + " |",
        "| " + " | ".join(cells) + " |",
    ]
    return "\n".join(lines)
