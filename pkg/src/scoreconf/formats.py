"""Text file formats.

Every file starts with a one-line header ``# <kind> version=1 key=value ...``
followed by a CSV column row and data rows. Floats are written with
``repr``, which round-trips doubles exactly (at most 17 significant digits).

=============  =====================================================
kind           contents
=============  =====================================================
embeddings     image_id, subject_id, [quality], mu_1..d, [sigma_1..d]
samples        image_id, subject_id, quality, kind, v_1..d
pairs          probe_id, reference_id, label
results        one ComparisonResult per row (see RESULT_COLUMNS)
erc            key, reject_fraction, fnmr, fmr, status
heatmap        score/confidence bin edges and per-label counts
=============  =====================================================

Calibrations are small JSON documents.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import (
    ComparisonResult,
    Decision,
    ErcCurve,
    ErcPoint,
    Label,
    Pair,
    ProbabilisticEmbedding,
    RejectionKey,
    ThresholdCalibration,
    validate_embedding,
)
from .errors import (
    DuplicateIdError,
    HeaderMismatchError,
    ParseError,
    ScoreConfError,
)
from .estimate import StochasticSampleSet

FORMAT_VERSION = 1

RESULT_COLUMNS = (
    "probe_id",
    "reference_id",
    "label",
    "score",
    "score_uncertainty",
    "decision",
    "decision_confidence",
    "intuitive_confidence",
    "min_quality",
)


def fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _header_line(kind: str, **meta) -> str:
    parts = [f"# {kind}", f"version={FORMAT_VERSION}"]
    for key, value in meta.items():
        if isinstance(value, bool):
            value = int(value)
        elif isinstance(value, float):
            value = repr(value)
        parts.append(f"{key}={value}")
    return " ".join(parts) + "\n"


def _parse_header(line: str, kind: str, path) -> dict[str, str]:
    tokens = line.strip().split()
    if len(tokens) < 2 or tokens[0] != "#":
        raise ParseError("missing format header", 1, path)
    if tokens[1] != kind:
        raise HeaderMismatchError(f"{path}: expected a {kind!r} file, found {tokens[1]!r}")
    meta = {}
    for tok in tokens[2:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise ParseError(f"bad header field {tok!r}", 1, path)
        meta[key] = value
    if meta.get("version") != str(FORMAT_VERSION):
        raise HeaderMismatchError(
            f"{path}: unsupported {kind} version {meta.get('version')!r}"
        )
    return meta


def _header_int(meta, key, path) -> int:
    try:
        return int(meta[key])
    except (KeyError, ValueError):
        raise HeaderMismatchError(f"{path}: header lacks a valid integer {key!r}") from None


def _header_float(meta, key, path) -> float:
    try:
        return float(meta[key])
    except (KeyError, ValueError):
        raise HeaderMismatchError(f"{path}: header lacks a valid number {key!r}") from None


def _header_flag(meta, key, path) -> bool:
    value = meta.get(key)
    if value not in ("0", "1"):
        raise HeaderMismatchError(f"{path}: header flag {key!r} must be 0 or 1")
    return value == "1"


class _Reader:
    """CSV reader that tracks physical line numbers for error messages."""

    def __init__(self, path, kind: str):
        self.path = Path(path)
        self.kind = kind

    def __enter__(self):
        self._fh = open(self.path, newline="", encoding="utf-8")
        first = self._fh.readline()
        self.meta = _parse_header(first, self.kind, self.path)
        self._csv = csv.reader(self._fh)
        try:
            self.columns = next(self._csv)
        except StopIteration:
            raise ParseError("missing column header row", 2, self.path) from None
        return self

    def __exit__(self, *exc):
        self._fh.close()

    def expect_columns(self, expected: Sequence[str]) -> None:
        if list(self.columns) != list(expected):
            raise HeaderMismatchError(
                f"{self.path}: columns {self.columns[:4]}... do not match the header"
            )

    def rows(self):
        for row in self._csv:
            # +1 for the format header line consumed before the csv reader
            yield self._csv.line_num + 1, row

    def error(self, message: str, line: int) -> ParseError:
        return ParseError(message, line, self.path)


def _float(text: str, reader: _Reader, line: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise reader.error(f"{what} is not a number: {text!r}", line) from None


def _opt_float(text: str, reader: _Reader, line: int, what: str) -> Optional[float]:
    return None if text == "" else _float(text, reader, line, what)


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


# --------------------------------------------------------------------------
# embedding sets


def write_embedding_set(path, embeddings: Sequence[ProbabilisticEmbedding]) -> None:
    if not embeddings:
        raise ScoreConfError("refusing to write an empty embedding set")
    d = embeddings[0].dimension
    has_quality = any(e.quality is not None for e in embeddings)
    columns = ["image_id", "subject_id"]
    if has_quality:
        columns.append("quality")
    columns += [f"mu_{i + 1}" for i in range(d)]
    columns += [f"sigma_{i + 1}" for i in range(d)]
    fh, w = _writer(path)
    with fh:
        fh.write(_header_line("embeddings", dim=d, has_quality=has_quality, has_sigma=True))
        w.writerow(columns)
        for e in embeddings:
            if e.dimension != d:
                raise HeaderMismatchError(f"{e.image_id!r} has dimension {e.dimension}, set has {d}")
            row = [e.image_id, e.subject_id]
            if has_quality:
                row.append(fmt(e.quality))
            row += [repr(v) for v in e.mean.tolist()]
            row += [repr(v) for v in e.sigma.tolist()]
            w.writerow(row)


def read_embedding_set(path) -> list[ProbabilisticEmbedding]:
    """Read and validate an embedding set; raw means are normalized on the way in."""
    with _Reader(path, "embeddings") as r:
        d = _header_int(r.meta, "dim", path)
        has_quality = _header_flag(r.meta, "has_quality", path)
        has_sigma = _header_flag(r.meta, "has_sigma", path)
        if d < 1:
            raise HeaderMismatchError(f"{path}: dim must be >= 1")
        expected = ["image_id", "subject_id"] + (["quality"] if has_quality else [])
        expected += [f"mu_{i + 1}" for i in range(d)]
        if has_sigma:
            expected += [f"sigma_{i + 1}" for i in range(d)]
        r.expect_columns(expected)
        offset = 3 if has_quality else 2
        out: list[ProbabilisticEmbedding] = []
        seen: set[str] = set()
        for line, row in r.rows():
            if not row:
                continue
            if len(row) != len(expected):
                raise r.error(f"expected {len(expected)} fields, found {len(row)}", line)
            image_id, subject_id = row[0], row[1]
            if not image_id:
                raise r.error("empty image_id", line)
            if image_id in seen:
                raise DuplicateIdError(f"{path}:{line}: duplicate image_id {image_id!r}")
            seen.add(image_id)
            quality = _opt_float(row[2], r, line, "quality") if has_quality else None
            values = [_float(v, r, line, "feature value") for v in row[offset:]]
            mean = values[:d]
            sigma = values[d:] if has_sigma else [0.0] * d
            try:
                out.append(validate_embedding(mean, sigma, image_id, subject_id, quality))
            except ScoreConfError as exc:
                raise type(exc)(f"{path}:{line}: {exc}") from None
        return out


# --------------------------------------------------------------------------
# stochastic sample sets


def write_sample_sets(path, sample_sets: Sequence[StochasticSampleSet]) -> None:
    if not sample_sets:
        raise ScoreConfError("refusing to write an empty sample file")
    d = sample_sets[0].deterministic.size
    t = sample_sets[0].num_samples
    fh, w = _writer(path)
    with fh:
        fh.write(_header_line("samples", dim=d, t=t))
        w.writerow(["image_id", "subject_id", "quality", "kind"] + [f"v_{i + 1}" for i in range(d)])
        for s in sample_sets:
            if s.deterministic.size != d or s.num_samples != t:
                raise HeaderMismatchError(f"{s.image_id!r} does not match dim={d}, t={t}")
            q = fmt(s.quality)
            w.writerow([s.image_id, s.subject_id, q, "deterministic"] + [repr(v) for v in s.deterministic.tolist()])
            for sample in s.samples.tolist():
                w.writerow([s.image_id, s.subject_id, q, "sample"] + [repr(v) for v in sample])


def read_sample_sets(path) -> list[StochasticSampleSet]:
    with _Reader(path, "samples") as r:
        d = _header_int(r.meta, "dim", path)
        t = _header_int(r.meta, "t", path)
        r.expect_columns(["image_id", "subject_id", "quality", "kind"] + [f"v_{i + 1}" for i in range(d)])
        out: list[StochasticSampleSet] = []
        seen: set[str] = set()
        current = None

        def flush(line):
            if current is None:
                return
            image_id, subject_id, quality, det, samples = current
            if len(samples) != t:
                raise r.error(f"{image_id!r} has {len(samples)} sample rows, header says t={t}", line)
            out.append(StochasticSampleSet(image_id, subject_id, det, np.array(samples), quality))

        line = 2
        for line, row in r.rows():
            if not row:
                continue
            if len(row) != d + 4:
                raise r.error(f"expected {d + 4} fields, found {len(row)}", line)
            image_id, subject_id, q_text, kind = row[:4]
            values = [_float(v, r, line, "feature value") for v in row[4:]]
            if kind == "deterministic":
                flush(line)
                if image_id in seen:
                    raise DuplicateIdError(f"{path}:{line}: duplicate image_id {image_id!r}")
                seen.add(image_id)
                current = (image_id, subject_id, _opt_float(q_text, r, line, "quality"), values, [])
            elif kind == "sample":
                if current is None or current[0] != image_id:
                    raise r.error(f"sample row for {image_id!r} without its deterministic row", line)
                current[4].append(values)
            else:
                raise r.error(f"unknown row kind {kind!r}", line)
        flush(line)
        return out


# --------------------------------------------------------------------------
# pairs


def write_pairs(path, pairs: Iterable[Pair]) -> None:
    fh, w = _writer(path)
    with fh:
        fh.write(_header_line("pairs"))
        w.writerow(["probe_id", "reference_id", "label"])
        for p in pairs:
            w.writerow([p.probe_id, p.reference_id, p.label.value])


def read_pairs(path) -> list[Pair]:
    with _Reader(path, "pairs") as r:
        r.expect_columns(["probe_id", "reference_id", "label"])
        out = []
        for line, row in r.rows():
            if not row:
                continue
            if len(row) != 3:
                raise r.error(f"expected 3 fields, found {len(row)}", line)
            try:
                out.append(Pair(row[0], row[1], Label(row[2])))
            except ValueError as exc:
                raise r.error(str(exc), line) from None
        return out


# --------------------------------------------------------------------------
# comparison results


def write_results(path, results: Sequence[ComparisonResult], **meta) -> None:
    """Write results; all must share one threshold, stored in the header."""
    thresholds = {r.threshold for r in results}
    if len(thresholds) > 1:
        raise ScoreConfError("results with differing thresholds cannot share a file")
    threshold = thresholds.pop() if thresholds else math.nan
    fh, w = _writer(path)
    with fh:
        fh.write(_header_line("results", threshold=float(threshold), **meta))
        w.writerow(RESULT_COLUMNS)
        for res in results:
            w.writerow(
                [
                    res.pair.probe_id,
                    res.pair.reference_id,
                    res.label.value,
                    fmt(res.score),
                    fmt(res.score_uncertainty),
                    res.decision.value,
                    fmt(res.decision_confidence),
                    fmt(res.intuitive_confidence),
                    fmt(res.min_quality),
                ]
            )


def read_results(path) -> tuple[list[ComparisonResult], dict[str, str]]:
    """Results plus the raw header metadata."""
    with _Reader(path, "results") as r:
        threshold = _header_float(r.meta, "threshold", path)
        r.expect_columns(RESULT_COLUMNS)
        out = []
        for line, row in r.rows():
            if not row:
                continue
            if len(row) != len(RESULT_COLUMNS):
                raise r.error(f"expected {len(RESULT_COLUMNS)} fields, found {len(row)}", line)
            try:
                pair = Pair(row[0], row[1], Label(row[2]))
                decision = Decision(row[5])
            except ValueError as exc:
                raise r.error(str(exc), line) from None
            score = _float(row[3], r, line, "score")
            if decision != (Decision.MATCH if score >= threshold else Decision.NON_MATCH):
                raise r.error("decision is inconsistent with score and threshold", line)
            out.append(
                ComparisonResult(
                    pair=pair,
                    score=score,
                    score_uncertainty=_float(row[4], r, line, "score_uncertainty"),
                    decision=decision,
                    threshold=threshold,
                    decision_confidence=_opt_float(row[6], r, line, "decision_confidence"),
                    intuitive_confidence=_opt_float(row[7], r, line, "intuitive_confidence"),
                    min_quality=_opt_float(row[8], r, line, "min_quality"),
                )
            )
        return out, r.meta


# --------------------------------------------------------------------------
# calibration


def write_calibration(path, calib: ThresholdCalibration) -> None:
    doc = {
        "format": "calibration",
        "version": FORMAT_VERSION,
        "threshold": calib.threshold,
        "fmr_target": calib.fmr_target,
        "achieved_fmr": calib.achieved_fmr,
        "achieved_fnmr": calib.achieved_fnmr,
        "n_genuine": calib.n_genuine,
        "n_imposter": calib.n_imposter,
    }
    # json writes +inf as the non-standard token Infinity; Python reads it back
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_calibration(path) -> ThresholdCalibration:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, path) from None
    if doc.get("format") != "calibration" or doc.get("version") != FORMAT_VERSION:
        raise HeaderMismatchError(f"{path}: not a version {FORMAT_VERSION} calibration file")
    try:
        return ThresholdCalibration(
            threshold=float(doc["threshold"]),
            fmr_target=float(doc["fmr_target"]),
            achieved_fmr=float(doc["achieved_fmr"]),
            achieved_fnmr=float(doc["achieved_fnmr"]),
            n_genuine=int(doc.get("n_genuine", 0)),
            n_imposter=int(doc.get("n_imposter", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad calibration field: {exc}", None, path) from None


# --------------------------------------------------------------------------
# curves and heatmaps


def write_erc_curves(path, curves: Sequence[ErcCurve]) -> None:
    """One file for one or more curves sharing a threshold.

    A curve cut short by class exhaustion ends with a row whose status is
    ``exhausted`` and whose rates are empty.
    """
    thresholds = {c.threshold for c in curves}
    if len(thresholds) != 1:
        raise ScoreConfError("ERC curves in one file must share a threshold")
    fh, w = _writer(path)
    with fh:
        fh.write(_header_line("erc", threshold=float(thresholds.pop())))
        w.writerow(["key", "reject_fraction", "fnmr", "fmr", "status"])
        for c in curves:
            for p in c.points:
                w.writerow([c.rejection_key.value, fmt(p.reject_fraction), fmt(p.fnmr), fmt(p.fmr), "ok"])
            if c.exhausted_at is not None:
                w.writerow([c.rejection_key.value, fmt(c.exhausted_at), "", "", "exhausted"])


def read_erc_curves(path) -> list[ErcCurve]:
    with _Reader(path, "erc") as r:
        threshold = _header_float(r.meta, "threshold", path)
        r.expect_columns(["key", "reject_fraction", "fnmr", "fmr", "status"])
        order: list[RejectionKey] = []
        points: dict[RejectionKey, list[ErcPoint]] = {}
        exhausted: dict[RejectionKey, float] = {}
        for line, row in r.rows():
            if not row:
                continue
            if len(row) != 5:
                raise r.error(f"expected 5 fields, found {len(row)}", line)
            try:
                key = RejectionKey(row[0])
            except ValueError:
                raise r.error(f"unknown rejection key {row[0]!r}", line) from None
            if key not in points:
                order.append(key)
                points[key] = []
            frac = _float(row[1], r, line, "reject_fraction")
            if row[4] == "ok":
                points[key].append(
                    ErcPoint(frac, _float(row[2], r, line, "fnmr"), _float(row[3], r, line, "fmr"))
                )
            elif row[4] == "exhausted":
                exhausted[key] = frac
            else:
                raise r.error(f"unknown status {row[4]!r}", line)
        return [ErcCurve(k, threshold, tuple(points[k]), exhausted.get(k)) for k in order]


def write_heatmap(path, heatmap) -> None:
    s_edges = heatmap.score_edges
    c_edges = heatmap.confidence_edges
    gen = heatmap.counts["genuine"]
    imp = heatmap.counts["imposter"]
    fh, w = _writer(path)
    with fh:
        fh.write(
            _header_line(
                "heatmap",
                measure=heatmap.measure,
                threshold=float("nan") if heatmap.threshold is None else float(heatmap.threshold),
                score_bins=len(s_edges) - 1,
                confidence_bins=len(c_edges) - 1,
            )
        )
        w.writerow(["score_lo", "score_hi", "confidence_lo", "confidence_hi", "genuine", "imposter", "total"])
        for i in range(len(s_edges) - 1):
            for j in range(len(c_edges) - 1):
                g, m = int(gen[i, j]), int(imp[i, j])
                w.writerow([fmt(s_edges[i]), fmt(s_edges[i + 1]), fmt(c_edges[j]), fmt(c_edges[j + 1]), g, m, g + m])


def read_heatmap_table(path) -> tuple[dict[str, str], list[list[str]]]:
    """Header metadata and raw rows; enough to re-plot or re-check a heatmap."""
    with _Reader(path, "heatmap") as r:
        r.expect_columns(["score_lo", "score_hi", "confidence_lo", "confidence_hi", "genuine", "imposter", "total"])
        return r.meta, [row for _, row in r.rows() if row]
