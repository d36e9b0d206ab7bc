"""Manifest-driven batch evaluation and correlation reporting."""

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .exceptions import SchemaError, ValidationError
from ._validation import check_map
from .image_core import load_image, resize_array, to_grayscale
from .quality import ew_psnr, ew_ssim, ms_ssim, psnr, ssim
from .stats import fraccp, make_groups, plcc, srocc

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = (
    "record_id", "reference_path", "distorted_path", "saliency_path",
    "fixations_path", "group_id", "preset", "bpp", "mos",
)
REQUIRED_COLUMNS = ("record_id", "reference_path", "distorted_path", "group_id")
METRICS = ("psnr", "ssim", "ms-ssim", "ew-psnr", "ew-ssim")
SALIENCY_METRICS = ("ew-psnr", "ew-ssim")
THREADS_ENV = "SALIQA_THREADS"


@dataclass(frozen=True)
class ManifestRecord:
    record_id: str
    reference_path: str
    distorted_path: str
    group_id: str
    saliency_path: str = None
    fixations_path: str = None
    preset: str = ""
    bpp: float = None
    mos: float = None


@dataclass
class MetricReport:
    """Per-record metric values in manifest order.

    Cells hold a float, or an error string when that metric failed for that
    record.
    """

    record_ids: list
    group_ids: list
    columns: list
    rows: list
    capped: list = field(default_factory=list)
    toolkit_version: str = __version__

    @property
    def has_errors(self):
        return any(isinstance(v, str) for row in self.rows for v in row.values())

    def column(self, name):
        return [row[name] for row in self.rows]


def format_float(value):
    return f"{value:.6f}"


def _optional(value):
    value = (value or "").strip()
    return value or None


def _optional_float(value, name, record_id):
    value = _optional(value)
    if value is None:
        return None
    try:
        return float(value)
    except ValueError:
        raise ValidationError(f"record {record_id}: {name} {value!r} is not a number") from None


def load_manifest(path):
    """Read and validate a manifest CSV; paths resolve against its directory."""
    path = os.fspath(path)
    base = os.path.dirname(os.path.abspath(path))
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise SchemaError(f"manifest {path} is missing column {col!r}")
        rows = list(reader)

    def resolve(p):
        p = _optional(p)
        return None if p is None else os.path.normpath(os.path.join(base, p))

    records, problems, group_refs = [], [], {}
    for row in rows:
        rid = row["record_id"].strip()
        rec = ManifestRecord(
            record_id=rid,
            reference_path=resolve(row["reference_path"]),
            distorted_path=resolve(row["distorted_path"]),
            group_id=row["group_id"].strip(),
            saliency_path=resolve(row.get("saliency_path")),
            fixations_path=resolve(row.get("fixations_path")),
            preset=(row.get("preset") or "").strip(),
            bpp=_optional_float(row.get("bpp"), "bpp", rid),
            mos=_optional_float(row.get("mos"), "mos", rid),
        )
        for label in ("reference_path", "distorted_path", "saliency_path", "fixations_path"):
            p = getattr(rec, label)
            if label in ("reference_path", "distorted_path") and p is None:
                problems.append(f"record {rid}: {label} is empty")
            elif p is not None and not os.path.isfile(p):
                problems.append(f"record {rid}: {label} {p} does not exist")
        if rec.bpp is not None and rec.bpp < 0:
            problems.append(f"record {rid}: bpp must be >= 0")
        ref = group_refs.setdefault(rec.group_id, rec.reference_path)
        if ref != rec.reference_path:
            problems.append(f"record {rid}: group {rec.group_id} mixes reference images")
        records.append(rec)
    if problems:
        raise ValidationError("; ".join(problems))
    return records


def worker_count(workers=None):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _evaluate(record, metrics, cap_db):
    values, capped = {}, set()
    try:
        ref = to_grayscale(load_image(record.reference_path))
        dist = to_grayscale(load_image(record.distorted_path))
        sal = None
        if any(m in SALIENCY_METRICS for m in metrics) and record.saliency_path:
            smap = check_map(load_image(record.saliency_path).data[:, :, 0])
            sal = resize_array(smap, ref.width, ref.height)
    except (OSError, ValueError) as exc:
        return {m: f"error: {exc}" for m in metrics}, capped

    for metric in metrics:
        try:
            if metric in SALIENCY_METRICS and sal is None:
                raise ValidationError(f"{metric} needs a saliency_path")
            if metric == "psnr":
                score = psnr(ref, dist, cap_db)
                value = score.value
                if score.capped:
                    capped.add(metric)
            elif metric == "ew-psnr":
                score = ew_psnr(ref, dist, sal, cap_db)
                value = score.value
                if score.capped:
                    capped.add(metric)
            elif metric == "ssim":
                value = ssim(ref, dist)[0]
            elif metric == "ms-ssim":
                value = ms_ssim(ref, dist)
            elif metric == "ew-ssim":
                value = ew_ssim(ref, dist, sal)
            else:
                raise ValidationError(f"unknown metric {metric!r}")
            values[metric] = float(value)
        except ValueError as exc:
            values[metric] = f"error: {exc}"
    return values, capped


def run_metrics(records, metrics, workers=None, cap_db=100.0):
    """Evaluate ``metrics`` on every record; rows keep manifest order."""
    metrics = list(metrics)
    for m in metrics:
        if m not in METRICS:
            raise ValidationError(f"unknown metric {m!r}; choose from {', '.join(METRICS)}")
    n_workers = worker_count(workers)
    if n_workers == 1:
        results = [_evaluate(r, metrics, cap_db) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(lambda r: _evaluate(r, metrics, cap_db), records))
    for rec, (values, _) in zip(records, results):
        for m, v in values.items():
            if isinstance(v, str):
                logger.warning("record %s, metric %s: %s", rec.record_id, m, v)
    return MetricReport(
        record_ids=[r.record_id for r in records],
        group_ids=[r.group_id for r in records],
        columns=metrics,
        rows=[values for values, _ in results],
        capped=[sorted(c) for _, c in results],
    )


def write_report(report, path):
    with open(os.fspath(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["record_id", "group_id", *report.columns])
        for rid, gid, row in zip(report.record_ids, report.group_ids, report.rows):
            cells = [v if isinstance(v, str) else format_float(v) for v in (row[c] for c in report.columns)]
            writer.writerow([rid, gid, *cells])


def read_report(path):
    with open(os.fspath(path), newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if "record_id" not in header:
            raise SchemaError(f"report {path} is missing column 'record_id'")
        columns = [c for c in header if c not in ("record_id", "group_id")]
        record_ids, group_ids, rows = [], [], []
        for row in reader:
            record_ids.append(row["record_id"])
            group_ids.append(row.get("group_id", ""))
            cells = {}
            for c in columns:
                try:
                    cells[c] = float(row[c])
                except ValueError:
                    cells[c] = row[c]
            rows.append(cells)
    return MetricReport(record_ids, group_ids, columns, rows)


@dataclass(frozen=True)
class CorrelationRow:
    metric: str
    n: int
    srocc: float
    plcc: float
    fraccp: float


def run_correlate(report, records):
    """SROCC, PLCC (over all records) and FracCP (per group) for each metric.

    Records whose cell for a metric is an error are left out of that
    metric's statistics.
    """
    by_id = {r.record_id: r for r in records}
    missing = [rid for rid in report.record_ids if rid not in by_id]
    if missing:
        raise ValidationError(f"report records not in manifest: {', '.join(missing)}")
    no_mos = [rid for rid in report.record_ids if by_id[rid].mos is None]
    if no_mos:
        raise ValidationError(f"records without mos: {', '.join(no_mos)}")

    table = []
    for metric in report.columns:
        preds, mos, groups = [], [], []
        for rid, row in zip(report.record_ids, report.rows):
            v = row[metric]
            if isinstance(v, str) or not math.isfinite(v):
                continue
            rec = by_id[rid]
            preds.append(v)
            mos.append(rec.mos)
            groups.append(rec.group_id)
        if len(preds) < 3:
            raise ValidationError(f"metric {metric}: need at least 3 scored records, got {len(preds)}")
        table.append(CorrelationRow(
            metric, len(preds), srocc(preds, mos), plcc(preds, mos),
            fraccp(make_groups(groups, preds, mos)),
        ))
    return table


def write_correlations(table, path):
    with open(os.fspath(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "n", "srocc", "plcc", "fraccp"])
        for row in table:
            writer.writerow([
                row.metric, row.n, format_float(row.srocc), format_float(row.plcc),
                format_float(row.fraccp),
            ])
