#!/usr/bin/env python3
"""
Study Analysis
Replication CSV, per-cell summaries, violin plots of the smoothness
estimates and log-log rate fits
"""

import csv
import logging
import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from scipy.stats import gaussian_kde

from errors import InvalidArgumentError, PlotError

LOGGER = logging.getLogger(__name__)

CSV_COLUMNS = ["scenario", "n", "rep", "seed", "s_hat", "sigma2_hat", "boundary",
               "cond_min", "cond_max", "ms_elapsed"]
RANGE_COLUMNS = ["tau_hat", "microergodic"]
MIN_VIOLIN_RECORDS = 5
VIOLIN_HALF_WIDTH = 0.4
SVG_HASH_SALT = "wm-study"


def _field(record, name):
    if isinstance(record, dict):
        return record.get(name)
    return getattr(record, name, None)


def format_value(value):
    """CSV cell: 17 significant digits for floats, empty for missing values"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return format(value, ".17g")


def record_columns(records):
    """Fixed columns, plus tau_hat and microergodic when any record carries them"""
    if any(_field(r, "tau_hat") is not None for r in records):
        return CSV_COLUMNS + RANGE_COLUMNS
    return list(CSV_COLUMNS)


def emit_csv(records, filename):
    """
    One row per replication record, newline-terminated

    Args:
        records (list): ReplicationRecord objects or dicts
        filename (str | Path): Output path

    Returns:
        list: Column names written
    """
    if not records:
        raise InvalidArgumentError("No records to write")
    columns = record_columns(records)
    with open(filename, "w", newline="") as csvfile:
        writer = csv.writer(csvfile, lineterminator="\n")
        writer.writerow(columns)
        for record in records:
            writer.writerow([format_value(_field(record, name)) for name in columns])
    LOGGER.info("Wrote %d records to %s", len(records), filename)
    return columns


def read_records_csv(filename):
    """Records CSV back into a DataFrame; floats parse bit-exactly"""
    frame = pd.read_csv(filename, float_precision="round_trip",
                        dtype={"scenario": str}, keep_default_na=True)
    frame["boundary"] = frame["boundary"].astype(str).str.lower() == "true"
    return frame


def records_frame(records):
    columns = record_columns(records)
    frame = pd.DataFrame([{name: _field(r, name) for name in columns} for r in records],
                         columns=columns)
    for name in columns:
        if name not in ("scenario", "boundary"):
            frame[name] = pd.to_numeric(frame[name])
    frame["boundary"] = frame["boundary"].fillna(False).astype(bool)
    return frame


def summarize_records(frame, reference=None, column="s_hat"):
    """
    Per-(scenario, n) summary of one estimate column

    Columns: count, failures, boundary, median, mean, q25, q75, iqr and,
    with a reference value, bias = mean - reference.
    """
    rows = []
    for (scenario, n), cell in frame.groupby(["scenario", "n"], sort=True):
        values = cell[column].dropna().to_numpy(dtype=float)
        row = {"scenario": scenario, "n": int(n), "count": int(len(cell)),
               "failures": int(len(cell) - len(values)),
               "boundary": int(cell["boundary"].sum())}
        if len(values):
            q25, q75 = np.percentile(values, [25, 75])
            row.update(median=float(np.median(values)), mean=float(np.mean(values)),
                       q25=float(q25), q75=float(q75), iqr=float(q75 - q25))
            if reference is not None:
                row["bias"] = row["mean"] - float(reference)
        rows.append(row)
    summary = pd.DataFrame(rows)
    for _, row in summary.iterrows():
        LOGGER.info("%s n=%d: median %s=%.4f (%d failures)", row["scenario"], row["n"],
                    column, row.get("median", float("nan")), row["failures"])
    return summary


def emit_summary_csv(summary, filename):
    summary.to_csv(filename, index=False, float_format="%.17g", lineterminator="\n")
    LOGGER.info("Wrote summary to %s", filename)


def fit_loglog_slope(x, y):
    """Least-squares slope of log y against log x"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise InvalidArgumentError("Need at least two matching points for a slope")
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidArgumentError("Log-log fit needs positive values")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _violin_groups(records, column):
    groups = {}
    for record in records:
        value = _field(record, column)
        if value is None or (isinstance(value, float) and math.isnan(value)):
            continue
        groups.setdefault(int(_field(record, "n")), []).append(float(value))
    return {n: np.array(values) for n, values in sorted(groups.items())}


def emit_violin_svg(records, reference, filename, title="Smoothness estimates", column="s_hat"):
    """
    One violin per design size with a dashed reference line, as SVG

    Silhouettes are Gaussian kernel densities with Silverman's bandwidth;
    a group of identical values is drawn as a tick. Elements carry the ids
    violin-<n> and reference-s0.
    """
    groups = _violin_groups(records, column)
    if not groups:
        raise PlotError("No estimates to plot")
    short = [n for n, values in groups.items() if len(values) < MIN_VIOLIN_RECORDS]
    if short:
        raise PlotError(f"Need at least {MIN_VIOLIN_RECORDS} estimates per group, short: {short}")

    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 5))
        for position, (n, values) in enumerate(groups.items(), start=1):
            if np.ptp(values) == 0.0:
                ax.plot([position - VIOLIN_HALF_WIDTH / 2, position + VIOLIN_HALF_WIDTH / 2],
                        [values[0], values[0]], color="steelblue", linewidth=2,
                        gid=f"violin-{n}")
                continue
            kde = gaussian_kde(values, bw_method="silverman")
            pad = 3.0 * kde.factor * np.std(values, ddof=1)
            y = np.linspace(values.min() - pad, values.max() + pad, 200)
            density = kde(y)
            width = VIOLIN_HALF_WIDTH * density / density.max()
            body = ax.fill_betweenx(y, position - width, position + width, alpha=0.7,
                                    color="skyblue", edgecolor="black")
            body.set_gid(f"violin-{n}")
        ax.axhline(reference, color="red", linestyle="--", linewidth=1.5, gid="reference-s0")
        ax.set_xticks(range(1, len(groups) + 1))
        ax.set_xticklabels([str(n) for n in groups])
        ax.set_xlabel("n", fontsize=12)
        ax.set_ylabel("Estimated smoothness", fontsize=12)
        ax.set_title(title, fontsize=14)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(filename, format="svg", metadata={"Date": None})
        plt.close(fig)
    LOGGER.info("Wrote violin plot to %s", filename)
