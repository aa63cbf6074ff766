"""CSV artifact formats.

Every artifact starts with a metadata header of ``# key = value`` lines
(at minimum the producing seed(s), the package version, and, when written
by the CLI, the configuration hash), followed by one CSV header line and
data rows. All reals are written with 17 significant digits so values
round-trip exactly through the decimal encoding.

Formats
-------
samples        ``j,x1,...,xn``                    one row per sample
qoi            ``j,q1,...,qm[,e1,...,em]``        optional error-estimate columns
density        ``i,lo1,hi1,...,lom,him,p_i``      one row per bin
measure        ``j,i_o,cell_prob``                one row per sample
marginal       row/column edges in the metadata, then the value grid
error report   per-bin rows plus one summary row
"""

from __future__ import annotations

import numpy as np

from .density import DataPartition, SimpleFunctionDensity
from .domain import SampleSet
from .errors import ErrorReport
from .exceptions import ArgumentError
from .solver import CountingMeasure, GridMeasure, MarginalTable

__all__ = [
    "format_real",
    "write_samples_csv",
    "read_samples_csv",
    "write_qoi_csv",
    "read_qoi_csv",
    "write_density_csv",
    "read_density_csv",
    "write_measure_csv",
    "read_measure_csv",
    "write_grid_measure_csv",
    "write_marginal_csv",
    "write_error_report_csv",
    "write_event_probabilities_csv",
]


def format_real(x: float) -> str:
    return f"{float(x):.17g}"


def _write_header(fh, metadata: dict | None):
    for key, value in (metadata or {}).items():
        fh.write(f"# {key} = {value}\n")


def _read_lines(path):
    metadata = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    metadata[key.strip()] = value.strip()
                continue
            rows.append(line)
    if not rows:
        raise ArgumentError(f"{path} contains no CSV content")
    header = rows[0].split(",")
    data = [r.split(",") for r in rows[1:]]
    return metadata, header, data


def write_samples_csv(path, samples: SampleSet, metadata: dict | None = None):
    meta = {"rule": samples.rule_tag, "seed": samples.seed,
            "n_samples": samples.n_samples, "ndim": samples.ndim}
    meta.update(metadata or {})
    with open(path, "w", encoding="utf-8") as fh:
        _write_header(fh, meta)
        cols = ",".join(f"x{d}" for d in range(1, samples.ndim + 1))
        fh.write(f"j,{cols}\n")
        for j, row in enumerate(samples.points, start=1):
            fh.write(f"{j}," + ",".join(format_real(v) for v in row) + "\n")


def read_samples_csv(path) -> SampleSet:
    metadata, header, data = _read_lines(path)
    if header[0] != "j":
        raise ArgumentError(f"{path} is not a samples CSV")
    points = np.array([[float(v) for v in row[1:]] for row in data])
    return SampleSet(points=points, rule_tag=metadata.get("rule", "external"),
                     seed=int(metadata.get("seed", 0)))


def write_qoi_csv(path, qoi_values, error_estimates=None,
                  metadata: dict | None = None):
    values = np.atleast_2d(np.asarray(qoi_values, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        _write_header(fh, metadata)
        m = values.shape[1]
        cols = [f"q{d}" for d in range(1, m + 1)]
        if error_estimates is not None:
            error_estimates = np.atleast_2d(np.asarray(error_estimates))
            if error_estimates.shape != values.shape:
                raise ArgumentError("error estimates must match the QoI shape")
            cols += [f"e{d}" for d in range(1, m + 1)]
        fh.write("j," + ",".join(cols) + "\n")
        for j in range(values.shape[0]):
            row = [format_real(v) for v in values[j]]
            if error_estimates is not None:
                row += [format_real(v) for v in error_estimates[j]]
            fh.write(f"{j + 1}," + ",".join(row) + "\n")


def read_qoi_csv(path):
    """Returns ``(values, error_estimates_or_None)``."""
    _, header, data = _read_lines(path)
    names = header[1:]
    m = sum(1 for c in names if c.startswith("q"))
    table = np.array([[float(v) for v in row[1:]] for row in data])
    values = table[:, :m]
    errors = table[:, m:] if table.shape[1] > m else None
    return values, errors


def write_density_csv(path, density: SimpleFunctionDensity,
                      metadata: dict | None = None):
    part = density.partition
    meta = {"m_dims": part.m_dims,
            "resolutions": " ".join(str(s) for s in part.shape)}
    for d, e in enumerate(part.edges, start=1):
        meta[f"edges{d}"] = " ".join(format_real(v) for v in e)
    meta.update(metadata or {})
    with open(path, "w", encoding="utf-8") as fh:
        _write_header(fh, meta)
        cols = []
        for d in range(1, part.m_dims + 1):
            cols += [f"lo{d}", f"hi{d}"]
        fh.write("i," + ",".join(cols) + ",p_i\n")
        for i in range(1, part.n_bins + 1):
            lo, hi = part.bin_bounds(i)
            bounds = []
            for d in range(part.m_dims):
                bounds += [format_real(lo[d]), format_real(hi[d])]
            fh.write(f"{i}," + ",".join(bounds) + f",{format_real(density.p[i - 1])}\n")


def read_density_csv(path) -> SimpleFunctionDensity:
    metadata, header, data = _read_lines(path)
    try:
        edges = []
        d = 1
        while f"edges{d}" in metadata:
            edges.append(np.array([float(v) for v in metadata[f"edges{d}"].split()]))
            d += 1
        if not edges:
            raise KeyError("edges1")
    except KeyError as exc:
        raise ArgumentError(f"{path} lacks partition edges metadata") from exc
    partition = DataPartition(tuple(edges))
    p = np.zeros(partition.n_bins)
    for row in data:
        p[int(row[0]) - 1] = float(row[-1])
    return SimpleFunctionDensity(partition=partition, p=p)


def write_measure_csv(path, measure: CountingMeasure, metadata: dict | None = None):
    meta = {"n_samples": measure.n_samples,
            "lost_mass": format_real(measure.lost_mass)}
    meta.update(metadata or {})
    with open(path, "w", encoding="utf-8") as fh:
        _write_header(fh, meta)
        fh.write("j,i_o,cell_prob\n")
        for j in range(measure.n_samples):
            fh.write(f"{j + 1},{measure.pointer[j]},"
                     f"{format_real(measure.cell_prob[j])}\n")


def read_measure_csv(path):
    """Returns ``(pointer, cell_prob, lost_mass)``; the carrier sample set
    and density travel in their own artifacts."""
    metadata, header, data = _read_lines(path)
    if header != ["j", "i_o", "cell_prob"]:
        raise ArgumentError(f"{path} is not a measure CSV")
    pointer = np.array([int(row[1]) for row in data], dtype=np.int64)
    cell_prob = np.array([float(row[2]) for row in data])
    return pointer, cell_prob, float(metadata.get("lost_mass", 0.0))


def write_grid_measure_csv(path, measure: GridMeasure, metadata: dict | None = None):
    meta = {"lost_mass": format_real(measure.lost_mass),
            "resolutions": " ".join(str(s) for s in measure.shape)}
    for d, e in enumerate(measure.edges, start=1):
        meta[f"edges{d}"] = " ".join(format_real(v) for v in e)
    meta.update(metadata or {})
    with open(path, "w", encoding="utf-8") as fh:
        _write_header(fh, meta)
        fh.write("cell,cell_prob\n")
        for c, prob in enumerate(measure.cell_prob, start=1):
            fh.write(f"{c},{format_real(prob)}\n")


def write_marginal_csv(path, table: MarginalTable, metadata: dict | None = None):
    meta = {"dims": f"{table.dims[0]} {table.dims[1]}",
            "row_edges": " ".join(format_real(v) for v in table.row_edges),
            "col_edges": " ".join(format_real(v) for v in table.col_edges)}
    meta.update(metadata or {})
    with open(path, "w", encoding="utf-8") as fh:
        _write_header(fh, meta)
        cols = ",".join(f"c{c}" for c in range(1, table.values.shape[1] + 1))
        fh.write(f"row,{cols}\n")
        for r in range(table.values.shape[0]):
            fh.write(f"{r + 1}," +
                     ",".join(format_real(v) for v in table.values[r]) + "\n")


def write_error_report_csv(path, report: ErrorReport, metadata: dict | None = None):
    meta = {"term1_lower": format_real(report.term1_lower),
            "term1_upper": format_real(report.term1_upper)}
    if report.term2 is not None:
        meta["term2_estimate"] = format_real(report.term2.value)
        if report.term2.flagged_bins:
            meta["term2_flagged_bins"] = " ".join(
                str(b) for b in report.term2.flagged_bins)
    if report.coverage_residual is not None:
        meta["coverage_residual"] = format_real(report.coverage_residual.value)
        meta["coverage_residual_std_error"] = format_real(
            report.coverage_residual.std_error)
    meta.update(metadata or {})
    t1 = report.term1
    t2 = report.term2
    with open(path, "w", encoding="utf-8") as fh:
        _write_header(fh, meta)
        fh.write("i,p_i,E,inner_ratio,outer_ratio,J_event,J_total,"
                 "J_event_corrected,J_total_corrected\n")
        for row, bin_id in enumerate(t1.bins):
            cells = [str(int(bin_id)), format_real(t1.p[row]),
                     format_real(t1.e_value[row]), format_real(t1.inner_ratio[row]),
                     format_real(t1.outer_ratio[row])]
            if t2 is not None:
                k = int(bin_id) - 1
                cells += [format_real(t2.j_event[k]), format_real(t2.j_total[k]),
                          format_real(t2.j_event_corrected[k]),
                          format_real(t2.j_total_corrected[k])]
            else:
                cells += ["", "", "", ""]
            fh.write(",".join(cells) + "\n")
        summary = ["summary", "", format_real(report.term1_lower),
                   format_real(report.term1_upper), "", "", "", "", ""]
        if t2 is not None:
            summary[4] = format_real(t2.value)
        fh.write(",".join(summary) + "\n")


def write_event_probabilities_csv(path, labels, probabilities,
                                  metadata: dict | None = None):
    if len(labels) != len(probabilities):
        raise ArgumentError("labels and probabilities must align")
    with open(path, "w", encoding="utf-8") as fh:
        _write_header(fh, metadata)
        fh.write("event,probability\n")
        for label, prob in zip(labels, probabilities):
            fh.write(f"{label},{format_real(prob)}\n")
