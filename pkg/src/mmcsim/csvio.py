"""Deterministic CSV persistence of run records and metrics reports.

One row per (time step, phase); floats are serialized with 17
significant digits so a reloaded file reproduces the in-memory doubles
bit for bit.  The column layout is fixed at sink creation:

    t,phase,i,i_ref,i_z,v_up,v_low,v_c_1..v_c_<2n>,u_1..u_<2n>,
    v_dc_link,i_dc_link,policy
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigError, ContractError
from .metrics import RunRecord, SummaryMetrics

__all__ = [
    "csv_columns",
    "TimeSeriesSink",
    "load_record_csv",
    "format_metrics_text",
    "write_metrics_report",
]

_FLOAT_FMT = "%.17g"


def csv_columns(n: int) -> list[str]:
    """Column names for a converter with n SMs per arm."""
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    return (
        ["t", "phase", "i", "i_ref", "i_z", "v_up", "v_low"]
        + [f"v_c_{j}" for j in range(1, 2 * n + 1)]
        + [f"u_{j}" for j in range(1, 2 * n + 1)]
        + ["v_dc_link", "i_dc_link", "policy"]
    )


class TimeSeriesSink:
    """CSV writer for run records with a schema fixed at creation."""

    def __init__(self, path: str, n: int):
        self.path = path
        self.n = n
        self.columns = csv_columns(n)
        self._rows_written = 0
        self._last_t = -np.inf
        try:
            self._file = open(path, "w", newline="")
        except OSError as exc:
            raise ConfigError(f"cannot open {path!r} for writing: {exc}") from exc
        self._file.write(",".join(self.columns) + "\n")

    def write_record(self, record: RunRecord, decimation: int = 1) -> None:
        """Append a record's rows, keeping every ``decimation``-th step."""
        if decimation < 1:
            raise ConfigError(f"decimation must be >= 1, got {decimation}")
        if record.n != self.n:
            raise ContractError(
                f"record has {record.n} SMs per arm, sink expects {self.n}"
            )
        fmt = _FLOAT_FMT
        out = self._file
        for k in range(decimation - 1, record.steps, decimation):
            t = record.times[k]
            if t < self._last_t:
                raise ContractError("record rows would go backwards in time")
            self._last_t = t
            t_text = fmt % t
            policy = record.policy[k]
            for p, label in enumerate(record.labels):
                fields = [t_text, label]
                fields += [
                    fmt % record.i[k, p],
                    fmt % record.i_ref[k, p],
                    fmt % record.i_z[k, p],
                    fmt % record.v_up[k, p],
                    fmt % record.v_low[k, p],
                ]
                fields += [fmt % x for x in record.v_c[k, p]]
                fields += [str(int(x)) for x in record.u[k, p]]
                fields += [
                    fmt % record.v_dc_link[k, p],
                    fmt % record.i_dc_link[k, p],
                    policy,
                ]
                out.write(",".join(fields) + "\n")
                self._rows_written += 1

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()

    def __enter__(self) -> "TimeSeriesSink":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def load_record_csv(path: str) -> RunRecord:
    """Reload a persisted run into a RunRecord (bit-exact floats)."""
    with open(path, newline="") as f:
        header = f.readline().rstrip("\n").split(",")
        n2 = sum(1 for c in header if c.startswith("v_c_"))
        if n2 == 0 or n2 % 2 or header != csv_columns(n2 // 2):
            raise ContractError(f"{path!r} does not match the run CSV schema")
        n = n2 // 2
        raw_rows = [line.rstrip("\n").split(",") for line in f if line.strip()]
    if not raw_rows:
        raise ContractError(f"{path!r} contains no data rows")

    labels: list[str] = []
    for row in raw_rows:
        if row[1] in labels:
            break
        labels.append(row[1])
    n_cols = len(labels)
    if len(raw_rows) % n_cols:
        raise ContractError(f"{path!r}: row count is not a multiple of {n_cols} phases")
    steps = len(raw_rows) // n_cols

    times = np.empty(steps)
    shape = (steps, n_cols)
    i = np.empty(shape)
    i_ref = np.empty(shape)
    i_z = np.empty(shape)
    v_up = np.empty(shape)
    v_low = np.empty(shape)
    v_c = np.empty((steps, n_cols, n2))
    u = np.empty((steps, n_cols, n2), dtype=np.int8)
    v_dc = np.empty(shape)
    i_dc = np.empty(shape)
    policy: list[str] = []

    for r, row in enumerate(raw_rows):
        if len(row) != len(header):
            raise ContractError(f"{path!r}: row {r + 2} has {len(row)} fields")
        k, p = divmod(r, n_cols)
        if row[1] != labels[p]:
            raise ContractError(f"{path!r}: row {r + 2} breaks the phase ordering")
        if p == 0:
            times[k] = float(row[0])
            policy.append(row[-1])
        i[k, p] = float(row[2])
        i_ref[k, p] = float(row[3])
        i_z[k, p] = float(row[4])
        v_up[k, p] = float(row[5])
        v_low[k, p] = float(row[6])
        v_c[k, p] = [float(x) for x in row[7 : 7 + n2]]
        u[k, p] = [int(x) for x in row[7 + n2 : 7 + 2 * n2]]
        v_dc[k, p] = float(row[7 + 2 * n2])
        i_dc[k, p] = float(row[8 + 2 * n2])

    return RunRecord(
        times=times,
        labels=labels,
        i=i,
        i_ref=i_ref,
        i_z=i_z,
        v_up=v_up,
        v_low=v_low,
        v_c=v_c,
        u=u,
        v_dc_link=v_dc,
        i_dc_link=i_dc,
        policy=policy,
    )


def format_metrics_text(metrics: SummaryMetrics) -> str:
    """Flat ``key = value`` report, one metric per line, sorted by key."""
    flat = metrics.to_flat()
    return "".join(
        f"{key} = {_FLOAT_FMT % value}\n" for key, value in sorted(flat.items())
    )


def write_metrics_report(
    metrics: SummaryMetrics, text_path: str, json_path: str
) -> None:
    """Persist a metrics summary as flat text plus machine-readable JSON."""
    text = format_metrics_text(metrics)
    with open(text_path, "w") as f:
        f.write(text)
    with open(json_path, "w") as f:
        json.dump(metrics.to_flat(), f, sort_keys=True, indent=2)
        f.write("\n")
