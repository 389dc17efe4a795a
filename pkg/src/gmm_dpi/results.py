"""Result rows and their CSV layout."""

import csv
import io
import sys
from dataclasses import astuple, dataclass, fields
from pathlib import Path

from .closed_form import efficiency_asymptotic, efficiency_theoretical
from .simulation import AggregateResult

HEADER = ("snr,gamma,n_train,d,k,p_x_mean,p_x_std,p_z_mean,p_z_std,"
          "chi_mean,chi_std,eta_theory,eta_asym").split(",")


@dataclass(frozen=True)
class ResultRow:
    snr: float
    gamma: float
    n_train: int
    d: int
    k: int
    p_x_mean: float
    p_x_std: float
    p_z_mean: float
    p_z_std: float
    chi_mean: float
    chi_std: float
    eta_theory: float
    eta_asym: float


def theory_for_counts(snr, n1, n2, d, k):
    """Theoretical and asymptotic efficiency at the realised class counts.

    Uses ``N = n1`` and ``gamma = n2 / n1``, i.e. exactly the training set the
    simulation draws after integer rounding.
    """
    g = n2 / n1
    return (float(efficiency_theoretical(snr, n1, g, d, k)),
            float(efficiency_asymptotic(snr, n1 + n2, g, d, k)))


def row_from_aggregate(agg: AggregateResult) -> ResultRow:
    eta, eta_asym = theory_for_counts(agg.snr, agg.n1, agg.n2, agg.d, agg.k)
    return ResultRow(agg.snr, agg.gamma, agg.n_train, agg.d, agg.k, agg.mean_p_x, agg.std_p_x,
                     agg.mean_p_z, agg.std_p_z, agg.mean_chi, agg.std_chi, eta, eta_asym)


def _fmt(value):
    if isinstance(value, int):
        return str(value)
    return f"{value:.9g}"


def format_rows(rows) -> str:
    rows = sorted(rows, key=lambda r: (r.snr, r.gamma, r.n_train, r.k))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in rows:
        writer.writerow(_fmt(v) for v in astuple(r))
    return buf.getvalue()


def emit_results(rows, destination=None) -> None:
    """Write rows as CSV to ``destination`` (path, text stream, or stdout)."""
    rows = list(rows)
    if not rows:
        raise ValueError("no result rows to emit")
    text = format_rows(rows)
    if destination is None:
        sys.stdout.write(text)
    elif hasattr(destination, "write"):
        destination.write(text)
    else:
        path = Path(destination)
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        types = {f.name: f.type for f in fields(ResultRow)}
        return [ResultRow(**{k: (int(v) if types[k] in (int, "int") else float(v))
                             for k, v in rec.items()}) for rec in reader]
