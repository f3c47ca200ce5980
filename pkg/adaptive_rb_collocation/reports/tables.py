"""
Result Tables

CSV writers for errors.csv, directions.csv and anova_terms.csv. Every
table has a header row; floats are written as %.17e.

References:
- docs/theory.md §5.3: Outputs
"""

import csv
from dataclasses import dataclass
from pathlib import Path

from ..anova.decomposition import format_label
from ..driver.report import TermSummary

ERRORS_HEADER = ["mode", "eps_rb", "level", "N_r", "visited", "e_mean", "e_sd", "seconds"]
DIRECTIONS_HEADER = ["j", "mean_norm", "p_j", "N_rj"]
TERMS_HEADER = [
    "label",
    "size",
    "order",
    "mean_norm",
    "gamma",
    "rho",
    "coefficient",
    "n_points",
    "n_snapshots",
]


@dataclass(frozen=True)
class ErrorRow:
    mode: str
    eps_rb: float
    level: int
    n_basis: int
    visited: int
    e_mean: float
    e_sd: float
    seconds: float


def fmt(value: float | None) -> str:
    if value is None:
        return ""
    return f"{float(value):.17e}"


def _write(path: str | Path, header: list[str], rows: list[list]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_errors(path: str | Path, rows: list[ErrorRow]) -> Path:
    return _write(
        path,
        ERRORS_HEADER,
        [
            [
                r.mode,
                fmt(r.eps_rb),
                r.level,
                r.n_basis,
                r.visited,
                fmt(r.e_mean),
                fmt(r.e_sd),
                fmt(r.seconds),
            ]
            for r in rows
        ],
    )


def write_directions(path: str | Path, directions: dict[int, tuple[float, int, int]]) -> Path:
    """One row per direction j (1-based): ‖E[u_j]‖, p_j, snapshots labelled {j}."""
    return _write(
        path,
        DIRECTIONS_HEADER,
        [[j + 1, fmt(norm), p, n] for j, (norm, p, n) in sorted(directions.items())],
    )


def write_terms(
    path: str | Path,
    terms: list[TermSummary],
    coefficients: dict[tuple[int, ...], int] | None = None,
) -> Path:
    coefficients = coefficients or {}
    rows = [
        [
            format_label(t.directions),
            len(t.directions),
            t.order,
            fmt(t.mean_norm),
            fmt(t.gamma),
            fmt(t.rho),
            coefficients.get(t.directions, ""),
            t.n_points,
            t.n_snapshots,
        ]
        for t in sorted(terms, key=lambda t: (len(t.directions), t.directions))
    ]
    return _write(path, TERMS_HEADER, rows)
