"""
Run Report

Structured summary of one driver run, written as a key = value text file.

References:
- docs/theory.md §5.3: Outputs
"""

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..anova.decomposition import format_label


class RunAborted(RuntimeError):
    """A numerical failure stopped the run; `report` holds the partial state."""

    def __init__(self, message: str, report: "RunReport"):
        super().__init__(message)
        self.report = report


@dataclass
class LevelSummary:
    """Candidates and outcomes of one interaction level (or sparse-grid level)."""

    level: int
    candidates: int = 0
    accepted: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    n_basis: int = 0
    visited_points: int = 0


@dataclass
class TermSummary:
    directions: tuple[int, ...]
    order: int
    mean_norm: float
    gamma: float
    rho: float | None
    n_points: int
    n_snapshots: int


@dataclass(eq=False)
class RunReport:
    """
    Outcome of one run.

    Attributes:
        mode: sparse_grid / fixed_anova / adaptive
        tolerances: ε values used
        n_basis: Final N_r
        visited_points: Points passed through rbm_update (anchor included)
        full_solves: Full FE solves
        levels: Per-level summaries
        terms: Final ANOVA terms
        directions: j ↦ (‖E[u_j]‖, p_j, N_{r_j}) for first-order terms
        history: Sparse-grid mode: (level, N_r, visited, mean, sd) after each level
        ledger: Snapshot labels in indicator-sorted order
        mean / sd: Moment fields
        timings: Wall-clock seconds per phase
        partial: True if written from an aborted run
    """

    mode: str
    tolerances: dict = field(default_factory=dict)
    n_basis: int = 0
    visited_points: int = 0
    full_solves: int = 0
    levels: list[LevelSummary] = field(default_factory=list)
    terms: list[TermSummary] = field(default_factory=list)
    directions: dict[int, tuple[float, int, int]] = field(default_factory=dict)
    history: list[tuple] = field(default_factory=list)
    ledger: list = field(default_factory=list)
    mean: np.ndarray | None = None
    sd: np.ndarray | None = None
    timings: dict = field(default_factory=dict)
    partial: bool = False

    def write(self, path: str | Path, extra: dict | None = None) -> Path:
        """Write report.txt as configparser sections."""
        parser = configparser.ConfigParser(interpolation=None)
        parser["run"] = {
            "mode": self.mode,
            "partial": str(self.partial).lower(),
            **{k: f"{v:.17e}" for k, v in self.tolerances.items()},
        }
        parser["basis"] = {
            "n_basis": str(self.n_basis),
            "visited_points": str(self.visited_points),
            "full_solves": str(self.full_solves),
        }
        parser["timing"] = {k: f"{v:.6f}" for k, v in sorted(self.timings.items())}
        parser["levels"] = {
            f"level_{s.level}": (
                f"candidates={s.candidates} accepted={len(s.accepted)} "
                f"rejected={len(s.rejected)} n_basis={s.n_basis} visited={s.visited_points}"
            )
            for s in self.levels
        }
        labels = ["none" if k is None else format_label(k) for k in self.ledger]
        parser["ledger"] = {"order": " ".join(labels) or "-"}
        for section, values in (extra or {}).items():
            parser[section] = {k: str(v) for k, v in values.items()}

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            parser.write(f)
        return path