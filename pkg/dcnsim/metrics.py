#
# 8888888b.   .d8888b.  888b    888  .d8888b.  8888888 888b     d888 
# 888  "Y88b d88P  Y88b 8888b   888 d88P  Y88b   888   8888b   d8888 
# 888    888 888    888 88888b  888 Y88b.        888   88888b.d88888 
# 888    888 888        888Y88b 888  "Y888b.     888   888Y88888P888 
# 888    888 888        888 Y88b888     "Y88b.   888   888 Y888P 888 
# 888    888 888    888 888  Y88888       "888   888   888  Y8P  888 
# 888  .d88P Y88b  d88P 888   Y8888 Y88b  d88P   888   888   "   888 
# 8888888P"   "Y8888P"  888    Y888  "Y8888P"  8888888 888       888 
#
# Copyright (c) 2025, Abe Mishler
# Licensed under the Universal Permissive License v 1.0
# as shown at https://oss.oracle.com/licenses/upl/. 
# 

"""
Per-iteration metrics trace with a frozen CSV schema.
"""

import math
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from .base import ArgumentError

COLUMNS = (
    "iteration", "gap", "f_value",
    "delta_x", "delta_g", "delta_h", "delta_gx",
    "rounds_x", "rounds_g", "rounds_h", "rounds_gx",
    "cum_rounds", "cum_scalars",
    "delta1", "delta2", "err_hat",
    "descent_ok", "jensen_ok",
    "max_radius", "node_radii", "bounded", "telescoping_residual", "bound_ok",
)
TIMING_COLUMNS = COLUMNS + ("wall_time",)
CUMULATIVE = ("cum_rounds", "cum_scalars")
FLAGS = ("descent_ok", "jensen_ok", "bounded", "bound_ok")

# defaults for columns an algorithm does not produce
_BLANK: Dict[str, Any] = {
    "delta_gx": 0.0, "rounds_gx": 0,
    "delta1": 0.0, "delta2": 0.0, "err_hat": 0.0,
    "descent_ok": True, "jensen_ok": True,
    "max_radius": 0.0, "node_radii": "", "bounded": True, "telescoping_residual": 0.0,
    "bound_ok": True,
}


def format_radii(radii) -> str:
    """Per-node distances to x*, joined with ';' for the node_radii column"""
    return ";".join(f"{float(r):.17g}" for r in radii)


def parse_radii(text: str) -> List[float]:
    return [float(v) for v in text.split(";")] if text else []


class MetricsTrace:
    """
    Rows keyed by a strictly increasing iteration index.

    For accelerated runs delta_x, delta_g and delta_h hold the v-hat
    variants and delta_gx the gradient error at the new iterate.
    """

    def __init__(self, algorithm: str = "", timing: bool = False):
        self.algorithm = algorithm
        self.timing = timing
        self.columns = TIMING_COLUMNS if timing else COLUMNS
        self.rows: List[Dict[str, Any]] = []
        self.target_met: Optional[bool] = None
        self._t0 = time.perf_counter()

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, **values) -> None:
        """
        Add one row. Missing optional columns get their neutral value.

        Raises:
            ArgumentError: On unknown columns, a non-increasing iteration
                or a decreasing cumulative column
        """
        unknown = set(values) - set(TIMING_COLUMNS)
        if unknown:
            raise ArgumentError(f"unknown trace columns: {sorted(unknown)}")
        row = dict(_BLANK)
        row.update({k: v for k, v in values.items() if k in self.columns})
        if self.timing and "wall_time" not in row:
            row["wall_time"] = time.perf_counter() - self._t0
        missing = [c for c in self.columns if c not in row]
        if missing:
            raise ArgumentError(f"missing trace columns: {missing}")
        if self.rows:
            last = self.rows[-1]
            if row["iteration"] <= last["iteration"]:
                raise ArgumentError("trace iterations must be strictly increasing")
            for col in CUMULATIVE:
                if row[col] < last[col]:
                    raise ArgumentError(f"cumulative column {col} decreased")
        self.rows.append(row)

    @property
    def last(self) -> Dict[str, Any]:
        return self.rows[-1]

    @property
    def final_gap(self) -> float:
        return self.rows[-1]["gap"] if self.rows else math.inf

    def column(self, name: str) -> List[Any]:
        return [row[name] for row in self.rows]

    def flags_ok(self, name: str) -> bool:
        return all(bool(v) for v in self.column(name))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows, columns=list(self.columns))
        for col in FLAGS:
            frame[col] = frame[col].astype(int)
        return frame

    def to_csv(self, path) -> Path:
        path = Path(path)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path

    @classmethod
    def from_csv(cls, path, algorithm: str = "") -> "MetricsTrace":
        frame = pd.read_csv(path, dtype={"node_radii": str})
        timing = "wall_time" in frame.columns
        missing = [c for c in COLUMNS if c not in frame.columns]
        if missing:
            raise ArgumentError(f"{path}: not a trace file (missing {missing})")
        frame["node_radii"] = frame["node_radii"].fillna("")
        trace = cls(algorithm or Path(path).parent.name, timing)
        for record in frame.to_dict("records"):
            for col in FLAGS:
                record[col] = bool(record[col])
            trace.append(**record)
        return trace
