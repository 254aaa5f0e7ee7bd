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
Experiment orchestration: suite, reference solve, topology, algorithm
run and the trace / parameter files, plus trace comparison.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .base import ConfigError, NodePool, RunOptions
from .consensus import Communicator
from .metrics import MetricsTrace
from .network import chebyshev_degree, chebyshev_operator, contraction_pair, generate
from .objectives import make_suite, reference_solve, save_suite
from .registry import get_algorithm, make_backend

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
TRACE_FILE = "trace.csv"
PARAMS_FILE = "params.json"
SUITE_FILE = "suite.npz"


@dataclass
class ExperimentResult:
    trace: MetricsTrace
    params: Dict[str, Any]
    out_dir: Path
    files: List[Path] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if self.trace.target_met else 1


def _jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become strings"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    return value


def build_communicator(options: RunOptions, m: int) -> Communicator:
    """
    Topology schedule, contraction pair and optional Chebyshev operator.

    Raises:
        ConfigError: If the topology is invalid or Chebyshev mixing is
            requested on a time-varying schedule
    """
    topo = options.topology
    schedule = generate(topo.kind, topo, m, options.seed)
    tau, lam = contraction_pair(schedule, topo.trials)
    operator = None
    if topo.chebyshev is not None:
        if not schedule.is_static:
            raise ConfigError("Chebyshev mixing requires a static topology")
        if topo.chebyshev == "auto":
            K = chebyshev_degree(lam)
        else:
            try:
                K = int(topo.chebyshev)
            except ValueError:
                raise ConfigError(f"chebyshev must be an integer or 'auto', "
                                  f"got '{topo.chebyshev}'") from None
        operator = chebyshev_operator(schedule.matrix(0), K)
    logger.info("topology %s/%s: tau = %d, lambda = %.4g%s", topo.kind, topo.graph, tau, lam,
                f", Chebyshev K = {operator.K}" if operator else "")
    return Communicator(schedule, tau, lam, operator)


def run_experiment(options: RunOptions, write: bool = True) -> ExperimentResult:
    """
    Run one configured experiment end to end.

    Builds the suite, solves for the reference, builds the topology,
    schedules and runs the algorithm, then writes trace.csv and
    params.json (and suite.npz when requested) to options.out_dir.

    Args:
        options: Fully resolved run options
        write: Write the output files

    Returns:
        ExperimentResult: Trace, parameter dump and written files

    Raises:
        DcnError: Any configuration or numerical failure
    """
    suite = make_suite(options.suite, options.seed)
    x0 = np.zeros(suite.dim) if options.x0 is None else np.asarray(options.x0, dtype=float)
    if x0.shape != (suite.dim,):
        raise ConfigError(f"x0 must have length {suite.dim}, got {x0.size}")
    reference = reference_solve(suite, options.solver.ref_tol, x0, options.solver)
    communicator = build_communicator(options, suite.m)
    backend = make_backend(options.backend)
    optimizer_class = get_algorithm(options.algorithm)

    with NodePool(options.workers) as pool:
        optimizer = optimizer_class(suite, reference, communicator, backend, options, pool)
        trace = optimizer.run(x0)

    params = {
        "schema_version": SCHEMA_VERSION,
        "algorithm": options.algorithm,
        "mode": options.mode,
        "backend": options.backend,
        "seed": options.seed,
        "eps": options.eps,
        "schedule": optimizer.params.to_dict(),
        "network": {
            "kind": options.topology.kind,
            "graph": options.topology.graph,
            "tau": communicator.tau,
            "lambda": communicator.lam,
            "chebyshev_K": communicator.operator.K if communicator.operator else None,
        },
        "reference": reference.scalars(),
        "suite": suite.constants(),
        "result": {
            "iterations": len(trace) - 1,
            "final_gap": trace.final_gap,
            "target_met": trace.target_met,
            "cum_rounds": communicator.total_rounds,
            "cum_scalars": communicator.total_scalars,
        },
    }
    replicated = getattr(backend, "replicated", None)
    if replicated is not None:
        params["replication"] = {"steps": replicated.steps, "cost": replicated.cost}
    params = _jsonable(params)

    out_dir = Path(options.out_dir)
    result = ExperimentResult(trace, params, out_dir)
    if write:
        out_dir.mkdir(parents=True, exist_ok=True)
        result.files.append(trace.to_csv(out_dir / TRACE_FILE))
        with open(out_dir / PARAMS_FILE, "w") as f:
            json.dump(params, f, indent=2, sort_keys=True)
            f.write("\n")
        result.files.append(out_dir / PARAMS_FILE)
        if options.save_suite:
            result.files.append(save_suite(suite, out_dir / SUITE_FILE))
    logger.info("%s finished: %d iterations, final gap %.3e", options.algorithm,
                len(trace) - 1, trace.final_gap)
    return result


@dataclass
class Comparison:
    by_iteration: pd.DataFrame
    by_cost: pd.DataFrame
    summary: pd.DataFrame

    def save(self, out_dir) -> List[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for name in ("by_iteration", "by_cost", "summary"):
            path = out_dir / f"{name}.csv"
            getattr(self, name).to_csv(path, index=False, float_format="%.17g")
            paths.append(path)
        return paths


def load_trace(path) -> tuple:
    """
    Read a trace from a run directory or a trace.csv file.

    Returns:
        Tuple of (name, MetricsTrace, predicted iterations or None)
    """
    path = Path(path)
    csv = path / TRACE_FILE if path.is_dir() else path
    trace = MetricsTrace.from_csv(csv, algorithm=csv.parent.name)
    predicted = None
    params_path = csv.parent / PARAMS_FILE
    if params_path.exists():
        with open(params_path) as f:
            dump = json.load(f)
        trace.algorithm = dump.get("algorithm", trace.algorithm)
        N = dump.get("schedule", {}).get("N")
        predicted = None if N is None else int(N) + 1
    return csv.parent.name, trace, predicted


def compare(traces: Union[Dict[str, MetricsTrace], Sequence], eps: Optional[float] = None) -> Comparison:
    """
    Align gap curves by iteration and by cumulative scalar cost.

    Args:
        traces: Mapping of name to trace, or run directories / trace files
        eps: Target used for the iterations-to-eps column

    Returns:
        Comparison: by_iteration, by_cost and summary frames (empty for no input)
    """
    named: List[tuple] = []
    if isinstance(traces, dict):
        named = [(name, trace, None) for name, trace in traces.items()]
    else:
        seen: Dict[str, int] = {}
        for item in traces:
            name, trace, predicted = load_trace(item)
            seen[name] = seen.get(name, 0) + 1
            if seen[name] > 1:
                name = f"{name}_{seen[name]}"
            named.append((name, trace, predicted))

    if not named:
        empty = pd.DataFrame()
        return Comparison(empty, empty.copy(), empty.copy())

    frames = {name: trace.to_frame() for name, trace, _ in named}
    by_iteration = None
    for name, frame in frames.items():
        part = frame[["iteration", "gap"]].rename(columns={"gap": f"gap_{name}"})
        by_iteration = part if by_iteration is None else by_iteration.merge(part, on="iteration", how="outer")
    by_iteration = by_iteration.sort_values("iteration").reset_index(drop=True)

    grid = pd.DataFrame({"cum_scalars": np.unique(np.concatenate(
        [frame["cum_scalars"].to_numpy() for frame in frames.values()]))})
    by_cost = grid
    for name, frame in frames.items():
        part = frame[["cum_scalars", "gap"]].sort_values("cum_scalars")
        part = part.drop_duplicates("cum_scalars", keep="last").rename(columns={"gap": f"gap_{name}"})
        by_cost = pd.merge_asof(by_cost, part, on="cum_scalars", direction="backward")

    rows = []
    for name, trace, predicted in named:
        frame = frames[name]
        hit = frame.loc[frame["gap"] <= eps, "iteration"] if eps is not None else pd.Series(dtype=int)
        rows.append({
            "name": name,
            "algorithm": trace.algorithm,
            "iterations": int(frame["iteration"].iloc[-1]),
            "predicted_iterations": predicted,
            "iterations_to_eps": int(hit.iloc[0]) if len(hit) else None,
            "final_gap": float(frame["gap"].iloc[-1]),
            "cum_rounds": int(frame["cum_rounds"].iloc[-1]),
            "cum_scalars": int(frame["cum_scalars"].iloc[-1]),
        })
    summary = pd.DataFrame(rows)
    return Comparison(by_iteration, by_cost, summary)
