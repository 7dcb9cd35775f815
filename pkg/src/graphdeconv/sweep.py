"""Phase-diagram experiment driver.

A sweep fixes a synthetic scenario (graph ensemble, source sparsity,
filter perturbation, noise level) and varies two of its knobs over
grids, running several independent realizations per grid cell and
aggregating relative source error and support-recovery accuracy.

Realizations are seeded by (cell row, cell column, realization index),
so results are bitwise identical regardless of execution order or the
number of worker threads, and a single cell can be reproduced in
isolation.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ContractViolationError, DataValidationError, GraphDeconvError
from .graphio import read_edgelist
from .gsp import (
    GsoKind,
    apply_polynomial_filter,
    apply_spectral_filter,
    khatri_rao_design,
    shift_operator,
    spectral_decomposition,
)
from .metrics import relative_error, support_accuracy
from .solver import SolverConfig, reweighted_l1
from .synth import (
    SeedStream,
    add_noise,
    bernoulli_gaussian_sources,
    erdos_renyi_graph,
    perturbed_filter_coeffs,
    perturbed_inverse_response,
)

# Reserved seed path for the shared graph in fixed-graph mode; cell
# realization paths always have length 3, so this cannot collide.
_SHARED_GRAPH_PATH = (0,)


class Experiment(str, Enum):
    """Which two knobs the grid axes control."""

    ALPHA_VS_P = "alpha-vs-p"
    ALPHA_VS_THETA = "alpha-vs-theta"
    THETA_VS_P = "theta-vs-p"
    ETA_VS_ALPHA = "eta-vs-alpha"
    THETA_VS_L = "theta-vs-l"

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ContractViolationError(
                f"unknown experiment {text!r}; expected one of "
                f"{[e.value for e in cls]}"
            ) from None


# Maps each experiment to the SweepConfig fields its axes override.
EXPERIMENT_AXES = {
    Experiment.ALPHA_VS_P: ("alpha", "n_signals"),
    Experiment.ALPHA_VS_THETA: ("alpha", "theta"),
    Experiment.THETA_VS_P: ("theta", "n_signals"),
    Experiment.ETA_VS_ALPHA: ("eta", "alpha"),
    Experiment.THETA_VS_L: ("theta", "filter_order"),
}

_INT_FIELDS = {"n_signals", "filter_order"}


@dataclass(frozen=True)
class SweepConfig:
    """Grid definition plus the base scenario for every cell.

    axis1 and axis2 are the grids for the two experiment-controlled
    fields; all other fields hold the values used when an experiment
    does not override them.
    """

    experiment: Experiment
    axis1: Tuple[float, ...]
    axis2: Tuple[float, ...]
    n_nodes: int = 20
    edge_prob: float = 0.4
    n_signals: int = 20
    theta: float = 0.15
    alpha: float = 0.02
    beta: float = 0.5
    filter_order: int = 3
    eta: float = 0.0
    realizations: int = 20
    master_seed: int = 0
    kappa: float = 0.1
    gso: str = "normalized-adjacency"
    fixed_graph: bool = False
    graph_file: Optional[str] = None
    delta: Optional[float] = None
    eps: float = 1e-6
    max_outer: int = 4
    inner_tol: float = 1e-9
    max_inner: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "experiment", Experiment.parse(self.experiment))
        for name in ("axis1", "axis2"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ContractViolationError(f"{name} must be non-empty")
            object.__setattr__(self, name, values)
        if self.realizations < 1:
            raise ContractViolationError("realizations must be >= 1")
        if self.n_nodes < 2:
            raise ContractViolationError("n_nodes must be >= 2")
        GsoKind.parse(self.gso)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DataValidationError(
                f"unknown sweep config keys: {sorted(unknown)}"
            )
        if "experiment" not in data or "axis1" not in data or "axis2" not in data:
            raise DataValidationError(
                "sweep config requires experiment, axis1 and axis2"
            )
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataValidationError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise DataValidationError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def solver_config(self):
        return SolverConfig(
            delta=self.delta,
            eps=self.eps,
            max_outer=self.max_outer,
            inner_tol=self.inner_tol,
            max_inner=self.max_inner,
        )


@dataclass(frozen=True)
class RealizationRecord:
    """One realization's metrics; re/acc are NaN when ok is False."""

    axis1: float
    axis2: float
    index: int
    re: float
    acc: float
    ok: bool


@dataclass(frozen=True)
class CellResult:
    """Aggregated metrics for one grid cell."""

    axis1: float
    axis2: float
    re_mean: float
    re_stderr: float
    acc_mean: float
    acc_stderr: float
    n_ok: int
    n_fail: int


@dataclass(frozen=True)
class SweepResult:
    cells: Tuple[CellResult, ...]
    records: Tuple[RealizationRecord, ...]
    master_seed: int


def _cell_scenario(config, a1, a2):
    """Base scenario with the two axis fields overridden."""
    f1, f2 = EXPERIMENT_AXES[config.experiment]
    updates = {}
    for name, value in ((f1, a1), (f2, a2)):
        updates[name] = int(round(value)) if name in _INT_FIELDS else float(value)
    return replace(config, **updates)


def _run_realization(scenario, stream, shared_graph, solver_config):
    """One synthetic draw + solve + metrics.  Raises on hard failure."""
    graph = shared_graph
    if graph is None:
        graph = erdos_renyi_graph(
            scenario.n_nodes, scenario.edge_prob, stream.child(0)
        )
    shift = shift_operator(graph, scenario.gso)
    decomp = spectral_decomposition(shift)
    n = graph.n_nodes

    sources = bernoulli_gaussian_sources(
        n, scenario.n_signals, scenario.theta, stream.child(2)
    )
    X0 = sources.values

    if scenario.experiment is Experiment.THETA_VS_L:
        coeffs = perturbed_filter_coeffs(
            scenario.filter_order, scenario.beta, stream.child(1)
        )
        Y = apply_polynomial_filter(shift, coeffs, X0)
    else:
        g0 = perturbed_inverse_response(n, scenario.alpha, stream.child(1))
        with np.errstate(divide="ignore", over="ignore"):
            forward = 1.0 / g0
        Y = apply_spectral_filter(decomp.eigenvectors, forward, X0)

    if scenario.eta > 0:
        Y = add_noise(Y, scenario.eta, stream.child(3))
    if not np.isfinite(Y).all():
        raise ContractViolationError("observations are not finite")

    design = khatri_rao_design(Y, decomp.eigenvectors)
    sol = reweighted_l1(design, np.ones(n), float(n), solver_config)
    re = relative_error(sol.X_hat, X0)
    acc = support_accuracy(sol.X_hat, X0, scenario.kappa)
    if not (np.isfinite(re) and np.isfinite(acc)):
        raise ContractViolationError("metrics are not finite")
    return re, acc


def _resolve_shared_graph(config):
    if config.graph_file is not None:
        return read_edgelist(config.graph_file)
    if config.fixed_graph:
        return erdos_renyi_graph(
            config.n_nodes,
            config.edge_prob,
            SeedStream(config.master_seed, _SHARED_GRAPH_PATH),
        )
    return None


def run_sweep(config, jobs=1):
    """Run every (cell, realization) task and aggregate deterministically.

    jobs > 1 distributes realizations over a thread pool; the output is
    identical to a serial run because every task derives its randomness
    from its own (row, column, index) seed path and the reduction
    iterates tasks in sorted order.
    """
    shared_graph = _resolve_shared_graph(config)
    solver_config = config.solver_config()

    tasks = [
        (i, j, k)
        for i in range(len(config.axis1))
        for j in range(len(config.axis2))
        for k in range(config.realizations)
    ]

    def work(task):
        i, j, k = task
        scenario = _cell_scenario(config, config.axis1[i], config.axis2[j])
        stream = SeedStream(config.master_seed, (i, j, k))
        try:
            re, acc = _run_realization(scenario, stream, shared_graph, solver_config)
            return task, (re, acc, True)
        except (GraphDeconvError, np.linalg.LinAlgError, FloatingPointError):
            return task, (float("nan"), float("nan"), False)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            outcomes = dict(pool.map(work, tasks))
    else:
        outcomes = dict(map(work, tasks))

    records = []
    cells = []
    for i, a1 in enumerate(config.axis1):
        for j, a2 in enumerate(config.axis2):
            res = []
            accs = []
            n_fail = 0
            for k in range(config.realizations):
                re, acc, ok = outcomes[(i, j, k)]
                records.append(
                    RealizationRecord(a1, a2, k, re, acc, ok)
                )
                if ok:
                    res.append(re)
                    accs.append(acc)
                else:
                    n_fail += 1
            cells.append(_aggregate_cell(a1, a2, res, accs, n_fail))
    return SweepResult(
        cells=tuple(cells), records=tuple(records), master_seed=config.master_seed
    )


def _aggregate_cell(a1, a2, res, accs, n_fail):
    n_ok = len(res)
    if n_ok == 0:
        return CellResult(a1, a2, float("nan"), float("nan"),
                          float("nan"), float("nan"), 0, n_fail)
    re_arr = np.asarray(res)
    acc_arr = np.asarray(accs)
    re_se = float(re_arr.std(ddof=1) / np.sqrt(n_ok)) if n_ok > 1 else 0.0
    acc_se = float(acc_arr.std(ddof=1) / np.sqrt(n_ok)) if n_ok > 1 else 0.0
    return CellResult(
        a1, a2,
        float(re_arr.mean()), re_se,
        float(acc_arr.mean()), acc_se,
        n_ok, n_fail,
    )


CSV_HEADER = "axis1,axis2,re_mean,re_stderr,acc_mean,acc_stderr,n_ok,n_fail,seed"
LOG_HEADER = "axis1,axis2,realization,re,acc,ok"


def _fmt(x):
    return "%.17g" % float(x)


def write_results_csv(result, path):
    """Cell summaries, one row per grid cell, stable %.17g formatting."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for cell in result.cells:
            fh.write(
                ",".join(
                    [
                        _fmt(cell.axis1),
                        _fmt(cell.axis2),
                        _fmt(cell.re_mean),
                        _fmt(cell.re_stderr),
                        _fmt(cell.acc_mean),
                        _fmt(cell.acc_stderr),
                        str(cell.n_ok),
                        str(cell.n_fail),
                        str(result.master_seed),
                    ]
                )
                + "\n"
            )


def write_realizations_csv(result, path):
    """Per-realization log, one row per (cell, realization)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(LOG_HEADER + "\n")
        for rec in result.records:
            fh.write(
                ",".join(
                    [
                        _fmt(rec.axis1),
                        _fmt(rec.axis2),
                        str(rec.index),
                        _fmt(rec.re),
                        _fmt(rec.acc),
                        "1" if rec.ok else "0",
                    ]
                )
                + "\n"
            )


_PLOT_TEMPLATE = '''\
#!/usr/bin/env python
"""Render heatmaps from a sweep results CSV (written by graphdeconv).

Usage: python plot_results.py [results.csv]
Requires matplotlib; the sweep itself never imports it.
"""
import csv
import sys

import matplotlib.pyplot as plt
import numpy as np

path = sys.argv[1] if len(sys.argv) > 1 else "results.csv"
rows = list(csv.DictReader(open(path)))
a1 = sorted({{float(r["axis1"]) for r in rows}})
a2 = sorted({{float(r["axis2"]) for r in rows}})
re = np.full((len(a1), len(a2)), np.nan)
acc = np.full((len(a1), len(a2)), np.nan)
for r in rows:
    i = a1.index(float(r["axis1"]))
    j = a2.index(float(r["axis2"]))
    re[i, j] = float(r["re_mean"])
    acc[i, j] = float(r["acc_mean"])

fig, axes = plt.subplots(1, 2, figsize=(11, 4.2))
for ax, M, title in ((axes[0], re, "relative error"),
                     (axes[1], acc, "support accuracy")):
    im = ax.imshow(M, origin="lower", aspect="auto",
                   extent=[min(a2), max(a2), min(a1), max(a1)])
    ax.set_xlabel({axis2_label!r})
    ax.set_ylabel({axis1_label!r})
    ax.set_title(title)
    fig.colorbar(im, ax=ax)
fig.tight_layout()
out = path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150)
print("wrote", out)
'''


def write_plot_script(config, path):
    """Standalone matplotlib script for the emitted results CSV."""
    f1, f2 = EXPERIMENT_AXES[config.experiment]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_PLOT_TEMPLATE.format(axis1_label=f1, axis2_label=f2))
