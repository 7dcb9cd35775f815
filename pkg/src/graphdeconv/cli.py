"""Command-line interface.

Subcommands: gen (synthetic problem instances), solve (deconvolve
observations on a graph), sweep (phase-diagram experiments), check
(recovery certificates), epinions (trust-network source localization).

Exit codes: 0 success; 1 usage error; 2 invalid input data;
3 solver failed to converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .exceptions import GraphDeconvError
from .graphio import read_edgelist, write_edgelist
from .gsp import (
    GsoKind,
    apply_spectral_filter,
    frequency_response,
    inverse_response,
    khatri_rao_design,
    shift_operator,
    spectral_decomposition,
)
from .guarantees import (
    CertificateParams,
    check_exact_recovery,
    eigenvector_coherence,
    min_sample_size,
    noise_tolerance,
    offsupport_filtered_noise,
    recovery_margin,
    response_offset,
    stability_coefficient,
    stable_recovery_bound,
)
from .ratings import (
    build_trust_graph,
    center_ratings,
    earliest_source_labels,
    ingest_ratings,
    rated_mask,
    run_source_localization,
    sample_dense_core,
)
from .solver import SolverConfig, reweighted_l1
from .sweep import (
    SweepConfig,
    run_sweep,
    write_plot_script,
    write_realizations_csv,
    write_results_csv,
)
from .synth import (
    SeedStream,
    add_noise,
    bernoulli_gaussian_sources,
    erdos_renyi_graph,
    perturbed_inverse_response,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NO_CONVERGENCE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; remap to this tool's code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _load_matrix(path):
    M = np.loadtxt(path, delimiter=",", ndmin=2)
    return np.asarray(M, dtype=float)


def _load_vector(path):
    v = np.loadtxt(path, delimiter=",")
    return np.atleast_1d(np.asarray(v, dtype=float))


def _save_matrix(path, M):
    np.savetxt(path, np.asarray(M), delimiter=",", fmt="%.17g", newline="\n")


def _solver_config_from(args):
    return SolverConfig(
        delta=args.delta,
        eps=args.eps,
        max_outer=args.max_outer,
        inner_tol=args.inner_tol,
        max_inner=args.max_inner,
    )


def _add_solver_args(p):
    p.add_argument("--delta", type=float, default=None,
                   help="reweighting smoother (default: scaled from first solve)")
    p.add_argument("--eps", type=float, default=1e-6,
                   help="outer stopping threshold (default 1e-6)")
    p.add_argument("--max-outer", type=int, default=4,
                   help="number of reweighted passes (default 4)")
    p.add_argument("--inner-tol", type=float, default=1e-9,
                   help="interior-point tolerance (default 1e-9)")
    p.add_argument("--max-inner", type=int, default=None,
                   help="interior-point iteration cap (default 50 * rows)")


def _cmd_gen(args):
    out = args.out
    os.makedirs(out, exist_ok=True)
    stream = SeedStream(args.seed)
    graph = erdos_renyi_graph(args.n_nodes, args.edge_prob, stream.child(0))
    decomp = spectral_decomposition(shift_operator(graph, args.gso))
    g0 = perturbed_inverse_response(graph.n_nodes, args.alpha, stream.child(1))
    sources = bernoulli_gaussian_sources(
        graph.n_nodes, args.n_signals, args.theta, stream.child(2)
    )
    with np.errstate(divide="ignore"):
        forward = 1.0 / g0
    Y = apply_spectral_filter(decomp.eigenvectors, forward, sources.values)
    if not np.isfinite(Y).all():
        print(
            "error: inverse response has a zero entry; lower --alpha",
            file=sys.stderr,
        )
        return EXIT_DATA
    if args.eta > 0:
        Y = add_noise(Y, args.eta, stream.child(3))

    write_edgelist(graph, os.path.join(out, "graph.edgelist"))
    _save_matrix(os.path.join(out, "sources.csv"), sources.values)
    _save_matrix(os.path.join(out, "observations.csv"), Y)
    _save_matrix(os.path.join(out, "inverse_response.csv"), g0[:, None])
    params = {
        "n_nodes": args.n_nodes,
        "edge_prob": args.edge_prob,
        "theta": args.theta,
        "n_signals": args.n_signals,
        "alpha": args.alpha,
        "eta": args.eta,
        "seed": args.seed,
        "gso": str(GsoKind.parse(args.gso).value),
    }
    with open(os.path.join(out, "params.json"), "w", encoding="utf-8") as fh:
        json.dump(params, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote instance to {out} (n={args.n_nodes}, P={args.n_signals})")
    return EXIT_OK


def _cmd_solve(args):
    graph = read_edgelist(args.graph)
    Y = _load_matrix(args.observations)
    decomp = spectral_decomposition(shift_operator(graph, args.gso))
    n = graph.n_nodes
    r = np.ones(n) if args.r is None else _load_vector(args.r)
    c = float(n) if args.c is None else args.c
    design = khatri_rao_design(Y, decomp.eigenvectors)
    sol = reweighted_l1(design, r, c, _solver_config_from(args))

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _save_matrix(os.path.join(args.out, "inverse_response.csv"),
                     sol.g_hat[:, None])
        _save_matrix(os.path.join(args.out, "sources.csv"), sol.X_hat)
    residual = abs(float(r @ sol.g_hat) - c)
    print(f"objective      {sol.objective:.12g}")
    print(f"iterations     {sol.iterations}")
    print(f"converged      {sol.converged}")
    print(f"constraint     |r'g - c| = {residual:.3e}")
    history = ", ".join(f"{v:.6g}" for v in sol.objective_history)
    print(f"objective path {history}")
    if args.out:
        print(f"wrote inverse_response.csv, sources.csv to {args.out}")
    return EXIT_OK if sol.converged else EXIT_NO_CONVERGENCE


def _cmd_sweep(args):
    config = SweepConfig.from_json(args.config)
    result = run_sweep(config, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    results_path = os.path.join(args.out, "results.csv")
    write_results_csv(result, results_path)
    write_plot_script(config, os.path.join(args.out, "plot_results.py"))
    if args.log_realizations:
        write_realizations_csv(
            result, os.path.join(args.out, "realizations.csv")
        )
    n_fail = sum(c.n_fail for c in result.cells)
    print(
        f"{config.experiment.value}: {len(result.cells)} cells x "
        f"{config.realizations} realizations, {n_fail} failures"
    )
    print(f"wrote {results_path}")
    return EXIT_OK


def _cmd_check(args):
    graph = read_edgelist(args.graph)
    decomp = spectral_decomposition(shift_operator(graph, args.gso))
    n = graph.n_nodes

    if args.g0 is not None:
        g0 = _load_vector(args.g0)
    elif args.coeffs is not None:
        h = _load_vector(args.coeffs)
        g0 = inverse_response(frequency_response(h, decomp.eigenvalues))
    else:
        g0 = perturbed_inverse_response(n, args.alpha, SeedStream(args.seed).child(1))

    r = np.ones(n) if args.r is None else _load_vector(args.r)
    c = float(n) if args.c is None else args.c
    params = CertificateParams.for_theta(
        args.theta,
        sigma3=args.sigma3,
        sigma4=args.sigma4,
        sigma5=args.sigma5,
        failure_prob=args.delta_prob,
    )
    coherence = eigenvector_coherence(decomp.eigenvectors)
    margin = recovery_margin(params, coherence)
    cert = check_exact_recovery(g0, r, c, margin, coherence)
    samples = min_sample_size(params.sigma_min, params.failure_prob)

    print(f"eigenvector coherence   {coherence:.6f}")
    print(f"recovery margin         {margin:.6f}")
    print(f"response offset norm    {cert.offset_norm:.6f}")
    print(f"threshold (c * margin)  {cert.threshold:.6f}")
    print(f"exact recovery          {'YES' if cert.satisfied else 'NO'}")
    print(f"sample size needed      P >= {samples} (scale constant 1)")

    if args.eta is not None:
        if not cert.satisfied:
            print("stability: skipped (exact certificate not satisfied)")
            return EXIT_OK
        sources = bernoulli_gaussian_sources(
            n, args.n_signals, args.theta, SeedStream(args.seed).child(2)
        )
        noise = args.eta * SeedStream(args.seed).child(3).generator().standard_normal(
            (n, args.n_signals)
        )
        n_off = offsupport_filtered_noise(
            g0, decomp.eigenvectors, noise, sources.support_mask
        )
        report = stable_recovery_bound(
            g0, r, c, n_off, decomp.eigenvectors, params, margin
        )
        offset = float(np.linalg.norm(response_offset(g0, r)))
        q_value = stability_coefficient(params, margin, offset, c)
        tol = noise_tolerance(n_off, decomp.eigenvectors, q_value, margin)
        print(f"stability coefficient Q {report.coefficient:.6f}")
        print(f"filtered noise l1       {report.noise_l1:.6f}")
        print(f"error bound (l2)        {report.bound_l2:.6f}")
        print(f"error bound (l1)        {report.bound_l1:.6f}")
        print(f"noise tolerance (fro)   {tol:.6f}")
    return EXIT_OK


def _cmd_epinions(args):
    data = ingest_ratings(args.ratings, args.trust)
    core = sample_dense_core(
        data,
        n_min=args.n_min,
        seed=args.seed,
        n_min_users=args.n_min_users,
        n_min_items=args.n_min_items,
    )
    for it, n_u, n_i in core.trace:
        print(f"fixpoint iteration {it}: {n_u} users, {n_i} items")
    if core.is_empty:
        print("dense core is empty; relax --n-min")
        return EXIT_DATA
    sampled = core.dataset
    print(
        f"dense core: {sampled.n_users} users, {sampled.n_items} items, "
        f"{sampled.n_ratings} ratings (density {sampled.density:.3f})"
    )
    graph = build_trust_graph(sampled)
    shift = shift_operator(graph, args.gso)
    Y = center_ratings(sampled)
    fractions = [float(t) for t in args.theta_sr.split(",") if t.strip()]
    labels = {t: earliest_source_labels(sampled, t) for t in fractions}
    rows = run_source_localization(
        Y, shift, labels, rated_mask(sampled), _solver_config_from(args)
    )

    os.makedirs(args.out, exist_ok=True)
    auc_path = os.path.join(args.out, "auc.csv")
    with open(auc_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("theta_sr,auc,auc_naive\n")
        for row in rows:
            fh.write(
                f"{row.theta_sr:.17g},{row.auc:.17g},{row.auc_naive:.17g}\n"
            )
    for row in rows:
        print(
            f"theta_sr={row.theta_sr:g}: AUC {row.auc:.4f} "
            f"(naive {row.auc_naive:.4f})"
        )
    print(f"wrote {auc_path}")
    return EXIT_OK


def build_parser():
    parser = _Parser(
        prog="graphdeconv",
        description="Blind deconvolution of diffused signals on graphs.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic problem instance")
    p.add_argument("--n-nodes", type=int, default=20)
    p.add_argument("--edge-prob", type=float, default=0.4)
    p.add_argument("--theta", type=float, default=0.15)
    p.add_argument("--n-signals", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.02)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gso", default="normalized-adjacency",
                   choices=["adj", "norm-adj", "laplacian", "adjacency",
                            "normalized-adjacency"])
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="deconvolve observations on a graph")
    p.add_argument("--graph", required=True, help="edge-list file")
    p.add_argument("--observations", required=True, help="CSV matrix, nodes x signals")
    p.add_argument("--gso", default="normalized-adjacency",
                   choices=["adj", "norm-adj", "laplacian", "adjacency",
                            "normalized-adjacency"])
    p.add_argument("--r", default=None,
                   help="constraint vector CSV (default: all ones)")
    p.add_argument("--c", type=float, default=None,
                   help="constraint value (default: n_nodes)")
    _add_solver_args(p)
    p.add_argument("--out", default=None, help="directory for result CSVs")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep", help="run a two-axis phase-diagram sweep")
    p.add_argument("--config", required=True, help="JSON sweep config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker threads (results are order-independent)")
    p.add_argument("--log-realizations", action="store_true",
                   help="also write per-realization metrics CSV")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("check", help="evaluate recovery certificates")
    p.add_argument("--graph", required=True, help="edge-list file")
    p.add_argument("--gso", default="normalized-adjacency",
                   choices=["adj", "norm-adj", "laplacian", "adjacency",
                            "normalized-adjacency"])
    p.add_argument("--theta", type=float, required=True,
                   help="source activation probability")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--g0", default=None,
                     help="inverse response CSV to certify")
    src.add_argument("--coeffs", default=None,
                     help="filter coefficients CSV; response derived from them")
    src.add_argument("--alpha", type=float, default=0.02,
                     help="generate a random response at this perturbation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r", default=None, help="constraint vector CSV")
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--sigma3", type=float, default=0.1)
    p.add_argument("--sigma4", type=float, default=0.1)
    p.add_argument("--sigma5", type=float, default=1.0)
    p.add_argument("--delta-prob", type=float, default=0.05,
                   help="certificate failure probability")
    p.add_argument("--eta", type=float, default=None,
                   help="noise level; enables the stability report")
    p.add_argument("--n-signals", type=int, default=20,
                   help="signals for the stability report's noise draw")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("epinions",
                       help="trust-network source localization experiment")
    p.add_argument("--ratings", required=True,
                   help="CSV: user_id,item_id,rating,timestamp")
    p.add_argument("--trust", required=True,
                   help="edge list: truster trusted")
    p.add_argument("--n-min", type=int, default=150,
                   help="dense-core rating threshold (users and items)")
    p.add_argument("--n-min-users", type=int, default=None,
                   help="override --n-min for users")
    p.add_argument("--n-min-items", type=int, default=None,
                   help="override --n-min for items")
    p.add_argument("--theta-sr", default="0.1,0.2,0.3,0.4",
                   help="comma-separated source fractions to score")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gso", default="normalized-adjacency",
                   choices=["adj", "norm-adj", "laplacian", "adjacency",
                            "normalized-adjacency"])
    _add_solver_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_epinions)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GraphDeconvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except np.linalg.LinAlgError as exc:
        print(f"error: linear algebra failure: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
