"""End-to-end acceptance checks, one test per shipped guarantee.

Each test pins its scenario (sizes, seeds, tolerances) and prints the
measured quantities it gates on, so a failure's margin is visible in the
report.  These run the full pipeline and take a few seconds total.
"""

import itertools
import time

import numpy as np
import pytest

from graphdeconv import (
    CertificateParams,
    SeedStream,
    add_noise,
    apply_polynomial_filter,
    apply_spectral_filter,
    bernoulli_gaussian_sources,
    check_exact_recovery,
    eigenvector_coherence,
    erdos_renyi_graph,
    frequency_response,
    inverse_response,
    khatri_rao_design,
    max_sparsity_level,
    offsupport_filtered_noise,
    perturbed_inverse_response,
    recovery_margin,
    relative_error,
    reweighted_l1,
    shift_operator,
    spectral_decomposition,
    stability_coefficient,
    stable_recovery_bound,
)
from graphdeconv.ratings import run_source_localization
from graphdeconv.solver import L1SynthesisProblem, SolverConfig, solve_l1_synthesis
from graphdeconv.sweep import (
    SweepConfig,
    run_sweep,
    write_realizations_csv,
    write_results_csv,
)

from _lp_oracle import minimize_weighted_l1_bruteforce


def _planted_instance(stream, n=20, p=20, theta=0.1, alpha=0.02, eta=0.0):
    """Graph, decomposition, response, sources and observations for one draw."""
    graph = erdos_renyi_graph(n, 0.4, stream.child(0))
    decomp = spectral_decomposition(shift_operator(graph))
    g0 = perturbed_inverse_response(n, alpha, stream.child(1))
    src = bernoulli_gaussian_sources(n, p, theta, stream.child(2))
    Y = apply_spectral_filter(decomp.eigenvectors, 1.0 / g0, src.values)
    noise = None
    if eta > 0:
        noise = eta * stream.child(3).generator().standard_normal(Y.shape)
        Y = Y + noise
    return graph, decomp, g0, src, Y, noise


def test_01_linear_algebra_identities():
    # 100 random instances, N <= 20, P <= 10, L <= 5; all three cross
    # checks (polynomial vs spectral filtering, Khatri-Rao vectorization,
    # filter/inverse round trip) must hold to 1e-9
    rng = np.random.default_rng(0)
    t0 = time.time()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 21))
        p = int(rng.integers(1, 11))
        order = int(rng.integers(1, 6))
        graph = erdos_renyi_graph(n, 0.5, int(rng.integers(1 << 30)))
        shift = shift_operator(graph)
        decomp = spectral_decomposition(shift)
        V = decomp.eigenvectors
        X = rng.standard_normal((n, p))

        coeffs = rng.standard_normal(order)
        resp = frequency_response(coeffs, decomp.eigenvalues)
        lhs = apply_polynomial_filter(shift, coeffs, X)
        rhs = apply_spectral_filter(V, resp, X)
        worst = max(worst, float(np.abs(lhs - rhs).max()))

        g = rng.standard_normal(n)
        design = khatri_rao_design(X, V)
        direct = (V @ np.diag(g) @ V.T @ X).ravel(order="F")
        worst = max(worst, float(np.abs(design @ g - direct).max()))

        while np.abs(resp).min() < 1e-2:  # keep the round trip well posed
            coeffs = rng.standard_normal(order)
            resp = frequency_response(coeffs, decomp.eigenvalues)
        back = apply_spectral_filter(
            V, inverse_response(resp), apply_spectral_filter(V, resp, X)
        )
        worst = max(worst, float(np.abs(back - X).max()))
    elapsed = time.time() - t0
    print(f"worst identity residual {worst:.3e} over 100 instances, {elapsed:.2f}s")
    assert worst <= 1e-9
    assert elapsed < 10.0


def test_02_solver_matches_bruteforce_oracle():
    # 100 random problems with N <= 6, P <= 4: interior-point objective
    # within 1e-6 relative of exhaustive vertex enumeration
    rng = np.random.default_rng(1)
    t0 = time.time()
    worst = 0.0
    for trial in range(100):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(n, 4 * n + 1))  # up to N*P rows with P <= 4
        A = rng.standard_normal((m, n))
        r = rng.standard_normal(n)
        while np.abs(r).max() < 1e-2:
            r = rng.standard_normal(n)
        c = 3.0
        weights = rng.uniform(0.1, 2.0, size=m) if trial % 3 == 0 else None
        sol = solve_l1_synthesis(
            L1SynthesisProblem(A, r, c, weights=weights), SolverConfig()
        )
        w = 1.0 if weights is None else weights
        obj = float(np.abs(w * (A @ sol.g_hat)).sum())
        obj_ref, _ = minimize_weighted_l1_bruteforce(A, r, c, weights=weights)
        worst = max(worst, abs(obj - obj_ref) / max(obj_ref, 1e-12))
    elapsed = time.time() - t0
    print(f"worst relative objective gap {worst:.3e} over 100 problems, {elapsed:.2f}s")
    assert worst <= 1e-6
    assert elapsed < 60.0


def test_03_exact_recovery_benign_regime():
    # ER(20, 0.4), theta = 0.1, P = 20, alpha = 0.02: at least 90% of 50
    # seeded runs recover the sources to relative error 1e-3
    hits = 0
    for seed in range(50):
        stream = SeedStream(100 + seed)
        graph, decomp, g0, src, Y, _ = _planted_instance(stream)
        design = khatri_rao_design(Y, decomp.eigenvectors)
        sol = reweighted_l1(design, np.ones(20), 20.0, None)
        if relative_error(sol.X_hat, src.values) <= 1e-3:
            hits += 1
    print(f"exact recovery in {hits}/50 runs")
    assert hits / 50 >= 0.9


def _assert_trend(cells, metric, direction, label):
    means = [getattr(c, metric + "_mean") for c in cells]
    errs = [getattr(c, metric + "_stderr") for c in cells]
    print(f"{label}: " + "  ".join(f"{m:.4f}±{s:.4f}" for m, s in zip(means, errs)))
    for i in range(len(means) - 1):
        pooled = float(np.sqrt(errs[i] ** 2 + errs[i + 1] ** 2))
        if direction == "nonincreasing":
            assert means[i + 1] <= means[i] + pooled, (
                f"{label}: cell {i}->{i + 1} rose by {means[i + 1] - means[i]:.4f} "
                f"(> pooled SE {pooled:.4f})"
            )
        else:
            assert means[i + 1] >= means[i] - pooled, (
                f"{label}: cell {i}->{i + 1} fell by {means[i] - means[i + 1]:.4f} "
                f"(> pooled SE {pooled:.4f})"
            )


def test_04_phase_transition_monotonicity():
    # four trends at 20 realizations per cell, each allowed to wobble by
    # at most one pooled standard error per adjacent pair
    acc_vs_alpha = run_sweep(
        SweepConfig(
            experiment="alpha-vs-p",
            axis1=(0.02, 0.5, 1.0, 2.0, 4.0),
            axis2=(20,),
            theta=0.15,
            realizations=20,
            master_seed=11,
        ),
        jobs=4,
    ).cells
    _assert_trend(acc_vs_alpha, "acc", "nonincreasing", "ACC vs alpha")

    acc_vs_theta = run_sweep(
        SweepConfig(
            experiment="alpha-vs-theta",
            axis1=(0.1,),
            axis2=(0.05, 0.15, 0.25, 0.35, 0.45),
            realizations=20,
            master_seed=12,
        ),
        jobs=4,
    ).cells
    _assert_trend(acc_vs_theta, "acc", "nonincreasing", "ACC vs theta")

    acc_vs_p = run_sweep(
        SweepConfig(
            experiment="alpha-vs-p",
            axis1=(1.0,),
            axis2=(4, 8, 12, 16, 20),
            theta=0.15,
            realizations=20,
            master_seed=13,
        ),
        jobs=4,
    ).cells
    _assert_trend(acc_vs_p, "acc", "nondecreasing", "ACC vs P")

    re_vs_eta = run_sweep(
        SweepConfig(
            experiment="eta-vs-alpha",
            axis1=(0.0, 0.01, 0.05, 0.1, 0.2),
            axis2=(0.02,),
            theta=0.1,
            realizations=20,
            master_seed=14,
        ),
        jobs=4,
    ).cells
    _assert_trend(re_vs_eta, "re", "nondecreasing", "RE vs eta")


def test_05_mean_eigenvector_coherence_in_band():
    # 20 ER(20, 0.4) draws: mean largest singular value of the centered
    # squared-eigenvector matrix must fall within +-0.05 of 0.5054
    t0 = time.time()
    stream = SeedStream(200)
    values = []
    for k in range(20):
        graph = erdos_renyi_graph(20, 0.4, stream.child(k))
        decomp = spectral_decomposition(shift_operator(graph))
        values.append(eigenvector_coherence(decomp.eigenvectors))
    mean = float(np.mean(values))
    elapsed = time.time() - t0
    print(f"mean coherence {mean:.4f} over 20 draws, {elapsed:.2f}s")
    assert 0.4554 <= mean <= 0.5554
    assert elapsed < 30.0


def test_06_max_sparsity_level_root():
    t = max_sparsity_level()
    residual = (
        np.sqrt(np.pi) * t * t + 2 * t + 0.5 * np.sqrt(np.pi) * t**1.5 - 1.0
    )
    print(f"root {t:.17g}, residual {residual:.3e}")
    assert 0.324 < t < 0.325
    assert abs(residual) <= 1e-9


def test_07_certificate_boundary_consistency():
    # 100 random (alpha, theta) pairs with r = 1_N: the certificate holds
    # exactly when alpha <= margin, and the stability coefficient is
    # non-negative whenever it does
    rng = np.random.default_rng(7777)
    n = 20
    checked = 0
    n_satisfied = 0
    while checked < 100:
        theta = float(rng.uniform(0.01, max_sparsity_level()))
        coherence = float(rng.uniform(0.0, 0.95))
        params = CertificateParams.for_theta(theta)
        margin = recovery_margin(params, coherence)
        alpha = float(rng.uniform(0.0, 2.0) * margin)
        if alpha <= 0 or abs(alpha - margin) < 1e-9 * margin:
            continue  # resample: too close to the boundary to call
        g0 = perturbed_inverse_response(n, alpha, int(rng.integers(1 << 30)))
        cert = check_exact_recovery(g0, np.ones(n), float(n), margin, coherence)
        assert cert.satisfied == (alpha <= margin), (
            f"alpha={alpha}, margin={margin}, satisfied={cert.satisfied}"
        )
        if cert.satisfied:
            n_satisfied += 1
            q = stability_coefficient(params, margin, cert.offset_norm, float(n))
            assert q >= 0.0
        checked += 1
    print(f"100 boundary checks consistent ({n_satisfied} satisfied)")
    assert n_satisfied > 0
    assert checked - n_satisfied > 0


def test_08_stable_bound_validity():
    # N = P = 20, theta = 0.1, alpha = 0.02, eta in {0.001, 0.005, 0.01},
    # 20 seeds each: whenever the bound's denominator is positive the
    # measured response error must not exceed the l2 bound
    params = CertificateParams.for_theta(0.1)
    n_positive = 0
    worst_ratio = 0.0
    for eta in (0.001, 0.005, 0.01):
        for seed in range(20):
            stream = SeedStream(300 + seed)
            graph, decomp, g0, src, Y, noise = _planted_instance(stream, eta=eta)
            V = decomp.eigenvectors
            design = khatri_rao_design(Y, V)
            sol = reweighted_l1(design, np.ones(20), 20.0, None)
            measured = float(np.linalg.norm(sol.g_hat - g0))

            margin = recovery_margin(params, eigenvector_coherence(V))
            n_off = offsupport_filtered_noise(g0, V, noise, src.support_mask)
            report = stable_recovery_bound(
                g0, np.ones(20), 20.0, n_off, V, params, margin
            )
            if report.denominator > 0:
                n_positive += 1
                assert measured <= report.bound_l2, (
                    f"eta={eta} seed={seed}: error {measured:.4f} exceeds "
                    f"bound {report.bound_l2:.4f}"
                )
                worst_ratio = max(worst_ratio, measured / report.bound_l2)
    print(f"{n_positive}/60 positive denominators, worst error/bound {worst_ratio:.4f}")
    assert n_positive > 0  # the check must not pass vacuously


def test_09_reweighting_improves_noisy_recovery():
    # 20 noisy seeds at eta = 0.05 (alpha = 0.3 where sparsity pressure
    # matters): reweighted mean RE must not exceed the single-solve mean
    re_reweighted = []
    re_single = []
    for seed in range(20):
        stream = SeedStream(400 + seed)
        _, decomp, g0, src, Y, _ = _planted_instance(
            stream, alpha=0.3, eta=0.05
        )
        design = khatri_rao_design(Y, decomp.eigenvectors)
        rw = reweighted_l1(design, np.ones(20), 20.0, None)
        single = solve_l1_synthesis(
            L1SynthesisProblem(design, np.ones(20), 20.0), SolverConfig()
        )
        re_reweighted.append(relative_error(rw.X_hat, src.values))
        re_single.append(relative_error(single.X_hat, src.values))
    mean_rw = float(np.mean(re_reweighted))
    mean_single = float(np.mean(re_single))
    print(f"mean RE: reweighted {mean_rw:.5f} vs single solve {mean_single:.5f}")
    assert mean_rw <= mean_single


def test_10_planted_source_localization_auc():
    # sources planted on a trust-style graph, diffused through a known
    # invertible filter, observations masked to a rated support: the
    # deconvolved magnitudes must rank sources at AUC >= 0.9 and beat the
    # naive observed-magnitude baseline
    stream = SeedStream(500)
    graph = erdos_renyi_graph(25, 0.3, stream.child(0))
    shift = shift_operator(graph)
    decomp = spectral_decomposition(shift)
    g0 = perturbed_inverse_response(25, 0.05, stream.child(1))
    src = bernoulli_gaussian_sources(25, 12, 0.1, stream.child(2))
    Y = apply_spectral_filter(decomp.eigenvectors, 1.0 / g0, src.values)
    rng = stream.child(3).generator()
    rated = rng.random(Y.shape) < 0.7
    rated |= src.support_mask  # every true source cell stays observable
    Y_obs = np.where(rated, Y, 0.0)

    rows = run_source_localization(Y_obs, shift, {0.5: src.support_mask}, rated)
    row = rows[0]
    print(f"AUC {row.auc:.4f} vs naive {row.auc_naive:.4f}")
    assert row.auc >= 0.9
    assert row.auc > row.auc_naive


def test_11_sweep_determinism(tmp_path):
    # identical master seeds must produce byte-identical CSVs whatever
    # the parallelism level
    config = SweepConfig(
        experiment="alpha-vs-p",
        axis1=(0.02, 1.0),
        axis2=(4,),
        n_nodes=8,
        realizations=3,
        master_seed=2,
    )
    outputs = {}
    for label, jobs in (("serial_a", 1), ("serial_b", 1), ("threaded", 4)):
        result = run_sweep(config, jobs=jobs)
        res_path = tmp_path / f"{label}_results.csv"
        log_path = tmp_path / f"{label}_realizations.csv"
        write_results_csv(result, str(res_path))
        write_realizations_csv(result, str(log_path))
        outputs[label] = (res_path.read_bytes(), log_path.read_bytes())
    for a, b in itertools.combinations(outputs.values(), 2):
        assert a[0] == b[0]
        assert a[1] == b[1]
    print("3 runs (1, 1 and 4 workers) byte-identical")
