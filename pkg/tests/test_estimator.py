import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from graphdeconv import (
    ContractViolationError,
    GraphBlindDeconvolution,
    GsoKind,
    apply_spectral_filter,
    bernoulli_gaussian_sources,
    erdos_renyi_graph,
    perturbed_inverse_response,
    relative_error,
    shift_operator,
    spectral_decomposition,
)


@pytest.fixture(scope="module")
def planted():
    graph = erdos_renyi_graph(20, 0.4, 21)
    decomp = spectral_decomposition(shift_operator(graph))
    g0 = perturbed_inverse_response(20, 0.02, 22)
    src = bernoulli_gaussian_sources(20, 20, 0.1, 23)
    Y = apply_spectral_filter(decomp.eigenvectors, 1.0 / g0, src.values)
    return graph, g0, src, Y


def test_fit_recovers_planted_instance(planted):
    graph, g0, src, Y = planted
    est = GraphBlindDeconvolution(adjacency=graph.adjacency).fit(Y)
    assert est.converged_
    assert relative_error(est.sources_, src.values) < 1e-6
    assert np.allclose(est.inverse_response_, g0, atol=1e-6)
    assert est.n_nodes_ == 20
    assert est.shift_kind_ is GsoKind.NORMALIZED_ADJACENCY
    assert est.objective_ == pytest.approx(np.abs(est.sources_).sum(), rel=1e-9)


def test_transform_matches_training_sources(planted):
    graph, _, _, Y = planted
    est = GraphBlindDeconvolution(adjacency=graph.adjacency).fit(Y)
    assert np.allclose(est.transform(Y), est.sources_, atol=1e-8)
    Xt = est.fit_transform(Y)
    assert np.allclose(Xt, est.sources_)


def test_predict_gives_support_mask(planted):
    graph, _, src, Y = planted
    est = GraphBlindDeconvolution(adjacency=graph.adjacency).fit(Y)
    mask = est.predict(Y)
    assert mask.dtype == bool
    assert mask.shape == src.values.shape
    # planted instance is solved exactly, so thresholding hits the truth
    hit = np.logical_and(mask, src.support_mask).sum()
    assert hit / src.support_mask.sum() > 0.9


def test_estimated_filter_inverts_transform(planted):
    graph, _, _, Y = planted
    est = GraphBlindDeconvolution(adjacency=graph.adjacency).fit(Y)
    H = est.estimated_filter()
    assert np.allclose(H @ est.transform(Y), Y, atol=1e-6)


def test_single_solve_path(planted):
    graph, _, src, Y = planted
    est = GraphBlindDeconvolution(adjacency=graph.adjacency, reweight=False).fit(Y)
    # benign regime: even one unweighted pass solves the instance
    assert relative_error(est.sources_, src.values) < 1e-6
    assert len(est.objective_history_) == 1


def test_sklearn_protocol(planted):
    graph, _, _, Y = planted
    est = GraphBlindDeconvolution(adjacency=graph.adjacency, kappa=0.2, max_outer=2)
    params = est.get_params()
    assert params["kappa"] == 0.2
    assert params["max_outer"] == 2
    est.set_params(kappa=0.3)
    assert est.kappa == 0.3

    cloned = clone(est)
    assert cloned.kappa == 0.3
    assert not hasattr(cloned, "inverse_response_")
    cloned.fit(Y)
    assert hasattr(cloned, "inverse_response_")


def test_not_fitted_errors(planted):
    graph, _, _, Y = planted
    est = GraphBlindDeconvolution(adjacency=graph.adjacency)
    with pytest.raises(NotFittedError):
        est.transform(Y)
    with pytest.raises(NotFittedError):
        est.predict(Y)
    with pytest.raises(NotFittedError):
        est.estimated_filter()


def test_fit_validation(planted):
    graph, _, _, Y = planted
    with pytest.raises(ContractViolationError):
        GraphBlindDeconvolution().fit(Y)  # no adjacency
    with pytest.raises(ContractViolationError):
        GraphBlindDeconvolution(adjacency=graph.adjacency).fit(Y[:10])
    with pytest.raises(ContractViolationError):
        GraphBlindDeconvolution(adjacency=graph.adjacency, gso="banana").fit(Y)
    est = GraphBlindDeconvolution(adjacency=graph.adjacency).fit(Y)
    with pytest.raises(ContractViolationError):
        est.transform(Y[:10])


def test_custom_constraint(planted):
    graph, g0, src, Y = planted
    n = graph.n_nodes
    # same constraint the default uses, passed explicitly
    est = GraphBlindDeconvolution(adjacency=graph.adjacency, r=np.ones(n), c=float(n))
    est.fit(Y)
    assert relative_error(est.sources_, src.values) < 1e-6
    assert est.inverse_response_.sum() == pytest.approx(float(n), abs=1e-8)


def test_laplacian_gso_runs(planted):
    graph, _, _, Y = planted
    est = GraphBlindDeconvolution(adjacency=graph.adjacency, gso="laplacian").fit(Y)
    assert est.shift_kind_ is GsoKind.LAPLACIAN
    assert est.sources_.shape == Y.shape
