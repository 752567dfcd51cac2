import numpy as np
import pytest

from otnodal import (
    BadSubset,
    Disconnected,
    Graph,
    NotZeroMean,
    TooLargeForExhaustive,
    VertexFunction,
    boundary_size,
    centered_indicator,
    complete_graph,
    cycle_graph,
    design_extremality_experiment,
    graph_w1,
    laplacian_spectrum,
    load_graph,
    mcgee_graph,
    nauru_graph,
    path_graph,
    perfect_domination_check,
    search_designs,
    uncertainty_product_graph,
    verify_design,
)
from otnodal.graphs import MCGEE_DESIGN, NAURU_DESIGN
from otnodal.transport import emd_exact_matrix


def vf(values):
    return VertexFunction(np.asarray(values, float))


class TestGraphBasics:
    def test_disconnected_rejected(self):
        with pytest.raises(Disconnected):
            Graph(4, ((1, 2), (3, 4)))

    def test_loops_rejected(self):
        with pytest.raises(ValueError):
            Graph(2, ((1, 1),))

    def test_builtins_are_cubic(self):
        for g in (nauru_graph(), mcgee_graph()):
            deg = np.zeros(g.n)
            for u, v in g.edges:
                deg[u - 1] += 1
                deg[v - 1] += 1
            assert np.all(deg == 3)

    def test_girths_identify_graphs(self):
        # Nauru has girth 6; McGee is the unique (3,7)-cage with girth 7
        def girth(g):
            adj = g.adjacency_lists()
            best = 10**9
            for s in range(1, g.n + 1):
                dist = {s: 0}
                par = {s: None}
                queue = [s]
                while queue:
                    nxt = []
                    for u in queue:
                        for w in adj[u]:
                            if w not in dist:
                                dist[w] = dist[u] + 1
                                par[w] = u
                                nxt.append(w)
                            elif w != par[u]:
                                best = min(best, dist[u] + dist[w] + 1)
                    queue = nxt
            return best

        assert girth(nauru_graph()) == 6
        assert girth(mcgee_graph()) == 7

    def test_load_graph_names_and_files(self, tmp_path):
        assert load_graph("path:5").n == 5
        assert load_graph("cycle:6").edges == cycle_graph(6).edges
        assert len(load_graph("complete:5").edges) == 10
        p = tmp_path / "g.txt"
        p.write_text("1 2\n2 3\n3 1\n")
        g = load_graph(str(p))
        assert g.n == 3 and len(g.edges) == 3

    def test_vertex_function_zero_mean_check(self):
        with pytest.raises(NotZeroMean):
            VertexFunction(np.array([1.0, 1.0]))


class TestSpectrum:
    def test_path3(self):
        spec = laplacian_spectrum(path_graph(3))
        assert np.allclose(spec.eigenvalues, [0.0, 1.0, 3.0], atol=1e-9)

    def test_complete4(self):
        spec = laplacian_spectrum(complete_graph(4))
        assert np.allclose(spec.eigenvalues, [0.0, 4.0, 4.0, 4.0], atol=1e-9)
        assert [len(g) for g in spec.groups] == [1, 3]

    def test_constant_ground_state(self):
        spec = laplacian_spectrum(nauru_graph())
        assert spec.eigenvalues[0] == pytest.approx(0.0, abs=1e-9)
        v0 = spec.eigenvectors[:, 0]
        assert np.allclose(v0, v0[0])

    def test_grouping_stable_under_tolerance(self):
        for g in (nauru_graph(), mcgee_graph()):
            a = laplacian_spectrum(g, spectrum_tol=1e-9).groups
            b = laplacian_spectrum(g, spectrum_tol=1e-8).groups
            c = laplacian_spectrum(g, spectrum_tol=1e-10).groups
            assert a == b == c


class TestGraphW1:
    def test_path_end_to_end(self):
        for n in (2, 5, 9):
            g = path_graph(n)
            f = np.zeros(n)
            f[0], f[-1] = 1.0, -1.0
            cost, _ = graph_w1(g, vf(f))
            assert cost == pytest.approx(n - 1, rel=1e-9)

    def test_zero_function(self):
        cost, _ = graph_w1(path_graph(4), vf(np.zeros(4)))
        assert cost == 0.0

    def test_cycle_opposite(self):
        cost, _ = graph_w1(cycle_graph(4), vf([1.0, 0.0, -1.0, 0.0]))
        assert cost == pytest.approx(2.0, rel=1e-9)

    def test_requires_zero_mean(self):
        with pytest.raises(NotZeroMean):
            graph_w1(path_graph(3), VertexFunction(np.array([1.0, 1.0, 1.0]), zero_mean=False))

    def test_flow_divergence_and_duality(self):
        rng = np.random.default_rng(8)
        g = nauru_graph()
        vals = rng.standard_normal(g.n)
        vals -= vals.mean()
        cost, flow = graph_w1(g, vf(vals))
        div = np.zeros(g.n)
        for e, (u, w) in enumerate(g.edges):
            div[u - 1] += flow.flow[e]
            div[w - 1] -= flow.flow[e]
        assert np.abs(div - vals).max() <= 1e-9
        pot = flow.potentials
        lengths = g.edge_lengths()
        for e, (u, w) in enumerate(g.edges):
            assert abs(pot[u - 1] - pot[w - 1]) <= lengths[e] + 1e-9
            if abs(flow.flow[e]) > 1e-9:
                assert abs(abs(pot[u - 1] - pot[w - 1]) - lengths[e]) <= 1e-9

    def test_tree_closed_form(self):
        rng = np.random.default_rng(17)
        n = 40
        parent = [None] + [int(rng.integers(0, i)) for i in range(1, n)]
        edges = tuple((p + 1, i + 1) for i, p in enumerate(parent) if p is not None)
        g = Graph(n, edges)
        vals = rng.standard_normal(n)
        vals -= vals.mean()
        cost, _ = graph_w1(g, vf(vals))
        children = {i: [] for i in range(n)}
        for i, p in enumerate(parent):
            if p is not None:
                children[p].append(i)

        def subtree(v):
            return vals[v] + sum(subtree(w) for w in children[v])

        oracle = sum(abs(subtree(v)) for v in range(1, n))
        assert cost == pytest.approx(oracle, abs=1e-9)

    def test_matches_shortest_path_transport(self):
        # Beckmann flow equals exact OT under the shortest-path metric
        from scipy.sparse.csgraph import shortest_path

        g = cycle_graph(7)
        rng = np.random.default_rng(2)
        vals = rng.standard_normal(7)
        vals -= vals.mean()
        cost, _ = graph_w1(g, vf(vals))
        A = np.zeros((7, 7))
        for u, w in g.edges:
            A[u - 1, w - 1] = A[w - 1, u - 1] = 1
        D = shortest_path(A, directed=False, unweighted=True)
        pos = vals > 0
        neg = vals < 0
        ot_cost, _, _ = emd_exact_matrix(vals[pos], -vals[neg], D[np.ix_(pos, neg)])
        assert cost == pytest.approx(ot_cost, rel=1e-9)


class TestBoundary:
    def test_p3(self):
        f = VertexFunction(np.array([1.0, -1.0, -1.0]), zero_mean=False)
        assert boundary_size(path_graph(3), f) == 1

    def test_all_positive(self):
        f = VertexFunction(np.ones(4), zero_mean=False)
        assert boundary_size(path_graph(4), f) == 0

    def test_cycle_alternating(self):
        assert boundary_size(cycle_graph(4), vf([1.0, -1.0, 1.0, -1.0])) == 4


class TestUncertaintyProductGraph:
    def test_p2(self):
        rep = uncertainty_product_graph(path_graph(2), vf([1.0, -1.0]))
        assert rep.product == pytest.approx(1.0)
        assert rep.w1 == pytest.approx(1.0) and rep.boundary == 1

    def test_scaling_linear(self):
        g = cycle_graph(6)
        f = vf([2.0, -1.0, -1.0, 2.0, -1.0, -1.0])
        a = uncertainty_product_graph(g, f)
        b = uncertainty_product_graph(g, VertexFunction(3.0 * f.values))
        assert b.product == pytest.approx(3.0 * a.product, rel=1e-9)
        assert b.boundary == a.boundary

    def test_nauru_design_indicator(self):
        g = nauru_graph()
        rep = uncertainty_product_graph(g, centered_indicator(g, NAURU_DESIGN))
        assert rep.product > 0 and np.isfinite(rep.product)


class TestDesigns:
    def test_nauru_certificate(self):
        cert = verify_design(nauru_graph(), NAURU_DESIGN, 19)
        assert cert.pass_
        assert cert.integrated_exactly == 21
        assert cert.orthogonal_prefix == 13
        orth = [r for _, _, r in cert.residuals if r <= cert.design_tol]
        assert all(r <= 1e-8 for r in orth) and len(orth) == 5

    def test_mcgee_certificate_and_domination(self):
        g = mcgee_graph()
        cert = verify_design(g, MCGEE_DESIGN, 21)
        assert cert.pass_ and cert.integrated_exactly == 21
        assert perfect_domination_check(g, MCGEE_DESIGN)

    def test_k4_near_full_subset_fails(self):
        cert = verify_design(complete_graph(4), {2, 3, 4}, 1)
        assert not cert.pass_
        assert cert.orthogonal_prefix == 0

    def test_automorphism_invariance(self):
        # v -> v + 12 (mod 24) preserves the drawn Nauru edge list
        g = nauru_graph()
        shifted = {(v + 12 - 1) % 24 + 1 for v in NAURU_DESIGN}
        a = verify_design(g, NAURU_DESIGN, 19)
        b = verify_design(g, shifted, 19)
        assert a.integrated_exactly == b.integrated_exactly
        assert a.orthogonal_prefix == b.orthogonal_prefix

    def test_bad_subsets(self):
        g = complete_graph(4)
        with pytest.raises(BadSubset):
            verify_design(g, set(), 1)
        with pytest.raises(BadSubset):
            verify_design(g, {1, 5}, 1)
        with pytest.raises(BadSubset):
            verify_design(g, {1, 2, 3, 4}, 1)

    def test_exhaustive_search_nauru(self):
        res = search_designs(nauru_graph(), 6, mode="exhaustive")
        assert res.best_count == 21
        assert tuple(sorted(NAURU_DESIGN)) in res.subsets
        assert res.scanned == 134596

    def test_exhaustive_cap(self):
        with pytest.raises(TooLargeForExhaustive):
            search_designs(cycle_graph(40), 15, mode="exhaustive")

    def test_random_mode_smoke(self):
        res = search_designs(cycle_graph(12), 4, mode="random", samples=200, seed=1)
        assert res.best_count >= 1 and res.mode == "random"

    def test_full_set_integrates_everything(self):
        res = search_designs(cycle_graph(8), 8)
        assert res.best_count == 8

    def test_extremality_deterministic(self):
        g = nauru_graph()
        a = design_extremality_experiment(g, 6, samples=25, seed=3)
        b = design_extremality_experiment(g, 6, samples=25, seed=3)
        assert a == b
        assert a.design_products and a.random_quantiles


class TestPerfectDomination:
    def test_k4_single(self):
        assert perfect_domination_check(complete_graph(4), {1})

    def test_c4_pair(self):
        assert perfect_domination_check(cycle_graph(4), {1, 2})

    def test_c5_single_fails(self):
        assert not perfect_domination_check(cycle_graph(5), {1})
