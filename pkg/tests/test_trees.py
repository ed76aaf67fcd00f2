import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypkern.deform import anisotropic_deform
from hypkern.embed import gns_embed
from hypkern.kernels import ComplexHyperbolicKernel, Status, validate_rht
from hypkern.minkowski import Field, MinkowskiSpace, cosh_dist_matrix, random_points
from hypkern.numcore import DomainError, Verdict, psd_check
from hypkern.trees import (
    MetricTree,
    TreeError,
    exp_kernel,
    exp_violation_search,
    free_product_kernel,
    glue_kernels,
    leaf_flow,
    random_tree,
    tree_distance,
    tree_kernel,
)

STAR = MetricTree(["o", "p", "q", "r"], [("o", "p", 1.0), ("o", "q", 2.0), ("o", "r", 3.0)])
PATH = MetricTree(["a", "b", "c"], [("a", "b", 1.0), ("b", "c", 1.0)])


def h2_points(seed, m=10):
    return random_points(MinkowskiSpace(Field.REAL, 2), m, np.random.default_rng(seed))


# -- metric trees -----------------------------------------------------------------

def test_star_distances():
    assert tree_distance(STAR, "p", "r") == 4.0
    assert tree_distance(STAR, "q", "q") == 0.0
    assert tree_distance(PATH, "a", "c") == 2.0


def test_unknown_node():
    with pytest.raises(KeyError, match="'z'"):
        tree_distance(STAR, "p", "z")


@pytest.mark.parametrize("nodes,edges,msg", [
    (["a", "a"], [("a", "a", 1.0)], "unique"),
    (["a", "b"], [("a", "x", 1.0)], "unknown node"),
    (["a", "b"], [("a", "b", 0.0)], "non-positive"),
    (["a", "b", "c"], [("a", "b", 1.0)], "need 2 edges"),
    (["a", "b", "c", "d"], [("a", "b", 1.0), ("b", "a", 1.0), ("c", "d", 1.0)], "duplicate"),
    (["a", "b", "c", "d"], [("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)], "acyclic"),
])
def test_tree_errors(nodes, edges, msg):
    with pytest.raises(TreeError, match=msg):
        MetricTree(nodes, edges)


@given(st.integers(0, 2**32 - 1))
def test_triangle_equality_through_separating_vertex(seed):
    T = random_tree(seed, max_nodes=9)
    D = T.distance_matrix()
    n = len(T.nodes)
    assert np.allclose(np.diag(D), 0)
    for x in range(n):
        for y in range(n):
            for z in T.path(T.nodes[x], T.nodes[y]):
                k = T.nodes.index(z)
                assert D[x, y] == pytest.approx(D[x, k] + D[k, y], rel=1e-12, abs=1e-12)


def test_round_trip_dict():
    assert MetricTree.from_dict(STAR.to_dict()).to_dict() == STAR.to_dict()


# -- tree kernels ---------------------------------------------------------------

def test_lambda_one_is_all_ones():
    assert np.array_equal(tree_kernel(STAR, 1.0).beta, np.ones((4, 4)))


def test_path_lambda_two():
    K = tree_kernel(PATH, 2.0)
    assert np.allclose(K.beta, [[1, 2, 4], [2, 1, 2], [4, 2, 1]])
    assert validate_rht(K).verdict is Status.VALID
    Phi = K.phi(1, keep_base=True)
    assert Phi[0, 2] == 0 and Phi[0, 0] == 3


def test_lambda_below_one():
    with pytest.raises(DomainError):
        tree_kernel(PATH, 0.5)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 1.5, math.e, 10.0]))
def test_tree_kernels_valid(seed, lam):
    assert validate_rht(tree_kernel(random_tree(seed), lam)).verdict is Status.VALID


@given(st.integers(0, 2**32 - 1), st.floats(1.1, 10.0))
def test_separation_identity(seed, lam):
    T = random_tree(seed, max_nodes=8)
    K = tree_kernel(T, lam)
    for x0 in range(len(T.nodes)):
        Phi = K.phi(x0, keep_base=True)
        for j, xj in enumerate(T.nodes):
            for k, xk in enumerate(T.nodes):
                zero = abs(Phi[j, k]) <= 1e-12 * K.beta[j, x0] * K.beta[x0, k]
                assert zero == T.separates(T.nodes[x0], xj, xk)


@given(st.integers(0, 2**32 - 1))
def test_haagerup_kernel(seed):
    K = tree_kernel(random_tree(seed), 3.0)
    assert psd_check(K.beta ** -1.0).verdict is Verdict.PSD


@given(st.integers(0, 2**32 - 1))
def test_leaf_flow_non_increasing(seed):
    rng = np.random.default_rng(seed)
    T = random_tree(rng, n_nodes=6)
    leaf = next(v for v in T.nodes if T.graph.degree(v) == 1)
    edge = T.graph.edges[leaf, next(iter(T.graph.neighbors(leaf)))]["length"]
    vals = leaf_flow(T, leaf, rng.normal(size=5), np.linspace(0, edge, 9), 2.0)
    assert np.all(np.diff(vals) <= 1e-12 * max(1.0, np.abs(vals).max()))


def test_leaf_flow_rejects():
    with pytest.raises(TreeError):
        leaf_flow(STAR, "o", [1, 1, 1], [0.0], 2.0)
    with pytest.raises(ValueError, match="outside"):
        leaf_flow(STAR, "p", [1, 1, 1], [1.5], 2.0)


# -- glueing ------------------------------------------------------------------------

def test_glue_segments_make_path():
    X = tree_kernel(MetricTree(["a", "b"], [("a", "b", 1.0)]), 2.0)
    Y = tree_kernel(MetricTree(["b2", "c"], [("b2", "c", 1.0)]), 2.0)
    G = glue_kernels(X, "b", Y, "b2", 2.0)
    assert G.labels == ["a", "b", "c"]
    assert np.array_equal(G.beta, tree_kernel(PATH, 2.0).beta)


def test_glue_single_point():
    K = tree_kernel(STAR, 2.0)
    P = ComplexHyperbolicKernel(["x"], [[1.0]], {}, lam=2.0)
    assert np.array_equal(glue_kernels(K, "q", P, "x", 2.0).beta, K.beta)
    assert np.array_equal(glue_kernels(P, "x", K, "o", 2.0).beta[1:, 1:],
                          np.delete(np.delete(K.beta, 0, 0), 0, 1))


def test_glue_rejects_lambda_mismatch():
    X = tree_kernel(PATH, 2.0)
    with pytest.raises(ValueError, match="lambda"):
        glue_kernels(X, "a", tree_kernel(STAR, 3.0), "o", 2.0)


def test_glue_rejects_non_metric():
    bad = ComplexHyperbolicKernel.real([[1, 2, 16], [2, 1, 2], [16, 2, 1]])
    with pytest.raises(ValueError, match="triangle"):
        glue_kernels(bad, 0, tree_kernel(STAR, 2.0), "o", 2.0)


def test_glue_rejects_label_collision():
    with pytest.raises(ValueError, match="collide"):
        glue_kernels(tree_kernel(PATH, 2.0), "a", tree_kernel(PATH, 2.0), "a", 2.0)


@pytest.mark.parametrize("seed", range(4))
def test_glue_exponential_patches(seed):
    X = exp_kernel(h2_points(2 * seed), 2.0)
    Y = exp_kernel(h2_points(2 * seed + 1), 2.0)
    Y.labels = [f"y{lab}" for lab in Y.labels]
    G = glue_kernels(X, "0", Y, "y0", 2.0)
    assert validate_rht(G).verdict is Status.VALID
    # Phi at the glue point is block diagonal
    Phi = G.phi(0, keep_base=True)
    assert np.abs(Phi[1:10, 10:]).max() <= 1e-12 * G.beta.max() ** 2
    assert gns_embed(G, base_index=0).beta_residual < 1e-8


# -- exponential kernels ---------------------------------------------------------

@pytest.mark.parametrize("lam", [1.0, 2.0, math.e])
@pytest.mark.parametrize("seed", range(3))
def test_exp_kernel_valid(lam, seed):
    assert validate_rht(exp_kernel(h2_points(seed), lam)).verdict is Status.VALID


def test_exp_e_matches_anisotropic():
    pts = h2_points(11)
    B = cosh_dist_matrix(np.array([p.coords for p in pts]))
    A = anisotropic_deform(B, np.exp(-np.arccosh(B)), math.acosh(math.sqrt(2)))
    assert np.abs(exp_kernel(pts, math.e).beta - A).max() < 1e-10


def test_exp_violation_search_runs():
    out = exp_violation_search(6.0, rng=0, n_points=5, trials=3)
    assert out is None or out[1].verdict is Status.INVALID


# -- free products -----------------------------------------------------------------

def test_free_product_two_hyperbolic_patches():
    spec = {
        "lambda": 2.0,
        "patches": [{"kind": "hyperbolic", "name": "A", "n": 2, "num_points": 6, "seed": 1},
                    {"kind": "hyperbolic", "name": "B", "n": 2, "num_points": 6, "seed": 2}],
        "glue": [["A", "0", "B", "3"]],
    }
    K = free_product_kernel(spec)
    assert K.n == 11
    assert K.aliases == {"B:3": "A:0"}
    assert validate_rht(K).verdict is Status.VALID
    E = gns_embed(K, base_index=0)
    assert E.space.dim <= 1 + np.linalg.matrix_rank(K.phi(0), tol=1e-9)


def test_free_product_trees_equal_glued_tree():
    spec = {
        "lambda": 1.5,
        "patches": [{"kind": "tree", "name": "S", **STAR.to_dict()},
                    {"kind": "tree", "name": "P", **PATH.to_dict()}],
        "glue": [["P", "a", "S", "r"]],
    }
    K = free_product_kernel(spec)
    whole = MetricTree(STAR.nodes + ["b", "c"], STAR.edges + [("r", "b", 1.0), ("b", "c", 1.0)])
    assert np.allclose(K.beta, tree_kernel(whole, 1.5).beta, rtol=1e-13)


@pytest.mark.parametrize("glue,msg", [
    ([], "tree over the patches"),
    ([["A", "0", "A", "1"]], "self-loop"),
    ([["A", "0", "Z", "1"]], "unknown patch"),
    ([[0, "0", 5, "1"]], "out of range"),
])
def test_free_product_errors(glue, msg):
    spec = {"lambda": 2.0, "glue": glue,
            "patches": [{"kind": "tree", "name": "A", **PATH.to_dict()},
                        {"kind": "tree", "name": "B", **STAR.to_dict()}]}
    with pytest.raises(ValueError, match=msg):
        free_product_kernel(spec)


def test_free_product_lambda_below_one():
    with pytest.raises(DomainError):
        free_product_kernel({"lambda": 0.9, "patches": [], "glue": []})
