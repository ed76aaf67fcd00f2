"""Metric trees, tree kernels ``lam ** d``, glueings and finite free products."""
from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from hypkern.kernels import ComplexHyperbolicKernel
from hypkern.minkowski import Field, MinkowskiPoint, MinkowskiSpace, cosh_dist_matrix, random_points
from hypkern.numcore import DomainError

LAMBDA_RTOL = 1e-12


class TreeError(ValueError):
    pass


class MetricTree:
    """Finite tree with positive edge lengths and its path metric."""

    def __init__(self, nodes, edges):
        nodes = list(nodes)
        if len(set(nodes)) != len(nodes):
            raise TreeError("node labels are not unique")
        g = nx.Graph()
        g.add_nodes_from(nodes)
        for u, v, length in edges:
            if u not in g or v not in g:
                raise TreeError(f"edge ({u!r}, {v!r}) references an unknown node")
            if not float(length) > 0:
                raise TreeError(f"edge ({u!r}, {v!r}) has non-positive length {length!r}")
            if g.has_edge(u, v):
                raise TreeError(f"duplicate edge ({u!r}, {v!r})")
            g.add_edge(u, v, length=float(length))
        if len(edges) != len(nodes) - 1:
            raise TreeError(f"{len(nodes)} nodes need {len(nodes) - 1} edges, got {len(edges)}")
        if nodes and not nx.is_tree(g):
            raise TreeError("edges do not form a connected acyclic graph")
        self.nodes = nodes
        self.edges = [(u, v, float(w)) for u, v, w in edges]
        self.graph = g
        self._dist = None

    @classmethod
    def from_dict(cls, d):
        return cls(d["nodes"], [tuple(e) for e in d["edges"]])

    def to_dict(self):
        return {"nodes": list(self.nodes), "edges": [[u, v, w] for u, v, w in self.edges]}

    def distance_matrix(self):
        if self._dist is None:
            lengths = dict(nx.all_pairs_dijkstra_path_length(self.graph, weight="length"))
            self._dist = np.array([[lengths[a][b] for b in self.nodes] for a in self.nodes])
        return self._dist

    def path(self, x, y):
        return nx.shortest_path(self.graph, x, y)

    def separates(self, x0, x, y):
        """Whether ``x0`` lies on the tree path from ``x`` to ``y``."""
        return x0 in self.path(x, y)


def tree_distance(T, x, y):
    for lab in (x, y):
        if lab not in T.graph:
            raise KeyError(f"unknown node {lab!r}")
    return float(nx.shortest_path_length(T.graph, x, y, weight="length"))


def tree_kernel(T, lam):
    """The kernel ``lam ** d`` on all nodes of ``T`` (``lam >= 1``)."""
    if lam < 1:
        raise DomainError(f"lambda must be >= 1, got {lam}")
    return ComplexHyperbolicKernel(T.nodes, float(lam) ** T.distance_matrix(), {}, lam=float(lam))


def random_tree(rng=None, n_nodes=None, max_nodes=10, length_range=(0.1, 3.0)):
    """Random labelled tree with uniformly drawn edge lengths."""
    rng = np.random.default_rng(rng)
    n = int(n_nodes if n_nodes is not None else rng.integers(1, max_nodes + 1))
    nodes = [f"v{i}" for i in range(n)]
    edges = []
    for i in range(1, n):
        parent = int(rng.integers(0, i))
        edges.append((nodes[parent], nodes[i], float(rng.uniform(*length_range))))
    return MetricTree(nodes, edges)


def exp_kernel(points, lam):
    """``lam ** d`` on sampled points of a real hyperbolic space."""
    if lam < 1:
        raise DomainError(f"lambda must be >= 1, got {lam}")
    P = np.array([p.coords if isinstance(p, MinkowskiPoint) else p for p in points])
    d = np.arccosh(cosh_dist_matrix(P))
    labels = [str(i) for i in range(len(P))]
    return ComplexHyperbolicKernel(labels, float(lam) ** d, {}, lam=float(lam))


def _check_lambda_form(K, lam, name):
    if K.lam is not None and abs(K.lam - lam) > LAMBDA_RTOL * lam:
        raise ValueError(f"{name} is a lambda={K.lam} kernel, cannot glue with lambda={lam}")
    if lam == 1.0:
        if np.max(np.abs(K.beta - 1.0)) > 1e-12:
            raise ValueError(f"{name} is not constant 1, so it is not of the form 1**d")
        return
    d = np.log(K.beta) / math.log(lam)
    if np.min(d) < -1e-12:
        raise ValueError(f"{name}: log_lambda beta is negative somewhere")
    viol = d[:, :, None] - d[:, None, :] - d[None, :, :]
    if np.max(viol) > 1e-9 * max(1.0, float(np.max(d))):
        raise ValueError(f"{name}: log_lambda beta violates the triangle inequality")


def glue_kernels(KX, x0, KY, y0, lam):
    """Kernel of the wedge ``X v Y`` with ``x0 ~ y0``.

    Mixed entries are ``beta_X(x, x0) * beta_Y(y0, y)``, since ``lam ** d`` is
    multiplicative across the glue point. The glued point keeps its label from
    ``X``; the result lists the points of ``X`` first.
    """
    lam = float(lam)
    _check_lambda_form(KX, lam, "left kernel")
    _check_lambda_form(KY, lam, "right kernel")
    i0 = KX.index(x0) if not isinstance(x0, (int, np.integer)) else int(x0)
    j0 = KY.index(y0) if not isinstance(y0, (int, np.integer)) else int(y0)
    ky = [j for j in range(KY.n) if j != j0]
    labels = list(KX.labels) + [KY.labels[j] for j in ky]
    if len(set(labels)) != len(labels):
        raise ValueError("labels of the two kernels collide; rename before glueing")
    nx_, ny = KX.n, len(ky)
    B = np.empty((nx_ + ny, nx_ + ny))
    B[:nx_, :nx_] = KX.beta
    B[nx_:, nx_:] = KY.beta[np.ix_(ky, ky)]
    mixed = np.outer(KX.beta[:, i0], KY.beta[j0, ky])
    B[:nx_, nx_:] = mixed
    B[nx_:, :nx_] = mixed.T
    return ComplexHyperbolicKernel(labels, B, {}, lam=lam)


def leaf_flow(T, leaf, c, taus, lam):
    """Quadratic form of the base-point kernel as a leaf base slides inward.

    The base starts at ``leaf`` and moves a distance ``tau`` along its edge;
    the remaining nodes carry coefficients ``c``. Returns one value per
    ``tau``, which should be non-increasing in ``tau``.
    """
    nbrs = list(T.graph.neighbors(leaf))
    if len(nbrs) != 1:
        raise TreeError(f"{leaf!r} is not a leaf")
    edge = T.graph.edges[leaf, nbrs[0]]["length"]
    rest = [v for v in T.nodes if v != leaf]
    c = np.asarray(c, dtype=float)
    if c.shape != (len(rest),):
        raise ValueError(f"need {len(rest)} coefficients, got {c.shape}")
    D = T.distance_matrix()
    idx = [T.nodes.index(v) for v in rest]
    d0 = D[T.nodes.index(leaf), idx]
    inner = float(c @ (float(lam) ** D[np.ix_(idx, idx)]) @ c)
    out = []
    for tau in taus:
        if not 0.0 <= tau <= edge:
            raise ValueError(f"tau={tau} is outside the leaf edge [0, {edge}]")
        out.append(float(c @ float(lam) ** (d0 - tau)) ** 2 - inner)
    return np.array(out)


def exp_violation_search(lam, rng=None, n_points=8, radius=6.0, trials=50, n=2, tol=1e-9):
    """Exploratory search for a sample on which ``lam ** d`` fails to be of real hyperbolic type.

    Only meaningful for ``lam > e``; returns ``(kernel, report)`` for the first
    failing sample or ``None``. A ``None`` result proves nothing.
    """
    from hypkern.kernels import Status, validate_rht

    rng = np.random.default_rng(rng)
    space = MinkowskiSpace(Field.REAL, n)
    for _ in range(trials):
        K = exp_kernel(random_points(space, n_points, rng, radius), lam)
        rep = validate_rht(K.beta, tol=tol)
        if rep.verdict is Status.INVALID:
            return K, rep
    return None


# --------------------------------------------------------------------------
# finite free products
# --------------------------------------------------------------------------

@dataclass
class Patch:
    name: str
    kernel: ComplexHyperbolicKernel


def _build_patch(spec, lam, index, rng):
    kind = spec.get("kind")
    name = str(spec.get("name", f"p{index}"))
    if kind == "tree":
        K = tree_kernel(MetricTree.from_dict(spec), lam)
    elif kind == "hyperbolic":
        if "points" in spec:
            from hypkern.io import points_from_dict
            pts = points_from_dict(spec)
        else:
            space = MinkowskiSpace(Field.REAL, int(spec.get("n", 2)))
            seed = spec.get("seed")
            pts = random_points(space, int(spec.get("num_points", 10)),
                                rng if seed is None else seed, float(spec.get("scale", 1.0)))
        K = exp_kernel(pts, lam)
    elif kind == "kernel":
        K = ComplexHyperbolicKernel(spec.get("labels") or [str(i) for i in range(len(spec["beta"]))],
                                    spec["beta"], {}, lam=spec.get("lambda"))
    else:
        raise ValueError(f"patch {index}: unknown kind {kind!r}")
    labels = [f"{name}:{lab}" for lab in K.labels]
    return Patch(name, ComplexHyperbolicKernel(labels, K.beta, {}, lam=lam))


def free_product_kernel(spec, rng=None):
    """Iterated glueing over a finite tree of patches.

    ``spec`` follows the glueing-spec file format: ``patches`` (tree,
    hyperbolic or explicit kernel), ``glue`` entries
    ``[patch_a, point_a, patch_b, point_b]`` and ``lambda``.
    """
    lam = float(spec["lambda"])
    if lam < 1:
        raise DomainError(f"lambda must be >= 1, got {lam}")
    rng = np.random.default_rng(rng)
    patches = [_build_patch(p, lam, i, rng) for i, p in enumerate(spec["patches"])]
    if not patches:
        raise ValueError("glueing spec has no patches")
    by_name = {p.name: i for i, p in enumerate(patches)}
    if len(by_name) != len(patches):
        raise ValueError("patch names are not unique")

    def ref(x):
        if isinstance(x, int):
            if not 0 <= x < len(patches):
                raise ValueError(f"patch index {x} out of range")
            return x
        if x not in by_name:
            raise ValueError(f"unknown patch {x!r}")
        return by_name[x]

    edges = [(ref(a), str(pa), ref(b), str(pb)) for a, pa, b, pb in spec.get("glue", [])]
    g = nx.Graph()
    g.add_nodes_from(range(len(patches)))
    for a, _, b, _ in edges:
        if a == b or g.has_edge(a, b):
            raise ValueError(f"glue entry between patches {a} and {b} is repeated or a self-loop")
        g.add_edge(a, b)
    if not nx.is_tree(g):
        raise ValueError("glue entries must form a tree over the patches")

    K = patches[0].kernel
    alias = {}
    done = {0}
    for a, b in nx.bfs_edges(g, 0):
        for ea, pa, eb, pb in edges:
            if (ea, eb) == (a, b):
                old, new = f"{patches[a].name}:{pa}", f"{patches[b].name}:{pb}"
                break
            if (ea, eb) == (b, a):
                old, new = f"{patches[a].name}:{pb}", f"{patches[b].name}:{pa}"
                break
        old = alias.get(old, old)
        K = glue_kernels(K, old, patches[b].kernel, new, lam)
        alias[new] = old
        done.add(b)
    K.aliases = alias
    return K
