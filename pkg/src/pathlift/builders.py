"""Network builders: layered MLPs, conv-shaped grids, seeded random DAGs.

Neuron ids are zero-padded so that the canonical (id-sorted) order of each
layer matches the natural index order; input vectors then line up with the
obvious coordinates.
"""

from __future__ import annotations

import numpy as np

from .errors import RaggedLayers
from .graph import Architecture, ParamVector


def mlp_architecture(widths, hidden: str = "relu") -> Architecture:
    """Fully-connected layered network; layer 0 is the input layer."""
    widths = [int(w) for w in widths]
    if len(widths) < 2 or min(widths) < 1:
        raise RaggedLayers(f"need at least two positive layer widths, got {widths}")
    names = [[f"L{l}n{i:03d}" for i in range(w)] for l, w in enumerate(widths)]
    neurons = [(n, "input") for n in names[0]]
    for layer in names[1:-1]:
        neurons += [(n, hidden) for n in layer]
    neurons += [(n, "identity") for n in names[-1]]
    edges = []
    for prev, cur in zip(names[:-1], names[1:]):
        edges += [(u, v) for v in cur for u in prev]
    return Architecture(neurons, edges)


def mlp_params(arch: Architecture, matrices, biases=None) -> ParamVector:
    """Bind a list of weight matrices (rows = outgoing neurons) to an MLP.

    matrices[l][i, j] is the weight from neuron j of layer l to neuron i of
    layer l+1; biases, when given, is one vector per non-input layer.
    """
    layers = _mlp_layers(arch)
    mats = [np.asarray(m, dtype=np.float64) for m in matrices]
    if len(mats) != len(layers) - 1:
        raise RaggedLayers(f"expected {len(layers) - 1} matrices, got {len(mats)}")
    v = np.zeros(arch.n_coords)
    for l, m in enumerate(mats):
        if m.shape != (len(layers[l + 1]), len(layers[l])):
            raise RaggedLayers(
                f"matrix {l} has shape {m.shape}, expected {(len(layers[l + 1]), len(layers[l]))}"
            )
        for i, dst in enumerate(layers[l + 1]):
            for j, src in enumerate(layers[l]):
                v[arch.edge_index[(src, dst)]] = m[i, j]
    if biases is not None:
        for l, bl in enumerate(biases):
            bl = np.asarray(bl, dtype=np.float64)
            for i, dst in enumerate(layers[l + 1]):
                v[arch.bias_coord[arch.position(dst)]] = bl[i]
    return ParamVector(arch, v)


def mlp_matrices(arch: Architecture, theta: ParamVector):
    """Inverse of mlp_params: recover the per-layer weight matrices."""
    layers = _mlp_layers(arch)
    mats = []
    for l in range(len(layers) - 1):
        m = np.zeros((len(layers[l + 1]), len(layers[l])))
        for i, dst in enumerate(layers[l + 1]):
            for j, src in enumerate(layers[l]):
                m[i, j] = theta.vec[arch.edge_index[(src, dst)]]
        mats.append(m)
    return mats


def _mlp_layers(arch: Architecture):
    by_layer = {}
    for nid in arch.ids:
        if not (nid.startswith("L") and "n" in nid):
            raise RaggedLayers(f"{nid!r} is not an mlp_architecture neuron id")
        by_layer.setdefault(int(nid[1 : nid.index("n")]), []).append(nid)
    return [sorted(by_layer[l]) for l in sorted(by_layer)]


def conv_grid_architecture(
    side: int = 12, channels=(8, 20), kernel: int = 3, pool: int = 2, d_out: int = 10
) -> Architecture:
    """Conv-net-shaped DAG: valid convolutions, a max-pool stage, a dense head.

    Connectivity only; every edge keeps its own weight.  Defaults give about
    1e5 edges, the scale-test regime.
    """
    neurons = [(f"I{r:02d}x{c:02d}", "input") for r in range(side) for c in range(side)]
    edges = []
    prev = [[f"I{r:02d}x{c:02d}" for c in range(side)] for r in range(side)]
    prev_ch = 1
    prev_grids = [prev]
    stage = 0
    for ch in channels:
        stage += 1
        size = len(prev_grids[0]) - kernel + 1
        grids = []
        for f in range(ch):
            grid = [[f"S{stage}f{f:02d}r{r:02d}c{c:02d}" for c in range(size)] for r in range(size)]
            grids.append(grid)
            for r in range(size):
                for c in range(size):
                    neurons.append((grid[r][c], "relu"))
                    for g in prev_grids:
                        for dr in range(kernel):
                            for dc in range(kernel):
                                edges.append((g[r + dr][c + dc], grid[r][c]))
        prev_grids = grids
        prev_ch = ch
    stage += 1
    size = len(prev_grids[0]) // pool
    pooled = []
    for f in range(prev_ch):
        grid = [[f"S{stage}f{f:02d}r{r:02d}c{c:02d}" for c in range(size)] for r in range(size)]
        pooled.append(grid)
        for r in range(size):
            for c in range(size):
                neurons.append((grid[r][c], ("kpool", 1)))
                for dr in range(pool):
                    for dc in range(pool):
                        edges.append((prev_grids[f][pool * r + dr][pool * c + dc], grid[r][c]))
    flat = [g[r][c] for g in pooled for r in range(size) for c in range(size)]
    for o in range(d_out):
        nid = f"Zout{o:02d}"
        neurons.append((nid, "identity"))
        edges += [(u, nid) for u in flat]
    return Architecture(neurons, edges)


def random_params(
    arch: Architecture,
    rng,
    weight_scale: float = 1.0,
    bias_scale: float = 0.3,
    zero_frac: float = 0.0,
    min_mag: float = 0.05,
) -> ParamVector:
    """Random parameters with magnitudes bounded away from 0 by min_mag."""
    rng = np.random.default_rng(rng)
    n_e = arch.n_edges
    mags = rng.uniform(min_mag, weight_scale, size=n_e)
    w = mags * rng.choice([-1.0, 1.0], size=n_e)
    b = rng.uniform(min_mag, max(bias_scale, min_mag * 2), size=arch.n_coords - n_e)
    b *= rng.choice([-1.0, 1.0], size=b.size)
    v = np.concatenate([w, b])
    if zero_frac > 0.0:
        v[rng.random(arch.n_coords) < zero_frac] = 0.0
    return ParamVector(arch, v)


def same_sign_partner(
    theta: ParamVector, rng, low: float = 0.25, high: float = 1.75, zero_frac: float = 0.0
) -> ParamVector:
    """Coordinatewise positive multiple of theta, optionally zeroing some
    coordinates; the sign condition holds by construction."""
    rng = np.random.default_rng(rng)
    v = theta.vec * rng.uniform(low, high, size=len(theta))
    if zero_frac > 0.0:
        v[rng.random(len(theta)) < zero_frac] = 0.0
    return ParamVector(theta.arch, v)


def random_dag(
    rng,
    max_layers: int = 4,
    max_width: int = 5,
    p_skip: float = 0.25,
    p_identity: float = 0.2,
    p_kpool: float = 0.25,
) -> Architecture:
    """Seeded random layered DAG with skip edges and mixed activations.

    Every non-input neuron keeps at least one antecedent and every
    non-output neuron at least one successor, so the input/output roles are
    exactly the intended layers.  Desk scale by default: small enough for
    exhaustive path enumeration.
    """
    rng = np.random.default_rng(rng)
    n_layers = int(rng.integers(2, max_layers + 1))
    widths = [int(rng.integers(1, max_width + 1)) for _ in range(n_layers)]
    names = [[f"L{l}n{i}" for i in range(w)] for l, w in enumerate(widths)]
    edges = []
    for l in range(1, n_layers):
        for v in names[l]:
            prev = names[l - 1]
            n_in = int(rng.integers(1, len(prev) + 1))
            for u in rng.choice(prev, size=n_in, replace=False):
                edges.append((str(u), v))
            for back in range(l - 1):
                for u in names[back]:
                    if rng.random() < p_skip / (l - back):
                        edges.append((u, v))
    has_suc = {u for u, _ in edges}
    for l in range(n_layers - 1):
        for u in names[l]:
            if u not in has_suc:
                v = str(rng.choice(names[l + 1]))
                edges.append((u, v))
                has_suc.add(u)
    n_ant = {}
    for u, v in edges:
        n_ant[v] = n_ant.get(v, 0) + 1
    neurons = [(n, "input") for n in names[0]]
    for l in range(1, n_layers - 1):
        for nid in names[l]:
            r = rng.random()
            if r < p_kpool and n_ant[nid] >= 2:
                neurons.append((nid, ("kpool", int(rng.integers(1, n_ant[nid] + 1)))))
            elif r < p_kpool + p_identity:
                neurons.append((nid, "identity"))
            else:
                neurons.append((nid, "relu"))
    neurons += [(n, "identity") for n in names[-1]]
    return Architecture(neurons, edges)
