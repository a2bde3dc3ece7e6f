"""Neuron rescaling symmetries and the normalization map.

Rescaling a hidden neuron by lambda > 0 multiplies its incoming weights and
bias by lambda and divides its outgoing weights by lambda.  The network
function, the path lifting and the path activations are all invariant under
any such rescaling, which is what makes path quantities better-behaved than
raw parameter norms.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from .errors import IneligibleNeuron, NonPositiveFactor, ParseError
from .graph import INPUT, KPOOL, Architecture, ParamVector, _check_bound


def hidden_positions(arch: Architecture, include_kpool: bool = True):
    """Topological positions of rescalable neurons (non-input, non-output)."""
    out = set(int(j) for j in arch.output_pos)
    pos = []
    for j in range(arch.n_neurons):
        if arch.kinds[j] == INPUT or j in out:
            continue
        if arch.kinds[j] == KPOOL and not include_kpool:
            continue
        pos.append(j)
    return pos


def rescale(arch: Architecture, theta: ParamVector, factors: Mapping) -> ParamVector:
    """Apply the rescaling with the given per-neuron factors.

    ``factors`` maps hidden neuron ids to strictly positive reals; neurons
    not mentioned keep factor 1.  Inputs and outputs cannot be rescaled.
    """
    _check_bound(arch, theta)
    out = set(int(j) for j in arch.output_pos)
    lam = np.ones(arch.n_neurons)
    for nid, f in factors.items():
        j = arch.position(nid)
        if arch.kinds[j] == INPUT or j in out:
            raise IneligibleNeuron(f"{nid} is an input or output neuron")
        f = float(f)
        if not (f > 0.0) or not math.isfinite(f):
            raise NonPositiveFactor(f"factor for {nid} must be finite and > 0, got {f}")
        lam[j] = f
    v = theta.vec.copy()
    for i, (u, w) in enumerate(arch.edges):
        v[i] *= lam[arch.pos[w]] / lam[arch.pos[u]]
    for j in range(arch.n_neurons):
        if arch.bias_coord[j] >= 0:
            v[arch.bias_coord[j]] *= lam[j]
    return ParamVector(arch, v)


POW2_FACTORS = (1.0, 128.0, 4096.0)


def random_rescaling(arch: Architecture, seed, preset: str = "pow2_factors") -> dict:
    """Draw one rescaling factor per hidden neuron, in topological order.

    Presets:

    * ``"pow2_factors"``  -- uniform over {1, 128, 4096}.  All three are
      powers of two, so applying them is exact in binary floating point.
    * ``"log_uniform:L"``  -- log of the factor uniform on [-ln L, ln L].
    """
    rng = np.random.default_rng(seed)
    pos = hidden_positions(arch, include_kpool=True)
    if preset == "pow2_factors":
        draws = rng.choice(np.asarray(POW2_FACTORS), size=len(pos))
    elif preset.startswith("log_uniform:"):
        try:
            lmax = float(preset.split(":", 1)[1])
        except ValueError:
            raise ParseError(f"bad preset {preset!r}") from None
        if not lmax > 1.0:
            raise NonPositiveFactor(f"log_uniform bound must exceed 1, got {lmax}")
        draws = np.exp(rng.uniform(-math.log(lmax), math.log(lmax), size=len(pos)))
    else:
        raise ParseError(f"unknown rescaling preset {preset!r}")
    return {arch.ids[j]: float(f) for j, f in zip(pos, draws)}


def normalize(arch: Architecture, theta: ParamVector, include_kpool: bool = False) -> ParamVector:
    """Pick the canonical representative of theta's rescaling orbit.

    Sweeps hidden neurons in topological order; at each one divides the
    incoming weights and bias by their l1 norm (when nonzero) and multiplies
    the outgoing weights by it.  Afterwards every visited neuron has
    incoming l1 norm 0 or 1, the path lifting is unchanged, and running the
    map again is a no-op.

    kpool neurons are skipped by default so that pooling windows keep their
    native scale; pass include_kpool=True to normalize them as well (pooling
    commutes with positive scaling, so this is equally sound).
    """
    _check_bound(arch, theta)
    v = theta.vec.copy()
    for j in hidden_positions(arch, include_kpool=include_kpool):
        cin = arch.in_coords[j]
        b = arch.bias_coord[j]
        lam = np.abs(v[cin]).sum() + abs(v[b])
        if lam > 0.0:
            v[cin] /= lam
            v[b] /= lam
            v[arch.out_coords[j]] *= lam
    return ParamVector(arch, v)
