"""Reflection constellations, per-node input distributions and composite channels.

State tuples are enumerated mixed-radix with node 0 most significant (the order
of :func:`itertools.product`); every table indexed by tuple uses this order.
States are 0-based.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

TUPLE_CAP = 4096


class CapacityError(ValueError):
    """Raised when ``M ** K`` exceeds the configured tuple cap."""


@dataclass(frozen=True)
class Constellation:
    points: np.ndarray  # raw constellation points c_m
    amplitude_ratio: float

    @property
    def order(self) -> int:
        return len(self.points)

    @property
    def reflection(self) -> np.ndarray:
        """Reflection coefficients, normalized so the largest modulus is the amplitude ratio."""
        return self.amplitude_ratio * self.points / np.max(np.abs(self.points))


def build_constellation(order: int, amplitude_ratio: float = 0.5) -> Constellation:
    """Square M-QAM (or antipodal for M = 2) on odd-integer coordinates.

    Labels are plain indices in row-major order of the in-phase/quadrature grid.
    """
    if not 0 < amplitude_ratio <= 1:
        raise ValueError("amplitude ratio must lie in (0, 1]")
    if order == 2:
        return Constellation(np.array([1.0 + 0j, -1.0 + 0j]), amplitude_ratio)
    side = math.isqrt(order) if order > 0 else 0
    if order < 4 or side * side != order:
        raise ValueError(f"unsupported constellation order {order}")
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    points = (levels[:, None] + 1j * levels[None, :]).ravel()
    return Constellation(points, amplitude_ratio)


def enumerate_tuples(n_nodes: int, order: int, cap: int = TUPLE_CAP) -> np.ndarray:
    """All ``order ** n_nodes`` state tuples as an integer array of shape (L, K)."""
    if order ** n_nodes > cap:
        raise CapacityError(f"{order}^{n_nodes} tuples exceed the cap of {cap}")
    return np.array(list(itertools.product(range(order), repeat=n_nodes)),
                    dtype=int).reshape(order ** n_nodes, n_nodes)


def composite_channel(h_d, h_c, gammas) -> np.ndarray:
    """``h_d + sum_k gammas[k] * h_c[k]`` for one tuple of reflection coefficients."""
    h_d = np.asarray(h_d, dtype=complex)
    h_c = np.asarray(h_c, dtype=complex).reshape(-1, h_d.shape[0]) if np.size(h_c) else \
        np.zeros((0, h_d.shape[0]), dtype=complex)
    gammas = np.atleast_1d(np.asarray(gammas, dtype=complex))
    if h_c.shape[0] != gammas.shape[0]:
        raise ValueError(f"{gammas.shape[0]} coefficients for {h_c.shape[0]} nodes")
    return h_d + gammas @ h_c


def reflection_matrix(n_nodes: int, constellation: Constellation, amplitude=None,
                      cap: int = TUPLE_CAP) -> np.ndarray:
    """Reflection coefficient of every node in every tuple, shape (L, K).

    ``amplitude`` optionally gives a per-node amplitude ratio overriding the
    constellation's common one.
    """
    tuples = enumerate_tuples(n_nodes, constellation.order, cap)
    unit = constellation.points / np.max(np.abs(constellation.points))
    scale = np.full(n_nodes, constellation.amplitude_ratio) if amplitude is None \
        else np.broadcast_to(np.asarray(amplitude, dtype=float), (n_nodes,))
    return unit[tuples] * scale[None, :]


def composite_table(h_d, h_c, constellation: Constellation, amplitude=None,
                    cap: int = TUPLE_CAP) -> np.ndarray:
    """Composite (row-form) channel of every tuple, shape (L, Q)."""
    h_d = np.asarray(h_d, dtype=complex)
    h_c = np.asarray(h_c, dtype=complex).reshape(-1, h_d.shape[0])
    gam = reflection_matrix(h_c.shape[0], constellation, amplitude, cap)
    return h_d[None, :] + gam @ h_c


def _check_simplex(p, tol=1e-9):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < -tol) or abs(p.sum() - 1) > tol:
        raise ValueError(f"not a probability vector: {p}")
    return p


def joint_distribution(dists) -> np.ndarray:
    """Product-form joint distribution over the tuple enumeration."""
    joint = np.ones(1)
    for p in dists:
        joint = np.multiply.outer(joint, _check_simplex(p)).ravel()
    return joint


def marginalize(joint, n_nodes: int, order: int) -> list[np.ndarray]:
    """Per-node marginals of a joint distribution over ``order ** n_nodes`` tuples."""
    arr = np.asarray(joint, dtype=float).reshape((order,) * n_nodes)
    out = []
    for k in range(n_nodes):
        axes = tuple(a for a in range(n_nodes) if a != k)
        out.append(arr.sum(axis=axes))
    return out
