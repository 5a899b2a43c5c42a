"""Channel synthesis: distance-dependent path loss with Rician small-scale fading.

All channel vectors are stored in *row* form, i.e. the entries of ``h^H`` so that
the received amplitude is simply ``h @ w``.  The cascaded link of node k is
``h_c[k] = h_b[k] * h_f[k]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# stream identifiers inside one realization
_GEOMETRY = 0
_DIRECT = 1


@dataclass(frozen=True)
class FadingConfig:
    reference_loss: float = 1e-3  # -30 dB at the reference distance
    reference_distance: float = 1.0
    exponent_direct: float = 2.6
    exponent_forward: float = 2.4
    exponent_backward: float = 2.0
    kappa_direct: float = 5.0
    kappa_forward: float = 5.0
    kappa_backward: float = 5.0

    def __post_init__(self):
        if self.reference_loss <= 0 or self.reference_distance <= 0:
            raise ValueError("reference loss and distance must be positive")
        for name in ("exponent_direct", "exponent_forward", "exponent_backward"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("kappa_direct", "kappa_forward", "kappa_backward"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class GeometryConfig:
    """AP-user distance plus node placement.

    Nodes are dropped uniformly in a disk of radius ``node_radius`` centred at the
    user unless both distance lists are given explicitly.  The AP sits at the
    origin and the user at ``(ap_user_distance, 0)``.
    """

    ap_user_distance: float = 10.0
    node_radius: float = 2.0
    ap_node_distances: tuple[float, ...] | None = None
    node_user_distances: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.ap_user_distance <= 0 or self.node_radius <= 0:
            raise ValueError("distances must be positive")
        given = (self.ap_node_distances, self.node_user_distances)
        if (given[0] is None) != (given[1] is None):
            raise ValueError("give both explicit distance lists or neither")
        if given[0] is not None:
            if len(given[0]) != len(given[1]):
                raise ValueError("explicit distance lists differ in length")
            if min(given[0] + given[1], default=1.0) <= 0:
                raise ValueError("distances must be positive")

    def node_distances(self, n_nodes: int, rng: np.random.Generator):
        """Return ``(ap_node, node_user)`` distance arrays of length ``n_nodes``."""
        if self.ap_node_distances is not None:
            if len(self.ap_node_distances) != n_nodes:
                raise ValueError(
                    f"geometry lists {len(self.ap_node_distances)} nodes, expected {n_nodes}"
                )
            return (np.asarray(self.ap_node_distances, dtype=float),
                    np.asarray(self.node_user_distances, dtype=float))
        # 1 - U lies in (0, 1], so no node lands exactly on the user
        radius = self.node_radius * np.sqrt(1.0 - rng.random(n_nodes))
        angle = 2 * np.pi * rng.random(n_nodes)
        x = self.ap_user_distance + radius * np.cos(angle)
        y = radius * np.sin(angle)
        return np.hypot(x, y), radius


@dataclass(frozen=True)
class ChannelDraw:
    h_d: np.ndarray  # (Q,)
    h_f: np.ndarray  # (K, Q)
    h_b: np.ndarray  # (K,)
    h_c: np.ndarray  # (K, Q)
    cascade_loss: np.ndarray = field(default_factory=lambda: np.zeros(0))  # (K,) linear

    @property
    def n_antennas(self) -> int:
        return self.h_d.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.h_c.shape[0]

    def with_cascade(self, h_c) -> "ChannelDraw":
        """Copy with the cascaded channels replaced (used for imperfect CSI)."""
        h_c = np.asarray(h_c, dtype=complex).reshape(self.h_c.shape)
        return ChannelDraw(self.h_d, self.h_f, self.h_b, h_c, self.cascade_loss)


def path_loss(distance, cfg: FadingConfig, exponent: float):
    """Linear power gain ``L0 * (d0 / d) ** exponent``."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = cfg.reference_loss * (cfg.reference_distance / d) ** exponent
    return float(out) if out.ndim == 0 else out


def draw_rician(rows: int, cols: int, kappa: float, rng: np.random.Generator) -> np.ndarray:
    """Rician fading matrix with an all-ones line-of-sight component.

    ``kappa = inf`` gives the pure line-of-sight matrix.
    """
    if kappa < 0:
        raise ValueError("Rician K-factor must be nonnegative")
    nlos = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)
    if np.isinf(kappa):
        return np.ones((rows, cols), dtype=complex)
    return np.sqrt(kappa / (1 + kappa)) + np.sqrt(1 / (1 + kappa)) * nlos


def stream(seed, realization: int, link: int) -> np.random.Generator:
    """Independent generator for one (realization, link) pair."""
    if isinstance(seed, np.random.SeedSequence):
        entropy = seed.entropy
    else:
        entropy = int(seed)
    return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(realization, link)))


def generate_channels(geometry: GeometryConfig, fading: FadingConfig, n_antennas: int,
                      n_nodes: int, seed=0, realization: int = 0) -> ChannelDraw:
    """Draw the direct, forward, backward and cascaded channels of one realization.

    Each link uses its own random stream keyed by ``(realization, link)``, so the
    draws do not depend on evaluation order.
    """
    if n_antennas < 1 or n_nodes < 0:
        raise ValueError("need at least one antenna and a nonnegative node count")
    d_an, d_nu = geometry.node_distances(n_nodes, stream(seed, realization, _GEOMETRY))

    loss_d = path_loss(geometry.ap_user_distance, fading, fading.exponent_direct)
    h_d = np.sqrt(loss_d) * draw_rician(1, n_antennas, fading.kappa_direct,
                                        stream(seed, realization, _DIRECT))[0]
    h_f = np.empty((n_nodes, n_antennas), dtype=complex)
    h_b = np.empty(n_nodes, dtype=complex)
    cascade_loss = np.empty(n_nodes)
    for k in range(n_nodes):
        loss_f = path_loss(d_an[k], fading, fading.exponent_forward)
        loss_b = path_loss(d_nu[k], fading, fading.exponent_backward)
        h_f[k] = np.sqrt(loss_f) * draw_rician(1, n_antennas, fading.kappa_forward,
                                               stream(seed, realization, 2 + 2 * k))[0]
        h_b[k] = np.sqrt(loss_b) * draw_rician(1, 1, fading.kappa_backward,
                                               stream(seed, realization, 3 + 2 * k))[0, 0]
        cascade_loss[k] = loss_f * loss_b
    h_c = h_b[:, None] * h_f
    return ChannelDraw(h_d, h_f, h_b, h_c, cascade_loss)


def perturb_csi(h_c, iota: float, cascade_loss: float, rng: np.random.Generator) -> np.ndarray:
    """Cascaded-channel estimate with i.i.d. CN(0, iota * cascade_loss) error entries."""
    if iota < 0:
        raise ValueError("relative estimation error must be nonnegative")
    h_c = np.asarray(h_c, dtype=complex)
    if iota == 0:
        return h_c.copy()
    err = (rng.standard_normal(h_c.shape) + 1j * rng.standard_normal(h_c.shape)) / np.sqrt(2)
    return h_c + np.sqrt(iota * cascade_loss) * err
