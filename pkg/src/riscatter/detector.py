"""Energy-detector model: receive variances, Gamma energy densities and the
discrete memoryless channel induced by sequential energy thresholds."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, gammaincinv, gammaln

log = logging.getLogger(__name__)

def receive_variance(h, w, noise_var):
    """``|h @ w|**2 + noise_var`` for one row-form channel or a stack of them."""
    amp = np.asarray(h, dtype=complex) @ np.asarray(w, dtype=complex)
    return np.abs(amp) ** 2 + noise_var


def gamma_energy_pdf(z, n_samples: int, var):
    """Density of the energy accumulated over ``n_samples`` CN(0, var) samples."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("energy must be nonnegative")
    with np.errstate(divide="ignore"):
        logz = np.where(z > 0, np.log(np.where(z > 0, z, 1.0)), -np.inf)
        logpdf = ((n_samples - 1) * logz if n_samples > 1 else 0.0) - z / var \
            - n_samples * np.log(var) - gammaln(n_samples)
    return np.exp(logpdf)


def upper_tail(n_samples: int, x):
    """``exp(-x) * sum_{n<N} x**n / n!``, the regularized upper incomplete Gamma
    function at integer order.  ``x = inf`` gives 0."""
    out = gammaincc(n_samples, np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def reg_inc_gamma(n_samples: int, a, b):
    """Probability that a unit-scale Gamma(N) variable falls in ``[a, b)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 0) or np.any(a > b):
        raise ValueError("need 0 <= a <= b")
    out = np.clip(upper_tail(n_samples, a) - upper_tail(n_samples, b), 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def hypothesis_order(variances) -> np.ndarray:
    """Tuple indices sorted by ascending variance; ties keep enumeration order."""
    v = np.asarray(variances, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("variances must be finite")
    return np.argsort(v, kind="stable")


def gamma_quantile(n_samples: int, var: float, prob: float) -> float:
    """Energy ``z`` with ``P(Z < z) = prob`` under variance ``var``."""
    return float(gammaincinv(n_samples, prob)) * var


@dataclass(frozen=True)
class ThresholdCandidates:
    grid: np.ndarray
    bits: int
    confidence: float
    degenerate: bool = False

    @property
    def n_bins(self) -> int:
        """Bins between consecutive candidates, the outer two stretched to 0 and inf."""
        return max(len(self.grid) - 1, 1)

    def bin_edges(self) -> np.ndarray:
        """Edges of the energy bins, starting at 0 and ending at inf."""
        if len(self.grid) < 2:
            return np.array([0.0, np.inf])
        return np.concatenate([[0.0], self.grid[1:-1], [np.inf]])


def candidate_grid(var_min: float, var_max: float, n_samples: int, bits: int = 9,
                   confidence: float = 1e-3, log_spacing: bool = False) -> ThresholdCandidates:
    """``2**bits + 1`` candidate thresholds spanning the critical energy interval.

    The interval runs from the ``confidence`` quantile of the weakest hypothesis
    to the ``1 - confidence`` quantile of the strongest.
    """
    if var_min > var_max:
        raise ValueError("var_min exceeds var_max")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    lower = gamma_quantile(n_samples, var_min, confidence)
    upper = gamma_quantile(n_samples, var_max, 1 - confidence)
    if not upper > lower:
        log.warning("degenerate critical interval [%g, %g]", lower, upper)
        return ThresholdCandidates(np.array([lower]), bits, confidence, degenerate=True)
    count = 2 ** bits + 1
    if log_spacing and lower > 0:
        grid = np.geomspace(lower, upper, count)
    else:
        grid = np.linspace(lower, upper, count)
    return ThresholdCandidates(grid, bits, confidence)


def check_thresholds(t) -> np.ndarray:
    """Validate a full threshold vector ``[0, t_1, ..., t_{L-1}, inf]``."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or len(t) < 2 or t[0] != 0 or not np.isinf(t[-1]) or np.any(np.diff(t) < 0):
        raise ValueError(f"invalid threshold vector {t}")
    return t


def transition_matrix(variances, thresholds, n_samples: int) -> np.ndarray:
    """Row ``i``: probability of each decision region under ``variances[i]``."""
    t = check_thresholds(thresholds)
    v = np.asarray(variances, dtype=float)[:, None]
    # one tail evaluation per threshold, shared by the two regions it separates
    tail = upper_tail(n_samples, t[None, :] / v)
    return np.clip(tail[:, :-1] - tail[:, 1:], 0.0, 1.0)
