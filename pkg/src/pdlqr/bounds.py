"""Theoretical constants, step-size schedules and epoch plans.

These calculators evaluate the closed-form quantities behind the
high-probability error bounds of the primal-dual estimator. The sample
counts they produce are astronomically conservative at desk scale; the
experiment runner therefore accepts user-supplied epoch sizes and keeps
these formulas for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cspd import Schedule
from .errors import DomainError
from .lqr import CostWeights, LinearSystem, bellman_parameters, noise_lift
from .vectorize import as_symmetric


@dataclass(frozen=True)
class BoundConstants:
    """Data-magnitude and confidence constants feeding schedules and plans.

    ``c1``/``c2`` are the absolute constants of the Gaussian tail bound and
    have no derived values; callers choose them (default 1). ``alpha`` is
    the informativity floor min_k ||gamma_k||^2, measured from data rather
    than derived, and enters the epoch plans.
    """

    l_gamma: float
    m_gamma: float
    m_c: float
    m_x: float
    m_y: float
    alpha: float
    delta: float
    c1: float
    c2: float
    omega_x: float
    omega_y: float

    def __post_init__(self):
        for name in ("l_gamma", "m_gamma", "m_c", "m_x", "m_y", "alpha",
                     "delta", "c1", "c2", "omega_x", "omega_y"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive")


def _check_delta(delta: float) -> float:
    if not 0 < delta <= 1 / math.e:
        raise DomainError("delta must lie in (0, 1/e]")
    return float(delta)


def bound_constants(sys: LinearSystem, weights: CostWeights, gain,
                    sigma_x, sigma_u, delta: float,
                    c1: float = 1.0, c2: float = 1.0,
                    d_x: float = 2.0, alpha: float = 1.0,
                    zeta_bar: float = 1.0) -> BoundConstants:
    """Evaluate the closed-form data bounds at one gain.

    ``d_x`` is the primal-set diameter (2 * radius for a ball). The
    log(1/delta) confidence factor multiplies the covariance term of the
    per-sample magnitude bounds m_gamma and m_c, and once more in the
    martingale constants m_x and m_y. ``zeta_bar`` bounds the momenta;
    1 is the supremum of (k-1)/k.
    """
    delta = _check_delta(delta)
    if c1 <= 0 or c2 <= 0:
        raise DomainError("c1 and c2 must be positive")
    if d_x <= 0:
        raise DomainError("d_x must be positive")
    gain = np.asarray(gain, dtype=float)
    sigma_x = as_symmetric(sigma_x)
    sigma_u = as_symmetric(sigma_u)
    a, b = sys.A, sys.B
    sigma_xp = a @ sigma_x @ a.T + b @ sigma_u @ b.T + sys.sigma_w
    n_x, n_u = sys.n_x, sys.n_u
    stacked = np.zeros((2 * n_x + n_u, 2 * n_x + n_u))
    stacked[:n_x, :n_x] = sigma_x
    stacked[:n_x, n_x + n_u:] = sigma_x @ a.T
    stacked[n_x:n_x + n_u, n_x:n_x + n_u] = sigma_u
    stacked[n_x:n_x + n_u, n_x + n_u:] = sigma_u @ b.T
    stacked[n_x + n_u:, :n_x] = a @ sigma_x
    stacked[n_x + n_u:, n_x:n_x + n_u] = b @ sigma_u
    stacked[n_x + n_u:, n_x + n_u:] = sigma_xp

    kappa = (c2**2 / math.sqrt(c1)) * float(np.linalg.norm(stacked, 2)) \
        + (c2**2 / c1) * float(np.trace(stacked))
    log_conf = math.log(1.0 / delta)
    k_norm = float(np.linalg.norm(gain, 2))
    w_norm = float(np.linalg.norm(noise_lift(sys.sigma_w)))

    l_gamma = (
        2.0 * k_norm * float(np.linalg.norm(sigma_x))
        + float(np.linalg.norm(sigma_u, 2))
        + (k_norm**2 + 1.0) * float(np.linalg.norm(sigma_x, 2))
        + float(np.linalg.norm(sigma_xp, 2))
        + w_norm
    )
    m_gamma = 4.0 * (5.0 + 2.0 * k_norm + k_norm**2) * kappa * log_conf + w_norm
    m_c = 4.0 * (float(np.linalg.norm(weights.Q, 2))
                 + k_norm**2 * float(np.linalg.norm(weights.R, 2))) * kappa * log_conf
    omega_y = 1.0
    xi_norm = float(np.linalg.norm(bellman_parameters(sys, weights, gain)))
    omega_x = xi_norm + (1.0 + zeta_bar) * math.sqrt(2.0) * d_x
    m_x = m_gamma * omega_y * log_conf
    m_y = m_gamma * omega_x * log_conf
    return BoundConstants(
        l_gamma=l_gamma, m_gamma=m_gamma, m_c=m_c, m_x=m_x, m_y=m_y,
        alpha=float(alpha), delta=delta, c1=float(c1), c2=float(c2),
        omega_x=omega_x, omega_y=omega_y,
    )


def accelerated_schedule(consts: BoundConstants, d_x: float, d_y: float,
                         n: int) -> Schedule:
    """Step-size schedule whose averaged output meets the O(1/sqrt(N)) bound.

        eta_k    = (3 sqrt(2) L d_y k + 6 m_x k^{3/2}) / (2 sqrt(2) d_x k)
        lambda_k = (3 sqrt(2) L d_x k + 6 m_y k^{3/2}) / (2 sqrt(2) d_y k)
        zeta_k   = (k - 1) / k
    """
    if d_x <= 0 or d_y <= 0:
        raise DomainError("set diameters must be positive")
    if n < 1:
        raise DomainError("schedule length must be >= 1")
    k = np.arange(1, n + 1, dtype=float)
    root2 = math.sqrt(2.0)
    eta = (3.0 * root2 * consts.l_gamma * d_y * k + 6.0 * consts.m_x * k**1.5) \
        / (2.0 * root2 * d_x * k)
    lam = (3.0 * root2 * consts.l_gamma * d_x * k + 6.0 * consts.m_y * k**1.5) \
        / (2.0 * root2 * d_y * k)
    return Schedule(eta=eta, lam=lam, zeta=(k - 1.0) / k)


@dataclass(frozen=True)
class EpochPlan:
    """Epoch count, initial radius scale and per-epoch sample counts."""

    epochs: int
    d0: float
    sizes: tuple[int, ...]
    total: int

    def __post_init__(self):
        if self.epochs < 1 or len(self.sizes) != self.epochs:
            raise DomainError("plan must contain one size per epoch")
        if any(s < 1 for s in self.sizes):
            raise DomainError("epoch sizes must be positive")


def epoch_plan(consts: BoundConstants, d_y: float, d0: float,
               epsilon: float) -> EpochPlan:
    """Theoretical epoch sizes achieving estimation error ``epsilon``.

    Uses S = ceil(log2(d0^2 / epsilon)) epochs (minimum one, covering the
    boundary epsilon = d0^2) and

        N_s = ceil(400 * max(L d_y / alpha,
              (4000 + 256 log(1/delta)) / alpha^2
              * (m_x^2 + d_y^2 m_y^2 / d0^2 * 2^s))).

    The reported total follows the matching closed form with the same
    alpha^2 denominator.
    """
    if d_y <= 0 or d0 <= 0:
        raise DomainError("d_y and d0 must be positive")
    if not 0 < epsilon <= d0**2:
        raise DomainError("epsilon must lie in (0, d0^2]")
    epochs = max(1, math.ceil(math.log2(d0**2 / epsilon)))
    log_conf = math.log(1.0 / consts.delta)
    tail = (4000.0 + 256.0 * log_conf) / consts.alpha**2
    sizes = []
    for s in range(1, epochs + 1):
        per_epoch = 400.0 * max(
            consts.l_gamma * d_y / consts.alpha,
            tail * (consts.m_x**2 + d_y**2 * consts.m_y**2 / d0**2 * 2.0**s),
        )
        sizes.append(int(math.ceil(per_epoch)))
    log_ratio = math.log(d0 / epsilon) if d0 > epsilon else 0.0
    total = 400 * math.ceil(
        2.0 * consts.l_gamma * d_y / consts.alpha * log_ratio
        + tail * (2.0 * consts.m_x**2 * log_ratio + d_y**2 * consts.m_y**2 / epsilon)
    )
    return EpochPlan(epochs=epochs, d0=float(d0), sizes=tuple(sizes), total=int(total))
