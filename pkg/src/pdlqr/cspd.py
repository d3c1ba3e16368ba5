"""Conditional stochastic primal-dual solver for errors-in-variables regression.

The solver treats the regression as the saddle problem

    min_{xi in X} max_{|y| <= 1}  (1/N) sum_k y (<gamma_hat_k, xi> - c_k)

and runs one pass over the samples, alternating a prox step in the scalar
dual with a projected gradient step in the primal. The noisy regressor
enters every update linearly, paired against quantities built from earlier
samples; that pairing is what distinguishes the iteration from least
squares, where the regressor noise enters squared through the Gram matrix.
See the README for measured behavior at practical sample sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError

_FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class Ball:
    """Euclidean ball used as the primal feasible set."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def project(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float).ravel()
        offset = v - self.center
        distance = float(np.linalg.norm(offset))
        if distance <= self.radius:
            return v
        return self.center + offset * (self.radius / distance)

    def contains(self, v, tol: float = _FEASIBILITY_TOL) -> bool:
        v = np.asarray(v, dtype=float).ravel()
        return float(np.linalg.norm(v - self.center)) <= self.radius + tol * max(1.0, self.radius)


def _project_two_balls(v: np.ndarray, a: Ball, b: Ball) -> np.ndarray:
    # Exact projection onto the intersection of two balls: if neither single
    # projection is feasible, both constraints are active and the solution is
    # the closest point of the sphere-sphere intersection.
    pa = a.project(v)
    if b.contains(pa, tol=0.0):
        return pa
    pb = b.project(v)
    if a.contains(pb, tol=0.0):
        return pb
    axis = b.center - a.center
    gap = float(np.linalg.norm(axis))
    if gap == 0.0:
        # concentric: the smaller ball is the intersection
        return pa if a.radius <= b.radius else pb
    axis = axis / gap
    along = (gap**2 + a.radius**2 - b.radius**2) / (2.0 * gap)
    chord_sq = a.radius**2 - along**2
    if chord_sq <= 0.0:
        # degenerate lens: single point (or empty, approximated by the point)
        return a.center + np.clip(along, -a.radius, a.radius) * axis
    ring_center = a.center + along * axis
    offset = v - ring_center
    perp = offset - (offset @ axis) * axis
    norm_perp = float(np.linalg.norm(perp))
    if norm_perp == 0.0:
        # pick a deterministic direction orthogonal to the axis
        basis = np.zeros_like(axis)
        basis[int(np.argmin(np.abs(axis)))] = 1.0
        perp = basis - (basis @ axis) * axis
        norm_perp = float(np.linalg.norm(perp))
    return ring_center + np.sqrt(chord_sq) * perp / norm_perp


def project_intersection(v, sets, tol: float = 1e-12, max_sweeps: int = 1000) -> np.ndarray:
    """Euclidean projection onto an intersection of convex sets.

    A pair of balls is handled in closed form (the alternating-projection
    route stalls below tolerance on exactly this case); anything else falls
    back to Dykstra's corrected alternating projections.
    """
    x = np.asarray(v, dtype=float).copy()
    if len(sets) == 1:
        return sets[0].project(x)
    if len(sets) == 2 and all(isinstance(s, Ball) for s in sets):
        return _project_two_balls(x, sets[0], sets[1])
    corrections = [np.zeros_like(x) for _ in sets]
    for _ in range(max_sweeps):
        x_prev = x.copy()
        for i, s in enumerate(sets):
            y = s.project(x + corrections[i])
            corrections[i] = x + corrections[i] - y
            x = y
        if np.linalg.norm(x - x_prev) <= tol * max(1.0, np.linalg.norm(x)):
            return x
    raise ConvergenceError("alternating projection did not converge")


@dataclass(frozen=True)
class Schedule:
    """Per-step prox weights eta_k (primal), lambda_k (dual), momenta zeta_k.

    Larger weights mean smaller moves: the effective steps are 1/eta_k and
    1/lambda_k.
    """

    eta: np.ndarray
    lam: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        for name in ("eta", "lam", "zeta"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        n = len(self.eta)
        if len(self.lam) != n or len(self.zeta) != n:
            raise DimensionError("schedule components must have equal length")
        if not (np.all(self.eta > 0) and np.all(self.lam > 0)):
            raise ValueError("step sizes must be strictly positive")
        if not np.all((self.zeta >= 0) & (self.zeta <= 1)):
            raise ValueError("momenta must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.eta)


def sqrt_schedule(n: int, coeff: float = 0.001) -> Schedule:
    """The default schedule eta_k = lambda_k = coeff * sqrt(k), zeta_k = (k-1)/k."""
    if n < 1:
        raise ValueError("schedule length must be >= 1")
    if coeff <= 0:
        raise ValueError("coeff must be positive")
    k = np.arange(1, n + 1, dtype=float)
    steps = coeff * np.sqrt(k)
    return Schedule(eta=steps, lam=steps.copy(), zeta=(k - 1.0) / k)


@dataclass
class SaddleResult:
    xi: np.ndarray
    dual: float
    primal_iterates: np.ndarray | None = None
    dual_iterates: np.ndarray | None = None


def cspd_solve(regressors, targets, feasible, xi0, y0: float,
               schedule: Schedule, record_iterates: bool = False) -> SaddleResult:
    """Run the one-pass primal-dual iteration over the samples in order.

    Per iteration k (1-based), with extrapolation point
    g = xi_{k-1} + zeta_k (xi_{k-1} - xi_{k-2}):

        y_k  = clip(y_{k-1} + (<gamma_k, g> - c_k) / lambda_k, -1, 1)
        xi_k = Proj_X(xi_{k-1} - (y_k / eta_k) * gamma_k)

    and the output is the triangular-weighted average
    (2 / (N (N + 1))) * sum_k k * (xi_k, y_k).

    ``feasible`` is a :class:`Ball` or anything with project/contains.
    """
    g_mat = np.atleast_2d(np.asarray(regressors, dtype=float))
    c_vec = np.asarray(targets, dtype=float).ravel()
    n = len(g_mat)
    if n < 1 or len(c_vec) != n:
        raise ValueError("need at least one (regressor, target) pair, aligned")
    if len(schedule) < n:
        raise ValueError(f"schedule of length {len(schedule)} shorter than N={n}")
    xi_prev = np.asarray(xi0, dtype=float).ravel().copy()
    if xi_prev.size != g_mat.shape[1]:
        raise DimensionError("initial point does not match the regressor width")
    if hasattr(feasible, "contains") and not feasible.contains(xi_prev):
        raise ValueError("initial point lies outside the feasible set")
    if not -1.0 <= y0 <= 1.0:
        raise ValueError("initial dual value must lie in [-1, 1]")

    xi_prev2 = xi_prev.copy()
    y_prev = float(y0)
    acc_xi = np.zeros_like(xi_prev)
    acc_y = 0.0
    trace_xi = np.empty((n, xi_prev.size)) if record_iterates else None
    trace_y = np.empty(n) if record_iterates else None
    for k in range(1, n + 1):
        zeta = schedule.zeta[k - 1]
        extrapolated = xi_prev + zeta * (xi_prev - xi_prev2)
        gamma = g_mat[k - 1]
        residual = float(gamma @ extrapolated) - c_vec[k - 1]
        y = min(1.0, max(-1.0, y_prev + residual / schedule.lam[k - 1]))
        xi = feasible.project(xi_prev - (y / schedule.eta[k - 1]) * gamma)
        acc_xi += k * xi
        acc_y += k * y
        if record_iterates:
            trace_xi[k - 1] = xi
            trace_y[k - 1] = y
        xi_prev2 = xi_prev
        xi_prev = xi
        y_prev = y
    weight = 2.0 / (n * (n + 1))
    return SaddleResult(
        xi=weight * acc_xi,
        dual=weight * acc_y,
        primal_iterates=trace_xi,
        dual_iterates=trace_y,
    )


def epoch_radius(d0: float, epoch: int, shrink: str = "squared") -> float:
    """Inner feasible-ball radius of a given 1-based epoch.

    The squared scale halves d0^2 each epoch; the linear switch uses the
    plain radius d_s instead.
    """
    if shrink not in ("squared", "linear"):
        raise ValueError("shrink must be 'squared' or 'linear'")
    if epoch < 1:
        raise ValueError("epoch is 1-based")
    radius_sq = d0**2 * 2.0 ** (-(epoch - 1))
    return radius_sq if shrink == "squared" else float(np.sqrt(radius_sq))


class _IntersectionSet:
    """Intersection of convex sets exposing the same project/contains surface."""

    def __init__(self, *sets):
        self.sets = sets

    def project(self, v) -> np.ndarray:
        return project_intersection(v, self.sets)

    def contains(self, v, tol: float = _FEASIBILITY_TOL) -> bool:
        return all(s.contains(v, tol) for s in self.sets)


def multi_epoch_solve(regressors, targets, feasible: Ball, xi0, epoch_sizes,
                      d0: float = 1.0, schedule_builder=sqrt_schedule,
                      shrink: str = "squared") -> np.ndarray:
    """Warm-started epochs of :func:`cspd_solve` over shrinking feasible balls.

    Epoch s (1-based) restricts the primal set to the intersection of
    ``feasible`` with a ball of radius d0^2 * 2^-(s-1) around the previous
    epoch's output, and consumes the next ``epoch_sizes[s-1]`` fresh samples.
    ``shrink="linear"`` switches the inner radius from the squared scale
    d_s^2 to d_s for sensitivity studies.
    """
    g_mat = np.atleast_2d(np.asarray(regressors, dtype=float))
    c_vec = np.asarray(targets, dtype=float).ravel()
    sizes = [int(s) for s in epoch_sizes]
    if len(sizes) < 1 or any(s < 1 for s in sizes):
        raise ValueError("epoch sizes must be positive")
    if sum(sizes) > len(g_mat):
        raise ValueError(
            f"epochs need {sum(sizes)} samples but only {len(g_mat)} are available"
        )
    if shrink not in ("squared", "linear"):
        raise ValueError("shrink must be 'squared' or 'linear'")
    if d0 <= 0:
        raise ValueError("d0 must be positive")
    current = np.asarray(xi0, dtype=float).ravel().copy()
    if not feasible.contains(current):
        raise ValueError("initial point lies outside the feasible set")
    offset = 0
    for s, size in enumerate(sizes, start=1):
        restricted = _IntersectionSet(feasible, Ball(current, epoch_radius(d0, s, shrink)))
        result = cspd_solve(
            g_mat[offset:offset + size],
            c_vec[offset:offset + size],
            restricted,
            xi0=current,
            y0=0.0,
            schedule=schedule_builder(size),
        )
        current = result.xi
        offset += size
    return current
