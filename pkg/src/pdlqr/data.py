"""Off-policy data collection with reproducible Gaussian sampling.

A dataset is a fixed-order list of (x, u, x+) triples drawn by exciting the
plant from independently sampled states and inputs. The order is meaningful:
the streaming estimator consumes sample k at iteration k.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DatasetFormatError, DomainError
from .lqr import LinearSystem
from .vectorize import as_symmetric

_FMT = "%.17g"  # round-trips IEEE doubles exactly


class GaussianStream:
    """Counter-based random stream (Philox) with a Box-Muller normal transform.

    The (seed, stream) pair fully determines the draw sequence, so parallel
    Monte Carlo trials can derive disjoint streams without sharing state.
    The Gaussian transform is pinned to Box-Muller so recorded test vectors
    stay reproducible across library versions and languages.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self._uniform = np.random.Generator(
            np.random.Philox(np.random.SeedSequence((self.seed, self.stream)))
        )

    def standard_normal(self, count: int) -> np.ndarray:
        pairs = (count + 1) // 2
        u1 = 1.0 - self._uniform.random(pairs)  # in (0, 1], keeps log finite
        u2 = self._uniform.random(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(2.0 * np.pi * u2)
        out[1::2] = radius * np.sin(2.0 * np.pi * u2)
        return out[:count]


def covariance_factor(cov) -> np.ndarray:
    """Lower-triangular (or eigenvalue) square root L with L L^T = cov.

    Cholesky is tried first; positive semidefinite but singular covariances
    fall back to the symmetric eigenvalue square root.
    """
    cov = as_symmetric(cov)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        if vals[0] < -1e-10 * max(1.0, float(vals[-1])):
            raise DomainError(
                f"covariance is indefinite: smallest eigenvalue {vals[0]:.3e}"
            )
        return vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None)))


def sample_gaussian(cov, rng: GaussianStream, size: int | None = None) -> np.ndarray:
    """Draw one vector (or ``size`` rows) from N(0, cov)."""
    factor = covariance_factor(cov)
    dim = factor.shape[0]
    count = 1 if size is None else int(size)
    z = rng.standard_normal(dim * count).reshape(count, dim)
    draws = z @ factor.T
    return draws[0] if size is None else draws


@dataclass
class Dataset:
    """Ordered triples (x, u, x_plus) plus the metadata needed to re-create them."""

    x: np.ndarray        # (N, n_x)
    u: np.ndarray        # (N, n_u)
    x_plus: np.ndarray   # (N, n_x)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.u = np.atleast_2d(np.asarray(self.u, dtype=float))
        self.x_plus = np.atleast_2d(np.asarray(self.x_plus, dtype=float))
        n = len(self.x)
        if n == 0:
            raise DatasetFormatError("a dataset must contain at least one triple")
        if len(self.u) != n or len(self.x_plus) != n:
            raise DatasetFormatError("x, u, x_plus must have the same number of rows")
        if self.x_plus.shape[1] != self.x.shape[1]:
            raise DatasetFormatError("x and x_plus must have the same width")
        for block in (self.x, self.u, self.x_plus):
            if not np.all(np.isfinite(block)):
                raise DatasetFormatError("dataset contains non-finite entries")

    def __len__(self) -> int:
        return len(self.x)

    @property
    def n_x(self) -> int:
        return self.x.shape[1]

    @property
    def n_u(self) -> int:
        return self.u.shape[1]

    def triple(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.x[k], self.u[k], self.x_plus[k]


def system_fingerprint(sys: LinearSystem) -> str:
    """SHA-256 over a canonical decimal rendering of (A, B, sigma_w)."""
    parts = [f"{sys.n_x},{sys.n_u}"]
    for m in (sys.A, sys.B, sys.sigma_w):
        parts.append(",".join(_FMT % v for v in np.asarray(m).ravel()))
    return hashlib.sha256(";".join(parts).encode()).hexdigest()


def collect_dataset(sys: LinearSystem, n: int, sigma_x, sigma_u,
                    seed: int, stream: int = 0) -> Dataset:
    """Draw N independent triples: x ~ N(0, sigma_x), u ~ N(0, sigma_u),
    x+ = A x + B u + w with w ~ N(0, sigma_w).

    Each triple consumes its draws in the fixed order (x, u, w), so a given
    (seed, stream) pair reproduces the dataset exactly.
    """
    if n < 1:
        raise ValueError("dataset size must be >= 1")
    sigma_x = as_symmetric(sigma_x)
    sigma_u = as_symmetric(sigma_u)
    rng = GaussianStream(seed, stream)
    lx = covariance_factor(sigma_x)
    lu = covariance_factor(sigma_u)
    lw = covariance_factor(sys.sigma_w)
    xs = np.empty((n, sys.n_x))
    us = np.empty((n, sys.n_u))
    xps = np.empty((n, sys.n_x))
    for k in range(n):
        x = lx @ rng.standard_normal(sys.n_x)
        u = lu @ rng.standard_normal(sys.n_u)
        w = lw @ rng.standard_normal(sys.n_x)
        xs[k] = x
        us[k] = u
        xps[k] = sys.A @ x + sys.B @ u + w
    meta = {
        "seed": int(seed),
        "stream": int(stream),
        "N": int(n),
        "n_x": sys.n_x,
        "n_u": sys.n_u,
        "sigma_x": sigma_x.tolist(),
        "sigma_u": sigma_u.tolist(),
        "system_sha": system_fingerprint(sys),
    }
    return Dataset(xs, us, xps, meta)


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def save_dataset(dataset: Dataset, path) -> None:
    """Write the triples as CSV (17 significant digits) plus a JSON sidecar."""
    path = Path(path)
    header = (
        [f"x{i+1}" for i in range(dataset.n_x)]
        + [f"u{i+1}" for i in range(dataset.n_u)]
        + [f"xp{i+1}" for i in range(dataset.n_x)]
    )
    rows = np.hstack([dataset.x, dataset.u, dataset.x_plus])
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_FMT % v for v in row))
    path.write_text("\n".join(lines) + "\n")
    _sidecar_path(path).write_text(json.dumps(dataset.meta, indent=2, sort_keys=True) + "\n")


def load_dataset(path) -> Dataset:
    """Inverse of :func:`save_dataset`; bit-exact for the decimal serialization."""
    path = Path(path)
    text = path.read_text()
    lines = [ln for ln in text.splitlines()]
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    header = lines[0].split(",")
    n_x = sum(1 for c in header if c.startswith("x") and not c.startswith("xp"))
    n_u = sum(1 for c in header if c.startswith("u"))
    n_xp = sum(1 for c in header if c.startswith("xp"))
    if n_x == 0 or n_u == 0 or n_xp != n_x:
        raise DatasetFormatError(f"{path}: unrecognized header {header!r}")
    width = n_x + n_u + n_xp
    data = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != width:
            raise DatasetFormatError(
                f"{path}: line {lineno} has {len(fields)} columns, expected {width}"
            )
        try:
            data.append([float(f) for f in fields])
        except ValueError as exc:
            raise DatasetFormatError(f"{path}: line {lineno}: {exc}")
    if not data:
        raise DatasetFormatError(f"{path}: no data rows")
    rows = np.asarray(data)
    meta: dict = {}
    sidecar = _sidecar_path(path)
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        if "N" in meta and int(meta["N"]) != len(rows):
            raise DatasetFormatError(
                f"{path}: {len(rows)} rows but metadata says N={meta['N']}"
            )
        if "n_x" in meta and (int(meta["n_x"]), int(meta["n_u"])) != (n_x, n_u):
            raise DatasetFormatError(f"{path}: header dimensions disagree with metadata")
    return Dataset(rows[:, :n_x], rows[:, n_x:n_x + n_u], rows[:, n_x + n_u:], meta)
