"""
Shared numeric kernel: precision contexts, grid sup-norm scans, finite
differences, composite Simpson quadrature and seeded random streams.

All real scalars are mpmath ``mpf`` values. A computation runs inside a single
precision context; objects built under different precisions must not be
combined (see ``ensure_same_precision``).
"""

import logging
from contextlib import contextmanager
from enum import Enum
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from mpmath import mp, mpf
from pydantic import BaseModel, ConfigDict, Field, model_validator

from radial_deep_nets.config import config
from radial_deep_nets.exceptions import ArgumentError, EvaluationError, PrecisionError

logger = logging.getLogger(__name__)

Real = mpf
RealLike = Union[mpf, float, int, str]
ScalarFunction = Callable[[mpf], mpf]


@contextmanager
def precision(bits: Optional[int] = None) -> Iterator[int]:
    """
    Run the enclosed block at a fixed mantissa width.

    Args:
        bits: Mantissa width in bits (defaults to ``config.precision_bits``)

    Yields:
        The active precision in bits
    """
    bits = bits or config.precision_bits
    if bits < 2:
        raise ArgumentError(f"precision must be at least 2 bits, got {bits}")
    with mp.workprec(bits):
        yield bits


def current_precision() -> int:
    """Return the mantissa width of the active context."""
    return mp.prec


def ensure_same_precision(*bits: int) -> int:
    """
    Check that every object was built at the same precision.

    Raises:
        PrecisionError: If the widths differ
    """
    distinct = sorted(set(bits))
    if len(distinct) != 1:
        raise PrecisionError(f"cannot mix precision contexts {distinct}")
    return distinct[0]


def to_real(value: RealLike) -> mpf:
    """Convert to an ``mpf`` at the active precision."""
    return mp.mpf(value)


def is_finite(value: mpf) -> bool:
    return bool(mp.isfinite(value))


class GridKind(str, Enum):
    """Point layouts for sup-norm scans."""
    UNIFORM = "uniform"
    JITTERED = "uniform-plus-random-jitter"


class GridSpec(BaseModel):
    """A one-dimensional evaluation grid on [lo, hi]."""
    model_config = ConfigDict(frozen=True)

    lo: float
    hi: float
    count: int = Field(default_factory=lambda: config.sup_grid_count)
    kind: GridKind = GridKind.UNIFORM
    jitter_count: int = Field(default_factory=lambda: config.sup_jitter_count)
    seed: int = 0

    @model_validator(mode="after")
    def _check_bounds(self) -> "GridSpec":
        if not self.lo < self.hi:
            raise ValueError(f"grid requires lo < hi, got [{self.lo}, {self.hi}]")
        if self.count < 2:
            raise ValueError(f"grid count must be at least 2, got {self.count}")
        if self.jitter_count < 0:
            raise ValueError("jitter_count must be non-negative")
        return self

    def points(self) -> List[mpf]:
        """Materialize the grid at the active precision."""
        lo, hi = mp.mpf(self.lo), mp.mpf(self.hi)
        step = (hi - lo) / (self.count - 1)
        pts = [lo + i * step for i in range(self.count - 1)] + [hi]
        if self.kind == GridKind.JITTERED and self.jitter_count:
            rng = make_rng(self.seed, 0x6A17)
            pts.extend(random_reals(rng, self.lo, self.hi, self.jitter_count))
        return pts


def grid_sup_norm_at(
    f: ScalarFunction, g: ScalarFunction, grid: GridSpec
) -> Tuple[mpf, Optional[mpf]]:
    """
    Scan |f - g| over a grid.

    Returns:
        The maximum deviation and the grid point where it occurs

    Raises:
        EvaluationError: If either function is non-finite at a grid point
    """
    best = mp.mpf(0)
    where = None
    for t in grid.points():
        fv, gv = f(t), g(t)
        if not (is_finite(fv) and is_finite(gv)):
            raise EvaluationError(f"non-finite value at t={mp.nstr(t, 15)}", point=t)
        dev = abs(fv - gv)
        if where is None or dev > best:
            best, where = dev, t
    return best, where


def grid_sup_norm(f: ScalarFunction, g: ScalarFunction, grid: GridSpec) -> mpf:
    """Max over grid points of |f(t) - g(t)|; a lower bound on the true sup-norm."""
    return grid_sup_norm_at(f, g, grid)[0]


def finite_diff(f: ScalarFunction, k: int, t: RealLike, h: RealLike) -> mpf:
    """
    Central-difference estimate of the k-th derivative.

    Uses the centred stencil sum_i (-1)^i C(k, i) f(t + (k/2 - i) h) / h^k,
    whose truncation error is O(h^2) for smooth f.

    Args:
        f: Function to differentiate
        k: Derivative order (>= 1)
        t: Evaluation point
        h: Step size (> 0)

    Returns:
        Estimate of f^(k)(t)

    Raises:
        ArgumentError: If h <= 0 or k < 1
    """
    h = mp.mpf(h)
    t = mp.mpf(t)
    if h <= 0:
        raise ArgumentError(f"step h must be positive, got {mp.nstr(h, 5)}")
    if k < 1:
        raise ArgumentError(f"order k must be at least 1, got {k}")
    total = mp.mpf(0)
    half = mp.mpf(k) / 2
    for i in range(k + 1):
        total += (-1) ** i * mp.binomial(k, i) * f(t + (half - i) * h)
    return total / h**k


def quadrature(
    f: ScalarFunction, a: RealLike, b: RealLike, n_panels: Optional[int] = None
) -> mpf:
    """
    Composite Simpson rule on [a, b].

    Each panel is split in two, so the rule uses 2*n_panels subintervals. The
    error is O(h^4) for integrands with four continuous derivatives and exact
    for cubics.

    Raises:
        ArgumentError: If n_panels < 1
        EvaluationError: If the integrand is non-finite at a node
    """
    n_panels = n_panels or config.quadrature_panels
    if n_panels < 1:
        raise ArgumentError(f"n_panels must be at least 1, got {n_panels}")
    a, b = mp.mpf(a), mp.mpf(b)
    if a == b:
        return mp.mpf(0)
    m = 2 * n_panels
    h = (b - a) / m
    total = mp.mpf(0)
    for i in range(m + 1):
        u = a + i * h
        value = f(u)
        if not is_finite(value):
            raise EvaluationError(f"non-finite integrand at u={mp.nstr(u, 15)}", point=u)
        weight = 1 if i in (0, m) else (4 if i % 2 else 2)
        total += weight * value
    return total * h / 3


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """
    Derive an independent random stream from a seed and a stream key.

    Identical (seed, stream) pairs always produce identical streams, so
    trials and restarts can run in any order.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(stream)))


def random_reals(rng: np.random.Generator, lo: float, hi: float, size: int) -> List[mpf]:
    """Draw uniform points and lift them exactly to ``mpf``."""
    return [mp.mpf(float(v)) for v in rng.uniform(lo, hi, size)]


def uniform_ball(rng: np.random.Generator, d: int, size: int) -> np.ndarray:
    """Sample ``size`` points uniformly from the closed unit ball in R^d."""
    directions = rng.standard_normal((size, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.uniform(0.0, 1.0, size) ** (1.0 / d)
    return directions * radii[:, None]


def unit_directions(rng: np.random.Generator, d: int, size: int) -> np.ndarray:
    """Sample ``size`` points uniformly from the unit sphere in R^d."""
    directions = rng.standard_normal((size, d))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """
    Least-squares slope of log(y) against log(x).

    Raises:
        ArgumentError: With fewer than two points or non-positive data
    """
    x = np.asarray([float(v) for v in xs], dtype=float)
    y = np.asarray([float(v) for v in ys], dtype=float)
    if x.size < 2 or x.size != y.size:
        raise ArgumentError("slope fit needs at least two paired points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ArgumentError("slope fit needs positive data")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
