"""
Hard radial instances and theoretical lower-bound curves.

A packing family places N* disjoint scaled copies of a compactly supported
bump on [0, 1] and flips their signs: g*(t) = Σ_j ε_j (N*)^(−r) g̃(N*(t − ξ_j)).
Any two distinct sign vectors give radial functions f(x) = g*(|x|²) that are
c0(N*)^(−r) apart in sup norm.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from mpmath import mp, mpf
from pydantic import BaseModel, Field, model_validator

from radial_deep_nets.config import config
from radial_deep_nets.exceptions import ArgumentError, ConfigurationError, ConstructionError
from radial_deep_nets.numeric_core import RealLike, make_rng, random_reals
from radial_deep_nets.tree_net import BoundedClassSpec, TreeArch, param_count

logger = logging.getLogger(__name__)

Signs = Tuple[int, ...]
AUDIT_SCAN_COUNT = 10_001


class BumpProfile(str, Enum):
    """Shapes available for the packing bump."""
    AUTO = "auto"
    SPLINE = "spline"  # (1 - 4t²)_+^q with q = s + 2
    TENT = "tent"      # (1 - 2|t|)_+, s = 0 only


@dataclass(frozen=True)
class Bump:
    """amplitude·profile(t), vanishing outside (−1/2, 1/2)."""
    r: mpf
    c0: mpf
    s: int
    v: mpf
    profile: BumpProfile
    q: int
    amplitude: mpf
    hoelder: mpf
    coeffs: Tuple[mpf, ...] = field(default=(), repr=False)

    @property
    def peak(self) -> mpf:
        return self.amplitude

    @property
    def hoelder_cap(self) -> mpf:
        return self.c0 * mp.mpf(2) ** (self.v - 1)

    def __call__(self, t: RealLike) -> mpf:
        return self.derivative(0, t)

    def derivative(self, k: int, t: RealLike) -> mpf:
        """g̃^(k)(t); zero outside the open support."""
        t = mp.mpf(t)
        if abs(t) >= mp.mpf(1) / 2:
            return mp.mpf(0)
        if self.profile == BumpProfile.TENT:
            if k == 0:
                return self.amplitude * (1 - 2 * abs(t))
            if k == 1:
                return -2 * self.amplitude * mp.sign(t)
            return mp.mpf(0)
        return self.amplitude * _poly_derivative(self.coeffs, k, t)

    def descriptor(self) -> Dict[str, str]:
        return {
            "profile": self.profile.value,
            "q": str(self.q),
            "amplitude": mp.nstr(self.amplitude, 20),
            "hoelder": mp.nstr(self.hoelder, 20),
        }


def _poly_derivative(coeffs: Sequence[mpf], k: int, t: mpf) -> mpf:
    total = mp.mpf(0)
    for power in range(len(coeffs) - 1, k - 1, -1):
        total = total * t + coeffs[power] * mp.ff(power, k)
    return total


def _spline_coeffs(q: int) -> Tuple[mpf, ...]:
    # (1 - 4t²)^q = Σ_m C(q, m)(-4)^m t^(2m)
    coeffs = [mp.mpf(0)] * (2 * q + 1)
    for m in range(q + 1):
        coeffs[2 * m] = mp.binomial(q, m) * mp.mpf(-4) ** m
    return tuple(coeffs)


def _smoothness(r: mpf) -> Tuple[int, mpf]:
    s = int(mp.ceil(r)) - 1
    return s, r - s


def make_bump(
    r: RealLike, c0: RealLike, profile: BumpProfile = BumpProfile.AUTO, strict: bool = False
) -> Bump:
    """
    Build a bump with support (−1/2, 1/2), peak c0/2 and Hölder constant of
    g̃^(s) at most c0·2^(v−1).

    The spline is scaled down when its Hölder constant would exceed the cap;
    the achieved peak is then below c0/2. The auto profile uses the tent for
    s = 0, which meets both constraints exactly.

    Raises:
        ArgumentError: If r <= 0, c0 <= 0, or a tent is requested with s > 0
        ConstructionError: If ``strict`` and the peak falls short of c0/2
    """
    r, c0 = mp.mpf(r), mp.mpf(c0)
    if r <= 0 or c0 <= 0:
        raise ArgumentError("make_bump needs r > 0 and c0 > 0")
    s, v = _smoothness(r)
    profile = BumpProfile(profile)
    if profile == BumpProfile.AUTO:
        profile = BumpProfile.TENT if s == 0 else BumpProfile.SPLINE
    cap = c0 * mp.mpf(2) ** (v - 1)

    if profile == BumpProfile.TENT:
        if s != 0:
            raise ArgumentError("the tent profile only has smoothness s = 0")
        # sup_δ min(c0·δ, c0/2)/δ^v is attained at δ = 1/2
        return Bump(r, c0, s, v, profile, 1, c0 / 2, cap)

    q = s + 2
    coeffs = _spline_coeffs(q)
    step = mp.mpf(1) / (AUDIT_SCAN_COUNT - 1)
    lipschitz = max(
        abs(_poly_derivative(coeffs, s + 1, -mp.mpf(1) / 2 + i * step))
        for i in range(AUDIT_SCAN_COUNT)
    )
    amplitude = c0 / 2
    if amplitude * lipschitz > cap:
        amplitude = cap / lipschitz
        logger.info("Bump rescaled: peak %s instead of %s", mp.nstr(amplitude, 8), mp.nstr(c0 / 2, 8))
        if strict:
            raise ConstructionError(
                "spline bump cannot reach peak c0/2 within the Hölder cap",
                achieved={"peak": mp.nstr(amplitude, 12), "hoelder": mp.nstr(cap, 12)},
            )
    return Bump(r, c0, s, v, profile, q, amplitude, amplitude * lipschitz, coeffs)


def bump_hoelder_audit(bump: Bump, pairs: int = 10_000, seed: int = 0) -> mpf:
    """
    Finite-sample Hölder constant of g̃^(s); half the pairs sit near the edges.
    """
    rng = make_rng(seed, 0xB0B)
    half = pairs // 2
    left = random_reals(rng, -0.6, 0.6, half)
    right = random_reals(rng, -0.6, 0.6, half)
    edges = rng.choice([-0.5, 0.5], size=pairs - half)
    near_a = [mp.mpf(float(e + o)) for e, o in zip(edges, rng.uniform(-0.05, 0.05, pairs - half))]
    near_b = [mp.mpf(float(e + o)) for e, o in zip(edges, rng.uniform(-0.05, 0.05, pairs - half))]
    best = mp.mpf(0)
    for t, u in zip(left + near_a, right + near_b):
        if t == u:
            continue
        diff = abs(bump.derivative(bump.s, t) - bump.derivative(bump.s, u))
        best = max(best, diff / abs(t - u) ** bump.v)
    return best


class PackingFamily(BaseModel):
    """N* sub-intervals of [0, 1] with centers ξ_j = (j − 1/2)/N*, j = 1..N*."""
    N_star: int = Field(ge=1)
    r: float = Field(gt=0)
    c0: float = Field(gt=0)
    d: int = Field(default=2, ge=2)

    def centers(self) -> List[mpf]:
        return [(mp.mpf(j) + mp.mpf(1) / 2) / self.N_star for j in range(self.N_star)]

    def scale(self) -> mpf:
        return mp.mpf(self.N_star) ** -mp.mpf(self.r)

    def descriptor(self, bump: Bump) -> Dict[str, Any]:
        return {"N_star": self.N_star, "r": self.r, "c0": self.c0, "d": self.d, "bump": bump.descriptor()}


def _check_signs(fam: PackingFamily, signs: Sequence[int]) -> None:
    if len(signs) != fam.N_star:
        raise ArgumentError(f"expected {fam.N_star} signs, got {len(signs)}")
    if any(e not in (-1, 1) for e in signs):
        raise ArgumentError("signs must be ±1")


def member_profile(fam: PackingFamily, bump: Bump, signs: Sequence[int], t: RealLike) -> mpf:
    """g*(t) = Σ_j ε_j (N*)^(−r) g̃(N*(t − ξ_j)) using the disjoint supports."""
    _check_signs(fam, signs)
    t = mp.mpf(t)
    N = fam.N_star
    j0 = int(mp.floor(t * N))
    total = mp.mpf(0)
    centers = fam.centers()
    for j in (j0 - 1, j0, j0 + 1):
        if 0 <= j < N:
            total += signs[j] * bump(N * (t - centers[j]))
    return total * fam.scale()


def member_derivative(fam: PackingFamily, bump: Bump, signs: Sequence[int], k: int, t: RealLike) -> mpf:
    """k-th derivative of g* at t."""
    t = mp.mpf(t)
    N = fam.N_star
    centers = fam.centers()
    j0 = int(mp.floor(t * N))
    total = mp.mpf(0)
    for j in (j0 - 1, j0, j0 + 1):
        if 0 <= j < N:
            total += signs[j] * bump.derivative(k, N * (t - centers[j]))
    return total * fam.scale() * mp.mpf(N) ** k


def packing_member(fam: PackingFamily, bump: Bump, signs: Sequence[int], x: Sequence[RealLike]) -> mpf:
    """
    f(x) = g*(|x|²) for a point of the unit ball.

    Raises:
        ArgumentError: If len(signs) != N* or |x| > 1
    """
    t = sum((mp.mpf(v) ** 2 for v in x), mp.mpf(0))
    if t > 1 + mp.mpf(10) ** -12:
        raise ArgumentError("packing members are defined on the unit ball")
    return member_profile(fam, bump, signs, t)


def pairwise_packing_distance(
    fam: PackingFamily, bump: Bump, signs_a: Sequence[int], signs_b: Sequence[int],
    count: int = 10_000,
) -> mpf:
    """
    Sup-norm distance on a radial grid of |x|² values plus the interval centers.

    Raises:
        ArgumentError: If the sign vectors are identical
    """
    _check_signs(fam, signs_a)
    _check_signs(fam, signs_b)
    if tuple(signs_a) == tuple(signs_b):
        raise ArgumentError("sign vectors must differ")
    grid = [mp.mpf(i) / (count - 1) for i in range(count)] + fam.centers()
    return max(
        abs(member_profile(fam, bump, signs_a, t) - member_profile(fam, bump, signs_b, t))
        for t in grid
    )


def predicted_distance(fam: PackingFamily, bump: Bump) -> mpf:
    """2·peak·(N*)^(−r); equals c0(N*)^(−r) when the peak is c0/2."""
    return 2 * bump.peak * fam.scale()


def family_member_hoelder(
    fam: PackingFamily, bump: Bump, signs: Sequence[int], pairs: int = 10_000, seed: int = 0
) -> mpf:
    """Sampled Hölder constant of the s-th derivative of g* on [0, 1]."""
    _check_signs(fam, signs)
    rng = make_rng(seed, 0xFA31)
    left = random_reals(rng, 0.0, 1.0, pairs)
    right = random_reals(rng, 0.0, 1.0, pairs)
    v = mp.mpf(bump.v)
    best = mp.mpf(0)
    for t, u in zip(left, right):
        if t == u:
            continue
        diff = abs(member_derivative(fam, bump, signs, bump.s, t)
                   - member_derivative(fam, bump, signs, bump.s, u))
        best = max(best, diff / abs(t - u) ** v)
    return best


def enumerate_signs(N_star: int, cap: Optional[int] = None) -> Iterable[Signs]:
    """
    All 2^N* sign vectors in lexicographic order.

    Raises:
        ConfigurationError: If N* exceeds the enumeration cap
    """
    cap = config.n_star_cap if cap is None else cap
    if N_star > cap:
        raise ConfigurationError(f"N*={N_star} exceeds the enumeration cap {cap}; sample instead")
    return itertools.product((-1, 1), repeat=N_star)


def sample_signs(N_star: int, count: int, rng: np.random.Generator) -> List[Signs]:
    """``count`` independent uniform sign vectors."""
    draws = rng.integers(0, 2, size=(count, N_star))
    return [tuple(int(2 * b - 1) for b in row) for row in draws]


def covering_constants(c0: RealLike, r: RealLike, beta: RealLike, C1p: RealLike, C2p: RealLike) -> Tuple[mpf, mpf]:
    """C′_3 = (c0/8)(β+2r+4)^(−r) and C′_4 = 2C′_1 + 4C′_2 c0^(−1)(β+2r+4)^r."""
    c0, r, beta = mp.mpf(c0), mp.mpf(r), mp.mpf(beta)
    base = beta + 2 * r + 4
    return c0 / 8 * base**-r, 2 * mp.mpf(C1p) + 4 * mp.mpf(C2p) / c0 * base**r


def covering_lower_bound(N: RealLike, c0, r, beta, C1p, C2p) -> mpf:
    """C′_3[N log2(N + C′_4)]^(−r) for a class with N-parameter covering numbers."""
    C3, C4 = covering_constants(c0, r, beta, C1p, C2p)
    N = mp.mpf(N)
    return C3 * (N * mp.log(N + C4, 2)) ** -mp.mpf(r)


def packing_size(N: int, c0, r, beta, C1p, C2p) -> int:
    """N* = ⌊(β+2r+4)·N·log2(2C′_1 + 4C′_2(β+2r+4)^r/c0 + N)⌋."""
    c0, r, beta = mp.mpf(c0), mp.mpf(r), mp.mpf(beta)
    base = beta + 2 * r + 4
    inner = 2 * mp.mpf(C1p) + 4 * mp.mpf(C2p) * base**r / c0 + N
    return max(1, int(mp.floor(base * N * mp.log(inner, 2))))


def tree_class_lower_bound(arch: TreeArch, spec: BoundedClassSpec, c0: RealLike, c1: RealLike, r: RealLike) -> mpf:
    """
    Lower bound on approximating the radial class by the bounded tree class,
    from its covering numbers with N = 2A_L, β = α(L+1), C′_1 = 1 and
    C′_2 = 2^(L+5/2) c1^(L+3/2) R^(L+1).
    """
    L = arch.L
    C2p = mp.mpf(2) ** (L + mp.mpf(5) / 2) * mp.mpf(c1) ** (L + mp.mpf(3) / 2) * spec.R ** (L + 1)
    return covering_lower_bound(2 * param_count(arch), c0, r, spec.alpha * (L + 1), 1, C2p)


def shallow_param_count(d: int, n: int) -> int:
    """(d + 2)·n free parameters of an n-neuron shallow net on R^d."""
    return (d + 2) * n


class LowerBoundParams(BaseModel):
    """Inputs for ``lower_bound_curves``; the constants are user-chosen."""
    r: float = Field(gt=0)
    c0: float = Field(gt=0)
    d: int = Field(ge=2)
    beta: float = Field(default=0.0, ge=0)
    C1p: float = Field(default=1.0, gt=0)
    C2p: float = Field(default=1.0, gt=0)
    L: int = Field(default=3, ge=1)
    n_values: List[int] = Field(default_factory=lambda: [2**k for k in range(1, 11)])
    tilde_n_values: List[int] = Field(default_factory=lambda: [2**k for k in range(1, 11)])

    @model_validator(mode="after")
    def _check_ranges(self) -> "LowerBoundParams":
        if any(v < 1 for v in self.n_values) or any(v < 2 for v in self.tilde_n_values):
            raise ValueError("n values must be >= 1 and ñ values >= 2")
        return self


@dataclass(frozen=True)
class LowerBoundTable:
    """Constants and the curve table (columns: curve, x, value, N_star)."""
    C3: mpf
    C4: mpf
    table: pd.DataFrame


def lower_bound_curves(params: LowerBoundParams) -> LowerBoundTable:
    """
    Shallow curve n^(−r/(d−1)), deep curve (L²ñ log2 ñ)^(−r) and the covering
    bound C′_3[N log2(N + C′_4)]^(−r) with its packing size N*.
    """
    r = mp.mpf(params.r)
    C3, C4 = covering_constants(params.c0, r, params.beta, params.C1p, params.C2p)
    rows = []
    for n in params.n_values:
        rows.append({"curve": "shallow", "x": n, "value": float(mp.mpf(n) ** (-r / (params.d - 1))),
                     "N_star": None})
    for tn in params.tilde_n_values:
        value = (params.L**2 * tn * mp.log(tn, 2)) ** -r
        rows.append({"curve": "deep", "x": tn, "value": float(value), "N_star": None})
    for n in params.n_values:
        value = covering_lower_bound(n, params.c0, r, params.beta, params.C1p, params.C2p)
        rows.append({
            "curve": "covering",
            "x": n,
            "value": float(value),
            "N_star": packing_size(n, params.c0, r, params.beta, params.C1p, params.C2p),
        })
    return LowerBoundTable(C3=C3, C4=C4, table=pd.DataFrame(rows))
