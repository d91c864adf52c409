"""Mean-field theory of signal propagation in wide random networks.

For a fully-connected network with weights W ~ N(0, σ_w²/N_in) and
biases b ~ N(0, σ_b²), the variance q^ℓ of a single input's
pre-activations and the normalized correlation c^ℓ between two inputs'
pre-activations evolve layer by layer under two scalar recursions:

    length map       q^ℓ = σ_w² E[φ(√q^{ℓ-1} z)²] + σ_b²
    correlation map  c^ℓ = (σ_w² E[φ(u_a) φ(u_b)] + σ_b²) / q*

with u_a = √q* z_a, u_b = √q* (c^{ℓ-1} z_a + √(1-(c^{ℓ-1})²) z_b), and
z, z_a, z_b independent standard normals.  The derivative of the
correlation map at its c = 1 fixed point,

    χ1 = σ_w² E[φ'(√q* z)²],

controls stability: χ1 < 1 is the ordered phase (inputs correlate),
χ1 > 1 the chaotic phase (inputs decorrelate), and χ1 = 1 defines the
critical line σ_w^crit(σ_b) where correlations propagate to arbitrary
depth.  This module computes the maps, their fixed points, χ1, the
critical line, and the depth scales ζ_q, ζ_c of exponential convergence
toward the fixed points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .quadrature import QuadratureRule, build_rule, order_for

__all__ = [
    "Activation",
    "HyperParams",
    "FixedPointResult",
    "DepthScales",
    "CriticalLine",
    "tanh_activation",
    "linear_activation",
    "get_activation",
    "default_rule",
    "default_pair_rule",
    "q_map_step",
    "q_map_derivative",
    "q_fixed_point",
    "c_map_step",
    "c_fixed_points",
    "chi1",
    "critical_sigma_w",
    "critical_line",
    "depth_scales",
]


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Activation:
    """Pointwise nonlinearity with its first two derivatives.

    ``phi``, ``dphi`` and ``d2phi`` must be vectorized over ndarrays.
    The derivative implementations are analytic; tests verify them
    against central finite differences.
    """

    name: str
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    d2phi: Callable[[np.ndarray], np.ndarray]


def _tanh_dphi(x):
    # 1 - tanh² rather than sech² avoids cosh overflow for |x| ≳ 350
    t = np.tanh(x)
    return 1.0 - t * t


def _tanh_d2phi(x):
    t = np.tanh(x)
    return -2.0 * t * (1.0 - t * t)


def tanh_activation() -> Activation:
    """The saturating odd nonlinearity used throughout: φ = tanh."""
    return Activation("tanh", np.tanh, _tanh_dphi, _tanh_d2phi)


def linear_activation() -> Activation:
    """Identity activation; every Gaussian expectation is closed-form."""
    return Activation(
        "linear",
        lambda x: np.asarray(x, dtype=np.float64),
        lambda x: np.ones_like(np.asarray(x, dtype=np.float64)),
        lambda x: np.zeros_like(np.asarray(x, dtype=np.float64)),
    )


_ACTIVATIONS = {"tanh": tanh_activation, "linear": linear_activation}


def get_activation(name: str) -> Activation:
    try:
        return _ACTIVATIONS[name]()
    except KeyError:
        raise ValueError(
            f"unknown activation {name!r}; available: {sorted(_ACTIVATIONS)}"
        ) from None


@dataclass(frozen=True)
class HyperParams:
    """Initialization scales (σ_w, σ_b) of a random network."""

    sigma_w: float
    sigma_b: float

    def __post_init__(self):
        if not (self.sigma_w > 0):
            raise ValueError(f"sigma_w must be positive, got {self.sigma_w}")
        if not (self.sigma_b >= 0):
            raise ValueError(f"sigma_b must be non-negative, got {self.sigma_b}")


@dataclass(frozen=True)
class FixedPointResult:
    """Outcome of a fixed-point search for the length or correlation map."""

    value: float
    iterations: int
    residual: float
    converged: bool
    stable: bool
    degenerate: bool = False


@dataclass(frozen=True)
class DepthScales:
    """e-folding depth scales of convergence toward the fixed points.

    ``zeta_q`` and ``zeta_c`` are measured in layers; either may be
    infinite when the corresponding linearized rate equals one.
    """

    zeta_q: float
    zeta_c: float
    chi1: float


@dataclass(frozen=True)
class CriticalLine:
    """Solved points of χ1 = 1 with a monotonicity diagnostic."""

    points: tuple  # of (sigma_b, sigma_w_critical)
    non_decreasing: bool


# ---------------------------------------------------------------------------
# quadrature defaults


def default_rule(hp: HyperParams) -> QuadratureRule:
    """Quadrature rule sized for the hyperparameters' variance scale.

    For bounded activations q* ≤ σ_w² + σ_b², so an order adequate for
    that bound is adequate for every q encountered along the map.
    """
    return build_rule(order_for(hp.sigma_w**2 + hp.sigma_b**2))


def default_pair_rule(hp: HyperParams) -> QuadratureRule:
    """Rule for two-dimensional (tensor-grid) expectations.

    The pair integrals cost order² evaluations, so the order is capped
    at 1200; beyond that the saturated tanh integrands are flat at the
    1e-9 level while the cost keeps growing quadratically.
    """
    return build_rule(order_for(hp.sigma_w**2 + hp.sigma_b**2, cap=1200))


# ---------------------------------------------------------------------------
# length map


def q_map_step(
    q_prev: float, hp: HyperParams, act: Activation,
    rule: QuadratureRule | None = None,
) -> float:
    """One application of the length map.

    Returns σ_w² E[φ(√q_prev z)²] + σ_b²; the result can never fall
    below σ_b².
    """
    if q_prev < 0:
        raise ValueError(f"q_prev must be non-negative, got {q_prev}")
    if rule is None:
        rule = default_rule(hp)
    s = math.sqrt(q_prev)
    vals = act.phi(s * rule.nodes)
    return float(hp.sigma_w**2 * (rule.weights @ (vals * vals)) + hp.sigma_b**2)


def q_map_derivative(
    q: float, hp: HyperParams, act: Activation,
    rule: QuadratureRule | None = None,
) -> float:
    """d(q_map)/dq at q, i.e. σ_w² E[φ'(√q z)² + φ(√q z) φ''(√q z)].

    This same quantity is the linearized rate of the length map whose
    logarithm gives 1/ζ_q, and it doubles as the Newton derivative in
    :func:`q_fixed_point`.
    """
    if rule is None:
        rule = default_rule(hp)
    s = math.sqrt(max(q, 0.0))
    x = s * rule.nodes
    d = act.dphi(x)
    integrand = d * d + act.phi(x) * act.d2phi(x)
    return float(hp.sigma_w**2 * (rule.weights @ integrand))


def q_fixed_point(
    hp: HyperParams,
    act: Activation,
    q0: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    rule: QuadratureRule | None = None,
) -> FixedPointResult:
    """Solve q = q_map(q) by damped iteration with a Newton finish.

    Plain Picard iteration is reliable away from criticality but its
    stopping rule |q_{n+1} - q_n| ≤ tol leaves a bias of order
    tol/(1 - χ_q) in the reported root, which blows up exactly where
    precision matters most (χ_q → 1 on the critical line at small σ_b).
    A few Newton steps on f(q) = q_map(q) - q with the analytic
    derivative remove that bias; the reported residual is |f| at the
    returned value.

    Parameters
    ----------
    q0 : float
        Starting variance; the fixed point is unique for the monotone
        saturating activations considered here, so q0 only affects the
        iteration count.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if rule is None:
        rule = default_rule(hp)

    q = float(q0)
    picard_converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        q_next = q_map_step(q, hp, act, rule)
        delta = abs(q_next - q)
        q = q_next
        if delta <= tol:
            picard_converged = True
            break

    # Newton polish; also rescues the algebraically slow σ_b = 0 case
    for _ in range(50):
        f = q_map_step(q, hp, act, rule) - q
        if abs(f) <= 1e-15 * max(1.0, q):
            break
        fprime = q_map_derivative(q, hp, act, rule) - 1.0
        if fprime == 0.0:
            break
        q_new = q - f / fprime
        if q_new < 0.0:
            q_new = 0.5 * q
        if q_new == q:
            break
        q = q_new

    residual = abs(q_map_step(q, hp, act, rule) - q)
    rate = q_map_derivative(q, hp, act, rule)
    return FixedPointResult(
        value=max(q, 0.0),
        iterations=iterations,
        residual=residual,
        converged=bool(picard_converged or residual <= tol),
        stable=bool(abs(rate) < 1.0),
    )


# ---------------------------------------------------------------------------
# correlation map


def c_map_step(
    c_prev: float,
    q_star: float,
    hp: HyperParams,
    act: Activation,
    rule: QuadratureRule | None = None,
) -> float:
    """One application of the correlation map at the length fixed point.

    Computes (σ_w² E[φ(√q* z_a) φ(u_b)] + σ_b²)/q* with
    u_b = √q* (c_prev z_a + √(1-c_prev²) z_b).  The entire right-hand
    side is normalized by q*: this is the unique normalization under
    which c = 1 reproduces itself exactly (the a = b diagonal of the
    covariance recursion), making the map consistent with the length
    map's fixed point.
    """
    if not -1.0 <= c_prev <= 1.0:
        raise ValueError(f"c_prev must lie in [-1, 1], got {c_prev}")
    if q_star <= 0:
        raise ValueError(f"q_star must be positive, got {q_star}")
    if rule is None:
        rule = default_pair_rule(hp)
    sq = math.sqrt(q_star)
    root = math.sqrt(max(1.0 - c_prev * c_prev, 0.0))
    za = rule.nodes[:, None]
    zb = rule.nodes[None, :]
    pa = act.phi(sq * rule.nodes)[:, None]
    pb = act.phi(sq * (c_prev * za + root * zb))
    cov = hp.sigma_w**2 * float(rule.weights @ (pa * pb) @ rule.weights)
    return (cov + hp.sigma_b**2) / q_star


def _c_map_slope(c, q_star, hp, act, rule, step=1e-5):
    """Central-difference d(c_map)/dc, clamping evaluation into [-1, 1]."""
    hi = min(c + step, 1.0)
    lo = max(c - step, -1.0)
    if hi == lo:
        return float("nan")
    return (
        c_map_step(hi, q_star, hp, act, rule)
        - c_map_step(lo, q_star, hp, act, rule)
    ) / (hi - lo)


def c_fixed_points(
    hp: HyperParams,
    act: Activation,
    tol: float = 1e-10,
    rule: QuadratureRule | None = None,
    grid_points: int = 201,
) -> list[FixedPointResult]:
    """All fixed points of the correlation map in [0, 1].

    The residual g(c) = c_map(c) - c is scanned on a uniform grid and
    each sign change bracketed by bisection.  c = 1 is always a fixed
    point analytically and is appended with stability χ1 < 1.  If g
    vanishes on the whole grid (the identity map of the bias-free
    linear activation) a single degenerate-flagged result is returned.

    Phenomenology: below the critical σ_w the list is just the stable
    c* = 1; above it an interior stable fixed point appears and c* = 1
    turns unstable.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if rule is None:
        rule = default_pair_rule(hp)
    qres = q_fixed_point(hp, act, rule=default_rule(hp))
    q_star = qres.value
    if q_star <= 0:
        # zero-variance fixed point (σ_b = 0 below criticality): the
        # correlation map is undefined; report the trivial degeneracy
        return [
            FixedPointResult(
                value=1.0, iterations=0, residual=0.0, converged=True,
                stable=True, degenerate=True,
            )
        ]

    grid = np.linspace(0.0, 1.0, grid_points)
    g = np.array([c_map_step(c, q_star, hp, act, rule) - c for c in grid])

    if np.all(np.abs(g) < 10 * tol):
        return [
            FixedPointResult(
                value=1.0, iterations=0, residual=float(np.max(np.abs(g))),
                converged=True, stable=True, degenerate=True,
            )
        ]

    results: list[FixedPointResult] = []
    for i in range(grid_points - 1):
        a, b = grid[i], grid[i + 1]
        ga, gb = g[i], g[i + 1]
        if ga == 0.0 and a not in (0.0, 1.0):
            root, iters = a, 0
        elif ga * gb < 0.0:
            lo, hi, glo = a, b, ga
            iters = 0
            while hi - lo > tol and iters < 200:
                mid = 0.5 * (lo + hi)
                gm = c_map_step(mid, q_star, hp, act, rule) - mid
                if glo * gm <= 0.0:
                    hi = mid
                else:
                    lo, glo = mid, gm
                iters += 1
            root = 0.5 * (lo + hi)
        else:
            continue
        if abs(root - 1.0) <= max(10 * tol, 1e-8):
            continue  # the boundary point is appended separately
        slope = _c_map_slope(root, q_star, hp, act, rule)
        results.append(
            FixedPointResult(
                value=float(root),
                iterations=iters,
                residual=abs(c_map_step(root, q_star, hp, act, rule) - root),
                converged=True,
                stable=bool(abs(slope) < 1.0),
            )
        )

    chi = chi1(hp, act)
    results.append(
        FixedPointResult(
            value=1.0,
            iterations=0,
            residual=abs(c_map_step(1.0, q_star, hp, act, rule) - 1.0),
            converged=True,
            stable=bool(chi < 1.0),
        )
    )
    return results


# ---------------------------------------------------------------------------
# stability and the critical line


def chi1(
    hp: HyperParams, act: Activation, rule: QuadratureRule | None = None
) -> float:
    """Slope of the correlation map at c = 1: σ_w² E[φ'(√q* z)²].

    Resolves q* internally.  χ1 < 1: ordered; χ1 > 1: chaotic; the
    critical line is χ1 = 1.
    """
    if rule is None:
        rule = default_rule(hp)
    q_star = q_fixed_point(hp, act, rule=rule).value
    s = math.sqrt(q_star)
    d = act.dphi(s * rule.nodes)
    return float(hp.sigma_w**2 * (rule.weights @ (d * d)))


def critical_sigma_w(
    sigma_b: float,
    act: Activation,
    bracket: tuple[float, float] = (0.1, 10.0),
    tol: float = 1e-8,
) -> float:
    """Solve χ1(σ_w; σ_b) = 1 for σ_w by bisection.

    The bracket must straddle the root; the residual χ1 - 1 is
    monotonically increasing in σ_w for saturating activations, so
    plain bisection is robust.  tol is in σ_w units.

    The zero-bias case is handled in closed form.  With σ_b = 0 and an
    odd activation the zero-length state q* = 0 is the relevant fixed
    point up to the transition, where χ1 = σ_w² φ'(0)², so the line
    starts at exactly 1/|φ'(0)|.  Bisection cannot recover this point:
    χ1 - 1 vanishes only to second order in σ_w - 1 there (the
    crossing is tangential), which leaves the sign of the residual
    inside solver noise over a ~1e-6-wide plateau.
    """
    if sigma_b == 0.0 and abs(act.phi(0.0)) < 1e-15 and act.dphi(0.0) != 0.0:
        return float(1.0 / abs(act.dphi(0.0)))
    lo, hi = bracket
    if not (0 < lo < hi):
        raise ValueError(f"invalid bracket {bracket}")

    def residual(sw: float) -> float:
        hp = HyperParams(sigma_w=sw, sigma_b=sigma_b)
        return chi1(hp, act) - 1.0

    rlo, rhi = residual(lo), residual(hi)
    if rlo * rhi > 0:
        raise ValueError(
            "no sign change of chi1 - 1 on bracket: "
            f"chi1({lo}) - 1 = {rlo:.3e}, chi1({hi}) - 1 = {rhi:.3e}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rlo * residual(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def critical_line(
    sigma_b_values: Sequence[float], act: Activation, tol: float = 1e-8
) -> CriticalLine:
    """Critical σ_w for each σ_b, with a non-decreasing diagnostic.

    Saturating activations need a larger weight scale to stay chaotic
    as the bias grows, so the line should be non-decreasing in σ_b;
    the flag records whether the solved points respect that.
    """
    if len(sigma_b_values) == 0:
        raise ValueError("sigma_b_values must be non-empty")
    pts = tuple(
        (float(sb), critical_sigma_w(float(sb), act, tol=tol))
        for sb in sigma_b_values
    )
    order = np.argsort([p[0] for p in pts])
    sorted_sw = [pts[i][1] for i in order]
    non_dec = bool(np.all(np.diff(sorted_sw) >= -tol))
    return CriticalLine(points=pts, non_decreasing=non_dec)


# ---------------------------------------------------------------------------
# depth scales


_INF_CUTOFF = 1e-9


def depth_scales(hp: HyperParams, act: Activation) -> DepthScales:
    """Depth scales ζ_q and ζ_c of convergence to the fixed points.

    1/ζ_q = -log[χ1 + σ_w² E(φ''(√q* z) φ(√q* z))], the log of the
    linearized length-map rate.  1/ζ_c = -log[σ_w² E(φ'(√q* z_a) φ'(u_b*))]
    with the pair expectation evaluated at the relevant stable
    correlation fixed point; at c* = 1 the pair integrand collapses to
    the single-variable one and ζ_c = -1/log χ1 holds identically.

    A rate within 1e-9 of one is reported as an infinite scale (the
    diverging correlation length on the critical line); a non-positive
    rate raises, since its logarithm is undefined.
    """
    rule = default_rule(hp)
    pair_rule = default_pair_rule(hp)
    qres = q_fixed_point(hp, act, rule=rule)
    q_star = qres.value
    chi = chi1(hp, act, rule=rule)

    q_rate = q_map_derivative(q_star, hp, act, rule)
    if q_rate <= 0:
        raise ArithmeticError(
            f"length-map rate {q_rate:.6e} is non-positive; zeta_q undefined"
        )
    zeta_q = math.inf if abs(q_rate - 1.0) < _INF_CUTOFF else -1.0 / math.log(q_rate)

    fps = c_fixed_points(hp, act, rule=pair_rule)
    stable = [f for f in fps if f.stable and not f.degenerate]
    c_star = stable[0].value if stable else 1.0

    sq = math.sqrt(q_star) if q_star > 0 else 0.0
    root = math.sqrt(max(1.0 - c_star * c_star, 0.0))
    za = pair_rule.nodes[:, None]
    zb = pair_rule.nodes[None, :]
    da = act.dphi(sq * pair_rule.nodes)[:, None]
    db = act.dphi(sq * (c_star * za + root * zb))
    c_rate = hp.sigma_w**2 * float(pair_rule.weights @ (da * db) @ pair_rule.weights)
    if c_rate <= 0:
        raise ArithmeticError(
            f"correlation-map rate {c_rate:.6e} is non-positive; zeta_c undefined"
        )
    zeta_c = math.inf if abs(c_rate - 1.0) < _INF_CUTOFF else -1.0 / math.log(c_rate)
    if zeta_c < 0 or zeta_q < 0:
        # rates above one (repulsive fixed point) have no e-folding depth
        zeta_q = abs(zeta_q)
        zeta_c = abs(zeta_c)

    return DepthScales(zeta_q=zeta_q, zeta_c=zeta_c, chi1=chi)
