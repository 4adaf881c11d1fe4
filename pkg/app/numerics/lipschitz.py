"""
Local Lipschitz constant of Phi^-1 o F~ for an L-Lipschitz base classifier and
the Lipschitz-adjusted certified radii.

Everything is solved in unit-noise coordinates. Smoothing F (Lipschitz L in
input units) with noise sigma is the same as smoothing x -> F(sigma x)
(Lipschitz sigma L) with unit noise, so the constant is computed with
L_eff = sigma * L and divided by sigma on the way out.

In unit coordinates the extremal function is 0 below s0, rises with slope L
up to s1 = s0 + 1/L and is 1 above. Its Gaussian mean is
1 - L * int_{s0}^{s1} Phi(s) ds and its directional derivative at the origin
is L * (Phi(s1) - Phi(s0)).
"""
import logging
import math

import numpy as np
from scipy import integrate, optimize

from app.core.config import settings
from app.core.errors import ConfigurationError, SolverError
from app.numerics.radii import check_sigma, finalize_radius
from app.numerics.stats_normal import (
    cdf_antiderivative,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)
from app.schemas.bounds import CertifiedRadius, TopTwoProbabilities
from app.schemas.lipschitz import ExtremalReport, ExtremalSolution, LipschitzSpec, SmoothedPoint

logger = logging.getLogger(__name__)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
# Above this width the closed-form antiderivative difference is used directly
_QUADRATURE_WIDTH = 1.0
_MAX_BRACKET_DOUBLINGS = 30
_QUAD_LIMIT = 40.0


def _interval_mean(func, a: float, h: float) -> float:
    """Mean of func over [a, a + h] by Gauss-Legendre"""
    nodes = a + 0.5 * h * (_GL_NODES + 1.0)
    return 0.5 * float(np.dot(_GL_WEIGHTS, func(nodes)))


def mean_cdf(a: float, h: float) -> float:
    """(1/h) * int_a^{a+h} Phi(s) ds"""
    if h <= _QUADRATURE_WIDTH:
        return _interval_mean(std_normal_cdf, a, h)
    return (cdf_antiderivative(a + h) - cdf_antiderivative(a)) / h


def constraint_value(s0: float, L: float) -> float:
    """
    Gaussian mean of the extremal function, 1 - L * int_{s0}^{s0+1/L} Phi.

    Evaluated as the mean of Phi over the reflected interval, which avoids
    the cancellation in 1 - (...) and the factor-L amplification of
    antiderivative rounding when L is large.
    """
    h = 1.0 / L
    return mean_cdf(-s0 - h, h)


def extremal_objective(s0: float, L: float) -> float:
    """L * (Phi(s0 + 1/L) - Phi(s0)), the mean of phi over [s0, s1]"""
    h = 1.0 / L
    if h <= _QUADRATURE_WIDTH:
        return _interval_mean(std_normal_pdf, s0, h)
    s1 = s0 + h
    if s0 >= 0.0:
        return L * (std_normal_cdf(-s0) - std_normal_cdf(-s1))
    return L * (std_normal_cdf(s1) - std_normal_cdf(s0))


def _check_probability(p: float) -> None:
    if not (0.0 < p < 1.0):
        raise ConfigurationError(f"probability must satisfy 0 < p < 1, got {p}")


def solve_s0(p: float, L: float, max_iter: int | None = None, bracket: float | None = None) -> ExtremalSolution:
    """
    Solve constraint_value(s0, L) = p for s0 with Brent's method.

    The constraint is strictly decreasing in s0, so a sign change on the
    bracket identifies the unique root. The bracket starts at +/- bracket and
    is doubled until it straddles the root.
    """
    _check_probability(p)
    if not (L > 0 and math.isfinite(L)):
        raise ConfigurationError(f"Lipschitz constant must be positive and finite, got {L}")
    iterations = max_iter if max_iter is not None else settings.BRENT_MAX_ITER
    lo = -(bracket if bracket is not None else settings.S0_BRACKET)
    hi = -lo

    def residual(s0: float) -> float:
        return constraint_value(s0, L) - p

    for _ in range(_MAX_BRACKET_DOUBLINGS):
        f_lo, f_hi = residual(lo), residual(hi)
        if f_lo >= 0.0 and f_hi <= 0.0:
            break
        if f_lo < 0.0:
            lo *= 2.0
        if f_hi > 0.0:
            hi *= 2.0
    else:
        raise SolverError(f"could not bracket s0 for p={p}, L={L} within [{lo}, {hi}]")

    try:
        s0, info = optimize.brentq(
            residual, lo, hi,
            xtol=1e-15, rtol=4.0 * np.finfo(float).eps,
            maxiter=iterations, full_output=True, disp=False,
        )
    except (ValueError, RuntimeError) as e:
        raise SolverError(f"Brent solver failed for p={p}, L={L}: {e}") from e
    if not info.converged:
        raise SolverError(f"Brent solver did not converge for p={p}, L={L} in {iterations} iterations")

    logger.debug(f"s0={s0:.17g} for p={p}, L={L} after {info.iterations} iterations")
    return ExtremalSolution(
        s0=s0,
        s1=s0 + 1.0 / L,
        L=L,
        objective=extremal_objective(s0, L),
        iterations=info.iterations,
    )


def _unit_constant(p: float, L_eff: float) -> float:
    sol = solve_s0(p, L_eff)
    constant = sol.objective / std_normal_pdf(std_normal_quantile(p))
    # The classical unit-noise bound of 1 holds for every base classifier
    return min(constant, 1.0)


def smoothed_lipschitz_constant(point: SmoothedPoint, spec: LipschitzSpec,
                                p_range: tuple[float, float] | None = None,
                                grid_points: int | None = None) -> float:
    """
    Local Lipschitz constant of Phi^-1 o F~ in input units.

    With ``p_range`` (the range of F~ over the ball B(x, rho)) the supremum
    over an evenly spaced grid of that range is returned; otherwise the
    constant is evaluated at the point itself (rho = 0).
    """
    check_sigma(point.sigma)
    L_eff = point.sigma * spec.L

    if p_range is None:
        if spec.rho > 0:
            logger.debug(f"rho={spec.rho} without a probability range; evaluating at the point")
        return _unit_constant(point.p, L_eff) / point.sigma

    p_min, p_max = p_range
    if not (0.0 < p_min <= point.p <= p_max < 1.0):
        raise ConfigurationError(f"p_range {p_range} must lie in (0, 1) and contain p={point.p}")
    count = grid_points if grid_points is not None else settings.BALL_GRID_POINTS
    grid = np.linspace(p_min, p_max, count)
    return max(_unit_constant(float(q), L_eff) for q in grid) / point.sigma


def _resolve_fallback(fallback: bool | None) -> bool:
    return settings.LIPSCHITZ_FALLBACK if fallback is None else fallback


def radius_mono_lip(p1: float, spec: LipschitzSpec, sigma: float, fallback: bool | None = None,
                    p_range: tuple[float, float] | None = None) -> CertifiedRadius:
    """
    R_monoLip = Phi^-1(p1) / L(Phi^-1 o F~); abstain when p1 <= 1/2.

    On solver failure the baseline R_mono is returned with ``fallback`` set,
    unless fallback is disabled, in which case SolverError propagates.
    """
    check_sigma(sigma)
    _check_probability(p1)
    if p1 <= 0.5:
        return CertifiedRadius.abstained("monoLip", sigma)

    z = std_normal_quantile(p1)
    try:
        constant = smoothed_lipschitz_constant(SmoothedPoint(p=p1, sigma=sigma), spec, p_range=p_range)
    except SolverError as e:
        if not _resolve_fallback(fallback):
            raise
        logger.warning(f"Falling back to R_mono at p1={p1}: {e}")
        return CertifiedRadius.certified("monoLip", sigma, sigma * z, fallback=True)
    return finalize_radius("monoLip", sigma, z / constant)


def _lip_term(p: float, spec: LipschitzSpec, sigma: float, fallback: bool) -> tuple[float, bool]:
    z = std_normal_quantile(p)
    try:
        constant = smoothed_lipschitz_constant(SmoothedPoint(p=p, sigma=sigma), spec)
    except SolverError as e:
        if not fallback:
            raise
        logger.warning(f"Falling back to the sigma * Phi^-1 term at p={p}: {e}")
        return sigma * z, True
    return z / constant, False


def radius_mult_lip(p: TopTwoProbabilities, spec1: LipschitzSpec, spec2: LipschitzSpec, sigma: float,
                    fallback: bool | None = None) -> CertifiedRadius:
    """
    R_multLip = (1/2) (Phi^-1(p1) / L1 - Phi^-1(p2) / L2) with per-class
    constants; abstain when nonpositive.
    """
    check_sigma(sigma)
    _check_probability(p.p1)
    _check_probability(p.p2)
    if p.p1 <= p.p2:
        return CertifiedRadius.abstained("multLip", sigma)

    use_fallback = _resolve_fallback(fallback)
    term1, fell1 = _lip_term(p.p1, spec1, sigma, use_fallback)
    term2, fell2 = _lip_term(p.p2, spec2, sigma, use_fallback)
    return finalize_radius("multLip", sigma, 0.5 * (term1 - term2), fallback=fell1 or fell2)


def extremal_g(s, sol: ExtremalSolution, L: float | None = None):
    """The three-piece extremal function: 0, then slope L from s0 to s1, then 1"""
    slope = sol.L if L is None else L
    values = np.clip(slope * (np.asarray(s, dtype=float) - sol.s0), 0.0, 1.0)
    if np.ndim(s) == 0:
        return float(values)
    return values


def verify_extremal(sol: ExtremalSolution, L: float, p: float, tolerance: float = 1e-8) -> ExtremalReport:
    """
    Check by adaptive quadrature that int g* phi = p and int s g* phi equals
    the objective L (Phi(s1) - Phi(s0)). Failures are reported, not raised.
    """
    breaks = [b for b in (sol.s0, sol.s1) if -_QUAD_LIMIT < b < _QUAD_LIMIT]
    options = dict(points=breaks or None, limit=400, epsabs=1e-13, epsrel=1e-12)

    mass, _ = integrate.quad(lambda s: extremal_g(s, sol, L) * std_normal_pdf(s),
                             -_QUAD_LIMIT, _QUAD_LIMIT, **options)
    moment, _ = integrate.quad(lambda s: s * extremal_g(s, sol, L) * std_normal_pdf(s),
                               -_QUAD_LIMIT, _QUAD_LIMIT, **options)

    mass_residual = abs(mass - p)
    objective_residual = abs(moment - sol.objective)
    passed = mass_residual <= tolerance and objective_residual <= tolerance
    message = None if passed else (
        f"extremal identities off: mass residual {mass_residual:.3e}, "
        f"objective residual {objective_residual:.3e}"
    )
    if not passed:
        logger.warning(message)
    return ExtremalReport(
        mass=mass,
        mass_residual=mass_residual,
        first_moment=moment,
        objective_residual=objective_residual,
        passed=passed,
        tolerance=tolerance,
        message=message,
    )
