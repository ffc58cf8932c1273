"""Closed-form disk references and asymptotic predictions.

The radial solution of the resolvent problem on a disk reduces every
quantity of interest to modified-Bessel ratios, giving an exact channel
with no discretization error. The asymptotic predictions carry the
two-term expansions of the maximized eigenvalue for smooth domains (mean
curvature term), polygons (corner coefficient term), and the small
constraint regime (torsion term).
"""

import math
from dataclasses import dataclass

from . import geometry, specfun
from .errors import GeometryError, SolverError

REGIME_SMOOTH = "smooth"
REGIME_POLYGON = "polygon"
REGIME_SMALL_MU = "small_mu"


@dataclass(frozen=True)
class AsymptoticPrediction:
    """Two-term prediction lambda ~ leading * mu^2 + subleading * mu.

    For the small-mu regime the roles shift: ``leading`` multiplies mu and
    ``subleading`` multiplies mu^2.
    """

    leading: float
    subleading: float
    regime: str
    remainder_order: str

    def evaluate(self, mu):
        if self.regime == REGIME_SMALL_MU:
            return self.leading * mu + self.subleading * mu * mu
        return self.leading * mu * mu + self.subleading * mu


def disk_F(radius, s):
    """Exact F(s) on a disk: -2 pi R kappa I1(kappa R)/I0(kappa R)."""
    if radius <= 0:
        raise GeometryError("radius must be positive")
    if s > 0:
        raise GeometryError("disk_F is defined for s <= 0")
    if s == 0:
        return 0.0
    kappa = math.sqrt(-s)
    return -2.0 * math.pi * radius * kappa * specfun.bessel_ratio(
        0.0, kappa * radius
    )


def disk_s_of_mu(radius, mu, tol=1e-13):
    """Invert the exact disk F: unique s <= 0 with F(s) = mu (mu <= 0)."""
    if mu > 0:
        raise GeometryError("disk_s_of_mu handles mu <= 0; use "
                            "disk_robin_lambda for the positive branch")
    if mu == 0:
        return 0.0
    perim = 2.0 * math.pi * radius
    lo = -4.0 * (mu / perim) ** 2 - 1.0
    while disk_F(radius, lo) > mu:
        lo *= 2.0
    hi = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if disk_F(radius, mid) > mu:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * (1.0 + abs(lo)):
            return 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def _bessel_j(nu, x):
    # alternating power series; fine for the small arguments needed here
    half = 0.5 * x
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    term = math.exp(nu * math.log(half) - math.lgamma(nu + 1.0))
    total = term
    k = 1
    while True:
        term *= -(half * half) / (k * (k + nu))
        total += term
        if abs(term) < 1e-17 * (abs(total) + 1e-30) or k > 200:
            return total
        k += 1


_J0_FIRST_ZERO = 2.404825557695773


def disk_robin_lambda(radius, sigma, tol=1e-12):
    """Principal eigenvalue on a disk with a constant boundary parameter.

    Negative parameters give lambda = -k^2 with k I1(kR)/I0(kR) = -sigma;
    positive parameters give lambda = k^2 with k J1(kR) = sigma J0(kR),
    taking the first positive root. Both roots come from safeguarded
    Newton iterations on analytic derivatives.
    """
    if radius <= 0:
        raise GeometryError("radius must be positive")
    if sigma == 0.0:
        return 0.0
    if sigma < 0:
        target = -sigma

        def g(k):
            return k * specfun.bessel_ratio(0.0, k * radius) - target

        def gp(k):
            r = specfun.bessel_ratio(0.0, k * radius)
            rp = 1.0 - r * r - r / (k * radius)
            return r + k * radius * rp

        lo = 1e-12
        hi = target + 2.0 / radius + 1.0
        k = min(target + 0.5 / radius, hi - 1e-9)
        for _ in range(200):
            val = g(k)
            if abs(val) <= tol * (1.0 + target):
                return -k * k
            if val > 0:
                hi = k
            else:
                lo = k
            k_new = k - val / gp(k)
            if not (lo < k_new < hi):
                k_new = 0.5 * (lo + hi)
            k = k_new
        raise SolverError(
            f"disk Robin root-find stalled for sigma={sigma:g} "
            f"(bracket [{lo:g}, {hi:g}])"
        )

    def psi(k):
        return k * _bessel_j(1, k * radius) - sigma * _bessel_j(0, k * radius)

    def psip(k):
        return (k * radius * _bessel_j(0, k * radius)
                + sigma * radius * _bessel_j(1, k * radius))

    lo = 1e-12
    hi = _J0_FIRST_ZERO / radius * (1.0 - 1e-12)
    k = min(math.sqrt(2.0 * sigma / radius), 0.9 * hi)
    for _ in range(200):
        val = psi(k)
        if abs(val) <= tol * (1.0 + sigma):
            return k * k
        if val > 0:
            hi = k
        else:
            lo = k
        k_new = k - val / psip(k)
        if not (lo < k_new < hi):
            k_new = 0.5 * (lo + hi)
        k = k_new
    raise SolverError(
        f"disk Robin root-find stalled for sigma={sigma:g} "
        f"(bracket [{lo:g}, {hi:g}])"
    )


def disk_lambda_mu(radius, mu):
    """Exact maximized eigenvalue on a disk for constraint value ``mu``.

    By symmetry the optimal parameter on a disk is the constant
    mu / perimeter, so the maximized eigenvalue is the constant-parameter
    principal eigenvalue at that value.
    """
    return disk_robin_lambda(radius, mu / (2.0 * math.pi * radius))


def predict_lambda(domain):
    """Two-term asymptotic prediction for a catalogue domain.

    Smooth domains use the boundary curvature integral; polygonal domains
    replace it with twice the sum of corner coefficients. Domains mixing
    smooth arcs and corners are not covered.
    """
    m = geometry.metrics(domain)
    p2 = m.perimeter**2
    if domain.kind in ("disk", "annulus"):
        return AsymptoticPrediction(
            leading=-1.0 / p2,
            subleading=m.curvature_integral / p2,
            regime=REGIME_SMOOTH,
            remainder_order="O(1)",
        )
    if domain.kind in ("rectangle", "ngon", "lshape", "polygon"):
        corner_sum = sum(
            specfun.corner_coefficient(a) for a in m.corner_angles
        )
        return AsymptoticPrediction(
            leading=-1.0 / p2,
            subleading=2.0 * corner_sum / p2,
            regime=REGIME_POLYGON,
            remainder_order="O(1)",
        )
    raise GeometryError(
        f"no asymptotic prediction for domain kind {domain.kind!r}; smooth "
        "and polygonal cases are handled separately"
    )


def small_mu_prediction(volume, torsion_integral):
    """Small-constraint expansion lambda ~ mu/|O| - mu^2 S/|O|^3.

    ``torsion_integral`` is the domain integral of the torsion function,
    equal to the Dirichlet eigen-sum of squared mean loadings over
    energies. Inverting the quadratic response puts the volume cubed in
    the second coefficient.
    """
    if volume <= 0 or torsion_integral <= 0:
        raise GeometryError("volume and torsion integral must be positive")
    return AsymptoticPrediction(
        leading=1.0 / volume,
        subleading=-torsion_integral / volume**3,
        regime=REGIME_SMALL_MU,
        remainder_order="O(mu^3)",
    )


def constant_sigma_bound_check(domain, sigma, lambda_measured,
                               tolerance=None, mesh=None, h=0.03):
    """Check lambda(const sigma) <= maximized lambda for mu = sigma |dO|.

    On a disk the right side comes from the exact channel; elsewhere it is
    computed by the finite-element optimizer on ``mesh`` (generated at
    spacing ``h`` if not supplied).
    """
    if sigma >= 0:
        if sigma == 0:
            return lambda_measured <= (tolerance or 1e-12)
        raise GeometryError("constant_sigma_bound_check expects sigma <= 0")
    m = geometry.metrics(domain)
    mu = sigma * m.perimeter
    if domain.kind == "disk":
        s_mu = disk_s_of_mu(domain.params[0], mu)
    else:
        from . import optimizer

        if mesh is None:
            layer = 0.75 / math.sqrt((abs(mu) / m.perimeter + 1.0) ** 2 + 1.0)
            layer = max(layer, 4.0 * h * 2.0**-12 * (1.0 + 1e-9))
            mesh = geometry.generate_mesh(domain, h,
                                          boundary_layer_width=layer)
        s_mu = optimizer.optimize(mesh, mu).s_mu
    if tolerance is None:
        tolerance = 1e-6 * (1.0 + abs(s_mu))
    return lambda_measured <= s_mu + tolerance
