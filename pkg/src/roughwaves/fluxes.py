"""Flux families for the two-phase flooding and traffic models.

Four concrete models share this module:

* plain polymer flooding: Buckley-Leverett fractional flow f(s, c, k),
* polymer flooding with Langmuir adsorption m(c),
* polymer flooding with gravity (fractional flow dips negative near s=0),
* second-order traffic flow with density flux rho*(w - k*rho^gamma).

All flux evaluations accept scalars or numpy arrays and are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VARIANTS = ("polymer", "polymer_adsorption", "polymer_gravity", "traffic")


class DomainError(ValueError):
    """Raised when a state lies outside the admissible box."""


@dataclass(frozen=True)
class PolymerFluxParams:
    """Quadratic-relative-permeability fractional flow parameters.

    mobility exponent is fixed at 2; viscosity_coeffs are the polynomial
    coefficients of mu(c) in increasing order, mu(c) = c0 + c1*c + ...
    Gravity enters through gravity_number >= 0 (0 disables it).
    """

    viscosity_coeffs: tuple = (0.5, 0.5)
    gravity_number: float = 0.0
    k_min: float = 0.25
    k_max: float = 4.0

    def __post_init__(self):
        if self.gravity_number < 0:
            raise ValueError("gravity_number must be >= 0")
        if self.k_min <= 0 or self.k_max < self.k_min:
            raise ValueError("need 0 < k_min <= k_max")
        mu0 = self.mu(0.0)
        mu1 = self.mu(1.0)
        if mu0 <= 0 or mu1 <= mu0:
            raise ValueError("mu(c) must be positive and strictly increasing on [0,1]")

    def mu(self, c):
        return np.polyval(self.viscosity_coeffs[::-1], c)

    def dmu(self, c):
        n = len(self.viscosity_coeffs)
        dcoef = [i * self.viscosity_coeffs[i] for i in range(1, n)]
        if not dcoef:
            return np.zeros_like(np.asarray(c, dtype=float))
        return np.polyval(dcoef[::-1], c)


@dataclass(frozen=True)
class AdsorptionParams:
    """Langmuir isotherm m(c) = kappa*c / (1 + kappa*c)."""

    kappa: float = 1.0

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")


@dataclass(frozen=True)
class TrafficParams:
    """Pressure exponent gamma of the traffic model, constrained to (1, 2)."""

    gamma: float = 1.5
    k_min: float = 0.25
    k_max: float = 4.0

    def __post_init__(self):
        if not 1.0 < self.gamma < 2.0:
            raise ValueError("gamma must lie in (1, 2)")
        if self.k_min <= 0 or self.k_max < self.k_min:
            raise ValueError("need 0 < k_min <= k_max")


def _mu_scalar(params, c):
    out = 0.0
    for coef in params.viscosity_coeffs[::-1]:
        out = out * c + coef
    return out


def _dmu_scalar(params, c):
    coeffs = params.viscosity_coeffs
    out = 0.0
    for i in range(len(coeffs) - 1, 0, -1):
        out = out * c + i * coeffs[i]
    return out


def _scalar_box(s, c, k, params, tol=1e-12):
    if not (-tol <= s <= 1.0 + tol):
        raise DomainError(f"saturation outside [0, 1]: {s}")
    if not (-tol <= c <= 1.0 + tol):
        raise DomainError(f"concentration outside [0, 1]: {c}")
    if not (params.k_min - tol <= k <= params.k_max + tol):
        raise DomainError(f"permeability outside [{params.k_min}, {params.k_max}]: {k}")
    return min(max(s, 0.0), 1.0), min(max(c, 0.0), 1.0), k


def polymer_flux(s, c, k, params: PolymerFluxParams):
    """Fractional flow f(s, c, k) with optional gravity factor.

    f = lam_w / (lam_w + lam_o) * (1 - G*k*(1-s)^2) with lam_w = k*s^2/mu(c)
    and lam_o = (1-s)^2.  With G = 0 this is the S-shaped Buckley-Leverett
    function: f(0)=0, f(1)=1, f_s(0)=f_s(1)=0 and f_s >= 0.  With G*k > 1
    the flux is negative on an interval near s = 0 while f(1) stays 1.
    """
    if type(s) is float and type(c) is float and type(k) is float:
        s, c, k = _scalar_box(s, c, k, params)
        if s == 0.0:
            return 0.0
        lam_w = k * s * s / _mu_scalar(params, c)
        lam_o = (1.0 - s) ** 2
        return lam_w / (lam_w + lam_o) * (1.0 - params.gravity_number * k * lam_o)
    s, c, k = _check_polymer_box(s, c, k, params)
    lam_w = k * s * s / params.mu(c)
    lam_o = (1.0 - s) ** 2
    bl = np.where(s > 0.0, lam_w / np.where(s > 0.0, lam_w + lam_o, 1.0), 0.0)
    grav = 1.0 - params.gravity_number * k * (1.0 - s) ** 2
    out = bl * grav
    return out if out.ndim else float(out)


def polymer_flux_ds(s, c, k, params: PolymerFluxParams):
    """Analytic d f / d s of :func:`polymer_flux`."""
    if type(s) is float and type(c) is float and type(k) is float:
        s, c, k = _scalar_box(s, c, k, params)
        mu = _mu_scalar(params, c)
        lam_w = k * s * s / mu
        lam_o = (1.0 - s) ** 2
        denom = lam_w + lam_o
        if denom <= 0.0:
            return 0.0
        bl = lam_w / denom if s > 0.0 else 0.0
        dbl = (2.0 * k * s / mu * lam_o + lam_w * 2.0 * (1.0 - s)) / (denom * denom)
        g = params.gravity_number
        return dbl * (1.0 - g * k * lam_o) + bl * 2.0 * g * k * (1.0 - s)
    s, c, k = _check_polymer_box(s, c, k, params)
    mu = params.mu(c)
    lam_w = k * s * s / mu
    lam_o = (1.0 - s) ** 2
    denom = lam_w + lam_o
    # d(BL)/ds = (lam_w' lam_o - lam_w lam_o') / denom^2
    dlam_w = 2.0 * k * s / mu
    dlam_o = -2.0 * (1.0 - s)
    with np.errstate(invalid="ignore"):
        bl = np.where(s > 0.0, lam_w / np.where(denom > 0.0, denom, 1.0), 0.0)
        dbl = (dlam_w * lam_o - lam_w * dlam_o) / np.where(denom > 0.0, denom * denom, 1.0)
    g = params.gravity_number
    grav = 1.0 - g * k * (1.0 - s) ** 2
    dgrav = 2.0 * g * k * (1.0 - s)
    out = dbl * grav + bl * dgrav
    return out if out.ndim else float(out)


def polymer_flux_dc(s, c, k, params: PolymerFluxParams):
    """Analytic d f / d c (only mu depends on c): f_c = -BL(1-BL) mu'/mu * grav."""
    if type(s) is float and type(c) is float and type(k) is float:
        s, c, k = _scalar_box(s, c, k, params)
        if s == 0.0:
            return 0.0
        mu = _mu_scalar(params, c)
        lam_w = k * s * s / mu
        lam_o = (1.0 - s) ** 2
        bl = lam_w / (lam_w + lam_o)
        grav = 1.0 - params.gravity_number * k * lam_o
        return -bl * (1.0 - bl) * _dmu_scalar(params, c) / mu * grav
    s, c, k = _check_polymer_box(s, c, k, params)
    mu = params.mu(c)
    lam_w = k * s * s / mu
    lam_o = (1.0 - s) ** 2
    denom = lam_w + lam_o
    bl = np.where(s > 0.0, lam_w / np.where(denom > 0.0, denom, 1.0), 0.0)
    grav = 1.0 - params.gravity_number * k * (1.0 - s) ** 2
    out = -bl * (1.0 - bl) * params.dmu(c) / mu * grav
    return out if out.ndim else float(out)


def adsorption(c, params: AdsorptionParams):
    """Langmuir adsorption: returns (m, m', m'') at c."""
    if type(c) is float:
        if not -1e-14 <= c <= 1.0 + 1e-14:
            raise DomainError("concentration outside [0, 1]")
        kap = params.kappa
        den = 1.0 + kap * c
        return kap * c / den, kap / den**2, -2.0 * kap**2 / den**3
    c = np.asarray(c, dtype=float)
    if np.any(c < -1e-14) or np.any(c > 1.0 + 1e-14):
        raise DomainError("concentration outside [0, 1]")
    kap = params.kappa
    den = 1.0 + kap * c
    m = kap * c / den
    dm = kap / den**2
    d2m = -2.0 * kap**2 / den**3
    if m.ndim:
        return m, dm, d2m
    return float(m), float(dm), float(d2m)


def traffic_flux(rho, w, k, gamma):
    """Density flux rho * v with v = w - k*rho^gamma; returns 0 at rho = 0."""
    if type(rho) is float:
        if rho < -1e-14:
            raise DomainError("density must be nonnegative")
        rho = max(rho, 0.0)
        return rho * (w - k * rho**gamma)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < -1e-14):
        raise DomainError("density must be nonnegative")
    rho = np.maximum(rho, 0.0)
    out = rho * (w - k * np.power(rho, gamma))
    return out if out.ndim else float(out)


def traffic_flux_drho(rho, w, k, gamma):
    """d/drho of rho*(w - k*rho^gamma) = w - (gamma+1)*k*rho^gamma."""
    if type(rho) is float:
        return w - (gamma + 1.0) * k * max(rho, 0.0) ** gamma
    rho = np.asarray(rho, dtype=float)
    rho = np.maximum(rho, 0.0)
    out = w - (gamma + 1.0) * k * np.power(rho, gamma)
    return out if out.ndim else float(out)


def _check_polymer_box(s, c, k, params, tol=1e-12):
    s = np.asarray(s, dtype=float)
    c = np.asarray(c, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(s < -tol) or np.any(s > 1.0 + tol):
        raise DomainError(f"saturation outside [0, 1]: {s}")
    if np.any(c < -tol) or np.any(c > 1.0 + tol):
        raise DomainError(f"concentration outside [0, 1]: {c}")
    if np.any(k < params.k_min - tol) or np.any(k > params.k_max + tol):
        raise DomainError(f"permeability outside [{params.k_min}, {params.k_max}]: {k}")
    return np.clip(s, 0.0, 1.0), np.clip(c, 0.0, 1.0), k


@dataclass(frozen=True)
class FluxModel:
    """A variant tag plus the matching parameter records.

    variant is one of 'polymer', 'polymer_adsorption', 'polymer_gravity',
    'traffic'.  Exactly the parameters of the active variant are consulted.
    """

    variant: str
    polymer: PolymerFluxParams = field(default_factory=PolymerFluxParams)
    adsorption_params: AdsorptionParams = field(default_factory=AdsorptionParams)
    traffic: TrafficParams = field(default_factory=TrafficParams)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "polymer_gravity":
            if self.polymer.gravity_number <= 0.0:
                raise ValueError("polymer_gravity needs gravity_number > 0")
            if self.polymer.gravity_number * self.polymer.k_min <= 1.0:
                # every admissible flux must carry the single-dip shape the
                # trace-set analysis presumes
                raise ValueError(
                    "polymer_gravity requires gravity_number * k_min > 1"
                )
        elif self.variant in ("polymer", "polymer_adsorption"):
            if self.polymer.gravity_number != 0.0:
                raise ValueError(f"{self.variant} requires gravity_number = 0")

    # -- polymer-side evaluations -------------------------------------
    def f(self, s, c, k):
        return polymer_flux(s, c, k, self.polymer)

    def f_s(self, s, c, k):
        return polymer_flux_ds(s, c, k, self.polymer)

    def f_c(self, s, c, k):
        return polymer_flux_dc(s, c, k, self.polymer)

    def m(self, c):
        return adsorption(c, self.adsorption_params)

    def m_prime(self, c):
        return adsorption(c, self.adsorption_params)[1]

    # -- traffic-side evaluations --------------------------------------
    @property
    def gamma(self):
        return self.traffic.gamma

    def w_of(self, rho, v, k):
        return v + k * rho**self.gamma

    def rho_of(self, w, v, k):
        """Invert w = v + k rho^gamma for rho >= 0 (requires w >= v)."""
        if w < v - 1e-12:
            raise DomainError(f"w = {w} < v = {v} has no nonnegative density")
        return (max(w - v, 0.0) / k) ** (1.0 / self.gamma)

    def g_traffic(self, rho, w, k):
        return traffic_flux(rho, w, k, self.gamma)

    def g_traffic_drho(self, rho, w, k):
        return traffic_flux_drho(rho, w, k, self.gamma)

    def rho_stagnation(self, w, k):
        """Largest admissible density at invariant w: v >= 0 forces rho <= (w/k)^(1/gamma)."""
        return (max(w, 0.0) / k) ** (1.0 / self.gamma)


def make_model(variant: str, **kwargs) -> FluxModel:
    """Build a FluxModel from flat keyword parameters (CLI-facing helper)."""
    poly_kw = {}
    for name in ("viscosity_coeffs", "gravity_number", "k_min", "k_max"):
        if name in kwargs and variant != "traffic":
            val = kwargs.pop(name)
            poly_kw[name] = tuple(val) if name == "viscosity_coeffs" else val
    ads_kw = {"kappa": kwargs.pop("kappa")} if "kappa" in kwargs else {}
    traffic_kw = {}
    for name in ("gamma", "k_min", "k_max"):
        if name in kwargs:
            traffic_kw[name] = kwargs.pop(name)
    if kwargs:
        raise ValueError(f"unknown flux parameters: {sorted(kwargs)}")
    if variant == "polymer_gravity":
        poly_kw.setdefault("gravity_number", 3.0)
        poly_kw.setdefault("k_min", 1.05 / poly_kw["gravity_number"])
    return FluxModel(
        variant=variant,
        polymer=PolymerFluxParams(**poly_kw),
        adsorption_params=AdsorptionParams(**ads_kw),
        traffic=TrafficParams(**traffic_kw),
    )
