"""First and second variations of area along deformations of the
ambient symplectic form, and destabilization certificates.

Deformation paths produce the node matrices of omega'(0), omega''(0),
and omega(t); the variation formulas integrate frame contractions of
those matrices against the area measure. Every formula value can be
cross-checked against an independent finite-difference oracle that
requadratures the area along the path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import ambient, fd, potentials
from .ambient import ConsistencyError, metric_from_pair
from .potentials import PotentialJet, ddc_along
from .surfaces import SurfaceFunctionJet, SurfaceGrid

Array = np.ndarray

HOLOMORPHIC_TOL = 1e-6


def first_tolerance(oracle_value: float) -> float:
    return max(1e-6, 1e-3 * abs(oracle_value))


def second_tolerance(oracle_value: float) -> float:
    return max(1e-5, 1e-2 * abs(oracle_value))


# ---------------------------------------------------------------------------
# deformation paths


class DeformationPath:
    """Base class: a one-parameter family of ambient 2-forms along the
    surface, with omega(0) the model form."""

    name = "path"
    is_linear = False

    def __init__(self, grid: SurfaceGrid):
        self.grid = grid

    def omega_prime0(self) -> Array:
        raise NotImplementedError

    def omega_second0(self) -> Optional[Array]:
        return None

    def omega_at(self, t: float) -> Array:
        raise NotImplementedError


class LinearPotentialPath(DeformationPath):
    """omega(t) = omega + t dd^c psi."""

    is_linear = True

    def __init__(self, grid: SurfaceGrid, jet: PotentialJet, name: str = "potential-linear"):
        super().__init__(grid)
        self.jet = jet
        self.name = name
        self._ddc = ddc_along(grid, jet)

    def omega_prime0(self) -> Array:
        return self._ddc

    def omega_at(self, t: float) -> Array:
        return self.grid.W + t * self._ddc


class GeneralPotentialPath(DeformationPath):
    """omega(t) = omega + t dd^c psi + (t^2 / 2) dd^c eta."""

    def __init__(self, grid, psi_jet: PotentialJet, eta_jet: PotentialJet, name: str = "potential-general"):
        super().__init__(grid)
        self.name = name
        self._d_psi = ddc_along(grid, psi_jet)
        self._d_eta = ddc_along(grid, eta_jet)

    def omega_prime0(self) -> Array:
        return self._d_psi

    def omega_second0(self) -> Array:
        return self._d_eta

    def omega_at(self, t: float) -> Array:
        return self.grid.W + t * self._d_psi + 0.5 * t * t * self._d_eta


class ExactOneFormPath(DeformationPath):
    """omega(t) = omega + t d(beta) for an ambient 1-form beta."""

    is_linear = True

    def __init__(self, grid, one_form, name: str = "one-form"):
        super().__init__(grid)
        self.name = name
        self._d = np.asarray(one_form.exterior(grid.x), dtype=float)

    def omega_prime0(self) -> Array:
        return self._d

    def omega_at(self, t: float) -> Array:
        return self.grid.W + t * self._d


class TwoFormLinearPath(DeformationPath):
    """omega(t) = omega + t rho for a fixed closed 2-form sampled at the
    nodes (used for Lie derivatives of omega along a field)."""

    is_linear = True

    def __init__(self, grid, rho: Array, name: str = "two-form-linear"):
        super().__init__(grid)
        self.name = name
        self._rho = np.asarray(rho, dtype=float)

    def omega_prime0(self) -> Array:
        return self._rho

    def omega_at(self, t: float) -> Array:
        return self.grid.W + t * self._rho


class FlowPath(DeformationPath):
    """Pullback of omega under the flow of an ambient vector field.

    omega(t) is computed by integrating the flow and its linearization
    with a fixed-step RK4 scheme and pulling the model form back through
    the resulting frame matrices; omega'(0) uses the exterior derivative
    of the contraction of omega with the field (valid since the model
    forms are closed), and omega''(0) a five-point stencil in t.
    """

    def __init__(self, grid, velocity: Callable, jacobian: Optional[Callable] = None,
                 step: float = 2.5e-3, name: str = "flow"):
        super().__init__(grid)
        self.name = name
        self.velocity = velocity
        self.jacobian = jacobian
        self.step = float(step)

    def _jac(self, x):
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x), dtype=float)
        return fd.field_jacobian(lambda p: np.asarray(self.velocity(p), dtype=float), x)

    def _advect(self, t: float):
        x = self.grid.x.copy()
        m, dim = x.shape
        M = np.broadcast_to(np.eye(dim), (m, dim, dim)).copy()
        if t == 0.0:
            return x, M
        steps = max(1, int(math.ceil(abs(t) / self.step)))
        h = t / steps

        def rhs(xc, Mc):
            Z = np.asarray(self.velocity(xc), dtype=float)
            dZ = self._jac(xc)
            return Z, np.einsum("mcb,mbd->mcd", dZ, Mc)

        for _ in range(steps):
            k1x, k1M = rhs(x, M)
            k2x, k2M = rhs(x + 0.5 * h * k1x, M + 0.5 * h * k1M)
            k3x, k3M = rhs(x + 0.5 * h * k2x, M + 0.5 * h * k2M)
            k4x, k4M = rhs(x + h * k3x, M + h * k3M)
            x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
            M = M + (h / 6.0) * (k1M + 2 * k2M + 2 * k3M + k4M)
            if not (np.all(np.isfinite(x)) and np.max(np.abs(x)) < 1e6):
                return None, None  # flow left the usable chart region
        return x, M

    def omega_at(self, t: float) -> Array:
        if t == 0.0:
            return self.grid.W
        x, M = self._advect(t)
        if x is None:
            m, dim = self.grid.x.shape
            return np.full((m, dim, dim), np.nan)
        Wt = self.grid.model._omega_b(x)
        return np.einsum("mca,mcd,mdb->mab", M, Wt, M)

    def omega_prime0(self) -> Array:
        def contraction(pts):
            Z = np.asarray(self.velocity(pts), dtype=float)
            Wp = self.grid.model._omega_b(pts)
            return np.einsum("ma,mab->mb", Z, Wp)

        return fd.one_form_exterior(contraction, self.grid.x)

    def omega_second0(self, dt: float = 1e-3) -> Array:
        vals = [self.omega_at(s) for s in (-2 * dt, -dt, 0.0, dt, 2 * dt)]
        return fd.stencil_second(vals, dt)


def killing_flow_path(grid, spec: "potentials.KillingSpec", name: str = "killing-flow") -> FlowPath:
    """Flow path of J V for a projective holomorphic field V, the flow
    whose Lie derivative of omega matches the frame-killing 2-form."""
    J0 = ambient.standard_complex_structure(grid.model.N)

    def velocity(pts):
        return np.einsum("ab,mb->ma", J0, spec.field(pts))

    def jacobian(pts):
        return np.einsum("cb,mbd->mcd", J0, spec.jacobian(pts))

    return FlowPath(grid, velocity, jacobian, name=name)


# ---------------------------------------------------------------------------
# variation formulas


def _prime_matrix(grid, src) -> Array:
    if isinstance(src, DeformationPath):
        return src.omega_prime0()
    if isinstance(src, PotentialJet):
        return ddc_along(grid, src)
    return np.asarray(src, dtype=float)


def first_variation(grid: SurfaceGrid, src) -> float:
    """A'(0) = (1/2) sum_ij int g^ij omega'(F_i, J F_j) dmu.

    src may be a potential jet (linear potential path), a deformation
    path, or raw omega'(0) matrices at the nodes.
    """
    Wp = _prime_matrix(grid, src)
    JF = np.einsum("mab,mbj->maj", grid.J, grid.Fx)
    wFJ = np.einsum("mai,mab,mbj->mij", grid.Fx, Wp, JF)
    integrand = 0.5 * np.einsum("mij,mij->m", grid.ginv, wFJ)
    return grid.integrate(integrand)


def first_variation_expanded(grid: SurfaceGrid, jet: PotentialJet) -> float:
    """A'(0) as the fully expanded frame formula: covariant Hessian terms
    weighted by the angle, plus the nabla-J corrections. Agrees with
    first_variation; kept as an independent route."""
    E = grid.frames
    Hf = np.einsum("mab,mak,mbl->mkl", jet.hess, E, E)
    ca = grid.cos_alpha
    sa = grid.sin_alpha
    term = 0.5 * (
        Hf[:, 0, 0]
        + ca**2 * Hf[:, 1, 1]
        + sa**2 * Hf[:, 2, 2]
        + 2.0 * sa * ca * Hf[:, 1, 2]
    )
    term += 0.5 * (
        Hf[:, 1, 1]
        + ca**2 * Hf[:, 0, 0]
        + sa**2 * Hf[:, 3, 3]
        + 2.0 * sa * ca * Hf[:, 0, 3]
    )
    if not grid.model.kahler:
        NJ = grid.NJ
        J = grid.J
        for i in (0, 1):
            ei = E[:, :, i]
            Jei = np.einsum("mab,mb->ma", J, ei)
            vec = np.einsum("ma,macb,mb->mc", Jei, NJ, ei)
            vec -= np.einsum("ma,macb,mb->mc", ei, NJ, Jei)
            term += 0.5 * np.einsum("mc,mc->m", jet.grad, vec)
    return grid.integrate(term)


def d_fields(grid: SurfaceGrid, src) -> tuple:
    """The two frame contractions of omega'(0) entering the second
    variation, in the reduced form with the explicit sin(alpha) prefactor
    (exactly zero on complex tangent planes)."""
    Wp = _prime_matrix(grid, src)
    E = grid.frames
    v = np.einsum("mak,mab,mbl->mkl", E, Wp, E)
    sa = grid.sin_alpha
    D1 = sa * (-v[:, 0, 3] + v[:, 1, 2])
    D2 = sa * (v[:, 0, 2] + v[:, 1, 3])
    return D1, D2


def d_fields_raw(grid: SurfaceGrid, src) -> tuple:
    """The same contractions without the angle reduction: direct pairings
    of omega'(0) with (e1, J e2), (e2, J e1) and (e1, J e1), (e2, J e2)."""
    Wp = _prime_matrix(grid, src)
    E = grid.frames
    J = grid.J
    Je = np.einsum("mab,mbk->mak", J, E[:, :, :2])
    w = np.einsum("mak,mab,mbl->mkl", E[:, :, :2], Wp, Je)
    D1 = w[:, 0, 1] + w[:, 1, 0]
    D2 = w[:, 0, 0] - w[:, 1, 1]
    return D1, D2


def d2_decomposed(grid: SurfaceGrid, node: int, fjet: SurfaceFunctionJet) -> float:
    """D2 of the normal extension of a surface-function jet at its node,
    via the intrinsic decomposition: the tangential Hessian difference,
    the second-fundamental-form coupling to the gradient, and the
    nabla-J coupling."""
    if fjet.node != node:
        raise ValueError("jet was built at a different node")
    sa = float(grid.sin_alpha[node])
    ca = float(grid.cos_alpha[node])
    ih = fjet.frame_hess
    fg = fjet.frame_grad
    A = ih[0, 0] - ih[1, 1]
    h = grid.second_fundamental[node]
    B = 2.0 * ((h[0, 1, 0] - h[1, 0, 0]) * fg[0] + (h[0, 1, 1] - h[1, 0, 1]) * fg[1])
    E = grid.frames[node]
    NJ = grid.NJ[node]

    def nj(Xk, Yk):
        return np.einsum("a,acb,b->c", E[:, Xk], NJ, E[:, Yk])

    Z = nj(2, 0) - nj(0, 2) + nj(3, 1) - nj(1, 3)
    Gl = grid.lowered_frames[node]
    C = fg[0] * float(Gl[:, 0] @ Z) + fg[1] * float(Gl[:, 1] @ Z)
    return sa * (sa * A + ca * B + C)


def second_variation_of_path(grid: SurfaceGrid, path: DeformationPath) -> float:
    """A''(0) = (1/2) sum_i int omega''(e_i, J e_i) dmu
    - (1/4) int D1^2 dmu - (1/4) int D2^2 dmu."""
    D1, D2 = d_fields(grid, path.omega_prime0())
    out = -0.25 * (grid.integrate(D1 * D1) + grid.integrate(D2 * D2))
    Wpp = path.omega_second0()
    if Wpp is not None:
        E2 = grid.frames[:, :, :2]
        JE = np.einsum("mab,mbk->mak", grid.J, E2)
        vals = np.einsum("mak,mab,mbk->mk", E2, Wpp, JE)
        out += 0.5 * grid.integrate(vals[:, 0] + vals[:, 1])
    return out


def second_variation(grid: SurfaceGrid, psi_jet: PotentialJet,
                     eta_jet: Optional[PotentialJet] = None) -> float:
    """A''(0) along omega + t dd^c psi + (t^2/2) dd^c eta."""
    if eta_jet is None:
        path: DeformationPath = LinearPotentialPath(grid, psi_jet)
    else:
        path = GeneralPotentialPath(grid, psi_jet, eta_jet)
    return second_variation_of_path(grid, path)


# ---------------------------------------------------------------------------
# areas along paths and the finite-difference oracle


def _taming_data(grid, Wt):
    """Pullback metric determinant and frame taming margins of a 2-form."""
    if not np.all(np.isfinite(Wt)):
        return np.full(grid.m, -np.inf), -np.inf
    Gt = metric_from_pair(Wt, grid.J)
    gt = np.einsum("mai,mab,mbj->mij", grid.Fx, Gt, grid.Fx)
    det = gt[:, 0, 0] * gt[:, 1, 1] - gt[:, 0, 1] ** 2
    E = grid.frames
    JE = np.einsum("mab,mbk->mak", grid.J, E)
    margins = np.einsum("mak,mab,mbk->mk", E, Wt, JE)
    return det, float(np.min(margins))


def area_at(grid: SurfaceGrid, path: DeformationPath, t: float):
    """Surface area in the t-metric of the path, with its taming margin.

    Returns (area, margin); area is nan when the pullback metric
    degenerates (margin records how taming failed).
    """
    Wt = path.omega_at(t)
    det, margin = _taming_data(grid, Wt)
    if not np.all(np.isfinite(det)) or np.any(det <= 0.0):
        return float("nan"), margin
    return float(grid.du * np.sum(np.sqrt(det))), margin


def area_along(grid: SurfaceGrid, path: DeformationPath, ts) -> tuple:
    areas = []
    margins = []
    for t in ts:
        a, mg = area_at(grid, path, t)
        areas.append(a)
        margins.append(mg)
    return np.asarray(areas), np.asarray(margins)


def taming_tmax(grid: SurfaceGrid, path: DeformationPath) -> tuple:
    """Parameter range (t_minus, t_plus) on which omega(t) verifiably
    tames J on the frame samples; closed form for linear paths, probed
    geometrically otherwise. Either entry may be inf."""
    if path.is_linear:
        E = grid.frames
        JE = np.einsum("mab,mbk->mak", grid.J, E)
        s = np.einsum("mak,mab,mbk->mk", E, path.omega_prime0(), JE).ravel()
        neg = s[s < -1e-14]
        pos = s[s > 1e-14]
        tplus = float(np.min(1.0 / -neg)) if neg.size else float("inf")
        tminus = float(np.min(1.0 / pos)) if pos.size else float("inf")
        return tminus, tplus

    def probe(sign):
        t = 1e-3
        good = 0.0
        for _ in range(14):
            _, margin = area_at(grid, path, sign * t)
            if not math.isfinite(margin) or margin <= 0.0:
                return good if good > 0.0 else 0.0
            good = t
            t *= 2.0
            if t > 4.0:
                break
        return good

    return probe(-1.0), probe(+1.0)


@dataclass
class OracleResult:
    """Finite-difference derivatives of the area along a path."""

    a0: float
    aprime: float
    asecond: float
    dt: float
    noise_floor_first: float
    noise_floor_second: float
    taming_truncated: bool
    taming_window: tuple
    min_margin: float

    def to_dict(self):
        return {
            "a0": self.a0,
            "aprime": self.aprime,
            "asecond": self.asecond,
            "dt": self.dt,
            "noise_floor_first": self.noise_floor_first,
            "noise_floor_second": self.noise_floor_second,
            "taming_truncated": self.taming_truncated,
            "taming_window": [self.taming_window[0], self.taming_window[1]],
            "min_margin": self.min_margin,
        }


def area_path_oracle(grid: SurfaceGrid, path: DeformationPath, dt: float = 1e-3) -> OracleResult:
    """Five-point stencil derivatives of t -> area(t), shrinking the step
    into the verified taming window when necessary."""
    tminus, tplus = taming_tmax(grid, path)
    dt_eff = dt
    cap = min(tminus, tplus)
    truncated = False
    if math.isfinite(cap) and 2.0 * dt_eff >= 0.5 * cap:
        dt_eff = 0.25 * cap / 2.0
        truncated = True
    ts = [-2 * dt_eff, -dt_eff, 0.0, dt_eff, 2 * dt_eff]
    areas, margins = area_along(grid, path, ts)
    if np.any(~np.isfinite(areas)) or np.any(margins <= 0.0):
        dt_eff = dt_eff / 8.0
        truncated = True
        ts = [-2 * dt_eff, -dt_eff, 0.0, dt_eff, 2 * dt_eff]
        areas, margins = area_along(grid, path, ts)
        if np.any(~np.isfinite(areas)):
            raise ConsistencyError(
                "taming fails even at the reduced oracle step; path unusable"
            )
    a0 = areas[2]
    eps = np.finfo(float).eps
    return OracleResult(
        a0=float(a0),
        aprime=float(fd.stencil_first(areas, dt_eff)),
        asecond=float(fd.stencil_second(areas, dt_eff)),
        dt=dt_eff,
        noise_floor_first=float(50.0 * eps * a0 / dt_eff),
        noise_floor_second=float(50.0 * eps * a0 / dt_eff**2),
        taming_truncated=truncated,
        taming_window=(float(tminus), float(tplus)),
        min_margin=float(np.min(margins)),
    )


# ---------------------------------------------------------------------------
# metric deformations (varying the surface and the ambient metric)


@dataclass
class MetricDeformation:
    """A variation field along the surface plus an ambient metric
    perturbation field h (symmetric matrices at chart points)."""

    Ft_nodes: Array  # (m, 2n)
    dFt_nodes: Array  # (m, 2n, 2)
    h_field: Callable  # x (m, 2n) -> (m, 2n, 2n)
    name: str = "metric"


def metric_deformation(grid: SurfaceGrid, Ft_fn, h_field, name="metric") -> MetricDeformation:
    """Build a deformation from a parameter-domain field u -> ambient
    vector; its u-derivatives come by central differences when no
    analytic Jacobian is available."""
    Ft = np.asarray(Ft_fn(grid.u_nodes), dtype=float)
    h = np.array([1e-5 * grid.surface.periods[0], 1e-5 * grid.surface.periods[1]])
    dFt = fd.field_jacobian(lambda U: np.asarray(Ft_fn(U), dtype=float), grid.u_nodes, h=h)
    return MetricDeformation(Ft, dFt, h_field, name)


def general_first_variation(grid: SurfaceGrid, deform: MetricDeformation) -> float:
    """First variation of area when both the immersion and the ambient
    metric move: (1/2) int tr_g(F* h) dmu - int <F_t, H> dmu."""
    h0 = np.asarray(deform.h_field(grid.x), dtype=float)
    pull = np.einsum("mai,mab,mbj->mij", grid.Fx, h0, grid.Fx)
    tr = np.einsum("mij,mij->m", grid.ginv, pull)
    gFH = np.einsum("ma,mab,mb->m", deform.Ft_nodes, grid.G, grid.mean_curvature)
    return 0.5 * grid.integrate(tr) - grid.integrate(gFH)


def metric_area_at(grid: SurfaceGrid, deform: MetricDeformation, t: float) -> float:
    """Requadratured area of the moved surface in the perturbed metric;
    the independent oracle for general_first_variation (flat models, so
    points can be translated along the variation field)."""
    if not grid.model.flat:
        raise ValueError("the metric-path oracle moves points; flat models only")
    xt = grid.x + t * deform.Ft_nodes
    dFt = grid.Fx + t * deform.dFt_nodes
    Gt = grid.model._metric_b(xt) + t * np.asarray(deform.h_field(xt), dtype=float)
    gt = np.einsum("mai,mab,mbj->mij", dFt, Gt, dFt)
    det = gt[:, 0, 0] * gt[:, 1, 1] - gt[:, 0, 1] ** 2
    if np.any(det <= 0.0):
        raise ConsistencyError("perturbed metric degenerates at the oracle step")
    return float(grid.du * np.sum(np.sqrt(det)))


def metric_first_variation_oracle(grid, deform, dt: float = 1e-3) -> float:
    areas = [metric_area_at(grid, deform, s) for s in (-2 * dt, -dt, 0.0, dt, 2 * dt)]
    return float(fd.stencil_first(areas, dt))


@dataclass
class DestabilizerPair:
    """The two conformal metric perturbations that force area strictly up
    and strictly down for any fixed variation field."""

    scale: float
    c0: float
    delta_up: float
    delta_down: float
    up: MetricDeformation
    down: MetricDeformation


def metric_scaling_destabilizers(grid: SurfaceGrid, deform: MetricDeformation) -> DestabilizerPair:
    """Conformal perturbations h = +/- 2 (C0 + 1) g with C0 the sup of
    |<F_t, H>|: the first variation is >= 2 area along one and
    <= -2 area along the other, whatever F_t does."""
    gFH = np.einsum("ma,mab,mb->m", deform.Ft_nodes, grid.G, grid.mean_curvature)
    c0 = float(np.max(np.abs(gFH)))
    scale = 2.0 * (c0 + 1.0)
    model = grid.model

    def h_up(x):
        return scale * model._metric_b(x)

    def h_down(x):
        return -scale * model._metric_b(x)

    up = MetricDeformation(deform.Ft_nodes, deform.dFt_nodes, h_up, "conformal-up")
    down = MetricDeformation(deform.Ft_nodes, deform.dFt_nodes, h_down, "conformal-down")
    return DestabilizerPair(
        scale=scale,
        c0=c0,
        delta_up=general_first_variation(grid, up),
        delta_down=general_first_variation(grid, down),
        up=up,
        down=down,
    )


# ---------------------------------------------------------------------------
# destabilization certificates


@dataclass
class VariationReport:
    """Outcome of the destabilization search on one surface."""

    surface: str
    resolution: tuple
    area: float
    certificate: str
    max_sin_alpha: float
    node: Optional[int]
    evidence: dict
    tolerances: dict
    d1: Optional[Array] = field(default=None, repr=False)
    d2: Optional[Array] = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        out = {
            "surface": self.surface,
            "resolution": list(self.resolution),
            "area": self.area,
            "certificate": self.certificate,
            "max_sin_alpha": self.max_sin_alpha,
            "node": self.node,
            "evidence": self.evidence,
            "tolerances": self.tolerances,
        }
        if self.d1 is not None:
            out["d1_max_abs"] = float(np.max(np.abs(self.d1)))
            out["d2_max_abs"] = float(np.max(np.abs(self.d2)))
        return out


def _conclusive(value, oracle: OracleResult, which: str, want_sign: int) -> dict:
    """Compare a formula value with its oracle and decide whether the
    evidence clears the numerical noise."""
    if which == "first":
        ov, floor = oracle.aprime, oracle.noise_floor_first
        tol = first_tolerance(ov)
    else:
        ov, floor = oracle.asecond, oracle.noise_floor_second
        tol = second_tolerance(ov)
    agree = abs(value - ov) <= tol
    clear = abs(value) > 10.0 * floor
    sign_ok = (value > 0) == (want_sign > 0) and (ov > 0) == (want_sign > 0)
    return {
        "formula": float(value),
        "oracle": float(ov),
        "difference": float(abs(value - ov)),
        "tolerance": float(tol),
        "noise_floor": float(floor),
        "agrees": bool(agree),
        "clears_noise": bool(clear),
        "sign_expected": int(want_sign),
        "conclusive": bool(agree and clear and sign_ok),
    }


def destabilize(grid: SurfaceGrid, seed: int = 0, dt: float = 1e-3) -> VariationReport:
    """Decide between a numerical holomorphicity certificate and explicit
    destabilizing potentials.

    Surfaces with everywhere-complex tangent planes get the holomorphic
    certificate (with a pullback-invariance witness). Otherwise the node
    of worst angle anchors three destabilization witnesses: the
    distance-squared potential (positive first variation), the
    normal-extended saddle (negative second variation along the linear
    path), and on projective models the paired holomorphic field's Lie
    path. Every witness carries its finite-difference oracle; if noise
    drowns any applicable witness the verdict is inconclusive.
    """
    rng = np.random.default_rng(seed)
    resolution = grid.shape
    evidence: dict = {}
    tolerances = {
        "first": "max(1e-6, 1e-3 |oracle|)",
        "second": "max(1e-5, 1e-2 |oracle|)",
        "holomorphic_angle": HOLOMORPHIC_TOL,
    }
    max_sa = float(np.max(grid.sin_alpha))

    if max_sa <= HOLOMORPHIC_TOL:
        expr = potentials.random_potential(grid.model, rng)
        jet = potentials.sample_jet(grid, expr)
        path = LinearPotentialPath(grid, jet, "witness-potential")
        ap = first_variation(grid, path)
        oracle = area_path_oracle(grid, path, dt)
        flat_enough = abs(ap) <= HOLOMORPHIC_TOL * grid.area
        oracle_flat = abs(oracle.aprime) <= first_tolerance(0.0) + oracle.noise_floor_first
        evidence["invariance"] = {
            "first_variation": float(ap),
            "oracle": oracle.to_dict(),
            "bound": float(HOLOMORPHIC_TOL * grid.area),
            "conclusive": bool(flat_enough and oracle_flat),
        }
        cert = "holomorphic" if flat_enough and oracle_flat else "inconclusive"
        return VariationReport(
            surface=grid.surface.name,
            resolution=resolution,
            area=grid.area,
            certificate=cert,
            max_sin_alpha=max_sa,
            node=None,
            evidence=evidence,
            tolerances=tolerances,
        )

    node = int(np.argmax(grid.sin_alpha))
    sa_q = float(grid.sin_alpha[node])

    dist_jet = potentials.distance_squared_jet(grid)
    path1 = LinearPotentialPath(grid, dist_jet, "distance-squared")
    ap1 = first_variation(grid, path1)
    sin2 = grid.integrate(grid.sin_alpha**2)
    oracle1 = area_path_oracle(grid, path1, dt)
    ev1 = _conclusive(ap1, oracle1, "first", +1)
    ev1["angle_integral"] = float(sin2)
    ev1["angle_integral_matches"] = bool(abs(ap1 - sin2) <= 1e-8 * max(1.0, abs(sin2)))
    evidence["distance_squared"] = ev1

    saddle_jet_full, _fn = potentials.saddle_potential(grid, node)
    path2 = LinearPotentialPath(grid, saddle_jet_full, "saddle-extension")
    as2 = second_variation_of_path(grid, path2)
    oracle2 = area_path_oracle(grid, path2, dt)
    ev2 = _conclusive(as2, oracle2, "second", -1)
    fjet = grid.saddle_jet(node)
    d2q = d2_decomposed(grid, node, fjet)
    ev2["d2_at_node"] = float(d2q)
    ev2["d2_expected"] = float(4.0 * sa_q**2)
    evidence["saddle"] = ev2
    D1, D2 = d_fields(grid, path2.omega_prime0())

    applicable = [evidence["distance_squared"]["conclusive"], evidence["saddle"]["conclusive"]]

    if isinstance(grid.model, ambient.FubiniStudyModel) and not grid.degenerate_mask[node]:
        spec = potentials.killing_for_pairing(grid, node, target=1.0)
        form = potentials.killing_variation_form(spec, grid)
        path3 = TwoFormLinearPath(grid, form, "paired-field-lie")
        as3 = second_variation_of_path(grid, path3)
        oracle3 = area_path_oracle(grid, path3, dt)
        ev3 = _conclusive(as3, oracle3, "second", -1)
        _, D2k = d_fields(grid, form)
        ev3["d2_at_node"] = float(D2k[node])
        ev3["d2_expected"] = float(-2.0 * sa_q)
        ev3["killing_defect"] = spec.killing_defect()
        evidence["paired_field"] = ev3
        applicable.append(ev3["conclusive"])

    cert = "destabilized" if all(applicable) else "inconclusive"
    return VariationReport(
        surface=grid.surface.name,
        resolution=resolution,
        area=grid.area,
        certificate=cert,
        max_sin_alpha=max_sa,
        node=node,
        evidence=evidence,
        tolerances=tolerances,
        d1=D1,
        d2=D2,
    )
