"""Deformation potentials sampled along a surface.

A potential jet stores value, gradient, and covariant Hessian of an
ambient scalar field at every grid node, together with its provenance.
Families of analytic chart fields live here, as do the two synthetic
jets (distance squared to the surface, normal extension of a surface
function) and the projective Killing-field constructions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import ambient, fd
from .ambient import (
    AmbientModel,
    ConsistencyError,
    FubiniStudyModel,
    complex_to_real_linear,
    from_complex,
    homogeneous_from_chart,
    to_complex,
)
from .surfaces import PeriodicSaddle, SurfaceFunction, SurfaceGrid

Array = np.ndarray


@dataclass
class PotentialJet:
    """Per-node 2-jet of a deformation potential along a surface."""

    value: Array  # (m,)
    grad: Array  # (m, 2n)
    hess: Array  # (m, 2n, 2n), covariant
    provenance: str
    field: object = None

    def scaled(self, factor: float) -> "PotentialJet":
        return PotentialJet(
            factor * self.value,
            factor * self.grad,
            factor * self.hess,
            self.provenance,
            self.field,
        )


def sample_jet(grid: SurfaceGrid, expr, provenance: str = "analytic") -> PotentialJet:
    """Evaluate an ambient chart field along the grid and covariantize."""
    x = grid.x
    value = np.asarray(expr.value(x), dtype=float)
    grad = np.asarray(expr.grad(x), dtype=float)
    hess = np.asarray(expr.partial_hess(x), dtype=float)
    if not grid.model.flat:
        hess = hess - np.einsum("mcab,mc->mab", grid.Gamma, grad)
    return PotentialJet(value, grad, hess, provenance, expr)


def ddc_along(grid: SurfaceGrid, jet: PotentialJet) -> Array:
    """Matrices (m, 2n, 2n) of dd^c psi at the grid nodes."""
    HJ = np.einsum("mab,mbc->mac", jet.hess, grid.J)
    out = np.swapaxes(HJ, 1, 2) - HJ
    if not grid.model.kahler:
        T = np.einsum("mk,makb->mab", jet.grad, grid.NJ)
        out = out + np.swapaxes(T, 1, 2) - T
    return out


# ---------------------------------------------------------------------------
# analytic chart field families


class FourierField:
    """Trigonometric polynomial on the chart (periodic on integer tori)."""

    def __init__(self, terms):
        # terms: list of (amplitude, wave vector of ints (2n,), phase)
        self.terms = [
            (float(A), np.asarray(k, dtype=float), float(p)) for A, k, p in terms
        ]

    def value(self, x):
        out = np.zeros(x.shape[0])
        for A, k, p in self.terms:
            out += A * np.cos(x @ k + p)
        return out

    def grad(self, x):
        out = np.zeros_like(x)
        for A, k, p in self.terms:
            out += -A * np.sin(x @ k + p)[:, None] * k[None, :]
        return out

    def partial_hess(self, x):
        d = x.shape[1]
        out = np.zeros((x.shape[0], d, d))
        for A, k, p in self.terms:
            out += -A * np.cos(x @ k + p)[:, None, None] * np.outer(k, k)[None]
        return out


class PolyField:
    """Polynomial in the chart coordinates."""

    def __init__(self, terms):
        # terms: list of (coefficient, exponent tuple (2n,))
        self.terms = [
            (float(c), np.asarray(e, dtype=int)) for c, e in terms
        ]

    def value(self, x):
        out = np.zeros(x.shape[0])
        for c, e in self.terms:
            out += c * np.prod(x ** e[None, :], axis=1)
        return out

    def grad(self, x):
        m, d = x.shape
        out = np.zeros((m, d))
        for c, e in self.terms:
            for a in range(d):
                if e[a] == 0:
                    continue
                ea = e.copy()
                ea[a] -= 1
                out[:, a] += c * e[a] * np.prod(x ** ea[None, :], axis=1)
        return out

    def partial_hess(self, x):
        m, d = x.shape
        out = np.zeros((m, d, d))
        for c, e in self.terms:
            for a in range(d):
                if e[a] == 0:
                    continue
                for b in range(d):
                    eab = e.copy()
                    eab[a] -= 1
                    if eab[b] == 0:
                        continue
                    coeff = c * e[a] * eab[b]
                    eab[b] -= 1
                    out[:, a, b] += coeff * np.prod(x ** eab[None, :], axis=1)
        return out


class BumpField:
    """Gaussian bump centered in the chart."""

    def __init__(self, center, width: float, amplitude: float = 1.0):
        self.center = np.asarray(center, dtype=float)
        self.width = float(width)
        self.amplitude = float(amplitude)

    def value(self, x):
        d = x - self.center[None, :]
        return self.amplitude * np.exp(-np.sum(d * d, axis=1) / (2.0 * self.width**2))

    def grad(self, x):
        d = x - self.center[None, :]
        return self.value(x)[:, None] * (-d / self.width**2)

    def partial_hess(self, x):
        d = (x - self.center[None, :]) / self.width**2
        v = self.value(x)
        outer = np.einsum("ma,mb->mab", d, d)
        eye = np.eye(x.shape[1])[None] / self.width**2
        return v[:, None, None] * (outer - eye)


class NumericalField:
    """Chart field given only by a value callable; derivatives by FD.

    Used for composed fields in oracles; the Hessian carries the usual
    second-difference noise, so tolerances stay at the 1e-6 scale.
    """

    def __init__(self, value_fn, grad_step=1e-6, hess_step=1e-4):
        self._value = value_fn
        self.grad_step = grad_step
        self.hess_step = hess_step

    def value(self, x):
        return np.asarray(self._value(x), dtype=float)

    def grad(self, x):
        return fd.gradient_scalar(self.value, x, h=self.grad_step)

    def partial_hess(self, x):
        return fd.hessian_scalar(self.value, x, h=self.hess_step)


def random_potential(model: AmbientModel, rng: np.random.Generator, kind: str = "auto"):
    """Draw a random chart field suited to the model's geometry."""
    d = model.dim
    if kind == "auto":
        kind = "fourier" if model.flat else "bump" if isinstance(model, FubiniStudyModel) else "fourier"
    if kind in ("fourier", "polynomial") and model.flat:
        # on torus quotients the periodic trigonometric polynomials play
        # the role of polynomial test potentials
        terms = []
        for _ in range(6):
            k = rng.integers(-2, 3, size=d)
            if not np.any(k):
                k[rng.integers(0, d)] = 1
            terms.append((0.05 * rng.standard_normal(), k, rng.uniform(0, 2 * np.pi)))
        return FourierField(terms)
    if kind == "polynomial":
        terms = []
        for _ in range(6):
            e = rng.integers(0, 2, size=d)
            if e.sum() > 3:
                e[: d // 2] = 0
            terms.append((0.05 * rng.standard_normal(), e))
        return PolyField(terms)
    if kind == "bump":
        center = 0.3 * rng.standard_normal(d)
        width = 0.6 + 0.4 * rng.uniform()
        return BumpField(center, width, 0.2 * rng.standard_normal() + 0.3)
    if kind == "fourier":
        terms = []
        for _ in range(6):
            k = rng.integers(-2, 3, size=d)
            if not np.any(k):
                k[rng.integers(0, d)] = 1
            terms.append((0.05 * rng.standard_normal(), k, rng.uniform(0, 2 * np.pi)))
        return FourierField(terms)
    raise ValueError(f"unknown potential kind '{kind}'")


# ---------------------------------------------------------------------------
# synthetic jets


def distance_squared_jet(grid: SurfaceGrid) -> PotentialJet:
    """Jet of half the squared ambient distance to the surface, along the
    surface itself: zero value and gradient, Hessian the normal projector
    lowered by the metric."""
    GN = grid.lowered_frames[:, :, 2:]
    hess = np.einsum("mas,mbs->mab", GN, GN)
    return PotentialJet(
        np.zeros(grid.m),
        np.zeros((grid.m, grid.model.dim)),
        hess,
        "distance-squared",
    )


def normal_extension_jet(grid: SurfaceGrid, fn: SurfaceFunction) -> PotentialJet:
    """Jet along the surface of the extension of fn that is constant on
    normal geodesics: tangential data agree with the intrinsic jet, the
    normal-normal Hessian block vanishes, and the mixed block is carried
    by the second fundamental form."""
    fg, ih = grid.function_jets(fn)
    h = grid.second_fundamental
    mixed = np.einsum("msij,mj->mis", h, fg)
    Hfr = np.zeros((grid.m, 4, 4))
    Hfr[:, :2, :2] = ih
    Hfr[:, :2, 2:] = mixed
    Hfr[:, 2:, :2] = np.swapaxes(mixed, 1, 2)
    GE = grid.lowered_frames
    value = np.asarray(fn.value(grid.u_nodes), dtype=float)
    grad = np.einsum("mi,mai->ma", fg, GE[:, :, :2])
    hess = np.einsum("mkl,mak,mbl->mab", Hfr, GE, GE)
    return PotentialJet(value, grad, hess, "normal-extension", fn)


def saddle_potential(grid: SurfaceGrid, node: int):
    """Normal extension of the periodic saddle anchored at a node.

    Returns the potential jet together with the underlying surface
    function; the intrinsic 2-jet at the anchor is exactly the node's
    saddle jet."""
    fn = PeriodicSaddle(grid, node)
    return normal_extension_jet(grid, fn), fn


# ---------------------------------------------------------------------------
# ambient one-forms


class AmbientOneForm:
    """1-form on the chart with components (m, 2n); exterior derivative by
    central differences unless an analytic one is supplied."""

    def __init__(self, coeff_field, exterior_field=None):
        self.coeff_field = coeff_field
        self.exterior_field = exterior_field

    def coeffs(self, x):
        return np.asarray(self.coeff_field(x), dtype=float)

    def exterior(self, x):
        if self.exterior_field is not None:
            return np.asarray(self.exterior_field(x), dtype=float)
        return fd.one_form_exterior(self.coeff_field, x)


def random_one_form(model: AmbientModel, rng: np.random.Generator) -> AmbientOneForm:
    """Small random exact-free 1-form: trigonometric on flat models, a
    bump-windowed constant covector elsewhere."""
    d = model.dim
    if model.flat:
        ks = rng.integers(-2, 3, size=(d, d))
        amps = 0.05 * rng.standard_normal(d)
        phases = rng.uniform(0, 2 * np.pi, size=d)

        def coeffs(x):
            out = np.empty((x.shape[0], d))
            for b in range(d):
                k = ks[b]
                if not np.any(k):
                    k = np.eye(d, dtype=int)[b]
                out[:, b] = amps[b] * np.cos(x @ k + phases[b])
            return out

        return AmbientOneForm(coeffs)
    center = 0.3 * rng.standard_normal(d)
    covec = 0.1 * rng.standard_normal(d)
    width = 0.8

    def coeffs(x):
        dd = x - center[None, :]
        w = np.exp(-np.sum(dd * dd, axis=1) / (2.0 * width**2))
        return w[:, None] * covec[None, :]

    return AmbientOneForm(coeffs)


# ---------------------------------------------------------------------------
# projective Killing fields


class KillingSpec:
    """Holomorphic vector field on CP^N from a matrix of homogeneous
    coefficients, taken as a real field (or its 90-degree rotation).

    The chart components of the homogeneous field are
    X_j = -a00 z_j - sum_i a_i0 z_i z_j + a_0j + sum_i a_ij z_i,
    and the real field is half of X (half of -iX for the rotated part),
    matching the flow Z' = (1/2) a^T Z upstairs. The field is Killing
    for the chart metric iff the effective matrix is anti-Hermitian up
    to a real multiple of the identity.
    """

    def __init__(self, model: FubiniStudyModel, a: Array, part: str = "real"):
        if part not in ("real", "imaginary"):
            raise ValueError("part must be 'real' or 'imaginary'")
        self.model = model
        self.a = np.asarray(a, dtype=complex)
        if self.a.shape != (model.N + 1, model.N + 1):
            raise ValueError("coefficient matrix has the wrong shape")
        self.part = part
        self.a_eff = self.a if part == "real" else -1.0j * self.a

    # -- chart field ---------------------------------------------------------

    def _X(self, z: Array) -> Array:
        a = self.a_eff
        lin = z @ a[1:, 1:]
        quad = (z @ a[1:, 0])[:, None] * z
        return -a[0, 0] * z - quad + a[0, 1:][None, :] + lin

    def _dX(self, z: Array) -> Array:
        """Complex Jacobian dX[m, j, k] = dX_j / dz_k."""
        a = self.a_eff
        m, N = z.shape
        out = np.empty((m, N, N), dtype=complex)
        base = a[1:, 1:].T[None, :, :] - (
            a[0, 0] + z @ a[1:, 0]
        )[:, None, None] * np.eye(N)[None]
        out[:] = base
        out -= np.einsum("mj,k->mjk", z, a[1:, 0])
        return out

    def field(self, x) -> Array:
        xb, single = ambient._nodes(x)
        V = 0.5 * from_complex(self._X(to_complex(xb)))
        return V[0] if single else V

    def jacobian(self, x) -> Array:
        xb, single = ambient._nodes(x)
        out = complex_to_real_linear(0.5 * self._dX(to_complex(xb)))
        return out[0] if single else out

    def covariant_jacobian(self, x) -> Array:
        """M[m, c, b] = (nabla_b V)^c with the chart Levi-Civita connection."""
        xb, single = ambient._nodes(x)
        dV = complex_to_real_linear(0.5 * self._dX(to_complex(xb)))
        gamma = self.model._christoffel_b(xb)
        V = 0.5 * from_complex(self._X(to_complex(xb)))
        out = dV + np.einsum("mcbd,md->mcb", gamma, V)
        return out[0] if single else out

    # -- diagnostics ---------------------------------------------------------

    def killing_defect(self) -> float:
        """Distance of the effective matrix from the anti-Hermitian matrices
        modulo real multiples of the identity; zero iff the field is a
        genuine isometry generator."""
        K = self.a_eff + self.a_eff.conj().T
        s = np.trace(K).real / (self.model.N + 1)
        return float(np.linalg.norm(K - s * np.eye(self.model.N + 1)))

    def lie_metric_residual(self, x) -> float:
        """max |(L_V g)(x)| over the sample points, via an FD Jacobian."""
        xb, _ = ambient._nodes(x)
        dV = fd.field_jacobian(lambda p: self.field(p), xb, h=1e-5)
        gamma = self.model._christoffel_b(xb)
        V = self.field(xb)
        M = dV + np.einsum("mcbd,md->mcb", gamma, V)
        GM = np.einsum("mac,mcb->mab", self.model._metric_b(xb), M)
        return float(np.max(np.abs(GM + np.swapaxes(GM, 1, 2))))

    def flow(self, x, t: float, steps: int = 64) -> Array:
        """RK4 integration of the chart flow of the field."""
        xb, single = ambient._nodes(x)
        z = to_complex(xb)
        n = max(1, int(steps))
        h = t / n
        for _ in range(n):
            k1 = 0.5 * self._X(z)
            k2 = 0.5 * self._X(z + 0.5 * h * k1)
            k3 = 0.5 * self._X(z + 0.5 * h * k2)
            k4 = 0.5 * self._X(z + h * k3)
            z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out = from_complex(z)
        return out[0] if single else out


def killing_from_matrix(model: FubiniStudyModel, a, part: str = "real") -> KillingSpec:
    return KillingSpec(model, a, part)


def killing_for_pairing(grid: SurfaceGrid, node: int, target: float = 1.0) -> KillingSpec:
    """Holomorphic field whose covariant derivative pairs the tangent and
    normal frame legs at the given node with strength set by target.

    Built in the unitary gauge that moves the node to the chart origin:
    there the coefficient matrix has a single rank-one block coupling the
    first tangent leg to the first normal leg. With the scaling
    2 target / (1 + cos^2 alpha), the pairing
    <nabla_{e1} V, e3> + <nabla_{e2} V, e4> equals target at the node;
    without it (target = None) the pairing is (1 + cos^2 alpha) / 2.
    """
    model = grid.model
    if not isinstance(model, FubiniStudyModel):
        raise TypeError("pairing fields live on the projective models")
    frame = grid.adapted_frame(node)
    if frame.degenerate:
        raise ValueError("pairing construction needs a nondegenerate frame")
    q = grid.x[node]
    motion = model.normalize_at(q)
    D = motion.chart_jacobian(q)
    R = [D @ to_complex(frame.E[:, k]) for k in range(4)]
    O = np.einsum("i,j->ij", R[0].conj(), R[2])
    if target is None:
        lam = 1.0
    else:
        lam = 2.0 * float(target) / (1.0 + frame.cos_alpha**2)
    ap = np.zeros((model.N + 1, model.N + 1), dtype=complex)
    ap[1:, 1:] = lam * O
    U = motion.matrix
    a = U.T @ ap @ U.conj()
    return KillingSpec(model, a, part="real")


def normal_pairing(spec: KillingSpec, grid: SurfaceGrid, node: int) -> float:
    """<nabla_{e1} V, e3> + <nabla_{e2} V, e4> at a node."""
    M = spec.covariant_jacobian(grid.x[node])
    E = grid.frames[node]
    Gl = grid.lowered_frames[node]
    return float((M @ E[:, 0]) @ Gl[:, 2] + (M @ E[:, 1]) @ Gl[:, 3])


def covariant_norm_sq(spec: KillingSpec, grid: SurfaceGrid, node: int) -> float:
    """|nabla V|^2 at a node: full metric contraction of the covariant
    Jacobian."""
    x = grid.x[node]
    M = spec.covariant_jacobian(x)
    G = grid.G[node]
    Ginv = np.linalg.inv(G)
    return float(np.einsum("ab,cd,ca,db->", Ginv, G, M, M))


def killing_variation_form(spec: KillingSpec, grid: SurfaceGrid, check_tol: float = 1e-4) -> Array:
    """Node matrices of the Lie derivative of omega along J V.

    Computed covariantly (valid because the projective structure is
    parallel) and cross-checked against the finite-difference exterior
    derivative of the contraction of omega with the field; disagreement
    beyond check_tol raises ConsistencyError.
    """
    x = grid.x
    J0 = ambient.standard_complex_structure(grid.model.N)

    def W_field(pts):
        return np.einsum("ab,mb->ma", J0, spec.field(pts))

    Wf = W_field(x)
    MV = spec.covariant_jacobian(x)
    MW = np.einsum("cd,mdb->mcb", J0, MV)
    Wm = grid.W
    L_cov = np.einsum("mca,mcb->mab", MW, Wm) + np.einsum(
        "mac,mcb->mab", Wm, MW
    )

    def contraction(pts):
        Wmp = grid.model._omega_b(pts)
        return np.einsum("ma,mab->mb", W_field(pts), Wmp)

    L_fd = fd.one_form_exterior(contraction, x)
    err = float(np.max(np.abs(L_cov - L_fd)))
    if err > check_tol:
        raise ConsistencyError(
            f"Lie-derivative routes disagree by {err:.3e} (tol {check_tol:.1e})"
        )
    return L_cov
