"""Closed parametrized surfaces on a periodic grid.

A surface is an immersion of a flat 2-torus parameter domain into an
ambient chart. The grid caches the induced metric, the angle between
the tangent plane and the complex structure, adapted frames, the second
fundamental form, and quadrature data for every node of a uniform
periodic grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import ambient, fd
from .ambient import AmbientModel

Array = np.ndarray

DEGENERACY_TAU = 1e-8


@dataclass
class ParamSurface:
    """Doubly periodic immersion u -> chart coordinates, with derivatives.

    F maps (m, 2) parameter rows to (m, 2n) chart rows; dF returns
    (m, 2n, 2); d2F (m, 2n, 2, 2) may be omitted, in which case it is
    derived from dF by central differences.
    """

    name: str
    model: AmbientModel
    F: Callable
    dF: Callable
    periods: tuple
    d2F: Optional[Callable] = None

    def second_derivatives(self, U: Array) -> Array:
        if self.d2F is not None:
            return np.asarray(self.d2F(U), dtype=float)
        h = np.array([1e-5 * self.periods[0], 1e-5 * self.periods[1]])
        return fd.field_jacobian(self.dF, U, h=h)


@dataclass
class AdaptedFrame:
    """Orthonormal frame (e1..e4 as columns of E) adapted to the tangent
    plane at one node, with the angle data and a degeneracy flag."""

    E: Array
    cos_alpha: float
    sin_alpha: float
    degenerate: bool


@dataclass
class SecondFundamentalForm:
    """Normal components h[s, i, j] of the frame covariant derivatives at
    one node: s indexes the normal legs e3, e4; i, j the tangent legs."""

    h: Array


class SurfaceFunction:
    """Scalar function on the parameter torus with an analytic 2-jet."""

    def value(self, U: Array) -> Array:
        raise NotImplementedError

    def grad(self, U: Array) -> Array:
        raise NotImplementedError

    def hess(self, U: Array) -> Array:
        raise NotImplementedError


@dataclass
class SurfaceFunctionJet:
    """Intrinsic 2-jet of a surface function at one node, in the frame
    basis: gradient components along e1, e2 and the covariant Hessian."""

    node: int
    value: float
    frame_grad: Array
    frame_hess: Array


class ImmersionError(ValueError):
    """The sampled map fails to be an immersion at some node."""


class SurfaceGrid:
    """Uniform periodic sampling of a parametrized surface.

    Nodes are row-major: node index m = i1 * n2 + i2 samples parameters
    (i1 L1 / n1, i2 L2 / n2). All cached arrays are indexed by that m.
    """

    def __init__(self, surface: ParamSurface, resolution=64, tau: float = DEGENERACY_TAU):
        self.surface = surface
        self.model = surface.model
        if np.isscalar(resolution):
            resolution = (int(resolution), int(resolution))
        self.shape = (int(resolution[0]), int(resolution[1]))
        if min(self.shape) < 4:
            raise ValueError("grid needs at least 4 nodes per period")
        self.tau = tau
        L1, L2 = surface.periods
        n1, n2 = self.shape
        u1 = (L1 / n1) * np.arange(n1)
        u2 = (L2 / n2) * np.arange(n2)
        self.u_nodes = np.stack([np.repeat(u1, n2), np.tile(u2, n1)], axis=1)
        self.du = (L1 / n1) * (L2 / n2)
        self.m = n1 * n2

    # -- sampled ambient data ------------------------------------------------

    @cached_property
    def x(self) -> Array:
        x = np.asarray(self.surface.F(self.u_nodes), dtype=float)
        if not self.model.in_domain(x):
            raise ValueError("surface leaves the model chart domain")
        return x

    @cached_property
    def Fx(self) -> Array:
        return np.asarray(self.surface.dF(self.u_nodes), dtype=float)

    @cached_property
    def d2F(self) -> Array:
        return self.surface.second_derivatives(self.u_nodes)

    @cached_property
    def W(self) -> Array:
        return self.model._omega_b(self.x)

    @cached_property
    def J(self) -> Array:
        return self.model._J_b(self.x)

    @cached_property
    def G(self) -> Array:
        return self.model._metric_b(self.x)

    @cached_property
    def Gamma(self) -> Array:
        return self.model._christoffel_b(self.x)

    @cached_property
    def NJ(self) -> Array:
        return self.model._nabla_J_b(self.x)

    # -- induced geometry ----------------------------------------------------

    @cached_property
    def g(self) -> Array:
        return np.einsum("mai,mab,mbj->mij", self.Fx, self.G, self.Fx)

    @cached_property
    def detg(self) -> Array:
        g = self.g
        det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] ** 2
        if np.any(det <= 0) or np.any(g[:, 0, 0] <= 0):
            raise ImmersionError(
                f"induced metric degenerates on '{self.surface.name}'"
            )
        return det

    @cached_property
    def ginv(self) -> Array:
        g = self.g
        out = np.empty_like(g)
        out[:, 0, 0] = g[:, 1, 1]
        out[:, 1, 1] = g[:, 0, 0]
        out[:, 0, 1] = -g[:, 0, 1]
        out[:, 1, 0] = -g[:, 0, 1]
        return out / self.detg[:, None, None]

    @cached_property
    def dmu(self) -> Array:
        return np.sqrt(self.detg)

    @cached_property
    def omega_pullback(self) -> Array:
        return np.einsum("ma,mab,mb->m", self.Fx[:, :, 0], self.W, self.Fx[:, :, 1])

    @cached_property
    def cos_alpha(self) -> Array:
        return np.clip(self.omega_pullback / self.dmu, -1.0, 1.0)

    @cached_property
    def sin_alpha(self) -> Array:
        return np.sqrt(np.maximum(0.0, 1.0 - self.cos_alpha**2))

    @cached_property
    def alpha(self) -> Array:
        return np.arccos(self.cos_alpha)

    @cached_property
    def degenerate_mask(self) -> Array:
        return self.sin_alpha <= self.tau

    # -- adapted frames ------------------------------------------------------

    @cached_property
    def gs_coeffs(self) -> Array:
        """Rows a[i, :] expressing e_i = sum_k a[i, k] F_k (Gram-Schmidt)."""
        g = self.g
        g11 = g[:, 0, 0]
        g12 = g[:, 0, 1]
        t2 = np.sqrt(self.detg / g11)
        a = np.zeros((self.m, 2, 2))
        a[:, 0, 0] = 1.0 / np.sqrt(g11)
        a[:, 1, 0] = -g12 / (g11 * t2)
        a[:, 1, 1] = 1.0 / t2
        return a

    @cached_property
    def frames(self) -> Array:
        """Adapted orthonormal frames, shape (m, 2n, 4), columns e1..e4.

        Where the tangent plane is complex or anticomplex the defining
        formulas for e3, e4 degenerate; those nodes fall back to a
        Gram-Schmidt completion and are flagged in degenerate_mask.
        """
        dim = self.model.dim
        E = np.zeros((self.m, dim, 4))
        E[:, :, :2] = np.einsum("mik,mck->mci", self.gs_coeffs, self.Fx)
        e1 = E[:, :, 0]
        e2 = E[:, :, 1]
        Je1 = np.einsum("mab,mb->ma", self.J, e1)
        Je2 = np.einsum("mab,mb->ma", self.J, e2)
        ca = self.cos_alpha[:, None]
        mask = self.degenerate_mask
        sa_safe = np.where(mask, 1.0, self.sin_alpha)[:, None]
        e3 = (Je1 - ca * e2) / sa_safe
        e4 = -(Je2 + ca * e1) / sa_safe
        if np.any(mask):
            G = self.G
            Ge1 = np.einsum("mab,mb->ma", G, e1)
            Ge2 = np.einsum("mab,mb->ma", G, e2)
            # candidate (coordinate direction) minus tangential projection
            Wc = (
                np.broadcast_to(np.eye(dim), (self.m, dim, dim)).copy()
                - np.einsum("ma,mc->mac", e1, Ge1)
                - np.einsum("ma,mc->mac", e2, Ge2)
            )
            score = np.einsum("mac,mab,mbc->mc", Wc, G, Wc)
            best = np.argmax(score, axis=1)
            w = np.take_along_axis(Wc, best[:, None, None], axis=2)[:, :, 0]
            nrm = np.sqrt(np.take_along_axis(score, best[:, None], axis=1))[:, 0]
            e3f = w / nrm[:, None]
            sign = np.where(self.cos_alpha >= 0.0, 1.0, -1.0)[:, None]
            e4f = sign * np.einsum("mab,mb->ma", self.J, e3f)
            m2 = mask[:, None]
            e3 = np.where(m2, e3f, e3)
            e4 = np.where(m2, e4f, e4)
        E[:, :, 2] = e3
        E[:, :, 3] = e4
        return E

    @cached_property
    def lowered_frames(self) -> Array:
        """G @ e_k for each frame leg, shape (m, 2n, 4)."""
        return np.einsum("mab,mbk->mak", self.G, self.frames)

    def adapted_frame(self, node: int) -> AdaptedFrame:
        return AdaptedFrame(
            E=self.frames[node],
            cos_alpha=float(self.cos_alpha[node]),
            sin_alpha=float(self.sin_alpha[node]),
            degenerate=bool(self.degenerate_mask[node]),
        )

    # -- curvature data ------------------------------------------------------

    @cached_property
    def covariant_d2F(self) -> Array:
        """Ambient covariant second derivatives DD[m, c, i, j]."""
        return self.d2F + np.einsum(
            "mcab,mai,mbj->mcij", self.Gamma, self.Fx, self.Fx
        )

    @cached_property
    def second_fundamental(self) -> Array:
        """h[m, s, i, j]: normal components (s = 0 for e3, 1 for e4) of the
        covariant derivative of the adapted tangent frame."""
        normal_dot = np.einsum(
            "mckl,mcs->mkls", self.covariant_d2F, self.lowered_frames[:, :, 2:]
        )
        a = self.gs_coeffs
        return np.einsum("mik,mjl,mkls->msij", a, a, normal_dot)

    def second_fundamental_form(self, node: int) -> SecondFundamentalForm:
        return SecondFundamentalForm(h=self.second_fundamental[node])

    @cached_property
    def mean_curvature(self) -> Array:
        """Mean curvature vectors (m, 2n): normal part of tr_g DD."""
        tr = np.einsum("mkl,mckl->mc", self.ginv, self.covariant_d2F)
        tang = np.einsum("mc,mck->mk", tr, self.lowered_frames[:, :, :2])
        return tr - np.einsum("mk,mck->mc", tang, self.frames[:, :, :2])

    @cached_property
    def mean_curvature_norm(self) -> Array:
        H = self.mean_curvature
        return np.sqrt(np.einsum("ma,mab,mb->m", H, self.G, H))

    @cached_property
    def induced_christoffels(self) -> Array:
        """Christoffel symbols (m, 2, 2, 2) of the induced metric on the
        parameter domain, by central differences in u."""
        surface = self.surface

        def metric_of_u(U):
            xs = np.asarray(surface.F(U), dtype=float)
            dFs = np.asarray(surface.dF(U), dtype=float)
            Gs = self.model._metric_b(xs)
            return np.einsum("mai,mab,mbj->mij", dFs, Gs, dFs)

        h = np.array([1e-5 * surface.periods[0], 1e-5 * surface.periods[1]])
        return fd.christoffels_from_metric(metric_of_u, self.u_nodes, h=h)

    # -- integration ---------------------------------------------------------

    @cached_property
    def area(self) -> float:
        return float(self.du * np.sum(self.dmu))

    def integrate(self, values: Array) -> float:
        """Integral of a node-sampled scalar against the area measure."""
        return float(self.du * np.sum(np.asarray(values) * self.dmu))

    def integrate_pullback(self, two_form: Array) -> float:
        """Integral of the surface pullback of a 2-form given at the nodes
        as matrices (m, 2n, 2n); no area-measure factor enters."""
        dens = np.einsum(
            "ma,mab,mb->m", self.Fx[:, :, 0], two_form, self.Fx[:, :, 1]
        )
        return float(self.du * np.sum(dens))

    # -- surface functions ---------------------------------------------------

    def function_jets(self, fn: SurfaceFunction):
        """Frame gradient (m, 2) and intrinsic covariant Hessian (m, 2, 2)
        of a parameter-domain function at every node."""
        pg = np.asarray(fn.grad(self.u_nodes), dtype=float)
        ph = np.asarray(fn.hess(self.u_nodes), dtype=float)
        cov = ph - np.einsum("mckl,mc->mkl", self.induced_christoffels, pg)
        a = self.gs_coeffs
        frame_grad = np.einsum("mik,mk->mi", a, pg)
        frame_hess = np.einsum("mik,mjl,mkl->mij", a, a, cov)
        return frame_grad, frame_hess

    def saddle_jet(self, node: int) -> SurfaceFunctionJet:
        """The test jet at a node: critical point with intrinsic Hessian
        diag(2, -2). Fails on a degenerate induced metric (cannot happen
        for an immersion, but kept as an explicit guard)."""
        if not np.isfinite(self.detg[node]) or self.detg[node] <= 0:
            raise ImmersionError("saddle jet needs a nondegenerate metric")
        return SurfaceFunctionJet(
            node=int(node),
            value=0.0,
            frame_grad=np.zeros(2),
            frame_hess=np.diag([2.0, -2.0]),
        )


class PeriodicSaddle(SurfaceFunction):
    """Globally defined periodic function whose 2-jet at the anchor node
    is exactly the saddle jet of that node."""

    def __init__(self, grid: SurfaceGrid, node: int):
        self.anchor = grid.u_nodes[node].copy()
        self.periods = tuple(grid.surface.periods)
        a = grid.gs_coeffs[node]
        ainv = np.array(
            [[1.0 / a[0, 0], 0.0], [-a[1, 0] / (a[0, 0] * a[1, 1]), 1.0 / a[1, 1]]]
        )
        self.Hp = ainv @ np.diag([2.0, -2.0]) @ ainv.T

    def _s(self, U):
        L = np.asarray(self.periods)
        w = 2.0 * np.pi / L
        arg = w * (U - self.anchor)
        return np.sin(arg) / w, np.cos(arg), -w * np.sin(arg)

    def value(self, U):
        s, _, _ = self._s(np.asarray(U, dtype=float))
        return 0.5 * np.einsum("ab,ma,mb->m", self.Hp, s, s)

    def grad(self, U):
        s, s1, _ = self._s(np.asarray(U, dtype=float))
        return s1 * np.einsum("cb,mb->mc", self.Hp, s)

    def hess(self, U):
        s, s1, s2 = self._s(np.asarray(U, dtype=float))
        out = np.einsum("mc,cd,md->mcd", s1, self.Hp, s1)
        diag = s2 * np.einsum("cb,mb->mc", self.Hp, s)
        out[:, 0, 0] += diag[:, 0]
        out[:, 1, 1] += diag[:, 1]
        return out


class TrigSurfaceFunction(SurfaceFunction):
    """Small trigonometric polynomial on the parameter torus."""

    def __init__(self, terms, periods):
        # terms: list of (amplitude, (k1, k2), phase) with integer k
        self.terms = [(float(A), np.asarray(k, dtype=float), float(p)) for A, k, p in terms]
        self.w = 2.0 * np.pi / np.asarray(periods, dtype=float)

    def value(self, U):
        U = np.asarray(U, dtype=float)
        out = np.zeros(U.shape[0])
        for A, k, p in self.terms:
            out += A * np.cos(U @ (k * self.w) + p)
        return out

    def grad(self, U):
        U = np.asarray(U, dtype=float)
        out = np.zeros_like(U)
        for A, k, p in self.terms:
            kv = k * self.w
            out += -A * np.sin(U @ kv + p)[:, None] * kv[None, :]
        return out

    def hess(self, U):
        U = np.asarray(U, dtype=float)
        out = np.zeros((U.shape[0], 2, 2))
        for A, k, p in self.terms:
            kv = k * self.w
            out += -A * np.cos(U @ kv + p)[:, None, None] * np.einsum(
                "a,b->ab", kv, kv
            )[None]
        return out


# ---------------------------------------------------------------------------
# the surface catalog


def affine_torus_surface(
    name: str,
    direction1,
    direction2,
    offset,
    periods,
    model: Optional[AmbientModel] = None,
) -> ParamSurface:
    """Affine sub-torus of flat T^4: F(u) = offset + u1 d1 + u2 d2."""
    d1 = np.asarray(direction1, dtype=float)
    d2 = np.asarray(direction2, dtype=float)
    off = np.asarray(offset, dtype=float)
    if model is None:
        model = ambient.flat_model(len(d1) // 2, "t4")

    def F(U):
        return off[None, :] + np.outer(U[:, 0], d1) + np.outer(U[:, 1], d2)

    def dF(U):
        out = np.empty((U.shape[0], len(d1), 2))
        out[:, :, 0] = d1
        out[:, :, 1] = d2
        return out

    def d2F(U):
        return np.zeros((U.shape[0], len(d1), 2, 2))

    return ParamSurface(name, model, F, dF, tuple(periods), d2F)


def _torus_of_circles(name, model, radius):
    r = float(radius)

    def F(U):
        c1, s1 = np.cos(U[:, 0]), np.sin(U[:, 0])
        c2, s2 = np.cos(U[:, 1]), np.sin(U[:, 1])
        return r * np.stack([c1, s1, c2, s2], axis=1)

    def dF(U):
        out = np.zeros((U.shape[0], 4, 2))
        out[:, 0, 0] = -r * np.sin(U[:, 0])
        out[:, 1, 0] = r * np.cos(U[:, 0])
        out[:, 2, 1] = -r * np.sin(U[:, 1])
        out[:, 3, 1] = r * np.cos(U[:, 1])
        return out

    def d2F(U):
        out = np.zeros((U.shape[0], 4, 2, 2))
        out[:, 0, 0, 0] = -r * np.cos(U[:, 0])
        out[:, 1, 0, 0] = -r * np.sin(U[:, 0])
        out[:, 2, 1, 1] = -r * np.cos(U[:, 1])
        out[:, 3, 1, 1] = -r * np.sin(U[:, 1])
        return out

    return ParamSurface(name, model, F, dF, (2.0 * np.pi, 2.0 * np.pi), d2F)


def _perturbed_tilted_surface():
    model = ambient.flat_model(2, "t4")
    d1 = np.array([1.0, 0.0, 0.0, 0.0])
    d2 = np.array([0.0, 0.6, 0.8, 0.0])
    n1 = np.array([0.0, -0.8, 0.6, 0.0])
    n2 = np.array([0.0, 0.0, 0.0, 1.0])
    eps = 0.12
    L2 = 10.0 * np.pi

    # phases periodic on [0, 2pi) x [0, 10pi)
    def phases(U):
        return U[:, 0], U[:, 1] / 5.0, 2.0 * U[:, 1] / 5.0

    def F(U):
        p, q1, q2 = phases(U)
        base = np.outer(U[:, 0], d1) + np.outer(U[:, 1], d2)
        bump = eps * (
            np.outer(np.sin(p) * np.cos(q1), n1)
            + np.outer(np.cos(p) * np.sin(q2), n2)
        )
        return base + bump

    def dF(U):
        p, q1, q2 = phases(U)
        out = np.empty((U.shape[0], 4, 2))
        out[:, :, 0] = d1[None, :] + eps * (
            np.outer(np.cos(p) * np.cos(q1), n1)
            - np.outer(np.sin(p) * np.sin(q2), n2)
        )
        out[:, :, 1] = d2[None, :] + eps * (
            np.outer(-np.sin(p) * np.sin(q1) / 5.0, n1)
            + np.outer(np.cos(p) * np.cos(q2) * 2.0 / 5.0, n2)
        )
        return out

    def d2F(U):
        p, q1, q2 = phases(U)
        out = np.empty((U.shape[0], 4, 2, 2))
        out[:, :, 0, 0] = eps * (
            np.outer(-np.sin(p) * np.cos(q1), n1)
            - np.outer(np.cos(p) * np.sin(q2), n2)
        )
        cross = eps * (
            np.outer(-np.cos(p) * np.sin(q1) / 5.0, n1)
            - np.outer(np.sin(p) * np.cos(q2) * 2.0 / 5.0, n2)
        )
        out[:, :, 0, 1] = cross
        out[:, :, 1, 0] = cross
        out[:, :, 1, 1] = eps * (
            np.outer(-np.sin(p) * np.cos(q1) / 25.0, n1)
            - np.outer(np.cos(p) * np.sin(q2) * 4.0 / 25.0, n2)
        )
        return out

    return ParamSurface("t4-perturbed", model, F, dF, (2.0 * np.pi, L2), d2F)


CATALOG = (
    "t4-holomorphic",
    "t4-tilted-3-4-5",
    "cp2-clifford",
    "c2-circle-product",
    "t4-perturbed",
)


def make_surface(name: str) -> ParamSurface:
    """Build a catalog surface by name; raises KeyError on unknown names."""
    two_pi = 2.0 * np.pi
    if name == "t4-holomorphic":
        return affine_torus_surface(
            name,
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.3, 0.7],
            (two_pi, two_pi),
        )
    if name == "t4-tilted-3-4-5":
        return affine_torus_surface(
            name,
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.6, 0.8, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            (two_pi, 10.0 * np.pi),
        )
    if name == "cp2-clifford":
        return _torus_of_circles(name, ambient.fubini_study_model(2), 1.0)
    if name == "c2-circle-product":
        return _torus_of_circles(name, ambient.flat_model(2, "c2"), 1.0 / np.sqrt(2.0))
    if name == "t4-perturbed":
        return _perturbed_tilted_surface()
    if name == "t4-squeezed":
        return affine_torus_surface(
            name,
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.3, 0.7],
            (two_pi, two_pi),
            model=ambient.squeezed_torus_model(),
        )
    raise KeyError(f"unknown surface '{name}'")
