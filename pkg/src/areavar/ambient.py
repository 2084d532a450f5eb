"""Chart-based ambient models.

An ambient model packages a symplectic form and an almost complex
structure on one real chart of dimension 2n, together with the derived
compatible metric, its Levi-Civita connection, and the covariant
derivative of the complex structure. Real coordinates interleave the
complex ones: point (x1, y1, ..., xn, yn) encodes (x1 + i y1, ...).

The module also carries the d^c calculus for scalar fields and the
projective-space model with its chart bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import fd

Array = np.ndarray


class ConsistencyError(RuntimeError):
    """Two supposedly equivalent numerical routes disagreed beyond tolerance."""


# ---------------------------------------------------------------------------
# linear conventions


def standard_symplectic(n: int) -> Array:
    """Matrix of sum_j dx_j ^ dy_j in interleaved coordinates."""
    W = np.zeros((2 * n, 2 * n))
    for j in range(n):
        W[2 * j, 2 * j + 1] = 1.0
        W[2 * j + 1, 2 * j] = -1.0
    return W


def standard_complex_structure(n: int) -> Array:
    """Multiplication by i: sends d/dx_j to d/dy_j."""
    J = np.zeros((2 * n, 2 * n))
    for j in range(n):
        J[2 * j + 1, 2 * j] = 1.0
        J[2 * j, 2 * j + 1] = -1.0
    return J


def complex_basis_matrix(n: int) -> Array:
    """B of shape (n, 2n) with B @ x = complex encoding of a real vector."""
    B = np.zeros((n, 2 * n), dtype=complex)
    for j in range(n):
        B[j, 2 * j] = 1.0
        B[j, 2 * j + 1] = 1.0j
    return B


def to_complex(x: Array) -> Array:
    """Interleaved real coordinates -> complex, on the last axis."""
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1.0j * x[..., 1::2]


def from_complex(z: Array) -> Array:
    """Complex coordinates -> interleaved real, on the last axis."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def complex_to_real_linear(D: Array) -> Array:
    """Real (2n, 2n) matrix of the C-linear map with complex matrix D (n, n).

    Batched: (m, n, n) -> (m, 2n, 2n).
    """
    D = np.asarray(D, dtype=complex)
    n = D.shape[-1]
    out = np.zeros(D.shape[:-2] + (2 * n, 2 * n))
    out[..., 0::2, 0::2] = D.real
    out[..., 0::2, 1::2] = -D.imag
    out[..., 1::2, 0::2] = D.imag
    out[..., 1::2, 1::2] = D.real
    return out


def metric_from_pair(W: Array, J: Array) -> Array:
    """Symmetrized pairing g(X, Y) = omega(X, JY) from matrix data.

    Accepts single matrices or (m, 2n, 2n) batches. The result is the
    compatible metric when (omega, J) is a compatible pair; callers that
    cannot assume compatibility should use metric_from_pair_checked.
    """
    WJ = np.einsum("...ab,...bc->...ac", W, J)
    return 0.5 * (WJ + np.swapaxes(WJ, -1, -2))


def metric_from_pair_checked(W: Array, J: Array):
    """metric_from_pair plus a positivity flag (True when SPD everywhere)."""
    g = metric_from_pair(W, J)
    gb = g if g.ndim == 3 else g[None]
    ok = True
    for k in range(gb.shape[0]):
        try:
            np.linalg.cholesky(gb[k])
        except np.linalg.LinAlgError:
            ok = False
            break
    return g, ok


def taming_margin(omega_vals: Array, J_vals: Array, vectors: Array) -> float:
    """min omega(X, JX) over sample vectors; positive iff omega tames J there.

    omega_vals, J_vals: (m, 2n, 2n); vectors: (m, 2n), assumed unit scale.
    """
    vectors = np.asarray(vectors, dtype=float)
    if vectors.size == 0:
        raise ValueError("taming_margin needs at least one sample vector")
    JX = np.einsum("mab,mb->ma", J_vals, vectors)
    vals = np.einsum("ma,mab,mb->m", vectors, omega_vals, JX)
    return float(np.min(vals))


# ---------------------------------------------------------------------------
# points and models


@dataclass
class ChartPoint:
    """A point of the ambient chart; thin wrapper used at API boundaries."""

    coords: Array
    chart_id: int = 0

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        if not np.all(np.isfinite(self.coords)):
            raise ValueError("chart point has non-finite coordinates")


def _nodes(x):
    """Coerce a point, batch, or ChartPoint to a (m, 2n) array plus a flag."""
    a = np.asarray(getattr(x, "coords", x), dtype=float)
    if a.ndim == 1:
        return a[None, :], True
    return a, False


class AmbientModel:
    """Symplectic form and almost complex structure on a chart, with
    derived metric, Christoffel symbols, and nabla J.

    Evaluators are batched; public methods accept a single point or an
    (m, 2n) batch and match the input shape. Models with analytic
    connection data pass the corresponding overrides; otherwise the data
    is derived by central differences at step max(1e-5, 1e-5 |x|).
    """

    def __init__(
        self,
        name: str,
        n: int,
        omega_field: Callable,
        J_field: Callable,
        *,
        metric_field: Optional[Callable] = None,
        christoffel_field: Optional[Callable] = None,
        nabla_J_field: Optional[Callable] = None,
        kahler: bool = False,
        flat: bool = False,
        domain_radius: Optional[float] = None,
    ):
        self.name = name
        self.n = n
        self.dim = 2 * n
        self.kahler = kahler
        self.flat = flat
        self.domain_radius = domain_radius
        self._omega = omega_field
        self._J = J_field
        self._metric = metric_field
        self._christoffel = christoffel_field
        self._nabla_J = nabla_J_field

    # -- batched internals ---------------------------------------------------

    def _omega_b(self, x):
        return np.asarray(self._omega(x), dtype=float)

    def _J_b(self, x):
        return np.asarray(self._J(x), dtype=float)

    def _metric_b(self, x):
        if self._metric is not None:
            return np.asarray(self._metric(x), dtype=float)
        return metric_from_pair(self._omega_b(x), self._J_b(x))

    def _christoffel_b(self, x):
        if self._christoffel is not None:
            return np.asarray(self._christoffel(x), dtype=float)
        return fd.christoffels_from_metric(self._metric_b, x)

    def _nabla_J_b(self, x):
        if self._nabla_J is not None:
            return np.asarray(self._nabla_J(x), dtype=float)
        if self.kahler:
            m = x.shape[0]
            return np.zeros((m, self.dim, self.dim, self.dim))
        return fd.covariant_operator_derivative(self._J_b, self._christoffel_b(x), x)

    # -- public evaluators ---------------------------------------------------

    def omega(self, x):
        xb, single = _nodes(x)
        out = self._omega_b(xb)
        return out[0] if single else out

    def J(self, x):
        xb, single = _nodes(x)
        out = self._J_b(xb)
        return out[0] if single else out

    def metric(self, x):
        xb, single = _nodes(x)
        out = self._metric_b(xb)
        return out[0] if single else out

    def metric_checked(self, x):
        xb, single = _nodes(x)
        g, ok = metric_from_pair_checked(self._omega_b(xb), self._J_b(xb))
        return (g[0] if single else g), ok

    def christoffels(self, x):
        xb, single = _nodes(x)
        out = self._christoffel_b(xb)
        return out[0] if single else out

    def nabla_J(self, x):
        xb, single = _nodes(x)
        out = self._nabla_J_b(xb)
        return out[0] if single else out

    def in_domain(self, x) -> bool:
        xb, _ = _nodes(x)
        if not np.all(np.isfinite(xb)):
            return False
        if self.domain_radius is None:
            return True
        return bool(np.all(np.linalg.norm(xb, axis=1) < self.domain_radius))


# ---------------------------------------------------------------------------
# scalar field jets and the d^c calculus


@dataclass
class ScalarFieldJet:
    """2-jet evaluators for an ambient scalar field, bound to a connection.

    hess is the covariant Hessian; partial_hess the plain coordinate one.
    christoffel_eval None means a flat (zero) connection.
    """

    value_eval: Callable
    grad_eval: Callable
    partial_hess_eval: Callable
    christoffel_eval: Optional[Callable] = None

    def value(self, x):
        xb, single = _nodes(x)
        out = np.asarray(self.value_eval(xb), dtype=float)
        return float(out[0]) if single else out

    def grad(self, x):
        xb, single = _nodes(x)
        out = np.asarray(self.grad_eval(xb), dtype=float)
        return out[0] if single else out

    def hess(self, x):
        xb, single = _nodes(x)
        H = np.asarray(self.partial_hess_eval(xb), dtype=float)
        if self.christoffel_eval is not None:
            gamma = np.asarray(self.christoffel_eval(xb), dtype=float)
            grad = np.asarray(self.grad_eval(xb), dtype=float)
            H = H - np.einsum("mcab,mc->mab", gamma, grad)
        return H[0] if single else H

    def with_connection(self, christoffel_eval) -> "ScalarFieldJet":
        return ScalarFieldJet(
            self.value_eval, self.grad_eval, self.partial_hess_eval, christoffel_eval
        )


def field_jet(model: AmbientModel, expr) -> ScalarFieldJet:
    """Bind an expression (value/grad/partial_hess evaluators) to a model's
    Levi-Civita connection."""
    gamma = None if model.flat else model._christoffel_b
    return ScalarFieldJet(expr.value, expr.grad, expr.partial_hess, gamma)


def dc_one_form(model: AmbientModel, jet: ScalarFieldJet, x) -> Array:
    """The 1-form d^c psi = -d psi o J as components (m, 2n)."""
    xb, single = _nodes(x)
    grad = np.asarray(jet.grad_eval(xb), dtype=float)
    Jm = model._J_b(xb)
    out = -np.einsum("ma,mab->mb", grad, Jm)
    return out[0] if single else out


def _ddc_from_parts(H, Jm, grad, NJ):
    """Assemble dd^c from covariant Hessian, J, gradient, and nabla J.

    (dd^c psi)(X, Y) = -H(X, JY) + H(Y, JX) + dpsi((nabla_Y J)X - (nabla_X J)Y),
    which in matrix form is (HJ)^T - HJ + T^T - T with
    T_ab = sum_k dpsi_k NJ[a, k, b].
    """
    HJ = np.einsum("mab,mbc->mac", H, Jm)
    out = np.swapaxes(HJ, 1, 2) - HJ
    if NJ is not None:
        T = np.einsum("mk,makb->mab", grad, NJ)
        out = out + np.swapaxes(T, 1, 2) - T
    return out


def ddc_matrix(model: AmbientModel, jet: ScalarFieldJet, x, connection=None) -> Array:
    """Matrix (m, 2n, 2n) of dd^c psi = 2 sqrt(-1) del delbar psi at x.

    connection overrides the Christoffel field used both in the covariant
    Hessian and in the recomputed nabla J; the result is independent of
    that choice, which the test suite checks.
    """
    xb, single = _nodes(x)
    Jm = model._J_b(xb)
    grad = np.asarray(jet.grad_eval(xb), dtype=float)
    if connection is None:
        H = jet.hess(xb)
        NJ = None
        if not model.kahler:
            NJ = model._nabla_J_b(xb)
    else:
        H = jet.with_connection(connection).hess(xb)
        gamma = np.asarray(connection(xb), dtype=float)
        NJ = fd.covariant_operator_derivative(model._J_b, gamma, xb)
    out = _ddc_from_parts(np.atleast_3d(H), Jm, np.atleast_2d(grad), NJ)
    return out[0] if single else out


def ddc_apply(model, jet, x, X, Y, connection=None) -> float:
    """(dd^c psi)(X, Y) at a single point."""
    M = ddc_matrix(model, jet, x, connection=connection)
    return float(np.asarray(X) @ M @ np.asarray(Y))


# ---------------------------------------------------------------------------
# flat models


def _constant_field(M: Array):
    def f(x):
        return np.broadcast_to(M, (x.shape[0],) + M.shape)

    return f


def _zero_gamma(dim: int):
    def f(x):
        return np.zeros((x.shape[0], dim, dim, dim))

    return f


def flat_model(n: int = 2, name: str = "flat") -> AmbientModel:
    """C^n (or its torus quotients) with the standard Kahler structure."""
    W0 = standard_symplectic(n)
    J0 = standard_complex_structure(n)
    dim = 2 * n
    return AmbientModel(
        name,
        n,
        _constant_field(W0),
        _constant_field(J0),
        metric_field=_constant_field(np.eye(dim)),
        christoffel_field=_zero_gamma(dim),
        nabla_J_field=lambda x: np.zeros((x.shape[0], dim, dim, dim)),
        kahler=True,
        flat=True,
    )


# ---------------------------------------------------------------------------
# squeezed torus: constant symplectic form, position-dependent J, non-Kahler


def squeezed_torus_model() -> AmbientModel:
    """T^4 with omega_0 and J = A J0 A^{-1} for a periodic symplectic A(x).

    A is a product of a per-pair squeeze, a per-pair shear, and a
    nilpotent cross-pair shear, each with small trigonometric amplitude,
    so the pair stays compatible while nabla J is genuinely nonzero.
    """
    n = 2
    W0 = standard_symplectic(n)
    J0 = standard_complex_structure(n)

    def factors(x):
        f = 0.10 * np.sin(x[:, 0]) * np.cos(x[:, 3])
        g = 0.15 * np.cos(x[:, 1] + x[:, 2])
        h = 0.12 * np.sin(x[:, 2]) * np.cos(x[:, 0])
        return f, g, h

    def A_and_inv(x):
        m = x.shape[0]
        f, g, h = factors(x)
        D = np.zeros((m, 4, 4))
        Di = np.zeros((m, 4, 4))
        ef = np.exp(f)
        eg7 = np.exp(0.7 * f)
        D[:, 0, 0] = ef
        D[:, 1, 1] = 1.0 / ef
        D[:, 2, 2] = eg7
        D[:, 3, 3] = 1.0 / eg7
        Di[:, 0, 0] = 1.0 / ef
        Di[:, 1, 1] = ef
        Di[:, 2, 2] = 1.0 / eg7
        Di[:, 3, 3] = eg7
        I = np.broadcast_to(np.eye(4), (m, 4, 4))
        A2 = I.copy()
        A2[:, 0, 1] = g
        A2i = I.copy()
        A2i[:, 0, 1] = -g
        A3 = I.copy()
        A3[:, 1, 2] = h
        A3[:, 3, 0] = h
        A3i = I.copy()
        A3i[:, 1, 2] = -h
        A3i[:, 3, 0] = -h
        A = np.einsum("mab,mbc,mcd->mad", D, A2, A3)
        Ai = np.einsum("mab,mbc,mcd->mad", A3i, A2i, Di)
        return A, Ai

    def J_field(x):
        A, Ai = A_and_inv(x)
        return np.einsum("mab,bc,mcd->mad", A, J0, Ai)

    return AmbientModel(
        "t4-squeezed",
        n,
        _constant_field(W0),
        J_field,
        kahler=False,
        flat=False,
    )


# ---------------------------------------------------------------------------
# complex projective space in the affine chart


class ChartUnitary:
    """A projective unitary acting on the affine chart z_j = Z_j / Z_0."""

    def __init__(self, matrix: Array):
        self.matrix = np.asarray(matrix, dtype=complex)

    def apply_chart(self, x) -> Array:
        xb, single = _nodes(x)
        Z = homogeneous_from_chart(xb)
        Zp = Z @ self.matrix.T
        out = chart_from_homogeneous(Zp)
        return out[0] if single else out

    def chart_jacobian(self, x) -> Array:
        """Complex Jacobian (m, N, N) of the chart action at x."""
        xb, single = _nodes(x)
        U = self.matrix
        S = homogeneous_from_chart(xb) @ U.T  # (m, N+1)
        S0 = S[:, :1]
        num = U[None, 1:, 1:] * S0[:, :, None] - np.einsum(
            "mj,k->mjk", S[:, 1:], U[0, 1:]
        )
        out = num / S0[:, :, None] ** 2
        return out[0] if single else out

    def real_jacobian(self, x) -> Array:
        xb, single = _nodes(x)
        out = complex_to_real_linear(self.chart_jacobian(xb))
        return out[0] if single else out


def homogeneous_from_chart(x) -> Array:
    """Chart points (m, 2N) -> homogeneous rows (m, N+1) with Z_0 = 1."""
    xb, single = _nodes(x)
    z = to_complex(xb)
    Z = np.concatenate([np.ones((z.shape[0], 1), dtype=complex), z], axis=1)
    return Z[0] if single else Z

def chart_from_homogeneous(Z) -> Array:
    """Homogeneous rows (m, N+1) -> interleaved chart points (m, 2N)."""
    Z = np.asarray(Z, dtype=complex)
    single = Z.ndim == 1
    Zb = Z[None] if single else Z
    if np.any(np.abs(Zb[:, 0]) < 1e-14):
        raise ValueError("point leaves the affine chart (Z_0 = 0)")
    z = Zb[:, 1:] / Zb[:, :1]
    out = from_complex(z)
    return out[0] if single else out


def unitary_taking_to_e0(v: Array) -> Array:
    """A unitary U with U v / |v| = e_0, built from a pivoted QR frame."""
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    N1 = v.shape[0]
    k = int(np.argmax(np.abs(v)))
    cols = [v] + [np.eye(N1, dtype=complex)[:, j] for j in range(N1) if j != k]
    Q, R = np.linalg.qr(np.column_stack(cols))
    dphase = R.diagonal() / np.abs(R.diagonal())
    U = (Q * dphase[None, :]).conj().T
    w = U @ v
    U[0, :] = U[0, :] * (w[0].conjugate() / np.abs(w[0]))
    if np.max(np.abs(U @ v - np.eye(N1, dtype=complex)[:, 0])) > 1e-12:
        raise ConsistencyError("unitary normalization failed to send v to e_0")
    return U


def fubini_study_distance(Z1, Z2) -> float:
    """Geodesic distance between homogeneous representatives."""
    Z1 = np.asarray(Z1, dtype=complex)
    Z2 = np.asarray(Z2, dtype=complex)
    c = np.abs(np.vdot(Z1, Z2)) / (np.linalg.norm(Z1) * np.linalg.norm(Z2))
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


class FubiniStudyModel(AmbientModel):
    """CP^N in the chart Z_0 != 0, normalized so the metric at the origin
    is the identity (omega = (1/4) dd^c log(1 + |z|^2))."""

    def __init__(self, N: int):
        self.N = N
        B = complex_basis_matrix(N)
        self._B = B
        J0 = standard_complex_structure(N)
        dim = 2 * N

        def pairing(x):
            z = to_complex(x)
            sig = 1.0 + np.einsum("mj,mj->m", z, z.conj()).real
            h = np.eye(N, dtype=complex)[None] / sig[:, None, None] - np.einsum(
                "mj,mk->mjk", z.conj(), z
            ) / sig[:, None, None] ** 2
            return np.einsum("ja,mjk,kb->mab", B, h, B.conj())

        def omega_field(x):
            return -pairing(x).imag

        def metric_field(x):
            return pairing(x).real

        def christoffel_field(x):
            z = to_complex(x)
            sig = 1.0 + np.einsum("mj,mj->m", z, z.conj()).real
            cvec = np.einsum("ja,mj->ma", B, z.conj())  # (m, 2N) complex
            wc = -(
                np.einsum("la,mb->mlab", B, cvec)
                + np.einsum("lb,ma->mlab", B, cvec)
            ) / sig[:, None, None, None]
            out = np.empty((x.shape[0], dim, dim, dim))
            out[:, 0::2] = wc.real
            out[:, 1::2] = wc.imag
            return out

        super().__init__(
            f"cp{N}",
            N,
            omega_field,
            metric_field=metric_field,
            J_field=_constant_field(J0),
            christoffel_field=christoffel_field,
            nabla_J_field=lambda x: np.zeros((x.shape[0], dim, dim, dim)),
            kahler=True,
            flat=False,
        )
        g0 = self.metric(np.zeros(dim))
        if not np.allclose(g0, np.eye(dim), atol=1e-12):
            raise ConsistencyError("projective metric normalization is off at the origin")

    def distance(self, x1, x2) -> float:
        return fubini_study_distance(
            homogeneous_from_chart(np.asarray(x1, dtype=float)),
            homogeneous_from_chart(np.asarray(x2, dtype=float)),
        )

    def normalize_at(self, q) -> ChartUnitary:
        """Unitary chart motion taking q to the chart origin."""
        Z = homogeneous_from_chart(np.asarray(q, dtype=float))
        U = unitary_taking_to_e0(Z / np.linalg.norm(Z))
        return ChartUnitary(U)


def fubini_study_model(N: int = 2) -> FubiniStudyModel:
    return FubiniStudyModel(N)
