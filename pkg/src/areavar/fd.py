"""Central finite differences for scalar and tensor fields on chart domains.

These routines serve two roles: they derive connection data for models
without analytic overrides, and they act as independent oracles in the
test suite. All fields are batched: a field maps an (m, d) array of
points to an (m, ...) array of values.
"""

from __future__ import annotations

import numpy as np


def steps_for(x):
    """Per-point difference step h = max(1e-5, 1e-5*|x|_inf), shape (m,)."""
    x = np.asarray(x, dtype=float)
    return np.maximum(1e-5, 1e-5 * np.max(np.abs(x), axis=-1))


def _step_array(x, h):
    """Normalize a step spec to shape (m, d): scalar, (m,), (d,) or (m, d)."""
    m, d = x.shape
    if h is None:
        h = steps_for(x)
    h = np.asarray(h, dtype=float)
    if h.ndim == 0:
        return np.full((m, d), float(h))
    if h.shape == (m,):
        return np.repeat(h[:, None], d, axis=1)
    if h.shape == (d,):
        return np.repeat(h[None, :], m, axis=0)
    if h.shape == (m, d):
        return h
    raise ValueError(f"bad step shape {h.shape} for points {x.shape}")


def field_jacobian(field, x, h=None):
    """Central-difference derivative of a batched field.

    field maps (m, d) -> (m, *s); the result has shape (m, *s, d) with the
    derivative index appended last.
    """
    x = np.asarray(x, dtype=float)
    m, d = x.shape
    h = _step_array(x, h)
    f0 = np.asarray(field(x), dtype=float)
    out = np.empty(f0.shape + (d,))
    extra = (1,) * (f0.ndim - 1)
    for a in range(d):
        ha = h[:, a]
        xp = x.copy()
        xp[:, a] += ha
        xm = x.copy()
        xm[:, a] -= ha
        fp = np.asarray(field(xp), dtype=float)
        fm = np.asarray(field(xm), dtype=float)
        out[..., a] = (fp - fm) / (2.0 * ha).reshape((m,) + extra)
    return out


def gradient_scalar(f, x, h=None):
    """Gradient (m, d) of a scalar field f: (m, d) -> (m,)."""
    return field_jacobian(f, x, h)


def hessian_scalar(f, x, h=1e-4):
    """Symmetric second-difference Hessian (m, d, d) of a scalar field.

    The default step 1e-4 balances truncation against roundoff for
    second differences; first-derivative routines use the smaller
    steps_for scale.
    """
    x = np.asarray(x, dtype=float)
    m, d = x.shape
    h = _step_array(x, h)
    f0 = np.asarray(f(x), dtype=float)
    out = np.empty((m, d, d))

    def at(da, db):
        return np.asarray(f(x + da + db), dtype=float)

    for a in range(d):
        ea = np.zeros((m, d))
        ea[:, a] = h[:, a]
        out[:, a, a] = (at(ea, 0.0) - 2.0 * f0 + at(-ea, 0.0)) / h[:, a] ** 2
        for b in range(a + 1, d):
            eb = np.zeros((m, d))
            eb[:, b] = h[:, b]
            v = (at(ea, eb) - at(ea, -eb) - at(-ea, eb) + at(-ea, -eb)) / (
                4.0 * h[:, a] * h[:, b]
            )
            out[:, a, b] = v
            out[:, b, a] = v
    return out


def christoffels_from_metric(metric_field, x, h=None):
    """Levi-Civita Christoffel symbols Gamma[m, c, a, b] from a metric field.

    metric_field maps (m, d) -> (m, d, d); the result is Gamma^c_{ab}.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(metric_field(x), dtype=float)
    dg = field_jacobian(metric_field, x, h)  # dg[m, i, j, k] = d_k g_ij
    ginv = np.linalg.inv(g)
    # T[m, d, a, b] = d_a g_db + d_b g_da - d_d g_ab
    T = dg.transpose(0, 1, 3, 2) + dg - dg.transpose(0, 3, 1, 2)
    return 0.5 * np.einsum("mcd,mdab->mcab", ginv, T)


def covariant_operator_derivative(op_field, gamma, x, h=None):
    """Covariant derivative N[m, a, c, b] = (nabla_a Op)^c_b of a (1,1) field.

    gamma is the Christoffel array (m, d, d, d) at x, indexed [m, c, a, b].
    """
    x = np.asarray(x, dtype=float)
    op = np.asarray(op_field(x), dtype=float)
    dop = field_jacobian(op_field, x, h)  # [m, c, b, a] = d_a Op^c_b
    out = dop.transpose(0, 3, 1, 2).copy()
    out += np.einsum("mcad,mdb->macb", gamma, op)
    out -= np.einsum("mdab,mcd->macb", gamma, op)
    return out


def one_form_exterior(beta_field, x, h=None):
    """Exterior derivative (m, d, d) of a 1-form field (m, d) -> (m, d)."""
    db = field_jacobian(beta_field, x, h)  # db[m, b, a] = d_a beta_b
    return db.transpose(0, 2, 1) - db


def two_form_exterior(omega_field, x, h=None):
    """Exterior derivative (m, d, d, d) of a 2-form field; zero iff closed."""
    dw = field_jacobian(omega_field, x, h)  # dw[m, i, j, k] = d_k w_ij
    return dw.transpose(0, 3, 1, 2) - dw.transpose(0, 1, 3, 2) + dw


def stencil_first(values, dt):
    """5-point first derivative at 0 from values [f(-2h), f(-h), f(0), f(h), f(2h)]."""
    vm2, vm1, _, vp1, vp2 = values
    return (-vp2 + 8.0 * vp1 - 8.0 * vm1 + vm2) / (12.0 * dt)


def stencil_second(values, dt):
    """5-point second derivative at 0 from the same value layout."""
    vm2, vm1, v0, vp1, vp2 = values
    return (-vp2 + 16.0 * vp1 - 30.0 * v0 + 16.0 * vm1 - vm2) / (12.0 * dt**2)
