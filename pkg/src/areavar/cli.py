"""Command-line interface: angle maps, variation runs, destabilization,
Killing-field checks, and invariance sweeps over a flat key=value config.

Exit codes: 0 success, 1 inconclusive destabilization, 2 configuration
error, 3 numerical-consistency failure. report.json is byte-identical
across reruns of the same resolved config; timing and version data go
to meta.json.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, ambient, potentials, surfaces, variations
from .ambient import ConsistencyError, FubiniStudyModel
from .surfaces import SurfaceGrid, make_surface

PATH_KINDS = (
    "fourier",
    "polynomial",
    "bump",
    "distance-squared",
    "saddle-normal-extension",
    "one-form",
    "flow",
    "killing-flow",
    "frame-killing",
)

SURFACES = surfaces.CATALOG + ("t4-squeezed", "t4-affine")

DEFAULTS = {
    "surface": "t4-tilted-3-4-5",
    "resolution": "64",
    "seed": "0",
    "path.kind": "distance-squared",
    "path.c": "1.0",
    "path.node": "auto",
    "path.count": "20",
    "oracle.dt": "1e-3",
    "surface.d1": "",
    "surface.d2": "",
    "surface.offset": "",
    "surface.L1": "",
    "surface.L2": "",
}


class ConfigError(ValueError):
    pass


def parse_config_file(path: str) -> dict:
    out = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        out[key] = value
    return out


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(parse_config_file(args.config))
    if args.resolution is not None:
        cfg["resolution"] = str(args.resolution)
    if args.seed is not None:
        cfg["seed"] = str(args.seed)

    if cfg["surface"] not in SURFACES:
        raise ConfigError(f"unknown surface '{cfg['surface']}'")
    try:
        resolution = int(cfg["resolution"])
    except ValueError as exc:
        raise ConfigError(f"resolution is not an integer: {cfg['resolution']}") from exc
    if resolution < 16:
        raise ConfigError("resolution must be at least 16")
    try:
        seed = int(cfg["seed"])
    except ValueError as exc:
        raise ConfigError(f"seed is not an integer: {cfg['seed']}") from exc
    if cfg["path.kind"] not in PATH_KINDS:
        raise ConfigError(f"unknown path.kind '{cfg['path.kind']}'")
    try:
        c = float(cfg["path.c"])
    except ValueError as exc:
        raise ConfigError(f"path.c is not a number: {cfg['path.c']}") from exc
    if cfg["path.node"] != "auto":
        try:
            int(cfg["path.node"])
        except ValueError as exc:
            raise ConfigError(f"path.node must be 'auto' or an integer") from exc
    try:
        count = int(cfg["path.count"])
    except ValueError as exc:
        raise ConfigError(f"path.count is not an integer: {cfg['path.count']}") from exc
    if count < 1:
        raise ConfigError("path.count must be positive")
    try:
        dt = float(cfg["oracle.dt"])
    except ValueError as exc:
        raise ConfigError(f"oracle.dt is not a number: {cfg['oracle.dt']}") from exc
    if not 0.0 < dt <= 0.1:
        raise ConfigError("oracle.dt must lie in (0, 0.1]")
    return cfg


def _parse_vector(text: str, key: str, length: int) -> np.ndarray:
    try:
        vals = [float(s) for s in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"{key} must be comma-separated numbers") from exc
    if len(vals) != length:
        raise ConfigError(f"{key} needs exactly {length} entries")
    return np.asarray(vals)


def build_surface(cfg: dict):
    name = cfg["surface"]
    if name == "t4-affine":
        for key in ("surface.d1", "surface.d2", "surface.L1", "surface.L2"):
            if not cfg[key]:
                raise ConfigError(f"surface t4-affine requires {key}")
        d1 = _parse_vector(cfg["surface.d1"], "surface.d1", 4)
        d2 = _parse_vector(cfg["surface.d2"], "surface.d2", 4)
        off = (
            _parse_vector(cfg["surface.offset"], "surface.offset", 4)
            if cfg["surface.offset"]
            else np.zeros(4)
        )
        try:
            L1 = float(cfg["surface.L1"])
            L2 = float(cfg["surface.L2"])
        except ValueError as exc:
            raise ConfigError("surface.L1/L2 must be numbers") from exc
        if L1 <= 0 or L2 <= 0:
            raise ConfigError("surface periods must be positive")
        return surfaces.affine_torus_surface("t4-affine", d1, d2, off, (L1, L2))
    return make_surface(name)


def _resolve_node(grid: SurfaceGrid, cfg: dict) -> int:
    if cfg["path.node"] == "auto":
        return int(np.argmax(grid.sin_alpha))
    node = int(cfg["path.node"])
    if not 0 <= node < grid.m:
        raise ConfigError(f"path.node {node} outside grid of {grid.m} nodes")
    return node


def _trig_velocity(model, rng):
    d = model.dim
    ks = rng.integers(-2, 3, size=(d, d))
    amps = 0.05 * rng.standard_normal(d)
    phases = rng.uniform(0, 2 * np.pi, size=d)

    def velocity(x):
        out = np.empty((x.shape[0], d))
        for c in range(d):
            k = ks[c]
            if not np.any(k):
                k = np.eye(d, dtype=int)[c]
            out[:, c] = amps[c] * np.cos(x @ k + phases[c])
        return out

    return velocity


def _random_killing_spec(model: FubiniStudyModel, rng) -> potentials.KillingSpec:
    N1 = model.N + 1
    raw = rng.standard_normal((N1, N1)) + 1j * rng.standard_normal((N1, N1))
    a = 0.5 * (raw - raw.conj().T)  # anti-Hermitian: a genuine isometry generator
    return potentials.killing_from_matrix(model, 0.3 * a)


def build_path(grid: SurfaceGrid, cfg: dict):
    kind = cfg["path.kind"]
    rng = np.random.default_rng(int(cfg["seed"]))
    model = grid.model
    if kind in ("fourier", "polynomial", "bump"):
        if kind == "bump" and model.flat:
            raise ConfigError("bump potentials are for the non-flat chart models")
        if kind == "polynomial" and model.flat:
            kind = "fourier"  # periodic models use trigonometric polynomials
        expr = potentials.random_potential(model, rng, kind)
        jet = potentials.sample_jet(grid, expr)
        return variations.LinearPotentialPath(grid, jet, cfg["path.kind"])
    if kind == "distance-squared":
        return variations.LinearPotentialPath(
            grid, potentials.distance_squared_jet(grid), kind
        )
    if kind == "saddle-normal-extension":
        node = _resolve_node(grid, cfg)
        jet, _ = potentials.saddle_potential(grid, node)
        return variations.LinearPotentialPath(grid, jet, kind)
    if kind == "one-form":
        return variations.ExactOneFormPath(
            grid, potentials.random_one_form(model, rng), kind
        )
    if kind == "flow":
        if isinstance(model, FubiniStudyModel):
            spec = _random_killing_spec(model, rng)
            return variations.killing_flow_path(grid, spec, kind)
        return variations.FlowPath(grid, _trig_velocity(model, rng), name=kind)
    if kind == "killing-flow":
        if not isinstance(model, FubiniStudyModel):
            raise ConfigError("killing-flow needs a projective model surface")
        spec = _random_killing_spec(model, rng)
        return variations.killing_flow_path(grid, spec, kind)
    if kind == "frame-killing":
        if not isinstance(model, FubiniStudyModel):
            raise ConfigError("frame-killing needs a projective model surface")
        node = _resolve_node(grid, cfg)
        spec = potentials.killing_for_pairing(grid, node, target=float(cfg["path.c"]))
        form = potentials.killing_variation_form(spec, grid)
        return variations.TwoFormLinearPath(grid, form, kind)
    raise ConfigError(f"unknown path.kind '{kind}'")


# ---------------------------------------------------------------------------
# commands


def _csv_cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def cmd_angle(grid, cfg, outdir):
    ca = grid.cos_alpha
    results = {
        "area": grid.area,
        "cos_alpha_min": float(np.min(ca)),
        "cos_alpha_max": float(np.max(ca)),
        "sin_alpha_max": float(np.max(grid.sin_alpha)),
        "angle_integral": grid.integrate(grid.sin_alpha**2),
        "degenerate_nodes": int(np.sum(grid.degenerate_mask)),
        "omega_pullback_integral": float(grid.du * np.sum(grid.omega_pullback)),
    }
    n1, n2 = grid.shape
    lines = ["node,i1,i2,u1,u2,cos_alpha,sin_alpha,dmu"]
    for m in range(grid.m):
        i1, i2 = divmod(m, n2)
        row = (m, i1, i2, *grid.u_nodes[m], ca[m], grid.sin_alpha[m], grid.dmu[m])
        lines.append(",".join(_csv_cell(v) for v in row))
    (outdir / "angle.csv").write_text("\n".join(lines) + "\n")
    return 0, results


def cmd_first_variation(grid, cfg, outdir):
    path = build_path(grid, cfg)
    value = variations.first_variation(grid, path)
    oracle = variations.area_path_oracle(grid, path, float(cfg["oracle.dt"]))
    tol = variations.first_tolerance(oracle.aprime)
    diff = abs(value - oracle.aprime)
    results = {
        "path": path.name,
        "first_variation": float(value),
        "oracle": oracle.to_dict(),
        "difference": float(diff),
        "tolerance": float(tol),
    }
    if diff > tol:
        raise ConsistencyError(
            f"first variation {value:.6e} vs oracle {oracle.aprime:.6e} (tol {tol:.1e})"
        )
    return 0, results


def cmd_second_variation(grid, cfg, outdir):
    path = build_path(grid, cfg)
    value = variations.second_variation_of_path(grid, path)
    oracle = variations.area_path_oracle(grid, path, float(cfg["oracle.dt"]))
    tol = variations.second_tolerance(oracle.asecond)
    diff = abs(value - oracle.asecond)
    D1, D2 = variations.d_fields(grid, path.omega_prime0())
    results = {
        "path": path.name,
        "second_variation": float(value),
        "oracle": oracle.to_dict(),
        "difference": float(diff),
        "tolerance": float(tol),
        "d1_max_abs": float(np.max(np.abs(D1))),
        "d2_max_abs": float(np.max(np.abs(D2))),
    }
    if diff > tol:
        raise ConsistencyError(
            f"second variation {value:.6e} vs oracle {oracle.asecond:.6e} (tol {tol:.1e})"
        )
    return 0, results


def cmd_destabilize(grid, cfg, outdir):
    report = variations.destabilize(grid, int(cfg["seed"]), float(cfg["oracle.dt"]))
    results = report.to_json_dict()
    if report.d1 is not None:
        n1, n2 = grid.shape
        lines = ["node,i1,i2,u1,u2,sin_alpha,d1,d2"]
        for m in range(grid.m):
            i1, i2 = divmod(m, n2)
            row = (
                m, i1, i2, *grid.u_nodes[m],
                grid.sin_alpha[m], report.d1[m], report.d2[m],
            )
            lines.append(",".join(_csv_cell(v) for v in row))
        (outdir / "fields.csv").write_text("\n".join(lines) + "\n")
    rc = 0 if report.certificate in ("holomorphic", "destabilized") else 1
    return rc, results


def cmd_killing_check(grid, cfg, outdir):
    if not isinstance(grid.model, FubiniStudyModel):
        raise ConfigError("killing-check needs a projective model surface")
    node = _resolve_node(grid, cfg)
    target = float(cfg["path.c"])
    rng = np.random.default_rng(int(cfg["seed"]))

    plain = potentials.killing_for_pairing(grid, node, target=None)
    scaled = potentials.killing_for_pairing(grid, node, target=target)
    ca = float(grid.cos_alpha[node])
    pairing_plain = potentials.normal_pairing(plain, grid, node)
    pairing_scaled = potentials.normal_pairing(scaled, grid, node)
    expected_plain = 0.5 * (1.0 + ca * ca)
    norm_plain = potentials.covariant_norm_sq(plain, grid, node)
    norm_scaled = potentials.covariant_norm_sq(scaled, grid, node)
    sample = grid.x[rng.integers(0, grid.m, size=50)]
    residual = scaled.lie_metric_residual(sample)
    # dual-route consistency check raises ConsistencyError on failure
    potentials.killing_variation_form(scaled, grid)

    results = {
        "node": node,
        "cos_alpha": ca,
        "pairing_unscaled": pairing_plain,
        "pairing_unscaled_expected": expected_plain,
        "pairing_scaled": pairing_scaled,
        "pairing_target": target,
        "covariant_norm_sq_unscaled": norm_plain,
        "covariant_norm_sq_scaled": norm_scaled,
        "killing_defect": scaled.killing_defect(),
        "lie_metric_residual": residual,
    }
    if abs(pairing_plain - expected_plain) > 1e-8 or abs(pairing_scaled - target) > 1e-8:
        raise ConsistencyError(
            f"frame pairing off target: {pairing_plain:.12f} vs {expected_plain:.12f}"
        )
    return 0, results


def cmd_invariance(grid, cfg, outdir):
    count = int(cfg["path.count"])
    rng = np.random.default_rng(int(cfg["seed"]))
    base = grid.integrate_pullback(grid.W)
    scale = max(1.0, abs(base))
    drifts = []
    firsts = []
    for _ in range(count):
        expr = potentials.random_potential(grid.model, rng)
        jet = potentials.sample_jet(grid, expr)
        rho = potentials.ddc_along(grid, jet)
        drifts.append(abs(grid.integrate_pullback(rho)))
        firsts.append(variations.first_variation(grid, jet))
    max_drift = float(np.max(drifts))
    holomorphic = float(np.max(grid.sin_alpha)) <= variations.HOLOMORPHIC_TOL
    max_first = float(np.max(np.abs(firsts)))
    results = {
        "count": count,
        "omega_pullback_integral": float(base),
        "max_cohomology_drift": max_drift,
        "drift_bound": float(1e-8 * scale),
        "holomorphic": holomorphic,
        "max_first_variation": max_first,
        "first_variation_bound": float(1e-6 * grid.area),
    }
    if max_drift > 1e-8 * scale:
        raise ConsistencyError(
            f"cohomological drift {max_drift:.3e} above bound {1e-8 * scale:.3e}"
        )
    if holomorphic and max_first > 1e-6 * grid.area:
        raise ConsistencyError(
            f"area moved to first order ({max_first:.3e}) on a holomorphic surface"
        )
    return 0, results


COMMANDS = {
    "angle": cmd_angle,
    "first-variation": cmd_first_variation,
    "second-variation": cmd_second_variation,
    "destabilize": cmd_destabilize,
    "killing-check": cmd_killing_check,
    "invariance": cmd_invariance,
}


def config_hash(cfg: dict) -> str:
    canon = "".join(f"{k}={cfg[k]}\n" for k in sorted(cfg))
    return hashlib.sha256(canon.encode()).hexdigest()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="areavar",
        description="area variations of parametrized surfaces under "
        "deformations of the ambient structure",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--out", default="areavar-out", help="output directory")
    parser.add_argument("--resolution", type=int, help="grid resolution override")
    parser.add_argument("--seed", type=int, help="seed override")
    args = parser.parse_args(argv)

    t0 = time.perf_counter()
    try:
        cfg = resolve_config(args)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        surface = build_surface(cfg)
        grid = SurfaceGrid(surface, int(cfg["resolution"]))
        rc, results = COMMANDS[args.command](grid, cfg, outdir)
    except (ConfigError, surfaces.ImmersionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ConsistencyError as exc:
        print(f"numerical consistency failure: {exc}", file=sys.stderr)
        return 3

    payload = {
        "command": args.command,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "config_hash": config_hash(cfg),
        "results": results,
    }
    (outdir / "report.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n"
    )
    meta = {
        "areavar_version": __version__,
        "numpy_version": np.__version__,
        "python_version": sys.version.split()[0],
        "elapsed_seconds": time.perf_counter() - t0,
        "exit_code": rc,
    }
    (outdir / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return rc


if __name__ == "__main__":
    sys.exit(main())
