"""Experiment orchestration: simulate, build the ROM, image, post-process.

`run_pipeline` executes the full chain for a config and writes every
artifact (data tensors, factor, propagators, basis, images and their range
derivatives) in the documented file format, together with a manifest that
lists each file with its SHA-256 digest and the config hash.  Re-running
with the same config and seed reproduces byte-identical payloads.

`verify` runs the oracle equivalence suite on small spectral grids and the
layered/waveguide validations, reporting max deviations against their
thresholds.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import imaging, internal, layered1d, oracle, rom, solver, storage
from .config import ExperimentConfig
from .medium import ConfigurationError, Reflector, homogeneous_medium
from .pulse import Pulse


class StageError(RuntimeError):
    def __init__(self, stage, original):
        super().__init__(f"stage {stage!r} failed: {original}")
        self.stage = stage
        self.original = original


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_pipeline(config: ExperimentConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    partial = out / "MANIFEST.partial"
    artifacts = {}
    stage = "setup"
    try:
        medium, array, pulse, tau, n = config.scene()
        grid = config.imaging_grid(medium)
        cfl = config["cfl"]
        stamp = {"config": config.hash, "scenario": config["scenario"],
                 "tau": tau, "n": n, "m": array.m, "omega_c": pulse.omega_c,
                 "aperture": array.aperture}

        stage = "simulate"
        records = solver.simulate_all_shots(medium, array, pulse, tau, n, cfl)
        noise = config["noise"]
        noisy = noise["fraction"] > 0
        if noisy:
            records = rom.add_noise(records, noise["fraction"], noise["seed"])
        data = solver.compute_data_tensor(records)
        ref_records = solver.simulate_all_shots(
            medium.reference(), array, pulse, tau, n, cfl)
        data_ref = solver.compute_data_tensor(ref_records)
        artifacts["data_true"] = storage.write_data_tensor(
            out / "data_true.wrm", data, stamp)
        artifacts["data_ref"] = storage.write_data_tensor(
            out / "data_ref.wrm", data_ref, stamp)

        stage = "build-rom"
        M = rom.assemble_mass(data)
        lam = config["lambda_min"]
        lam = rom.default_lambda_min(M, noisy) if lam == "auto" else float(lam)
        R = rom.block_cholesky(rom.regularize_mass(M, lam))
        S = rom.assemble_stiffness(data)
        P = rom.rom_propagator(R, S)
        M_ref = rom.assemble_mass(data_ref)
        R_ref = rom.block_cholesky(rom.regularize_mass(M_ref, lam))
        P_ref = rom.rom_propagator(R_ref, rom.assemble_stiffness(data_ref))
        stamp["lambda_min"] = lam
        artifacts["factor"] = storage.write_block_matrix(
            out / "factor.wrm", R, stamp)
        artifacts["propagator"] = storage.write_block_matrix(
            out / "propagator.wrm", P, stamp)
        artifacts["propagator_ref"] = storage.write_block_matrix(
            out / "propagator_ref.wrm", P_ref, stamp)

        stage = "basis"
        fields_ref = solver.simulate_snapshots(
            medium.reference(), array, pulse, tau, n, grid, cfl)
        basis = internal.SnapshotBasis(
            grid=grid, V=rom.solve_upper_left(R_ref, fields_ref.U.T).T,
            R=R_ref, tau=tau, n=n, m=array.m)
        artifacts["basis"] = storage.write_basis(out / "basis.wrm", basis, stamp)

        stage = "image"
        params = dict(stamp, noise=noise["fraction"], seed=noise["seed"])
        images = {}
        for method in config["methods"]:
            if method == "norm":
                images[method] = imaging.image_norm(R, basis, params)
            elif method == "bp":
                images[method] = imaging.image_backprojection(
                    P, P_ref, basis, params)
            elif method == "rtm":
                images[method] = imaging.image_rtm(
                    data, medium.reference(), array, pulse, grid, cfl, params)
            elif method == "ideal":
                images[method] = imaging.image_ideal(
                    medium, array, pulse, tau, n, grid,
                    points=config["ps_points"], params=params)
            elif method == "ps":
                pts = config["ps_points"]
                if pts is None:
                    raise ConfigurationError(
                        "pixel scan needs an explicit ps_points list")
                images[method] = imaging.image_pixel_scan(
                    R, basis, data, medium, array, pulse, pts,
                    cfl=cfl, params=params)
        stage = "postprocess"
        for method, img in images.items():
            artifacts[f"image_{method}"] = storage.write_image(
                out / f"image_{method}.wrm", img, {"config": config.hash})
            storage.export_image_csv(out / f"image_{method}.csv", img)
            artifacts[f"image_{method}_csv"] = out / f"image_{method}.csv"
            if method in ("norm", "ideal", "ps", "rtm"):
                dimg = imaging.range_derivative(img, config["range_sigma"])
                artifacts[f"image_{method}_dz"] = storage.write_image(
                    out / f"image_{method}_dz.wrm", dimg,
                    {"config": config.hash})

        stage = "manifest"
        manifest = {
            "config_hash": config.hash,
            "config": config.raw,
            "medium": {"width": medium.width, "depth": medium.depth,
                       "h": medium.h,
                       "reflectors": [r.to_dict() for r in
                                      _scenario_reflectors(config)]},
            "artifacts": {k: {"path": Path(v).name, "sha256": _digest(v)}
                          for k, v in artifacts.items()},
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                      sort_keys=True))
        if partial.exists():
            partial.unlink()
        return manifest
    except Exception as exc:
        partial.write_text(json.dumps(
            {"failed_stage": stage, "error": str(exc),
             "artifacts": {k: Path(v).name for k, v in artifacts.items()}}))
        raise StageError(stage, exc) from exc


def _scenario_reflectors(config):
    from .medium import HALFSPACE_REFLECTORS, WAVEGUIDE_REFLECTORS

    refl = config["reflectors"]
    if refl is not None:
        return [Reflector.from_dict(r) for r in refl]
    return {"waveguide": list(WAVEGUIDE_REFLECTORS),
            "halfspace": list(HALFSPACE_REFLECTORS),
            "homogeneous": []}[config["scenario"]]


def sweep(config: ExperimentConfig, parameter: str, values, out_dir) -> dict:
    """Repeat the pipeline over aperture fractions or tau factors."""
    out = Path(out_dir)
    runs = {}
    for v in values:
        raw = json.loads(json.dumps(config.raw))
        if parameter == "aperture":
            base_m = raw["array"].get("m", 49)
            base_ap = raw["array"].get("aperture", 30.0)
            count = max(int(round(base_m * v)), 2)
            spacing = base_ap / (base_m - 1)
            raw["array"]["m"] = count
            raw["array"]["aperture"] = spacing * (count - 1)
        elif parameter == "tau":
            raw["sampling"]["tau_factor"] = v * raw["sampling"].get(
                "tau_factor", 0.4)
            if "n" in raw["sampling"]:
                raw["sampling"]["n"] = max(int(round(
                    raw["sampling"]["n"] / v)), 2)
        else:
            raise ConfigurationError(f"unknown sweep parameter {parameter!r}")
        tag = f"{parameter}_{v:g}".replace(".", "p")
        runs[tag] = run_pipeline(ExperimentConfig(raw=raw), out / tag)
    (out / "sweep.json").write_text(json.dumps(
        {"parameter": parameter, "values": list(values),
         "runs": {k: v["config_hash"] for k, v in runs.items()}}, indent=2))
    return runs


# ---------------------------------------------------------------------------
# Oracle verification suite
# ---------------------------------------------------------------------------

def _oracle_scene(with_reflector=True, nx=40, nz=40, m=4, tau=0.3, n=5):
    h = 1.0 / 16
    reflectors = ((Reflector(x0=0.7, z0=1.4, x1=1.8, z1=1.65, speed=0.5),)
                  if with_reflector else ())
    medium = homogeneous_medium(width=nx * h, depth=nz * h, h=h,
                                reflectors=reflectors, strip_depth=0.7)
    from .medium import ArrayGeometry

    spacing = 8 * h
    array = ArrayGeometry.equispaced(
        m=m, aperture=spacing * (m - 1), center_x=medium.width / 2,
        depth=h / 2)
    pulse = Pulse()
    return medium, array, pulse, tau, n


def verify(seed: int = 0) -> list[dict]:
    """Oracle equivalence suite; every line is a checked identity."""
    rng = np.random.default_rng(seed)
    report = []

    def check(name, value, threshold):
        report.append({"name": name, "value": float(value),
                       "threshold": threshold,
                       "status": "pass" if value < threshold else "FAIL"})

    medium, array, pulse, tau, n = _oracle_scene()
    op = oracle.build_operator(medium)
    op_ref = oracle.build_operator(medium.reference())

    data = oracle.oracle_data_tensor(op, array, pulse, tau, n)
    M = rom.assemble_mass(data)
    M_quad = oracle.oracle_mass(op, array, pulse, tau, n)
    check("mass: data formula vs snapshot quadrature",
          np.linalg.norm(M.data - M_quad) / np.linalg.norm(M_quad), 1e-10)
    S = rom.assemble_stiffness(data)
    S_quad = oracle.oracle_stiffness(op, array, pulse, tau, n)
    check("stiffness: data formula vs snapshot quadrature",
          np.linalg.norm(S.data - S_quad) / np.linalg.norm(S_quad), 1e-10)

    R = rom.block_cholesky(rom.regularize_mass(M, 1e-14))
    U = oracle.oracle_snapshots(op, array, pulse, tau, n).U
    U_ref = oracle.oracle_snapshots(op_ref, array, pulse, tau, n).U
    data_ref = oracle.oracle_data_tensor(op_ref, array, pulse, tau, n)
    R_ref = rom.block_cholesky(
        rom.regularize_mass(rom.assemble_mass(data_ref), 1e-14))
    V_ref = rom.solve_upper_left(R_ref, U_ref.T).T

    worst = 0.0
    nodes = rng.choice(op.size, size=20, replace=False)
    for node in nodes:
        g_factor = (V_ref[node] @ R.data).reshape(n, array.m)
        g_direct = oracle.oracle_internal_wave(
            op, array, pulse, node, V_ref[node], R, U, tau, n)
        worst = max(worst, np.max(np.abs(g_factor - g_direct))
                    / np.max(np.abs(g_direct)))
    check("internal wave: factor identity vs direct evaluation", worst, 1e-10)

    P = rom.rom_propagator(R, S)
    V = rom.solve_upper_left(R, U.T).T
    P_quad = oracle.oracle_propagator_projection(op, V, tau)
    check("propagator: data route vs projection quadrature",
          np.linalg.norm(P.data - P_quad) / np.linalg.norm(P_quad), 1e-9)

    pulse1d = Pulse()
    B = pulse1d.bandwidth
    prof = lambda t: 2.0 * pulse1d.value(t)
    med1 = layered1d.LayeredMedium(impedances=(1.0, 3.0), interfaces=(6.0,),
                                   depth=40.0)
    check("layered: Goupillaud span residual",
          layered1d.span_residual(med1, prof, 0.2, 60, 55), 1e-8)
    refl, trans = layered1d.reflection_transmission(1.0, 3.0)
    check("layered: interface energy identity",
          abs(refl**2 + trans**2 - 1.0), 1e-14)

    modes = layered1d.mode_table(D=1.3, omega_c=2 * np.pi)
    Q = layered1d.mode_coupling(1.3, (0.0, 1.3), modes.N)
    check("waveguide: full-aperture coupling is identity",
          np.max(np.abs(Q - np.eye(modes.N))), 1e-12)
    return report
