"""Command line interface.

Subcommands: simulate, build-rom, basis, image, postprocess, validate,
verify, run (full pipeline), sweep.  Exit codes: 0 success, 2 configuration
error, 3 numerical failure.  WAVEROM_THREADS caps the linear algebra thread
count when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _limit_threads():
    value = os.environ.get("WAVEROM_THREADS")
    if value:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, value)


def build_parser():
    p = argparse.ArgumentParser(prog="waverom",
                                description="Array-data reduced order model "
                                            "wave imaging")
    sub = p.add_subparsers(dest="command", required=True)

    def add_config_args(sp):
        sp.add_argument("--config", help="JSON experiment config file")
        sp.add_argument("--scenario",
                        choices=["waveguide", "halfspace", "homogeneous"])
        sp.add_argument("--m", type=int)
        sp.add_argument("--aperture", type=float)
        sp.add_argument("--tau-factor", type=float,
                        help="tau in units of pi/omega_c")
        sp.add_argument("--n", type=int)
        sp.add_argument("--mesh", type=int,
                        help="grid points per wavelength")
        sp.add_argument("--noise", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--lambda-min", type=float)

    sp = sub.add_parser("simulate", help="forward model the array data")
    add_config_args(sp)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("build-rom", help="mass, factor and propagator from data")
    sp.add_argument("--data", required=True, help="directory with data_*.wrm")
    sp.add_argument("--lambda-min", type=float)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("basis", help="reference orthonormal snapshots")
    add_config_args(sp)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("image", help="compute one imaging function")
    add_config_args(sp)
    sp.add_argument("--method", required=True,
                    choices=["norm", "ideal", "bp", "rtm", "ps"])
    sp.add_argument("--rom", help="directory with factor/propagators")
    sp.add_argument("--basis", help="directory with basis.wrm")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("postprocess", help="range-derivative of an image")
    sp.add_argument("--range-derivative", action="store_true", default=True)
    sp.add_argument("--sigma", type=float, default=0.05)
    sp.add_argument("image")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("internal-wave", help="internal wave at one point")
    sp.add_argument("--rom", required=True)
    sp.add_argument("--basis", required=True)
    sp.add_argument("--y", required=True, help="x,z imaging point")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("run", help="full pipeline")
    add_config_args(sp)
    sp.add_argument("--methods", help="comma separated subset of "
                                      "norm,ideal,bp,rtm,ps")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("sweep", help="parameter sweep of full pipelines")
    add_config_args(sp)
    sp.add_argument("--parameter", required=True, choices=["aperture", "tau"])
    sp.add_argument("--values", required=True,
                    help="comma separated multipliers")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("verify", help="oracle equivalence suite")
    sp.add_argument("--oracle", action="store_true", default=True)
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("validate", help="appendix validation tables (CSV)")
    sp.add_argument("--appendix", required=True, choices=["a1", "a2"])
    return p


def _config_from_args(args):
    from .config import ExperimentConfig

    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
        raw = json.loads(json.dumps(cfg.raw))
    else:
        raw = {}
    def setdefault(path, value):
        if value is None:
            return
        d = raw
        for key in path[:-1]:
            d = d.setdefault(key, {})
        d[path[-1]] = value

    setdefault(["scenario"], args.scenario)
    setdefault(["array", "m"], getattr(args, "m", None))
    setdefault(["array", "aperture"], getattr(args, "aperture", None))
    setdefault(["sampling", "tau_factor"], getattr(args, "tau_factor", None))
    setdefault(["sampling", "n"], getattr(args, "n", None))
    setdefault(["mesh"], getattr(args, "mesh", None))
    setdefault(["noise", "fraction"], getattr(args, "noise", None))
    setdefault(["noise", "seed"], getattr(args, "seed", None))
    setdefault(["lambda_min"], getattr(args, "lambda_min", None))
    if getattr(args, "methods", None):
        raw["methods"] = args.methods.split(",")
    if getattr(args, "method", None):
        raw["methods"] = [args.method]
    from .config import ExperimentConfig as EC

    return EC(raw=raw)


def main(argv=None) -> int:
    _limit_threads()
    args = build_parser().parse_args(argv)
    from .medium import ConfigurationError
    try:
        return _dispatch(args)
    except (ConfigurationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        from .pipeline import StageError
        from .rom import FactorizationError

        if isinstance(exc, StageError) and isinstance(
                exc.original, (ConfigurationError, FileNotFoundError)):
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if isinstance(exc, (FactorizationError, StageError,
                            ArithmeticError)):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        raise


def _dispatch(args) -> int:
    from pathlib import Path

    import numpy as np

    if args.command == "simulate":
        from . import rom, solver, storage

        cfg = _config_from_args(args)
        medium, array, pulse, tau, n = cfg.scene()
        records = solver.simulate_all_shots(medium, array, pulse, tau, n,
                                            cfg["cfl"])
        if cfg["noise"]["fraction"] > 0:
            records = rom.add_noise(records, cfg["noise"]["fraction"],
                                    cfg["noise"]["seed"])
        data = solver.compute_data_tensor(records)
        ref = solver.compute_data_tensor(solver.simulate_all_shots(
            medium.reference(), array, pulse, tau, n, cfg["cfl"]))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stamp = {"config": cfg.hash, "scenario": cfg["scenario"],
                 "omega_c": pulse.omega_c}
        storage.write_data_tensor(out / "data_true.wrm", data, stamp)
        storage.write_data_tensor(out / "data_ref.wrm", ref, stamp)
        print(f"wrote {out}/data_true.wrm and data_ref.wrm "
              f"(m={array.m}, n={n}, tau={tau:.4g})")
        return 0

    if args.command == "build-rom":
        from . import rom, storage

        src = Path(args.data)
        data, head = storage.read_data_tensor(src / "data_true.wrm")
        M = rom.assemble_mass(data)
        lam = (args.lambda_min if args.lambda_min
               else rom.default_lambda_min(M, noisy=False))
        R = rom.block_cholesky(rom.regularize_mass(M, lam))
        P = rom.rom_propagator(R, rom.assemble_stiffness(data))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stamp = {"config": head.get("config", ""), "lambda_min": lam}
        storage.write_block_matrix(out / "factor.wrm", R, stamp)
        storage.write_block_matrix(out / "propagator.wrm", P, stamp)
        ref_path = src / "data_ref.wrm"
        if ref_path.exists():
            dref, _ = storage.read_data_tensor(ref_path)
            Rr = rom.block_cholesky(rom.regularize_mass(
                rom.assemble_mass(dref), lam))
            storage.write_block_matrix(out / "factor_ref.wrm", Rr, stamp)
            storage.write_block_matrix(
                out / "propagator_ref.wrm",
                rom.rom_propagator(Rr, rom.assemble_stiffness(dref)), stamp)
        print(f"wrote ROM matrices to {out} (lambda_min={lam:.3e})")
        return 0

    if args.command in ("basis", "image", "run"):
        from . import pipeline

        cfg = _config_from_args(args)
        if args.command == "basis":
            from . import internal, storage

            medium, array, pulse, tau, n = cfg.scene()
            grid = cfg.imaging_grid(medium)
            basis = internal.build_reference_basis(
                medium.reference(), array, pulse, tau, n, grid)
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            storage.write_basis(out / "basis.wrm", basis,
                                {"config": cfg.hash})
            print(f"wrote reference basis to {out}/basis.wrm")
            return 0
        manifest = pipeline.run_pipeline(cfg, args.out)
        print(json.dumps({"config_hash": manifest["config_hash"],
                          "artifacts": sorted(manifest["artifacts"])},
                         indent=2))
        return 0

    if args.command == "sweep":
        from . import pipeline

        cfg = _config_from_args(args)
        values = [float(v) for v in args.values.split(",")]
        runs = pipeline.sweep(cfg, args.parameter, values, args.out)
        print(f"completed {len(runs)} runs under {args.out}")
        return 0

    if args.command == "postprocess":
        from . import imaging, storage

        img = storage.read_image(args.image)
        out = storage.write_image(
            args.out, imaging.range_derivative(img, args.sigma))
        print(f"wrote {out}")
        return 0

    if args.command == "internal-wave":
        from . import internal, storage

        basis, _ = storage.read_basis(Path(args.basis) / "basis.wrm")
        R, _ = storage.read_block_matrix(Path(args.rom) / "factor.wrm")
        y = tuple(float(v) for v in args.y.split(","))
        wave = internal.internal_wave(R, basis, y)
        storage.write_array(args.out, wave.values,
                            {"kind": "internal_wave", "y": list(y),
                             "tau": basis.tau})
        print(f"wrote internal wave at y={y} to {args.out}")
        return 0

    if args.command == "verify":
        from .pipeline import verify

        report = verify(seed=args.seed)
        width = max(len(r["name"]) for r in report)
        failed = False
        for r in report:
            print(f"{r['name']:<{width}}  {r['value']:.3e}  "
                  f"(< {r['threshold']:.0e})  {r['status']}")
            failed |= r["status"] != "pass"
        return EXIT_NUMERICAL if failed else 0

    if args.command == "validate":
        from . import layered1d
        from .pulse import Pulse

        pulse = Pulse()
        if args.appendix == "a1":
            prof = lambda t: 2.0 * pulse.value(t)
            med = layered1d.LayeredMedium(impedances=(1.0, 3.0),
                                          interfaces=(6.0,), depth=40.0)
            print("case,tau,j,residual")
            for tag, tau, j, medium in (
                    ("goupillaud", 0.2, 55, med),
                    ("half_integer", 0.2, 55, layered1d.LayeredMedium(
                        impedances=(1.0, 3.0), interfaces=(6.0 + 0.05,),
                        depth=40.0))):
                res = layered1d.span_residual(medium, prof, tau, 60, j)
                print(f"{tag},{tau},{j},{res:.6e}")
        else:
            modes = layered1d.mode_table(D=1.3, omega_c=pulse.omega_c)
            print("mode,alpha,beta,group_speed")
            for i in range(modes.N):
                print(f"{i + 1},{modes.alpha[i]:.6f},{modes.beta[i]:.6f},"
                      f"{modes.group_speed[i]:.6f}")
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
