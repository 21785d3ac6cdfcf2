"""
Command-line front end.

    specflow generate  --flow random --rms 0.2 --modes 22 --frames 10 --out run/c2010
    specflow estimate  run/c2010.ofc --modes 8 --out run/fit
    specflow evaluate  --recipe recover --solution run/fit.ofv --truth run/c2010_truth.ofv
    specflow bench     --modes 4 8 12 16

Exit codes: 0 success, 2 usage, 3 degenerate data, 4 no convergence, 5 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import cube as cubes
from . import experiments
from .bench import run_bench
from .errors import (ConvergenceError, CubeFormatError, CubeSizeError, DegenerateDataError,
                     EstimationInputError)
from .metrics import (boundary_residual_profile, compare_fields, default_border, merit,
                      speed_histogram, write_histogram_csv, write_profile_csv,
                      write_convergence_csv, zonal_profile)
from .solve import estimate
from .spectral import (SpectralVelocity, evaluate, grid_to_spectral, hexagonal_velocity,
                       load_grid_csv, load_velocity, mean_flow, random_field, save_grid_csv,
                       save_velocity)
from .synth import AdvectionConfig, advect, make_texture

log = logging.getLogger("specflow")

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_NONCONVERGED, EXIT_IO = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"not JSON serialisable: {type(x)}")


def _write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump(obj) + "\n")


def _prefix(path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------------------
# generate


def _truth_for(args, size):
    h, w = size
    if args.flow == "zero":
        return SpectralVelocity.zeros(0, 0, w, h)
    if args.flow == "uniform":
        v = SpectralVelocity.zeros(0, 0, w, h)
        return v.with_amplitudes([[args.ux]], [[args.uy]])
    if args.flow == "random":
        if args.rms is None:
            raise UsageError("--flow random needs --rms")
        return random_field(args.modes, args.modes, args.rms, args.seed + 1, w, h)
    # hexagonal: analytic callable, not in any truncated span
    k = 2 * np.pi / args.wavelength
    rms = 0.2 if args.rms is None else args.rms
    amplitude = rms / (np.sqrt(1.5) * k)
    centre = (w / 2, h / 2)
    return lambda x, y: hexagonal_velocity(x, y, amplitude, args.wavelength, centre)


def cmd_generate(args) -> int:
    if args.flow == "hexagonal" and args.wavelength is None:
        raise UsageError("--flow hexagonal needs --wavelength")
    if args.flow in ("zero", "uniform") and args.modes is not None and args.modes != 0:
        raise UsageError(f"--modes does not apply to --flow {args.flow}")
    if args.flow == "random" and args.modes is None:
        raise UsageError("--flow random needs --modes")
    h = args.height or args.size
    w = args.width or args.size
    truth = _truth_for(args, (h, w))
    tex = make_texture(w, h, args.feature_scale, seed=args.seed)
    tex = args.mean + args.contrast * tex
    if isinstance(truth, SpectralVelocity):
        grid = evaluate(truth)
    else:
        y, x = np.mgrid[0:h, 0:w].astype(float)
        grid = truth(x, y)
    substeps = args.substeps or experiments.substeps_for(tuple(grid))
    config = AdvectionConfig(n_frames=args.frames, substeps=substeps,
                             interpolation=args.interp, boundary=args.boundary)
    cube = advect(tex, truth, config, pixel_scale=args.pixel_scale, cadence=args.cadence)
    if args.noise:
        cube = cubes.add_gaussian_noise(cube, args.noise, seed=args.seed + 2)

    out = _prefix(args.out)
    cube_path = out.with_suffix(".ofc")
    truth_path = out.parent / (out.name + "_truth.ofv")
    csv_path = out.parent / (out.name + "_truth.csv")
    cubes.save_cube(cube, cube_path)
    save_velocity(truth if isinstance(truth, SpectralVelocity) else grid_to_spectral(*grid),
                  truth_path)
    save_grid_csv(csv_path, *grid)
    manifest = dict(
        command="generate", version=__version__, flow=args.flow, rms=args.rms,
        modes=args.modes, frames=args.frames, height=h, width=w,
        feature_scale=args.feature_scale, seed=args.seed, wavelength=args.wavelength,
        ux=args.ux, uy=args.uy, interpolation=args.interp, boundary=args.boundary,
        substeps=substeps, noise=args.noise, mean=args.mean, contrast=args.contrast,
        pixel_scale=args.pixel_scale, cadence=args.cadence,
        truth_rms=float(np.sqrt(np.mean(grid[0] ** 2 + grid[1] ** 2))),
        files=dict(cube=cube_path.name, truth=truth_path.name, truth_grid=csv_path.name),
    )
    _write_json(out.parent / (out.name + ".json"), manifest)
    print(_dump(manifest))
    return EXIT_OK


# ---------------------------------------------------------------------------
# estimate


def _unit_scale(cube, args):
    pixel_scale = args.pixel_scale or cube.pixel_scale
    cadence = args.cadence or cube.cadence
    if pixel_scale and cadence:
        return pixel_scale, cadence, pixel_scale / cadence
    return pixel_scale, cadence, None


def cmd_estimate(args) -> int:
    cube = cubes.load_cube(args.cube, detect_blank=not args.keep_blank)
    n_x = args.modes
    n_y = args.modes_y if args.modes_y is not None else n_x
    if not 0 < args.tol < 1:
        raise UsageError("--tol must lie in (0, 1)")
    if 4 * n_x >= cube.width or 4 * n_y >= cube.height:
        raise UsageError(f"modes ({n_x}, {n_y}) need 4n < frame size {cube.height}x{cube.width}")
    v, report = estimate(cube, n_x, n_y, solver=args.solver, tol=args.tol,
                         max_iter=args.max_iter, missing=args.missing)
    out = _prefix(args.out)
    sol_path = out.with_suffix(".ofv")
    save_velocity(v, sol_path)
    pixel_scale, cadence, scale = _unit_scale(cube, args)
    vx, vy = evaluate(v)
    speed = np.sqrt(vx ** 2 + vy ** 2)
    result = dict(
        command="estimate", version=__version__, cube=str(args.cube), solution=sol_path.name,
        config=dict(n_x=n_x, n_y=n_y, solver=args.solver, tol=args.tol,
                    max_iter=args.max_iter, missing=args.missing),
        report=report.to_dict(), frames=cube.n_frames, valid_frames=int(cube.valid.sum()),
        mean_flow=list(mean_flow(v)), rms_speed=float(np.sqrt(np.mean(speed ** 2))),
        units=dict(pixel_scale=pixel_scale, cadence=cadence, kms_per_ppf=scale),
    )
    if scale is not None:
        result["mean_flow_kms"] = [c * scale for c in mean_flow(v)]
        result["rms_speed_kms"] = result["rms_speed"] * scale
    if args.grid_csv:
        if args.csv_units == "kms" and scale is None:
            raise UsageError("--csv-units kms needs pixel scale and cadence")
        save_grid_csv(args.grid_csv, vx, vy, scale if args.csv_units == "kms" else 1.0)
    _write_json(out.parent / (out.name + "_report.json"), result)
    print(_dump(result))
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate


def _load_field(path):
    path = Path(path)
    if path.suffix == ".csv":
        return load_grid_csv(path)
    return evaluate(load_velocity(path))


def _evaluate_solution(args, outdir):
    if not args.solution:
        raise UsageError(f"--recipe {args.recipe} needs --solution")
    sol = load_velocity(args.solution)
    fit = evaluate(sol)
    border = args.border if args.border is not None else default_border(sol.n_x, sol.n_y, sol.X, sol.Y)
    result = dict(recipe=args.recipe, solution=str(args.solution), border=border)
    if args.truth:
        truth = _load_field(args.truth)
        m = compare_fields(fit, truth, border)
        result["metrics"] = m.to_dict()
        result["passed"] = bool(m.relative_error < 0.01 and m.correlation > 0.999)
        profile = boundary_residual_profile(truth, fit)
        write_profile_csv(outdir / "boundary_profile.csv", profile)
    elif args.recipe == "recover":
        raise UsageError("--recipe recover needs --truth")
    if args.cube:
        result["chi2"], result["chi0"] = merit(cubes.load_cube(args.cube), sol)
    hist = speed_histogram(fit, args.bin_width, unit_scale=args.unit_scale, exclude_border=border)
    result["speeds"] = hist.summary()
    write_histogram_csv(outdir / "histogram.csv", hist)
    write_profile_csv(outdir / "zonal_profile.csv", zonal_profile(fit))
    return result


def _write_artifacts(result, outdir):
    name = result["recipe"]
    if name == "gibbs":
        write_profile_csv(outdir / "boundary_profile.csv", result.pop("profile"))
    elif name == "convergence":
        write_convergence_csv(outdir / "convergence.csv", zip(result["windows"], result["distance"]))
    else:
        for key in ("rms", "sigma", "modes"):
            if key in result and isinstance(result[key], list):
                rows = zip(result[key], result["relative_error"])
                with open(outdir / f"{name}.csv", "w", encoding="utf-8") as fh:
                    fh.write(f"{key},relative_error\n")
                    for a, b in rows:
                        fh.write(f"{a!r},{b!r}\n")


def cmd_evaluate(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.recipe in ("recover", "summary"):
        result = _evaluate_solution(args, outdir)
    else:
        result = experiments.RECIPES[args.recipe]()
        _write_artifacts(result, outdir)
    _write_json(outdir / "metrics.json", result)
    print(_dump(result))
    if "passed" in result:
        print(f"{args.recipe}: {'PASS' if result['passed'] else 'FAIL'}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench / import


def cmd_bench(args) -> int:
    report = run_bench(args.modes, size=args.size, repeats=args.repeats, seed=args.seed)
    if args.out:
        _write_json(args.out, report)
    print(_dump(report))
    return EXIT_OK


def cmd_import_pgm(args) -> int:
    cube = cubes.cube_from_pgm(args.frames, pixel_scale=args.pixel_scale, cadence=args.cadence)
    cubes.save_cube(cube, args.out)
    print(_dump(dict(command="import-pgm", out=str(args.out), shape=list(cube.shape),
                     valid=cube.valid.astype(int).tolist())))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="specflow", description="Spectral optical flow.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthetic cube with known flow")
    g.add_argument("--flow", choices=["random", "hexagonal", "zero", "uniform"], required=True)
    g.add_argument("--rms", type=float, help="truth RMS speed, px/frame")
    g.add_argument("--modes", type=int, help="truth mode count per axis (random flow)")
    g.add_argument("--frames", type=int, default=10)
    g.add_argument("--size", type=int, default=256)
    g.add_argument("--height", type=int)
    g.add_argument("--width", type=int)
    g.add_argument("--feature-scale", type=float, default=12.0)
    g.add_argument("--wavelength", type=float, help="hexagonal cell wavelength, px")
    g.add_argument("--ux", type=float, default=0.0)
    g.add_argument("--uy", type=float, default=0.0)
    g.add_argument("--interp", choices=["spectral", "bicubic"], default="spectral")
    g.add_argument("--boundary", choices=["periodic", "clamp"], default="periodic")
    g.add_argument("--substeps", type=int)
    g.add_argument("--noise", type=float, default=0.0, help="Gaussian noise sigma, counts")
    g.add_argument("--mean", type=float, default=1000.0, help="mean intensity, counts")
    g.add_argument("--contrast", type=float, default=100.0, help="texture RMS, counts")
    g.add_argument("--pixel-scale", type=float)
    g.add_argument("--cadence", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="specflow_run", help="output prefix")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", help="fit a velocity field to a cube")
    e.add_argument("cube")
    e.add_argument("--modes", type=int, required=True)
    e.add_argument("--modes-y", type=int)
    e.add_argument("--solver", choices=["direct", "iterative"], default="direct")
    e.add_argument("--tol", type=float, default=1e-8)
    e.add_argument("--max-iter", type=int)
    e.add_argument("--missing", choices=["skip", "include"], default="skip")
    e.add_argument("--keep-blank", action="store_true", help="do not flag all-zero frames")
    e.add_argument("--pixel-scale", type=float, help="km per pixel")
    e.add_argument("--cadence", type=float, help="seconds per frame")
    e.add_argument("--grid-csv", help="also write the evaluated field as CSV")
    e.add_argument("--csv-units", choices=["ppf", "kms"], default="ppf")
    e.add_argument("--out", required=True, help="output prefix")
    e.set_defaults(func=cmd_estimate)

    v = sub.add_parser("evaluate", help="metrics and controlled experiments")
    v.add_argument("--recipe", required=True,
                   choices=["recover", "summary"] + sorted(experiments.RECIPES))
    v.add_argument("--solution")
    v.add_argument("--truth", help=".ofv or grid .csv")
    v.add_argument("--cube")
    v.add_argument("--border", type=int)
    v.add_argument("--bin-width", type=float, default=0.02)
    v.add_argument("--unit-scale", type=float)
    v.add_argument("--out", default=".")
    v.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="timing sweep")
    b.add_argument("--modes", type=int, nargs="+", default=[4, 8, 12, 16])
    b.add_argument("--size", type=int, default=256)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    i = sub.add_parser("import-pgm", help="stack P5 PGM frames into a cube")
    i.add_argument("frames", nargs="+")
    i.add_argument("--out", required=True)
    i.add_argument("--pixel-scale", type=float)
    i.add_argument("--cadence", type=float)
    i.set_defaults(func=cmd_import_pgm)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"specflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateDataError, EstimationInputError) as exc:
        print(f"specflow: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConvergenceError as exc:
        print(f"specflow: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (CubeFormatError, CubeSizeError, OSError) as exc:
        print(f"specflow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"specflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
