"""Command-line front end.

Every subcommand reads a JSON config (or a couple of convenience
flags), runs one experiment, and emits a JSON result.  With --out DIR
the result goes to DIR/result.json, grid-shaped data additionally to
DIR/data.csv, and a run manifest to DIR/manifest.json.  Without --out
the result JSON is printed to stdout.

Result and data files are deterministic for a fixed config and seed;
the manifest carries wall-clock time and is the one file that differs
between reruns.

Exit codes: 0 success, 2 bad invocation or unreadable config, 3 config
values that fail validation, 4 calibration failure, 5 quadrature
resolution failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .basis import LatticeBasis, basis_from_json, identity_basis
from .counting import ball_volume, count_scan
from .fourier import hat_chi_ball, sandwich_check
from .meanvalue import (CalibrationError, compute_cn, fit_scaling_exponent,
                        mc_stats, siegel_calibration, variance_prediction)
from .oscillatory import (OscillatorySpec, I_kl, ResolutionError,
                          hessian_bound_check, vdc_check)
from .sampling import (CompactFamilySpec, HaarSamplerConfig,
                       RejectionBudgetError, Seed, sample_compact,
                       sample_haar_unimodular)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_CALIBRATION = 4
EXIT_RESOLUTION = 5


class InputError(ValueError):
    """Structurally malformed input payload (basis, spec, grid)."""


class ConfigError(ValueError):
    """A config value that parses but fails validation."""


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileNotFoundError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise FileNotFoundError("config must be a JSON object")
    return cfg


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing {key!r}")
    return cfg[key]


def _basis_from_config(cfg: dict) -> LatticeBasis:
    spec = _require(cfg, "basis")
    if spec == "identity":
        return identity_basis(int(_require(cfg, "n")))
    if isinstance(spec, dict):
        try:
            return basis_from_json(json.dumps(spec))
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"malformed basis: {exc}") from exc
    raise InputError("basis must be 'identity' or a basis object")


def _t_grid_from_config(cfg: dict) -> list:
    if "t_grid" in cfg:
        grid = [float(t) for t in cfg["t_grid"]]
    elif "t" in cfg:
        grid = [float(cfg["t"])]
    else:
        raise ConfigError("config needs 't' or 't_grid'")
    if not grid:
        raise ConfigError("t_grid is empty")
    return grid


def _seed_from(cfg: dict, args) -> int:
    if args.seed is not None:
        return int(args.seed)
    return int(cfg.get("seed", 0))


# ---------------------------------------------------------------------------
# Subcommand bodies: each returns (result_dict, csv_payload or None)
# ---------------------------------------------------------------------------


def _run_count(cfg: dict, args):
    basis = _basis_from_config(cfg)
    grid = sorted(_t_grid_from_config(cfg))
    results = count_scan(basis, grid)
    rows = [(r.t, r.count, r.volume, r.remainder) for r in results]
    out = {
        "n": basis.n,
        "det": basis.det,
        "t_grid": [r.t for r in results],
        "counts": [r.count for r in results],
        "volumes": [r.volume for r in results],
        "remainders": [r.remainder for r in results],
    }
    return out, (("t", "count", "volume", "remainder"), rows)


def _run_theorem1(cfg: dict, args):
    n = int(_require(cfg, "n"))
    grid = sorted(_t_grid_from_config(cfg))
    samples = int(_require(cfg, "samples"))
    master = _seed_from(cfg, args)
    fam = _require(cfg, "family")
    center_spec = fam.get("center", "identity")
    if center_spec == "identity":
        center = identity_basis(n)
    else:
        center = basis_from_json(center_spec)
    family = CompactFamilySpec(center=center.entries,
                               delta=float(_require(fam, "delta")),
                               det_floor=float(_require(fam, "det_floor")))
    per_t = []
    rows = []
    for ti, t in enumerate(grid):
        def sampler(seed, _family=family):
            return sample_compact(_family, seed)
        stats = mc_stats(sampler, t, samples, Seed(master, stream=ti + 1))
        per_t.append({
            "t": t, "samples": samples, "mean_E": stats.mean_E,
            "rms_E": stats.rms_E, "var_E": stats.var_E,
            "stderr_var": stats.stderr_var, "mean_count": stats.mean_count,
        })
        rows.append((t, stats.rms_E, stats.mean_E, stats.var_E, samples))
    fit = fit_scaling_exponent([(p["t"], p["rms_E"]) for p in per_t])
    default_band = {2: (0.3, 0.8), 3: (0.8, 1.3)}.get(n)
    band = cfg.get("band", default_band)
    out = {
        "n": n,
        "seed": master,
        "per_t": per_t,
        "fit": {"slope": fit.slope, "intercept": fit.intercept,
                "max_residual": fit.max_residual},
        "reference_exponent": (n - 1) / 2.0,
    }
    if band is not None:
        lo, hi = float(band[0]), float(band[1])
        out["band"] = [lo, hi]
        out["verdict"] = "PASS" if lo <= fit.slope <= hi else "FAIL"
    return out, (("t", "rms_E", "mean_E", "var_E", "samples"), rows)


def _run_theorem2(cfg: dict, args):
    n = int(_require(cfg, "n"))
    if n != 3:
        raise ConfigError("theorem2 supports n = 3 only (the second-moment "
                          "constant needs n >= 3 and the Haar sampler tops "
                          "out at 3)")
    t = float(_require(cfg, "t"))
    if t < 2.0:
        raise ConfigError("theorem2 requires t >= 2")
    samples = int(_require(cfg, "samples"))
    master = _seed_from(cfg, args)
    if "ratio_bound" in cfg:
        config = HaarSamplerConfig(n=n, ratio_bound=float(cfg["ratio_bound"]))
    else:
        config = HaarSamplerConfig(n=n)

    def sampler(seed):
        return sample_haar_unimodular(config, seed)

    stats = mc_stats(sampler, t, samples, Seed(master, stream=1))
    resid, stderr_mean = siegel_calibration(stats, n)
    if abs(resid) > 3.0 * stderr_mean:
        raise CalibrationError(
            f"CALIBRATION-FAIL: mean count off the Siegel value by "
            f"{resid:.4g} with standard error {stderr_mean:.4g}"
        )
    cn = compute_cn(n)
    predicted = variance_prediction(n, t, cn)
    ratio = stats.var_E / predicted
    out = {
        "n": n, "t": t, "samples": samples, "seed": master,
        "mean_E": stats.mean_E, "var_E": stats.var_E,
        "stderr_var": stats.stderr_var, "mean_count": stats.mean_count,
        "ball_volume": ball_volume(n, t, 1.0),
        "siegel_residual": resid,
        "siegel_stderr": stderr_mean,
        "cn": cn.value,
        "predicted_var": predicted,
        "var_ratio": ratio,
        "verdict": "PASS" if 0.75 <= ratio <= 1.25 else "FAIL",
    }
    return out, None


def _run_cn(cfg: dict, args):
    n = int(cfg.get("n", getattr(args, "n", None) or 0))
    if n == 0:
        raise ConfigError("cn needs n")
    tol = float(cfg.get("tol", getattr(args, "tol", None) or 1e-10))
    result = compute_cn(n, tol=tol)
    out = {"n": result.n, "value": result.value,
           "tail_bound": result.tail_bound,
           "terms_used": result.terms_used, "cutoff": result.cutoff}
    return out, None


def _run_fourier(cfg: dict, args):
    n = int(cfg.get("n", getattr(args, "n", None) or 0))
    if n == 0:
        raise ConfigError("fourier needs n")
    if "s_grid" in cfg:
        s = np.asarray([float(v) for v in cfg["s_grid"]], dtype=float)
    else:
        s_max = float(cfg.get("s_max", getattr(args, "s_max", None) or 10.0))
        points = int(cfg.get("points", getattr(args, "points", None) or 201))
        if points < 2 or s_max <= 0:
            raise ConfigError("fourier needs s_max > 0 and points >= 2")
        s = np.linspace(0.0, s_max, points)
    vals = hat_chi_ball(n, s)
    rows = list(zip(s.tolist(), vals.tolist()))
    out = {"n": n, "s_min": float(s[0]), "s_max": float(s[-1]),
           "points": int(s.size),
           "max_abs": float(np.max(np.abs(vals)))}
    return out, (("s", "hat_chi"), rows)


def _run_sandwich(cfg: dict, args):
    basis = _basis_from_config(cfg)
    t = float(_require(cfg, "t"))
    epsilon = float(_require(cfg, "epsilon"))
    result = sandwich_check(basis, t, epsilon,
                            tail_target=float(cfg.get("tail_target", 1e-3)))
    return result.to_dict(), None


def _osc_spec_from_config(cfg: dict) -> OscillatorySpec:
    n = int(_require(cfg, "n"))
    try:
        return OscillatorySpec(
            n=n,
            k=np.asarray(_require(cfg, "k"), dtype=float),
            l=np.asarray(_require(cfg, "l"), dtype=float),
            signs=tuple(int(s) for s in _require(cfg, "signs")),
            eta=np.asarray(_require(cfg, "eta"), dtype=float),
            psi_intervals=np.asarray(_require(cfg, "psi_intervals"),
                                     dtype=float),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise InputError(f"malformed oscillatory spec: {exc}") from exc


def _run_oscint(cfg: dict, args):
    spec = _osc_spec_from_config(cfg)
    grid = sorted(_t_grid_from_config(cfg))
    kwargs = {}
    if "points_per_period" in cfg:
        kwargs["points_per_period"] = float(cfg["points_per_period"])
    if "points_per_axis" in cfg:
        kwargs["points_per_axis"] = cfg["points_per_axis"]
    if cfg.get("hessian", False):
        report = hessian_bound_check(spec, grid, **kwargs)
        out = report.to_dict()
        rows = list(zip(report.t_grid, report.measured, report.bound,
                        report.ratios))
        return out, (("t", "measured", "bound", "ratio"), rows)
    values = [I_kl(spec, t, **kwargs) for t in grid]
    rows = [(t, v.real, v.imag, abs(v)) for t, v in zip(grid, values)]
    out = {
        "n": spec.n,
        "t_grid": grid,
        "real": [v.real for v in values],
        "imag": [v.imag for v in values],
        "abs": [abs(v) for v in values],
    }
    return out, (("t", "real", "imag", "abs"), rows)


def _run_vdc(cfg: dict, args):
    phi_coeffs = [float(c) for c in _require(cfg, "phi")]
    psi_coeffs = [float(c) for c in _require(cfg, "psi0")]
    a = float(_require(cfg, "a"))
    b = float(_require(cfg, "b"))
    grid = sorted(_t_grid_from_config(cfg))
    grid_points = int(cfg.get("grid_points", 4097))

    def phi(x, _c=phi_coeffs):
        return np.polynomial.polynomial.polyval(x, _c)

    def psi0(x, _c=psi_coeffs):
        return np.polynomial.polynomial.polyval(x, _c)

    report = vdc_check(phi, psi0, a, b, grid, grid_points=grid_points)
    out = report.to_dict()
    out["phi"] = phi_coeffs
    out["psi0"] = psi_coeffs
    out["interval"] = [a, b]
    rows = list(zip(report.t_grid, report.measured, report.bound,
                    report.ratios))
    return out, (("t", "measured", "bound", "ratio"), rows)


_COMMANDS = {
    "count": _run_count,
    "theorem1": _run_theorem1,
    "theorem2": _run_theorem2,
    "cn": _run_cn,
    "fourier": _run_fourier,
    "sandwich": _run_sandwich,
    "oscint": _run_oscint,
    "vdc": _run_vdc,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticeball",
        description="Lattice point counts in balls and the supporting "
                    "Fourier and oscillatory-integral experiments.",
    )
    parser.add_argument("--version", action="version",
                        version=f"latticeball {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed, overrides the config value")
        p.add_argument("--out", help="directory for result, data, manifest")

    for name, summary in [
        ("count", "exact lattice point counts over a t grid"),
        ("theorem1", "remainder scaling over a compact family of bases"),
        ("theorem2", "remainder variance over random unimodular bases"),
        ("cn", "the variance constant c_n"),
        ("fourier", "the ball indicator transform on a radial grid"),
        ("sandwich", "smoothed-count bracket around an exact count"),
        ("oscint", "oscillatory integrals or their Hessian-decay check"),
        ("vdc", "first-derivative bound check for polynomial phases"),
    ]:
        p = sub.add_parser(name, help=summary)
        common(p)
        if name in ("cn", "fourier"):
            p.add_argument("--n", type=int, default=None)
        if name == "cn":
            p.add_argument("--tol", type=float, default=None)
        if name == "fourier":
            p.add_argument("--s-max", dest="s_max", type=float, default=None)
            p.add_argument("--points", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command

    try:
        cfg = _load_config(args.config) if args.config else {}
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    start = time.perf_counter()
    try:
        result, csv_payload = _COMMANDS[command](cfg, args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ValueError, ZeroDivisionError, OverflowError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CalibrationError, RejectionBudgetError, ArithmeticError) as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except ResolutionError as exc:
        print(f"resolution error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    wall = time.perf_counter() - start

    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = ["result.json"]
        _write_json(out_dir / "result.json", result)
        if csv_payload is not None:
            header, rows = csv_payload
            _write_csv(out_dir / "data.csv", header, rows)
            outputs.append("data.csv")
        manifest = {
            "command": command,
            "config": cfg,
            "seed": args.seed,
            "version": __version__,
            "wall_time_s": wall,
            "outputs": sorted(outputs),
        }
        _write_json(out_dir / "manifest.json", manifest)
    else:
        json.dump(result, sys.stdout, sort_keys=True, indent=2)
        sys.stdout.write("\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
