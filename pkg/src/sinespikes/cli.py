"""Command-line harness: instance synthesis, demixing, sweeps, certificates.

Every command is driven by a JSON config file plus a handful of overriding
flags and is a pure function of (config, seed): identical inputs produce
identical output files. Numeric CSV cells use shortest round-trip decimal
representation.

Exit codes: 0 ok, 2 solver did not converge, 3 I/O failure, 4 invalid config.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import certificate as cert_mod
from .dual_analysis import LocateOptions, demix, localization_polynomial, success
from .errors import SineSpikesError
from .model import MixtureInstance, _default_grid, _poly_rows, default_lambda
from .solver import SolverOptions, write_diagnostics_csv
from .synthesis import SynthesisConfig, synth_instance

EXIT_OK = 0
EXIT_NO_CONVERGENCE = 2
EXIT_IO = 3
EXIT_CONFIG = 4

_MASK64 = (1 << 64) - 1


def _mix64(x: int) -> int:
    """splitmix64 finalizer; stable across platforms."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(base_seed: int, n_snapshots: int, delta_index: int, trial: int) -> int:
    """Schedule-independent per-trial seed for the sweep."""
    packed = (n_snapshots << 40) ^ (delta_index << 20) ^ trial
    return (base_seed ^ _mix64(packed)) & _MASK64


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(c) if isinstance(c, (int, str)) else _fmt(c) for c in row))
    path.write_text("\n".join(lines) + "\n")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def _resolve_lambda(value, n_sensors: int) -> float:
    if value is None or value == "auto":
        return default_lambda(n_sensors)
    return float(value)


def _synth_config(section: dict, seed: int | None) -> SynthesisConfig:
    kwargs = dict(section)
    if "frequencies" in kwargs and kwargs["frequencies"] is not None:
        kwargs["frequencies"] = tuple(kwargs["frequencies"])
    if seed is not None:
        kwargs["seed"] = seed
    return SynthesisConfig(**kwargs)


def _solver_options(section: dict) -> SolverOptions:
    return SolverOptions(**section)


def _locate_options(section: dict, grid: int | None) -> LocateOptions:
    kwargs = dict(section)
    if grid is not None:
        kwargs["grid_size"] = grid
    return LocateOptions(**kwargs)


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args, config: dict) -> int:
    cfg = _synth_config(config.get("synthesis", {}), args.seed)
    instance = synth_instance(cfg)
    out = _out_dir(args)
    instance.save(out / "instance.json")
    print(f"wrote {out / 'instance.json'} "
          f"(N={instance.n_sensors}, L={instance.n_snapshots}, "
          f"K={instance.frequencies.size}, |support|={instance.outlier_rows.size})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# demix
# ---------------------------------------------------------------------------


def _trace_rows(gamma: np.ndarray, grid: int):
    scaled = math.sqrt(gamma.shape[0]) * gamma
    f = np.arange(grid) / grid
    qn = np.linalg.norm(_poly_rows(scaled, f, 0), axis=1)
    return zip(f, qn)


def cmd_demix(args, config: dict) -> int:
    if "instance" in config:
        instance = MixtureInstance.load(config["instance"])
    else:
        instance = synth_instance(_synth_config(config.get("synthesis", {}), args.seed))
    lam = _resolve_lambda(args.lam or config.get("lambda"), instance.n_sensors)
    solver_opts = _solver_options(config.get("solver", {}))
    locate_opts = _locate_options(config.get("locate", {}), args.grid)
    report, solution = demix(instance.measurement, lam, solver_opts, locate_opts)

    out = _out_dir(args)
    payload = report.to_json()
    payload["lambda"] = lam
    payload["objective"] = solution.objective
    payload["iterations"] = solution.iterations
    (out / "report.json").write_text(json.dumps(payload, indent=1))

    grid = locate_opts.grid_size or _default_grid(instance.n_sensors)
    _write_csv(out / "dual_poly_trace.csv", ["f", "q_norm"],
               _trace_rows(solution.gamma, grid))
    norms = np.linalg.norm(solution.gamma, axis=1)
    _write_csv(out / "row_norms.csv", ["row", "gamma_row_norm", "lambda"],
               ((int(i), norms[i], lam) for i in range(norms.size)))
    write_diagnostics_csv(solution, out / "solver_diagnostics.csv")

    print(f"frequencies: {[round(float(x), 6) for x in report.estimated_frequencies]}")
    print(f"outlier rows: {[int(i) for i in report.estimated_outlier_rows]}")
    print(f"duality gap: {report.duality_gap:.3e}  converged: {solution.converged}")
    return EXIT_OK if solution.converged else EXIT_NO_CONVERGENCE


# ---------------------------------------------------------------------------
# phase transition sweep
# ---------------------------------------------------------------------------


def _phase_trial(payload) -> tuple:
    (n_sensors, n_snapshots, f1, delta, delta_idx, trial, seed,
     total_outliers, solver_kwargs, grid) = payload
    try:
        cfg = SynthesisConfig(
            n_sensors=n_sensors,
            n_snapshots=n_snapshots,
            frequencies=(f1, (f1 + delta) % 1.0),
            total_outliers=total_outliers,
            outlier_mode="distinct-sensors-overall",
            seed=seed,
        )
        instance = synth_instance(cfg)
        lam = default_lambda(n_sensors)
        report, solution = demix(
            instance.measurement, lam,
            SolverOptions(**solver_kwargs),
            LocateOptions(grid_size=grid),
        )
        ok = success(report.estimated_frequencies, instance.frequencies)
    except SineSpikesError as exc:  # counted as failure, never aborts the sweep
        print(f"trial failed (L={n_snapshots}, delta={delta}, seed={seed}): {exc}",
              file=sys.stderr)
        ok = False
    return (n_snapshots, delta_idx, delta, trial, seed, bool(ok))


def cmd_phase_transition(args, config: dict) -> int:
    section = config.get("phase_transition", {})
    synth_section = config.get("synthesis", {})
    n_sensors = int(synth_section.get("n_sensors", 50))
    f1 = float(section.get("f1", 0.2))
    start = float(section.get("delta_start", 0.1))
    step = float(section.get("delta_step", 0.1))
    stop = float(section.get("delta_stop", 1.5))
    if not start < stop:
        raise ValueError("sweep start must be below stop")
    snapshot_counts = [int(x) for x in section.get("snapshot_counts", [1, 3, 5])]
    trials = int(args.trials or section.get("trials", 20))
    if trials < 1:
        raise ValueError("need at least one trial per cell")
    total_outliers = int(section.get("total_outliers", 10))
    base_seed = int(args.seed if args.seed is not None else config.get("seed", 0))
    solver_kwargs = config.get("solver", {})
    threads = int(args.threads or config.get("threads", 1))

    n_steps = int(round((stop - start) / step)) + 1
    deltas = [(start + i * step) / n_sensors for i in range(n_steps)]

    payloads = [
        (n_sensors, L, f1, deltas[di], di, t,
         trial_seed(base_seed, L, di, t), total_outliers, solver_kwargs, args.grid)
        for L in snapshot_counts for di in range(n_steps) for t in range(trials)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_phase_trial, payloads, chunksize=1))
    else:
        results = [_phase_trial(p) for p in payloads]
    results.sort(key=lambda r: (r[0], r[1], r[3]))

    out = _out_dir(args)
    _write_csv(out / "trials.csv", ["seed", "delta", "L", "success"],
               ((r[4], r[2], r[0], int(r[5])) for r in results))
    agg = {}
    for L, di, delta, _t, _s, ok in results:
        agg.setdefault((L, di, delta), []).append(ok)
    rows = [
        (L, delta * n_sensors, float(np.mean(flags)))
        for (L, di, delta), flags in sorted(agg.items())
    ]
    _write_csv(out / "phase_transition.csv", ["L", "delta_times_N", "success_rate"], rows)
    for L, dN, rate in rows:
        print(f"L={L} delta*N={dN:.2f} success_rate={rate:.2f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# certificate
# ---------------------------------------------------------------------------


def cmd_certificate(args, config: dict) -> int:
    section = dict(config.get("certificate", {}))
    n_sensors = int(section.get("n_sensors", 201))
    n_freqs = int(section.get("n_frequencies", 2))
    separation = section.get("separation")
    separation = 4.0 / (n_sensors - 1) if separation is None else float(separation)
    n_outliers = int(section.get("n_outliers", 5))
    n_snapshots = int(section.get("n_snapshots", 3))
    n_seeds = int(section.get("seeds", 1))
    base_seed = int(args.seed if args.seed is not None else config.get("seed", 0))
    opts = cert_mod.ValidationOptions(
        grid_size=int(args.grid or section.get("grid_size", 1 << 14)),
        near_radius=float(section.get("near_radius", 0.09)),
        near_radius_scaled=bool(section.get("near_radius_scaled", True)),
    )
    lam = None if (args.lam in (None, "auto")) else float(args.lam)

    out = _out_dir(args)
    reports = []
    for k in range(n_seeds):
        seed = base_seed + k
        cert, report = cert_mod.run_certificate(
            n_sensors, n_freqs, separation, n_outliers,
            n_snapshots=n_snapshots, seed=seed, lam=lam, opts=opts,
        )
        reports.append(report)
        suffix = f"_{seed}" if n_seeds > 1 else ""
        (out / f"certificate_report{suffix}.json").write_text(
            json.dumps(report.to_json(), indent=1)
        )
        if cert is not None:
            grid = opts.grid_size
            _write_csv(out / f"certificate_trace{suffix}.csv", ["f", "q_norm"],
                       _trace_rows(cert.gamma, grid))
        print(f"seed={seed} pass={report.passed} "
              f"residual={report.interpolation_residual:.2e} "
              f"offgrid={report.offgrid_max:.4f} "
              f"curvature={report.near_curvature_max:.3e} "
              f"row_margin={report.outlier_row_margin:.4f}")
    if n_seeds > 1:
        summary = {
            "seeds": n_seeds,
            "pass_rate": float(np.mean([r.passed for r in reports])),
        }
        (out / "certificate_summary.json").write_text(json.dumps(summary, indent=1))
        print(f"pass rate: {summary['pass_rate']:.2f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinespikes",
        description="Demix spectral lines from row-sparse outliers via the dual SDP.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("synth", cmd_synth),
        ("demix", cmd_demix),
        ("phase-transition", cmd_phase_transition),
        ("certificate", cmd_certificate),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="path to a JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--grid", type=int, default=None)
        p.add_argument("--lambda", dest="lam", default=None,
                       help='regularization weight, a float or "auto" (= 1/sqrt(N))')
        p.set_defaults(handler=fn)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args.config)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.handler(args, config)
    except (SineSpikesError, ValueError, KeyError, TypeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
