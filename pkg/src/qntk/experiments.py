"""Reproducible experiment runners behind the command-line interface.

Every experiment is a pure function of a validated config whose master seed
feeds deterministic substreams, so re-running with the same config
reproduces the numerical content of every data file bit for bit.  Each data
file embeds the seed and a hash of the resolved config; the manifest
additionally records versions and wall time (the one field allowed to
differ between reruns).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .encodings import AngleConvention, PauliZProduct, overlap_s, phase_vector
from .ensemble import (
    EnsembleSpec,
    empirical_kernel,
    expected_kernel,
    feature_matrix,
    fit_least_squares,
    mc_expected_kernel,
)
from .errors import ConfigError
from .haar_stats import (
    SpectrumSpec,
    density_normalization,
    mc_observable_density,
    observable_density,
    verify_coefficient_laws,
)
from .linalg import Observable, substream
from .ntk import KernelMatrix, LinearizedModel, flow_solution, kernel_regression, simulate_gradient_descent
from .qnn import expected_tangent_kernel, mc_expected_tangent_kernel
from .serialize import save_json, write_csv
from .trace_estimator import ShotPlan, hadamard_test

DEFAULT_SEED = 20260809


# ---------------------------------------------------------------------------
# config plumbing


def _coerce(name: str, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"field '{name}' must be a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"field '{name}' must be an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"field '{name}' must be a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"field '{name}' must be a string, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"field '{name}' must be a list, got {value!r}")
        try:
            return tuple(float(v) for v in value)
        except (TypeError, ValueError):
            raise ConfigError(f"field '{name}' must be a list of numbers, got {value!r}")
    raise ConfigError(f"field '{name}' has unsupported type")


def config_from_dict(cls, data: dict):
    """Strictly build a config dataclass: unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(
            f"unknown config key(s) {unknown}; allowed keys: {sorted(known)}"
        )
    kwargs = {}
    for name, f in known.items():
        if name in data:
            kwargs[name] = _coerce(name, data[name], f.default)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_hash(cfg) -> str:
    payload = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _convention(cfg_value: str) -> AngleConvention:
    try:
        return AngleConvention(cfg_value)
    except ValueError:
        raise ConfigError(f"field 'convention' must be 'full' or 'half', got {cfg_value!r}")


def _z_string(n_qubits: int) -> Observable:
    return Observable.pauli("Z" * n_qubits)


# ---------------------------------------------------------------------------
# experiment configs


@dataclass(frozen=True)
class Fig1RegressionConfig:
    """Ensemble regression demo on f(x) = cos x + 3 sin 2x - 2 cos 3x."""

    seed: int = DEFAULT_SEED
    n_qubits: int = 4
    n_terms: int = 2000
    grid_points: int = 50
    x_start: float = 0.0
    x_stop: float = float(2.0 * np.pi)  # exclusive: grid avoids the duplicate endpoint
    # half-angle encoding: its feature space carries frequencies 0..n_qubits,
    # which covers the target's harmonics 1..3 (the full convention spans only
    # even frequencies and cannot represent cos x or cos 3x)
    convention: str = "half"
    cos_coefficients: tuple = (1.0, 0.0, -2.0)
    sin_coefficients: tuple = (0.0, 3.0, 0.0)
    sv_cutoff: float = 1e-10
    ridge: float = 0.0

    def __post_init__(self):
        _require(self.n_qubits >= 1, "field 'n_qubits' must be >= 1")
        _require(self.n_terms >= 1, "field 'n_terms' must be >= 1")
        _require(self.grid_points >= 2, "field 'grid_points' must be >= 2")
        _require(self.x_stop > self.x_start, "field 'x_stop' must exceed 'x_start'")
        _require(self.sv_cutoff > 0, "field 'sv_cutoff' must be positive")
        _require(self.ridge >= 0, "field 'ridge' must be non-negative")
        _convention(self.convention)


@dataclass(frozen=True)
class EnsembleKernelMcConfig:
    """Closed-form expected kernel vs Haar Monte Carlo for the ensemble."""

    seed: int = DEFAULT_SEED
    n_qubits: int = 2
    samples: int = 20000
    n_pairs: int = 5
    convention: str = "full"

    def __post_init__(self):
        _require(self.n_qubits >= 1, "field 'n_qubits' must be >= 1")
        _require(self.samples >= 100, "field 'samples' must be >= 100")
        _require(self.n_pairs >= 1, "field 'n_pairs' must be >= 1")
        _convention(self.convention)


@dataclass(frozen=True)
class QnnKernelMcConfig:
    """Stated expected tangent kernel vs Haar Monte Carlo for the QNN."""

    seed: int = DEFAULT_SEED
    n_qubits: int = 3
    samples: int = 20000
    n_pairs: int = 3
    convention: str = "full"

    def __post_init__(self):
        _require(self.n_qubits >= 1, "field 'n_qubits' must be >= 1")
        _require(self.samples >= 100, "field 'samples' must be >= 100")
        _require(self.n_pairs >= 1, "field 'n_pairs' must be >= 1")
        _convention(self.convention)


@dataclass(frozen=True)
class VerifyDistributionsConfig:
    """KS checks of the coefficient limit laws at one dimension."""

    seed: int = DEFAULT_SEED
    n_qubits: int = 6
    samples: int = 10000

    def __post_init__(self):
        _require(self.n_qubits >= 3, "field 'n_qubits' must be >= 3 (need d >= 8)")
        _require(self.samples >= 10000, "field 'samples' must be >= 10000")


@dataclass(frozen=True)
class ObservableDensityConfig:
    """Quadrature density of <psi|H|psi> vs Monte Carlo histogram."""

    seed: int = DEFAULT_SEED
    eigenvalues: tuple = (1.0, 0.0, -1.0)
    mc_samples: int = 200000
    bins: int = 50

    def __post_init__(self):
        _require(2 <= len(self.eigenvalues) <= 4, "field 'eigenvalues' must list 2 to 4 values")
        _require(self.mc_samples >= 10000, "field 'mc_samples' must be >= 10000")
        _require(self.bins >= 2, "field 'bins' must be >= 2")


@dataclass(frozen=True)
class TraceCalibrationConfig:
    """Empirical failure rates and shot scaling of the trace estimator."""

    seed: int = DEFAULT_SEED
    epsilons: tuple = (0.1, 0.05, 0.025)
    delta: float = 0.01
    trials: int = 1000
    n_qubits: int = 2
    convention: str = "full"
    delta_x: float = 0.7

    def __post_init__(self):
        _require(len(self.epsilons) >= 1, "field 'epsilons' must be non-empty")
        _require(all(e > 0 for e in self.epsilons), "field 'epsilons' must be positive")
        _require(0 < self.delta < 1, "field 'delta' must lie in (0, 1)")
        _require(self.trials >= 1, "field 'trials' must be >= 1")
        _require(self.n_qubits >= 1, "field 'n_qubits' must be >= 1")
        _convention(self.convention)


@dataclass(frozen=True)
class NtkFlowConfig:
    """Closed-form gradient flow vs explicit Euler descent."""

    seed: int = DEFAULT_SEED
    n_points: int = 6
    n_params: int = 40
    total_time: float = 1.0
    learning_rate: float = 0.002
    t_grid: tuple = (0.0, 0.1, 0.5, 1.0, 2.0)

    def __post_init__(self):
        _require(self.n_points >= 1, "field 'n_points' must be >= 1")
        _require(self.n_params >= 1, "field 'n_params' must be >= 1")
        _require(self.total_time > 0, "field 'total_time' must be positive")
        _require(self.learning_rate > 0, "field 'learning_rate' must be positive")
        _require(all(t >= 0 for t in self.t_grid), "field 't_grid' must be non-negative")


# ---------------------------------------------------------------------------
# runners  (substream indices: 0 = model/data sampling, 1 = Monte Carlo, ...)


def _target_values(cfg: Fig1RegressionConfig, xs: np.ndarray) -> np.ndarray:
    y = np.zeros_like(xs)
    for k, coef in enumerate(cfg.cos_coefficients, start=1):
        y += coef * np.cos(k * xs)
    for k, coef in enumerate(cfg.sin_coefficients, start=1):
        y += coef * np.sin(k * xs)
    return y


def run_fig1_regression(cfg: Fig1RegressionConfig, out: Path, preamble: dict) -> list[Path]:
    enc = PauliZProduct(cfg.n_qubits, _convention(cfg.convention))
    obs = _z_string(cfg.n_qubits)
    spec = EnsembleSpec.sample_haar(cfg.n_terms, obs, enc, substream(cfg.seed, 0))

    xs = cfg.x_start + (cfg.x_stop - cfg.x_start) * np.arange(cfg.grid_points) / cfg.grid_points
    targets = _target_values(cfg, xs)

    f_mat = feature_matrix(spec, xs)
    fit = fit_least_squares(f_mat, targets, tol=cfg.sv_cutoff)
    ols_pred = f_mat @ fit.coef

    kernel = empirical_kernel(f_mat)
    kernel.check_psd()
    kernel_pred = np.array(
        [kernel_regression(kernel, targets, kernel.matrix[p], ridge=cfg.ridge) for p in range(len(xs))]
    )

    gap = np.abs(ols_pred - kernel_pred)
    predictions = out / "predictions.csv"
    write_csv(
        predictions,
        ["x", "target", "ols_prediction", "kernel_prediction", "abs_gap"],
        zip(xs, targets, ols_pred, kernel_pred, gap),
        preamble=preamble,
    )
    summary = out / "summary.json"
    save_json(
        summary,
        {
            **preamble,
            "train_mse_ols": float(np.mean((ols_pred - targets) ** 2)),
            "train_mse_kernel": float(np.mean((kernel_pred - targets) ** 2)),
            "max_prediction_gap": float(gap.max()),
            "fit_residual": fit.residual,
            "fit_rank": fit.rank,
            "kernel_min_eigenvalue": kernel.min_eigenvalue(),
        },
    )
    return [predictions, summary]


def run_ensemble_kernel_mc(cfg: EnsembleKernelMcConfig, out: Path, preamble: dict) -> list[Path]:
    enc = PauliZProduct(cfg.n_qubits, _convention(cfg.convention))
    obs = _z_string(cfg.n_qubits)
    d = enc.dim
    pair_rng = substream(cfg.seed, 0)
    pairs = pair_rng.uniform(0.0, 2.0 * np.pi, size=(cfg.n_pairs, 2))

    rows = []
    max_dev = 0.0
    for idx, (x, x_prime) in enumerate(pairs):
        s = overlap_s(enc, x, x_prime)
        formula = expected_kernel(d, obs, s)
        mc_mean, mc_se = mc_expected_kernel(
            d, obs, enc, x, x_prime, cfg.samples, substream(cfg.seed, 1, idx)
        )
        dev = abs(mc_mean - formula) / mc_se
        max_dev = max(max_dev, dev)
        rows.append((x, x_prime, s, formula, mc_mean, mc_se, dev))

    table = out / "kernel_mc.csv"
    write_csv(
        table,
        ["x", "x_prime", "overlap_s", "formula", "mc_mean", "mc_se", "abs_deviation_se"],
        rows,
        preamble=preamble,
    )
    summary = out / "summary.json"
    save_json(
        summary,
        {
            **preamble,
            "dim": d,
            "samples": cfg.samples,
            "max_abs_deviation_se": max_dev,
            "all_within_4se": bool(max_dev <= 4.0),
        },
    )
    return [table, summary]


def run_qnn_kernel_mc(cfg: QnnKernelMcConfig, out: Path, preamble: dict) -> list[Path]:
    enc = PauliZProduct(cfg.n_qubits, _convention(cfg.convention))
    obs = _z_string(cfg.n_qubits)
    d = enc.dim
    pair_rng = substream(cfg.seed, 0)
    pairs = pair_rng.uniform(0.0, 2.0 * np.pi, size=(cfg.n_pairs, 2))

    entries = []
    rows = []
    for idx, (x, x_prime) in enumerate(pairs):
        lam = phase_vector(enc, x)
        lam_p = phase_vector(enc, x_prime)
        formula = expected_tangent_kernel(d, obs, lam, lam_p)
        mc_mean, mc_se = mc_expected_tangent_kernel(
            d, obs, lam, lam_p, cfg.samples, substream(cfg.seed, 1, idx)
        )
        dev = abs(mc_mean - formula) / mc_se
        entries.append(
            {
                "x": float(x),
                "x_prime": float(x_prime),
                "formula": formula,
                "mc_mean": mc_mean,
                "mc_se": mc_se,
                "deviation_se": dev,
                "agrees_within_4se": bool(dev <= 4.0),
            }
        )
        rows.append((x, x_prime, formula, mc_mean, mc_se, dev))

    table = out / "kernel_mc.csv"
    write_csv(
        table,
        ["x", "x_prime", "formula", "mc_mean", "mc_se", "abs_deviation_se"],
        rows,
        preamble=preamble,
    )
    report = out / "report.json"
    save_json(
        report,
        {
            **preamble,
            "dim": d,
            "samples": cfg.samples,
            "entries": entries,
            "all_agree": bool(all(e["agrees_within_4se"] for e in entries)),
            "note": (
                "The Monte Carlo mean averages the exact gradient-dot-product kernel "
                "over Haar draws; deviations from the stated closed form are recorded, "
                "not corrected."
            ),
        },
    )
    return [table, report]


def run_verify_distributions(cfg: VerifyDistributionsConfig, out: Path, preamble: dict) -> list[Path]:
    obs = _z_string(cfg.n_qubits)
    d = obs.dim
    report_data = verify_coefficient_laws(d, obs, cfg.samples, substream(cfg.seed, 0))
    report = out / "report.json"
    save_json(report, {**preamble, **report_data})
    table = out / "laws.csv"
    write_csv(
        table,
        ["coefficient", "law", "ks_statistic", "threshold", "passed", "sample_mean", "sample_variance"],
        [
            (
                law["coefficient"],
                law["law"]["kind"],
                law["ks_statistic"],
                law["threshold"],
                int(law["passed"]),
                law["sample_mean"],
                law["sample_variance"],
            )
            for law in report_data["laws"]
        ],
        preamble=preamble,
    )
    return [report, table]


def run_observable_density(cfg: ObservableDensityConfig, out: Path, preamble: dict) -> list[Path]:
    spectrum = SpectrumSpec(np.asarray(cfg.eigenvalues, dtype=float))
    hist = mc_observable_density(spectrum, cfg.mc_samples, cfg.bins, substream(cfg.seed, 0))
    centers = hist.centers
    quad_density = np.array([observable_density(spectrum, float(y)) for y in centers])
    dev = np.full_like(quad_density, np.inf)
    populated = hist.std_error > 0
    dev[populated] = np.abs(quad_density - hist.density)[populated] / hist.std_error[populated]
    dev[(~populated) & np.isclose(quad_density, hist.density)] = 0.0

    table = out / "density.csv"
    write_csv(
        table,
        ["bin_center", "quadrature_density", "mc_density", "mc_se", "abs_deviation_se"],
        zip(centers, quad_density, hist.density, hist.std_error, dev),
        preamble=preamble,
    )
    summary = out / "summary.json"
    save_json(
        summary,
        {
            **preamble,
            "eigenvalues": list(spectrum.eigenvalues),
            "normalization": density_normalization(spectrum),
            "max_abs_deviation_se": float(dev.max()),
            "histogram_integral": hist.integral(),
        },
    )
    return [table, summary]


def run_trace_calibration(cfg: TraceCalibrationConfig, out: Path, preamble: dict) -> list[Path]:
    enc = PauliZProduct(cfg.n_qubits, _convention(cfg.convention))
    lam = phase_vector(enc, cfg.delta_x) - phase_vector(enc, 0.0)
    u = np.diag(np.exp(1j * lam))
    d = enc.dim
    true_re, true_im = np.trace(u).real, np.trace(u).imag

    rows = []
    shot_counts = []
    for e_idx, eps in enumerate(cfg.epsilons):
        plan = ShotPlan.for_accuracy(eps, cfg.delta)
        shot_counts.append(plan.shots_per_basis)
        err_x = np.empty(cfg.trials)
        err_y = np.empty(cfg.trials)
        for trial in range(cfg.trials):
            rng = substream(cfg.seed, e_idx, trial)
            mx = hadamard_test(u, "x", plan.shots_per_basis, rng)
            my = hadamard_test(u, "y", plan.shots_per_basis, rng)
            err_x[trial] = abs(d * mx - true_re)
            err_y[trial] = abs(-d * my - true_im)
        bound = d * eps
        rows.append(
            (
                eps,
                plan.shots_per_basis,
                float(np.mean(err_x > bound)),
                float(np.mean(err_y > bound)),
                float(np.quantile(err_x, 0.5)),
                float(np.quantile(err_x, 0.99)),
                float(np.quantile(err_y, 0.5)),
                float(np.quantile(err_y, 0.99)),
            )
        )

    ratios = [shot_counts[i] / shot_counts[i - 1] for i in range(1, len(shot_counts))]
    table = out / "calibration.csv"
    write_csv(
        table,
        ["epsilon", "shots_per_basis", "fail_rate_x", "fail_rate_y", "q50_err_x", "q99_err_x", "q50_err_y", "q99_err_y"],
        rows,
        preamble=preamble,
    )
    summary = out / "summary.json"
    save_json(
        summary,
        {
            **preamble,
            "dim": d,
            "delta": cfg.delta,
            "shot_counts": shot_counts,
            "shot_ratios": ratios,
            "all_rates_within_delta": bool(all(r[2] <= cfg.delta and r[3] <= cfg.delta for r in rows)),
        },
    )
    return [table, summary]


def run_ntk_flow(cfg: NtkFlowConfig, out: Path, preamble: dict) -> list[Path]:
    rng = substream(cfg.seed, 0)
    f_mat = rng.standard_normal((cfg.n_points, cfg.n_params)) / np.sqrt(cfg.n_params)
    targets = rng.standard_normal(cfg.n_points)
    kernel = KernelMatrix(f_mat @ f_mat.T, source="empirical")
    kernel.check_psd()
    model = LinearizedModel(np.zeros(cfg.n_points), kernel, targets)

    flow_rows = []
    for t in cfg.t_grid:
        f_t = flow_solution(model, float(t))
        flow_rows.append((t, *f_t, float(np.linalg.norm(f_t - targets))))
    flow_csv = out / "flow.csv"
    write_csv(
        flow_csv,
        ["t", *[f"f{i}" for i in range(cfg.n_points)], "residual_norm"],
        flow_rows,
        preamble=preamble,
    )

    steps = max(1, round(cfg.total_time / cfg.learning_rate))
    eta = cfg.total_time / steps
    trajectory = simulate_gradient_descent(f_mat, targets, np.zeros(cfg.n_params), eta, steps)
    euler_rows = [
        ((k + 1) * eta, *trajectory[k], 0.5 * float(np.sum((trajectory[k] - targets) ** 2)))
        for k in range(steps)
    ]
    euler_csv = out / "euler.csv"
    write_csv(
        euler_csv,
        ["t", *[f"f{i}" for i in range(cfg.n_points)], "loss"],
        euler_rows,
        preamble=preamble,
    )

    exact = flow_solution(model, cfg.total_time)
    scale = max(float(np.linalg.norm(exact)), 1.0)
    deviation = float(np.linalg.norm(trajectory[-1] - exact)) / scale

    half = simulate_gradient_descent(f_mat, targets, np.zeros(cfg.n_params), eta / 2.0, 2 * steps)
    deviation_half = float(np.linalg.norm(half[-1] - exact)) / scale

    summary = out / "summary.json"
    save_json(
        summary,
        {
            **preamble,
            "eta": eta,
            "steps": steps,
            "eta_lambda_max": eta * float(np.linalg.eigvalsh(kernel.matrix)[-1]),
            "relative_deviation": deviation,
            "relative_deviation_half_eta": deviation_half,
            "error_ratio_on_halving": deviation / deviation_half if deviation_half > 0 else float("nan"),
        },
    )
    return [flow_csv, euler_csv, summary]


# ---------------------------------------------------------------------------
# registry and framework

EXPERIMENTS = {
    "fig1-regression": (Fig1RegressionConfig, run_fig1_regression),
    "ensemble-kernel-mc": (EnsembleKernelMcConfig, run_ensemble_kernel_mc),
    "qnn-kernel-mc": (QnnKernelMcConfig, run_qnn_kernel_mc),
    "verify-distributions": (VerifyDistributionsConfig, run_verify_distributions),
    "observable-density": (ObservableDensityConfig, run_observable_density),
    "trace-calibration": (TraceCalibrationConfig, run_trace_calibration),
    "ntk-flow": (NtkFlowConfig, run_ntk_flow),
}


def default_config(name: str) -> dict:
    cls, _ = _lookup(name)
    return dataclasses.asdict(cls())


def _lookup(name: str):
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; available: {sorted(EXPERIMENTS)}")
    return EXPERIMENTS[name]


def run_experiment(
    name: str,
    config: dict | None = None,
    seed: int | None = None,
    out_dir: str | Path | None = None,
) -> Path:
    """Validate the config, run the experiment, write data files + manifest.

    Returns the path of the manifest.  ``seed`` overrides the config's seed
    before hashing, so the recorded config is exactly what ran.
    """
    cls, runner = _lookup(name)
    data = dict(config or {})
    if seed is not None:
        data["seed"] = seed
    cfg = config_from_dict(cls, data)

    out = Path(out_dir) if out_dir is not None else Path("qntk_runs") / name
    out.mkdir(parents=True, exist_ok=True)

    digest = config_hash(cfg)
    preamble = {"seed": cfg.seed, "config_hash": digest}
    start = time.perf_counter()
    files = runner(cfg, out, preamble)
    wall = time.perf_counter() - start

    manifest_path = out / "manifest.json"
    save_json(
        manifest_path,
        {
            "experiment": name,
            "config": dataclasses.asdict(cfg),
            "config_hash": digest,
            "seed": cfg.seed,
            "versions": {
                "qntk": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": sys.version.split()[0],
            },
            "wall_time_s": wall,
            "files": [
                {
                    "name": p.name,
                    "bytes": p.stat().st_size,
                    "sha256": hashlib.sha256(p.read_bytes()).hexdigest(),
                }
                for p in files
            ],
        },
    )
    return manifest_path
