#!/usr/bin/env python3
"""
Study Harness
Scenario configuration, per-replication seeding and the replication loop
behind the correct, misspecified, magnitude-growth, microergodic and
Kakutani studies
"""

import copy
import json
import logging
import math
import os
import re
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from errors import ConfigError, PlotError, WhittleMaternError
from estimator import (estimate_magnitude, estimate_range_and_magnitude, estimate_smoothness,
                       matern_family, range_family, spectral_family, wendland_family)
from geometry import Domain, quasi_uniform_design, random_design
from kernels import (EuclideanMaternKernel, GeneralizedWendlandKernel, NormalizationKind,
                     SpectralParams, TruncatedSpectralKernel, default_distance_grid,
                     fit_auxiliary_parameters)
from measures import kakutani_matrix
from sampler import CoefficientLaw, KarhunenLoeveSampler
from study_analysis import (emit_csv, emit_summary_csv, emit_violin_svg, fit_loglog_slope,
                            records_frame, summarize_records)

LOGGER = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).parent / "study_config.json"
WORKERS_ENV = "WM_STUDY_WORKERS"
CANDIDATE_KERNELS = ("matern", "wendland")
DESIGNS = ("regular", "random")


class ScenarioKind(str, Enum):
    CORRECT = "correct"
    MISSPECIFIED_TAU = "misspecified_tau"
    MISSPECIFIED_LAW = "misspecified_law"
    MISSPECIFIED_KERNEL = "misspecified_kernel"
    MICROERGODIC_CLT = "microergodic_clt"
    KAKUTANI_TABLE = "kakutani_table"
    MAGNITUDE_GROWTH = "magnitude_growth"


@dataclass(frozen=True)
class ScenarioCell:
    """One candidate setting inside a scenario; its label is the CSV scenario id"""

    label: str
    law: CoefficientLaw
    candidate_tau: float = None
    kernel: str = None


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: ScenarioKind
    domain: Domain
    s0: float
    tau0: float
    sigma2_0: float
    truncation: int
    law: CoefficientLaw
    normalization: NormalizationKind
    sizes: tuple
    replications: int
    s_min: float
    s_max: float
    grid_step: float
    tolerance: float
    tau_bounds: tuple
    master_seed: int
    candidate_taus: tuple = (20.0,)
    kernels: tuple = CANDIDATE_KERNELS
    laws: tuple = ()
    delta_s: float = 1.0
    profile_magnitude: bool = None
    nugget: float = 0.0
    design: str = "regular"
    workers: int = 1
    record_timing: bool = False
    output_dir: str = None
    kakutani: dict = field(default_factory=dict)
    source: str = None

    @property
    def truth(self):
        """True field parameters; the microergodic study needs power normalization"""
        normalization = self.normalization
        if self.scenario is ScenarioKind.MICROERGODIC_CLT:
            normalization = NormalizationKind.POWER
        return SpectralParams(self.s0, self.tau0, self.sigma2_0, normalization)

    @property
    def profiles_magnitude(self):
        if self.profile_magnitude is not None:
            return bool(self.profile_magnitude)
        return self.scenario is ScenarioKind.MISSPECIFIED_KERNEL

    def cells(self):
        kind = self.scenario
        if kind is ScenarioKind.MISSPECIFIED_TAU:
            return [ScenarioCell(f"misspecified_tau(tau={t:g})", self.law, t)
                    for t in self.candidate_taus]
        if kind is ScenarioKind.MISSPECIFIED_LAW:
            return [ScenarioCell(f"misspecified_law({law.label})", law, self.tau0)
                    for law in self.laws]
        if kind is ScenarioKind.MISSPECIFIED_KERNEL:
            return [ScenarioCell(f"misspecified_kernel({k})", self.law, kernel=k)
                    for k in self.kernels]
        if kind is ScenarioKind.MAGNITUDE_GROWTH:
            return [ScenarioCell(f"magnitude_growth(delta_s={self.delta_s:g})", self.law)]
        return [ScenarioCell(kind.value, self.law, self.tau0)]


@dataclass
class ReplicationRecord:
    scenario: str
    n: int
    rep: int
    seed: int
    s_hat: float = None
    sigma2_hat: float = None
    boundary: bool = False
    cond_min: float = None
    cond_max: float = None
    ms_elapsed: float = None
    tau_hat: float = None
    microergodic: float = None
    status: str = "ok"


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    records: list
    summary: pd.DataFrame
    files: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


def _merge(base, override, prefix, unknown):
    merged = copy.deepcopy(base)
    for key, value in override.items():
        name = f"{prefix}{key}"
        if key not in base:
            unknown.append(name)
        elif isinstance(base[key], dict) and key != "profiles":
            if isinstance(value, dict):
                merged[key] = _merge(base[key], value, f"{name}.", unknown)
            else:
                unknown.append(name)
        else:
            merged[key] = value
    return merged


def _read_json(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    return data


def _strip_comments(data):
    if isinstance(data, dict):
        return {k: _strip_comments(v) for k, v in data.items() if k != "comment"}
    return data


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_count(value):
    return isinstance(value, int) and not isinstance(value, bool)


def config_from_dict(data, source=None):
    """
    Typed, validated ScenarioConfig from merged JSON data

    Every offending key is collected before a single ConfigError is raised.
    """
    bad = []

    def take(key, value, check, convert=lambda v: v):
        try:
            if check(value):
                return convert(value)
        except (ValueError, TypeError, WhittleMaternError):
            pass
        bad.append(key)
        return None

    truth = data.get("true_parameters", {})
    candidate = data.get("candidate", {})
    search = data.get("search", {})

    scenario = take("scenario", data.get("scenario"),
                    lambda v: v in {k.value for k in ScenarioKind}, ScenarioKind)
    domain = take("domain", data.get("domain"), lambda v: v in {d.value for d in Domain}, Domain)
    half = domain.dimension / 2.0 if domain else 0.5

    s0 = take("true_parameters.s0", truth.get("s0"), lambda v: _is_number(v) and v > half, float)
    tau0 = take("true_parameters.tau0", truth.get("tau0"), lambda v: _is_number(v) and v > 0, float)
    sigma2_0 = take("true_parameters.sigma2_0", truth.get("sigma2_0"),
                    lambda v: _is_number(v) and v > 0, float)
    truncation = take("true_parameters.truncation", truth.get("truncation"),
                      lambda v: _is_count(v) and v >= 1, int)
    law = take("true_parameters.law", truth.get("law"), lambda v: isinstance(v, str),
               lambda v: CoefficientLaw.parse(v, truth.get("df")))
    normalization = take("true_parameters.normalization", truth.get("normalization"),
                         lambda v: v in {k.value for k in NormalizationKind}, NormalizationKind)

    taus = take("candidate.taus", candidate.get("taus"),
                lambda v: isinstance(v, list) and v and all(_is_number(t) and t > 0 for t in v),
                lambda v: tuple(float(t) for t in v))
    kernels = take("candidate.kernels", candidate.get("kernels"),
                   lambda v: isinstance(v, list) and v and all(k in CANDIDATE_KERNELS for k in v),
                   tuple)
    laws = take("candidate.laws", candidate.get("laws"),
                lambda v: isinstance(v, list) and all(isinstance(x, str) for x in v),
                lambda v: tuple(CoefficientLaw.parse(x, truth.get("df")) for x in v))
    delta_s = take("candidate.delta_s", candidate.get("delta_s"), _is_number, float)
    profile = take("candidate.profile_magnitude", candidate.get("profile_magnitude"),
                   lambda v: v is None or isinstance(v, bool))
    nugget = take("candidate.nugget", candidate.get("nugget"),
                  lambda v: _is_number(v) and v >= 0, float)

    s_min = take("search.s_min", search.get("s_min"), lambda v: _is_number(v) and v > half, float)
    s_max = take("search.s_max", search.get("s_max"),
                 lambda v: _is_number(v) and (s_min is None or v >= s_min), float)
    grid_step = take("search.grid_step", search.get("grid_step"),
                     lambda v: _is_number(v) and v > 0, float)
    tolerance = take("search.tolerance", search.get("tolerance"),
                     lambda v: _is_number(v) and v > 0, float)
    tau_bounds = take("search.tau_bounds", search.get("tau_bounds"),
                      lambda v: (isinstance(v, list) and len(v) == 2 and all(map(_is_number, v))
                                 and 1.0 <= v[0] <= v[1]),
                      lambda v: (float(v[0]), float(v[1])))

    profiles = data.get("profiles", {})
    profile_name = take("profile", data.get("profile"), lambda v: v in profiles)
    chosen = profiles.get(profile_name, {}) if profile_name else {}
    sizes = data.get("sizes") if data.get("sizes") is not None else chosen.get("sizes")
    sizes = take("sizes", sizes,
                 lambda v: isinstance(v, list) and v and all(_is_count(n) and n >= 2 for n in v),
                 lambda v: tuple(int(n) for n in v))
    replications = data.get("replications")
    if replications is None:
        replications = chosen.get("replications")
    replications = take("replications", replications, lambda v: _is_count(v) and v >= 1, int)

    design = take("design", data.get("design"), lambda v: v in DESIGNS)
    master_seed = take("master_seed", data.get("master_seed"), lambda v: _is_count(v) and v >= 0,
                       int)
    workers = take("workers", data.get("workers"), lambda v: _is_count(v) and v >= 1, int)
    record_timing = take("record_timing", data.get("record_timing"),
                         lambda v: isinstance(v, bool))
    output_dir = take("output_dir", data.get("output_dir"), lambda v: v is None or isinstance(v, str))
    kakutani = take("kakutani", data.get("kakutani"), lambda v: isinstance(v, dict), dict)

    if (scenario is ScenarioKind.MISSPECIFIED_KERNEL and domain is not None
            and domain is not Domain.SPHERE):
        bad.append("domain")
    if scenario is ScenarioKind.MISSPECIFIED_LAW and laws == ():
        bad.append("candidate.laws")
    if bad:
        raise ConfigError(f"Invalid configuration{f' in {source}' if source else ''}",
                          keys=sorted(set(bad)))

    return ScenarioConfig(
        scenario=scenario, domain=domain, s0=s0, tau0=tau0, sigma2_0=sigma2_0,
        truncation=truncation, law=law, normalization=normalization, sizes=sizes,
        replications=replications, s_min=s_min, s_max=s_max, grid_step=grid_step,
        tolerance=tolerance, tau_bounds=tau_bounds, master_seed=master_seed,
        candidate_taus=taus, kernels=kernels, laws=laws, delta_s=delta_s,
        profile_magnitude=profile, nugget=nugget, design=design, workers=workers,
        record_timing=record_timing, output_dir=output_dir, kakutani=kakutani,
        source=str(source) if source else None)


def load_scenario_config(path=None, overrides=None, defaults_path=DEFAULT_CONFIG_PATH):
    """
    Scenario file (only the keys it changes) merged over the study defaults

    Args:
        path (str | Path): Scenario JSON; None uses the defaults alone
        overrides (dict): Extra overrides applied last (command-line flags)
        defaults_path (str | Path): Defaults JSON

    Returns:
        ScenarioConfig
    """
    data = _strip_comments(_read_json(defaults_path))
    unknown = []
    if path is not None:
        data = _merge(data, _strip_comments(_read_json(path)), "", unknown)
    if overrides:
        data = _merge(data, overrides, "", unknown)
    if unknown:
        raise ConfigError(f"Unknown configuration keys{f' in {path}' if path else ''}",
                          keys=unknown)
    return config_from_dict(data, source=path)


def resolve_workers(cfg, requested=None):
    """Worker count: explicit request, then $WM_STUDY_WORKERS, then the config"""
    if requested:
        return int(requested)
    env = os.environ.get(WORKERS_ENV)
    if not env:
        return cfg.workers
    try:
        workers = int(env)
    except ValueError:
        workers = 0
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer", keys=[WORKERS_ENV])
    return workers


def replication_seed(master_seed, scenario, n, rep):
    """63-bit seed hashed from (master seed, scenario id, n, replication)"""
    key = [int(master_seed), zlib.crc32(str(scenario).encode("utf-8")), int(n), int(rep)]
    state = np.random.SeedSequence(key).generate_state(1, dtype=np.uint64)[0]
    return int(state) >> 1


def scenario_design(cfg, n):
    """Design of size n used by every replication of a scenario"""
    if cfg.design == "random":
        return random_design(cfg.domain, n, seed=replication_seed(cfg.master_seed, "design", n, 0))
    return quasi_uniform_design(cfg.domain, n)


def fit_candidate_kernels(cfg):
    """Candidate kernel families fitted once to the true covariance"""
    target = TruncatedSpectralKernel(cfg.truth, cfg.truncation, cfg.domain)
    d = cfg.domain.dimension
    templates = {"matern": EuclideanMaternKernel(cfg.s0 - d / 2.0, 1.0),
                 "wendland": GeneralizedWendlandKernel(cfg.s0 - (d + 1) / 2.0, 1.0,
                                                       ambient_dimension=d + 1)}
    fitted = {}
    for name in cfg.kernels:
        fit = fit_auxiliary_parameters(target, templates[name], default_distance_grid())
        LOGGER.info("Fitted %s: scale=%.6g sigma2=%.6g (relative residual %.3g)",
                    name, fit.scale, fit.sigma2, fit.relative_residual)
        fitted[name] = fit
    return fitted


def _cell_estimator(cfg, cell, fitted):
    """Callable (design, values) -> estimate fields for one scenario cell"""
    kind = cfg.scenario
    profile = cfg.profiles_magnitude
    interval = (cfg.s_min, cfg.s_max)

    if kind is ScenarioKind.MAGNITUDE_GROWTH:
        s = cfg.s0 + cfg.delta_s
        model = TruncatedSpectralKernel(
            SpectralParams(s, cfg.tau0, 1.0, cfg.normalization), cfg.truncation, cfg.domain)

        def magnitude(ps, u):
            return {"s_hat": s, "sigma2_hat": estimate_magnitude(model, ps, u)}
        return magnitude

    if kind is ScenarioKind.MICROERGODIC_CLT:
        family = range_family(cfg.s0, cfg.truncation, cfg.domain)

        def microergodic(ps, u):
            result = estimate_range_and_magnitude(family, ps, u, cfg.tau_bounds,
                                                  tolerance=cfg.tolerance)
            return {"s_hat": result.s_hat, "sigma2_hat": result.sigma2_hat,
                    "boundary": result.boundary, "cond_min": result.cond_min,
                    "cond_max": result.cond_max, "tau_hat": result.tau_hat,
                    "microergodic": result.microergodic}
        return microergodic

    if kind is ScenarioKind.MISSPECIFIED_KERNEL:
        fit = fitted[cell.kernel]
        d = cfg.domain.dimension
        if cell.kernel == "matern":
            family = matern_family(fit.scale, fit.sigma2, d, profile)
        else:
            family = wendland_family(fit.scale, fit.sigma2, d, profile)
    else:
        family = spectral_family(cell.candidate_tau, cfg.truncation, cfg.domain,
                                 cfg.normalization, cfg.sigma2_0, profile)
    if cfg.nugget:
        family = replace(family, nugget=cfg.nugget)

    def smoothness(ps, u):
        result = estimate_smoothness(family, ps, u, interval, cfg.grid_step, cfg.tolerance)
        return {"s_hat": result.s_hat, "sigma2_hat": result.sigma2_hat,
                "boundary": result.boundary, "cond_min": result.cond_min,
                "cond_max": result.cond_max}
    return smoothness


def _run_replication(cfg, cell, estimator, sampler, n, rep):
    seed = replication_seed(cfg.master_seed, cell.label, n, rep)
    record = ReplicationRecord(scenario=cell.label, n=n, rep=rep, seed=seed)
    start = time.perf_counter()
    try:
        sample = sampler.draw(cell.law, seed)
        for key, value in estimator(sampler.points, sample.values).items():
            setattr(record, key, value)
    except WhittleMaternError as e:
        record.status = f"failed: {e}"
        LOGGER.warning("%s n=%d rep=%d failed: %s", cell.label, n, rep, e)
    if cfg.record_timing:
        record.ms_elapsed = 1000.0 * (time.perf_counter() - start)
    LOGGER.debug("%s n=%d rep=%d seed=%d s_hat=%s", cell.label, n, rep, seed, record.s_hat)
    return record


def _slug(label):
    return re.sub(r"[^A-Za-z0-9.]+", "_", label).strip("_")


def _kakutani_result(cfg):
    table = cfg.kakutani
    reports = kakutani_matrix(float(table.get("s", 2.0)), float(table.get("tau1", 1.0)),
                              float(table.get("tau2", 2.0)), cfg.law,
                              tuple(table.get("dimensions", (1, 2, 3, 4))),
                              int(table.get("terms", 100_000)),
                              float(table.get("sigma_factor", 2.0)),
                              float(table.get("s_shift", 1.0)))
    rows = []
    for report in reports:
        row = report.as_dict()
        row["notes"] = "; ".join(row["notes"])
        rows.append(row)
    frame = pd.DataFrame(rows)
    extras = {"agreement": int(sum(r.agrees for r in reports)), "cases": len(reports)}
    LOGGER.info("Kakutani matrix: %d of %d verdicts agree with the analytic rule",
                extras["agreement"], extras["cases"])
    return ScenarioResult(config=cfg, records=[], summary=frame, extras=extras)


def _extras(cfg, frame):
    extras = {}
    if cfg.scenario is ScenarioKind.MAGNITUDE_GROWTH:
        ok = frame.dropna(subset=["sigma2_hat"])
        ok = ok[ok["sigma2_hat"] > 0]
        means = ok.groupby("n")["sigma2_hat"].apply(lambda v: float(np.mean(np.log(v))))
        if len(means) >= 2:
            extras["magnitude_slope"] = fit_loglog_slope(means.index.to_numpy(dtype=float),
                                                         np.exp(means.to_numpy()))
        extras["predicted_slope"] = 2.0 * cfg.delta_s / cfg.domain.dimension
    if cfg.scenario is ScenarioKind.MICROERGODIC_CLT:
        truth = cfg.truth
        reference = truth.sigma2 * truth.power_factor(cfg.domain.dimension)
        cells = {}
        for n, cell in frame.dropna(subset=["microergodic"]).groupby("n"):
            values = cell["microergodic"].to_numpy(dtype=float)
            if len(values) >= 2:
                variance = float(np.var(math.sqrt(n) * (values - reference), ddof=1))
                cells[str(int(n))] = {"variance": variance,
                                      "ratio": variance / (2.0 * reference ** 2)}
        extras["microergodic_true"] = reference
        extras["clt"] = cells
    return extras


def _write_outputs(cfg, result):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    if cfg.scenario is ScenarioKind.KAKUTANI_TABLE:
        files["kakutani"] = out / "kakutani.csv"
        result.summary.to_csv(files["kakutani"], index=False, float_format="%.17g",
                              lineterminator="\n")
    else:
        files["records"] = out / "records.csv"
        emit_csv(result.records, files["records"])
        files["summary"] = out / "summary.csv"
        emit_summary_csv(result.summary, files["summary"])
        if cfg.scenario is not ScenarioKind.MAGNITUDE_GROWTH:
            for cell in cfg.cells():
                subset = [r for r in result.records if r.scenario == cell.label]
                path = out / f"violins_{_slug(cell.label)}.svg"
                try:
                    emit_violin_svg(subset, cfg.s0, path, title=cell.label)
                    files[f"violins:{cell.label}"] = path
                except PlotError as e:
                    LOGGER.warning("No violin plot for %s: %s", cell.label, e)
    if result.extras:
        files["extras"] = out / "extras.json"
        with open(files["extras"], "w", encoding="utf-8") as f:
            json.dump(result.extras, f, indent=2, sort_keys=True)
            f.write("\n")
    result.files = {k: str(v) for k, v in files.items()}
    return result


def run_scenario(cfg, write_outputs=True):
    """
    Every replication of every cell and design size, then the summary

    Records come back sorted by (scenario, n, rep) whatever the worker
    count; per-replication estimation failures are recorded, not raised.

    Args:
        cfg (ScenarioConfig): Validated configuration
        write_outputs (bool): Write CSV/SVG/JSON files under cfg.output_dir

    Returns:
        ScenarioResult
    """
    LOGGER.info("Scenario %s: sizes=%s replications=%d seed=%d", cfg.scenario.value,
                list(cfg.sizes), cfg.replications, cfg.master_seed)
    if cfg.scenario is ScenarioKind.KAKUTANI_TABLE:
        result = _kakutani_result(cfg)
        return _write_outputs(cfg, result) if write_outputs and cfg.output_dir else result

    fitted = fit_candidate_kernels(cfg) if cfg.scenario is ScenarioKind.MISSPECIFIED_KERNEL else {}
    cells = cfg.cells()
    estimators = {cell.label: _cell_estimator(cfg, cell, fitted) for cell in cells}
    samplers = {}
    for n in cfg.sizes:
        design = scenario_design(cfg, n)
        if design.domain is Domain.SPHERE:
            design.inner_products  # warm the shared cache before threads use it
        samplers[n] = KarhunenLoeveSampler(cfg.truth, cfg.truncation, design)
        LOGGER.info("Design n=%d: %d points", n, len(design))

    tasks = [(cell, n, rep) for cell in cells for n in cfg.sizes
             for rep in range(cfg.replications)]

    def run(task):
        cell, n, rep = task
        return _run_replication(cfg, cell, estimators[cell.label], samplers[n], n, rep)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(run, tasks))
    else:
        records = [run(task) for task in tasks]
    records.sort(key=lambda r: (r.scenario, r.n, r.rep))

    frame = records_frame(records)
    if cfg.scenario is ScenarioKind.MAGNITUDE_GROWTH:
        summary = summarize_records(frame, column="sigma2_hat")
    elif cfg.scenario is ScenarioKind.MICROERGODIC_CLT:
        summary = summarize_records(frame, column="microergodic")
    else:
        summary = summarize_records(frame, reference=cfg.s0)
    result = ScenarioResult(config=cfg, records=records, summary=summary,
                            extras=_extras(cfg, frame))
    failures = sum(1 for r in records if r.status != "ok")
    LOGGER.info("Scenario %s finished: %d records, %d failures", cfg.scenario.value,
                len(records), failures)
    if write_outputs and cfg.output_dir:
        _write_outputs(cfg, result)
    return result
