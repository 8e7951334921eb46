"""Reproducible experiments: distance-vs-iteration traces and dimension sweeps.

Checkpoint distance protocol: at each checkpoint pool one recorded point per
chain into a cloud of size n_chains, compare it against an equal-size
exact-sample cloud, and repeat over ``reference_seeds`` independent reference
clouds; report the median and interquartile range.  The exact empirical
estimator (sort coupling in 1-d, assignment otherwise) is the only one used.

Plateau estimation for the sweep subtracts a same-law baseline: the squared
distance between two independent exact clouds of the same size measures the
finite-sample floor of the estimator, which grows with dimension and would
otherwise masquerade as sampler bias.  The debiased plateau is
sqrt(max(median d^2(chain, exact) - median d^2(exact, exact'), 0)).

Every experiment is a pure function of its config; re-running writes
byte-identical CSV output (floats serialized with 17 significant digits).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from . import metrics
from .analysis import bound_report, estimate_constants
from .entropy import parse_entropy
from .errors import InvalidParameters
from .sampler import constant_schedule, parse_schedule, run_parallel_chains
from .target import gamma_target, parse_target


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


_INT_FIELDS = {"steps", "chains", "base_seed", "reference_seeds", "assumption_pairs",
               "plateau_window"}
_FLOAT_TUPLE_FIELDS = {"x0"}
_INT_TUPLE_FIELDS = {"checkpoints", "dims"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat key=value experiment description (INI-style, diff-friendly).

    ``x0`` holds either one coordinate broadcast to every chain or a full
    starting point; ``checkpoints`` must include 0 so the initial distance
    can anchor the bound curve.
    """

    entropy: str
    target: str
    schedule: str
    steps: int
    chains: int
    x0: tuple = (1.0,)
    checkpoints: tuple = ()
    base_seed: int = 0
    reference_seeds: int = 20
    distance_method: str = "auto"
    assumption_pairs: int = 4000
    plateau_window: int = 3
    dims: tuple = ()
    out: str = ""

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in _FLOAT_TUPLE_FIELDS:
                s = ",".join(_fmt(x) for x in v)
            elif f.name in _INT_TUPLE_FIELDS:
                s = ",".join(str(int(x)) for x in v)
            else:
                s = str(v)
            lines.append(f"{f.name} = {s}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidParameters(f"config line {lineno}: expected key = value")
            key, _, val = line.partition("=")
            raw[key.strip()] = val.strip()
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(raw) - known
        if unknown:
            raise InvalidParameters(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, val in raw.items():
            if key in _INT_FIELDS:
                kwargs[key] = int(val)
            elif key in _FLOAT_TUPLE_FIELDS:
                kwargs[key] = tuple(float(tok) for tok in val.split(",") if tok)
            elif key in _INT_TUPLE_FIELDS:
                kwargs[key] = tuple(int(tok) for tok in val.split(",") if tok)
            else:
                kwargs[key] = val
        return cls(**kwargs)

    def to_file(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())


def _reference_cloud(target, n, base_seed, tag, k, rep):
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=(int(base_seed), tag, int(k), int(rep)))
    )
    return target.sample_exact(rng, n)


def _checkpoint_clouds(trajectories, checkpoints):
    steps = trajectories[0].steps
    index = {int(k): i for i, k in enumerate(steps)}
    clouds = {}
    for k in checkpoints:
        if int(k) not in index:
            raise InvalidParameters(f"checkpoint {k} was not recorded")
        clouds[int(k)] = np.stack([tr.points[index[int(k)]] for tr in trajectories])
    return clouds


@dataclass
class ConvergenceResult:
    """Distance trace with the matching theoretical bound curve."""

    checkpoints: np.ndarray
    medians: np.ndarray
    iqrs: np.ndarray
    bound_values: np.ndarray
    floor: float
    rho: float
    w0_hat: float
    config: ExperimentConfig
    report: object
    bound: object
    total_rejections: int
    distances: dict = field(default_factory=dict)  # k -> per-rep values

    def rows(self):
        for i, k in enumerate(self.checkpoints):
            yield (int(k), self.medians[i], self.iqrs[i], self.bound_values[i], self.floor)

    def to_csv(self) -> str:
        lines = ["checkpoint_k,w2phi_median,w2phi_iqr,bound_value,floor"]
        for k, med, iqr, bv, fl in self.rows():
            lines.append(f"{k},{_fmt(med)},{_fmt(iqr)},{_fmt(bv)},{_fmt(fl)}")
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def run_convergence_experiment(config: ExperimentConfig) -> ConvergenceResult:
    """Distance-to-target trace at checkpoints, with one-sided bound values.

    Emits, per checkpoint k: the median and IQR of the empirical mirror W2
    between the chain ensemble and equal-size exact clouds, the bound value
    rho^k * W0_hat + floor, and the floor.  W0_hat is the k = 0 median.
    """
    target = parse_target(config.target)
    entropy = parse_entropy(config.entropy, dim=target.dim)
    schedule = parse_schedule(config.schedule)
    if not config.checkpoints or min(config.checkpoints) != 0:
        raise InvalidParameters("checkpoints must be nonempty and include 0")
    if max(config.checkpoints) > config.steps:
        raise InvalidParameters("checkpoints exceed the step budget")

    x0 = np.asarray(config.x0, dtype=float)
    if x0.size == 1:
        x0 = np.full(target.dim, float(x0[0]))
    trajectories = run_parallel_chains(
        entropy, target, schedule, x0, config.steps, config.base_seed, config.chains
    )
    clouds = _checkpoint_clouds(trajectories, config.checkpoints)

    distances = {}
    for k, cloud in clouds.items():
        vals = np.empty(config.reference_seeds)
        for rep in range(config.reference_seeds):
            ref = _reference_cloud(target, config.chains, config.base_seed, 7733, k, rep)
            vals[rep] = metrics.w2phi(
                entropy, cloud, ref, method=config.distance_method
            ).value
        distances[k] = vals

    ks = np.asarray(sorted(clouds), dtype=int)
    medians = np.array([np.median(distances[k]) for k in ks])
    iqrs = np.array(
        [np.percentile(distances[k], 75) - np.percentile(distances[k], 25) for k in ks]
    )
    w0_hat = float(medians[ks == 0][0])

    report = estimate_constants(
        entropy, target, n_pairs=config.assumption_pairs, seed=config.base_seed
    )
    if schedule.kind == "constant":
        bound = bound_report(report, schedule.h, target.dim, w0=w0_hat)
        bound_values = np.asarray(bound.bound_at(ks), dtype=float)
        floor = bound.floor
        rho = bound.rho
    else:
        bound = None
        bound_values = np.full(ks.shape, np.nan)
        floor = float("nan")
        rho = float("nan")

    return ConvergenceResult(
        checkpoints=ks,
        medians=medians,
        iqrs=iqrs,
        bound_values=bound_values,
        floor=floor,
        rho=rho,
        w0_hat=w0_hat,
        config=config,
        report=report,
        bound=bound,
        total_rejections=sum(tr.rejections for tr in trajectories),
        distances=distances,
    )


@dataclass
class SweepResult:
    """Plateau distance per dimension with the fitted log-log exponent."""

    dims: np.ndarray
    plateaus: np.ndarray
    raw_medians: np.ndarray
    baselines: np.ndarray
    slope: float
    config: ExperimentConfig

    def to_csv(self) -> str:
        lines = ["p,plateau,raw_median,baseline_median"]
        for i, p in enumerate(self.dims):
            lines.append(
                f"{int(p)},{_fmt(self.plateaus[i])},{_fmt(self.raw_medians[i])},"
                f"{_fmt(self.baselines[i])}"
            )
        lines.append(f"# loglog_slope = {_fmt(self.slope)}")
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def run_dimension_sweep(config: ExperimentConfig, dims=None) -> SweepResult:
    """Plateau-vs-dimension sweep over i.i.d. product Gamma targets.

    The configured target acts as the one-dimensional template replicated to
    each requested dimension.  The plateau at each p is the debiased median
    over the last ``plateau_window`` checkpoints.
    """
    dims = tuple(int(d) for d in (dims if dims is not None else config.dims))
    if not dims:
        raise InvalidParameters("sweep needs at least one dimension")
    template = parse_target(config.target)
    if not template.name.startswith("gamma:") or template.dim != 1:
        raise InvalidParameters("sweep needs a one-dimensional gamma template target")
    # recover shape/rate from the template: m = a - 1, mean = a / b
    a_shape = float(template.m + 1.0)
    b_rate = a_shape / float(template.moment_mean[0])
    schedule = parse_schedule(config.schedule)
    plateau_ks = sorted(config.checkpoints)[-config.plateau_window:]
    if not plateau_ks:
        raise InvalidParameters("sweep needs checkpoints for the plateau window")

    plateaus = np.empty(len(dims))
    raws = np.empty(len(dims))
    bases = np.empty(len(dims))
    for i, p in enumerate(dims):
        target = gamma_target([a_shape] * p, [b_rate] * p)
        entropy = parse_entropy(config.entropy, dim=p)
        x0 = np.asarray(config.x0, dtype=float)
        x0 = np.full(p, float(x0[0])) if x0.size == 1 else x0
        trajectories = run_parallel_chains(
            entropy, target, schedule, x0, config.steps,
            config.base_seed + 101 * p, config.chains,
        )
        clouds = _checkpoint_clouds(trajectories, plateau_ks)
        # Median of per-checkpoint medians: a chain ensemble occasionally
        # carries a deep-tail excursion that inflates every distance sharing
        # that snapshot, so checkpoints form contamination blocks.
        chain_sq = []
        base_sq = []
        for k in plateau_ks:
            chain_k = np.empty(config.reference_seeds)
            base_k = np.empty(config.reference_seeds)
            for rep in range(config.reference_seeds):
                ref = _reference_cloud(target, config.chains, config.base_seed, 7741 + p, k, rep)
                d = metrics.w2phi(entropy, clouds[k], ref, method=config.distance_method)
                chain_k[rep] = d.value**2
                ref_b = _reference_cloud(target, config.chains, config.base_seed, 8641 + p, k, rep)
                ref_c = _reference_cloud(target, config.chains, config.base_seed, 8647 + p, k, rep)
                d0 = metrics.w2phi(entropy, ref_b, ref_c, method=config.distance_method)
                base_k[rep] = d0.value**2
            chain_sq.append(float(np.median(chain_k)))
            base_sq.append(float(np.median(base_k)))
        raw = float(np.median(chain_sq))
        base = float(np.median(base_sq))
        plateaus[i] = np.sqrt(max(raw - base, 0.0))
        raws[i] = np.sqrt(raw)
        bases[i] = np.sqrt(base)

    if len(dims) >= 2:
        logs = np.log(np.asarray(dims, dtype=float))
        slope = float(np.polyfit(logs, np.log(plateaus), 1)[0])
    else:
        slope = float("nan")
    return SweepResult(
        dims=np.asarray(dims, dtype=int),
        plateaus=plateaus,
        raw_medians=raws,
        baselines=bases,
        slope=slope,
        config=config,
    )


def moment_plateau_gaussian(target, h, n_chains, n_steps, burn_in, seed,
                            record_every=1) -> float:
    """Stationary mirror-W2 plateau for a Gaussian target via fitted moments.

    Affine updates with Gaussian noise keep the chain law exactly Gaussian,
    so W2 to the target is the closed-form Gaussian distance between the
    pooled empirical moments and the target moments.  This resolves plateaus
    far below the finite-sample floor of two-cloud empirical estimators.
    """
    entropy = parse_entropy("euclidean", dim=target.dim)
    trajectories = run_parallel_chains(
        entropy, target, constant_schedule(h), np.zeros(target.dim),
        n_steps, seed, n_chains, record_every=record_every, burn_in=burn_in,
    )
    pooled = np.concatenate([tr.points for tr in trajectories], axis=0)
    mean = pooled.mean(axis=0)
    cov = np.cov(pooled.T, ddof=1).reshape(target.dim, target.dim)
    return metrics.gaussian_w2(mean, cov, np.zeros(target.dim), target.covariance)


def fit_decay_slope(checkpoints, medians, plateau, k_max, min_gap) -> float:
    """OLS slope of log(median - plateau) against k, over usable checkpoints.

    Checkpoints beyond ``k_max`` or with signal below ``min_gap`` are
    excluded (the log is undefined once the trace reaches the plateau).
    """
    ks = np.asarray(checkpoints, dtype=float)
    med = np.asarray(medians, dtype=float)
    gap = med - plateau
    use = (ks <= k_max) & (gap > min_gap)
    if int(np.sum(use)) < 3:
        raise InvalidParameters("not enough usable checkpoints for a decay fit")
    return float(np.polyfit(ks[use], np.log(gap[use]), 1)[0])
