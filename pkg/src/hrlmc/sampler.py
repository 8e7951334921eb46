"""The HRLMC Markov chain.

One step maps x to

    y' = grad_phi(x) - h * grad_f(x) + sqrt(2 h) * D2phi(x)^(1/2) * xi
    x' = grad_phi_conjugate(y')

with xi a standard normal vector.  With the Euclidean entropy this is
exactly the classical unadjusted Langevin update
``x - h grad_f(x) + sqrt(2 h) xi``; the kernel keeps that expression shape so
the reduction is bit-for-bit.

Randomness contract: every chain owns a Philox stream derived from
(base_seed, chain_index) through SeedSequence spawning and consumes exactly
``dim`` normal draws per step.  Rejection retries draw from a separate
per-chain child stream, so trajectories are reproducible regardless of how
chains are batched or threaded.

Boundary policy: the dual image of every registered entropy is an open
product of half-lines or lines.  If a proposed y' exits it (or the implied x'
lands in the domain guard band), the step is retried with fresh noise up to
``max_retries`` times, after which the step size is halved for that step
only; rejection counts are reported per chain so users can verify they are
rare in admissible regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import admissible_step_window, kappa_tilde
from .errors import (
    DualDomainViolation,
    InadmissibleStepSize,
    InvalidParameters,
    NumericalBreakdown,
    Unavailable,
)

MAX_RETRIES = 50
MAX_HALVINGS = 40
_NOISE_CHUNK = 4096  # steps of noise pre-generated per chain at a time


@dataclass(frozen=True)
class StepSchedule:
    """Constant h_k = h or harmonic h_k = a / k (k starting at 1)."""

    kind: str
    h: float | None = None
    a: float | None = None

    def __post_init__(self):
        if self.kind == "constant":
            if self.h is None or not self.h > 0.0:
                raise InvalidParameters("constant schedule needs h > 0")
        elif self.kind == "harmonic":
            if self.a is None or not self.a > 0.0:
                raise InvalidParameters("harmonic schedule needs a > 0")
        else:
            raise InvalidParameters(f"unknown schedule kind {self.kind!r}")

    def h_at(self, k: int) -> float:
        if self.kind == "constant":
            return float(self.h)
        return float(self.a) / float(k)

    def label(self) -> str:
        if self.kind == "constant":
            return f"constant:h={self.h:g}"
        return f"harmonic:a={self.a:g}"


def constant_schedule(h: float) -> StepSchedule:
    return StepSchedule("constant", h=float(h))


def harmonic_schedule(a: float) -> StepSchedule:
    return StepSchedule("harmonic", a=float(a))


def parse_schedule(spec: str) -> StepSchedule:
    spec = spec.strip()
    head, _, rest = spec.partition(":")
    key, _, val = rest.partition("=")
    if head == "constant" and key == "h":
        return constant_schedule(float(val))
    if head == "harmonic" and key == "a":
        return harmonic_schedule(float(val))
    raise InvalidParameters(f"cannot parse schedule {spec!r}")


@dataclass
class ChainState:
    """Current point, cached dual point, step counter, and RNG streams."""

    x: np.ndarray
    y: np.ndarray
    k: int
    rng: np.random.Generator
    retry_rng: np.random.Generator
    rejections: int = 0


def _retry_seedseq(ss: np.random.SeedSequence) -> np.random.SeedSequence:
    # Same child as ss.spawn(1)[0] on a fresh SeedSequence, without mutating
    # the caller's object (spawning twice would silently shift the stream).
    return np.random.SeedSequence(
        entropy=ss.entropy, spawn_key=tuple(ss.spawn_key) + (0,), pool_size=ss.pool_size
    )


def init_state(entropy, x0, seed) -> ChainState:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    retry_ss = _retry_seedseq(ss)
    x0 = np.asarray(x0, dtype=float).reshape(entropy.dim)
    y0 = entropy.grad(x0)
    return ChainState(
        x=x0,
        y=y0,
        k=0,
        rng=np.random.Generator(np.random.Philox(ss)),
        retry_rng=np.random.Generator(np.random.Philox(retry_ss)),
    )


def hrlmc_step(entropy, target, state: ChainState, h: float, noise=None) -> ChainState:
    """Advance one chain by one step of size h.

    With ``noise`` supplied the update is deterministic and a dual-domain
    exit raises instead of retrying (testing hook).  Otherwise exactly
    ``dim`` normals are consumed from the chain's main stream, plus retry
    draws on rejection.
    """
    if not h > 0.0:
        raise InvalidParameters("step size must be positive")
    x = state.x[None, :]
    y = state.y[None, :]
    gf = target.grad(x)
    sq = _sqrt_metric(entropy, x)

    if noise is not None:
        xi = np.asarray(noise, dtype=float).reshape(1, entropy.dim)
        y_new = _propose(y, gf, sq, h, xi)
        ok, x_new = _try_invert(entropy, y_new)
        if not ok[0]:
            raise DualDomainViolation(
                "deterministic step left the dual domain; "
                "stochastic stepping would retry with fresh noise"
            )
        return ChainState(x_new[0], y_new[0], state.k + 1, state.rng, state.retry_rng,
                          state.rejections)

    xi = state.rng.standard_normal((1, entropy.dim))
    y_new, x_new, rejections = _advance_rows(
        entropy, y, gf, sq, h, xi, [state.retry_rng]
    )
    return ChainState(
        x_new[0], y_new[0], state.k + 1, state.rng, state.retry_rng,
        state.rejections + int(rejections[0]),
    )


@dataclass
class Trajectory:
    """Recorded points of one chain, with the step sizes that produced them."""

    points: np.ndarray       # (n_recorded, dim)
    steps: np.ndarray        # (n_recorded,) step indices k
    step_sizes: np.ndarray   # (n_recorded,) h_k used to reach each point (0 at k=0)
    rejections: int
    chain_index: int = 0


def run_chain(entropy, target, schedule: StepSchedule, x0, n_steps: int, seed,
              record_every: int = 1, burn_in: int = 0,
              override_gate: bool = False) -> Trajectory:
    """Run a single chain; deterministic given the seed."""
    return run_parallel_chains(
        entropy, target, schedule, x0, n_steps, seed, n_chains=1,
        record_every=record_every, burn_in=burn_in, override_gate=override_gate,
        _single_seed=True,
    )[0]


def run_parallel_chains(entropy, target, schedule: StepSchedule, x0,
                        n_steps: int, base_seed, n_chains: int,
                        record_every: int = 1, burn_in: int = 0,
                        override_gate: bool = False,
                        _single_seed: bool = False) -> list[Trajectory]:
    """Run independent chains; bitwise identical to running each serially.

    Per-chain seeds derive from the base seed by SeedSequence spawning; the
    batch update applies the same elementwise arithmetic to every row, so
    thread or batch layout cannot change results.
    """
    if n_chains < 1:
        raise InvalidParameters("need at least one chain")
    if record_every < 1 or burn_in < 0 or n_steps < 0:
        raise InvalidParameters("bad recording parameters")
    if entropy.dim != target.dim:
        raise InvalidParameters(
            f"dimension mismatch: entropy {entropy.name!r} is {entropy.dim}-d, "
            f"target {target.name!r} is {target.dim}-d"
        )
    _check_gate(entropy, target, schedule, override_gate)

    p = entropy.dim
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim == 1:
        X = np.broadcast_to(x0, (n_chains, p)).copy()
    else:
        if x0.shape != (n_chains, p):
            raise InvalidParameters(f"x0 must have shape ({n_chains}, {p})")
        X = x0.copy()
    if not np.all(entropy.contains(X)):
        raise InvalidParameters("x0 must be strictly interior")
    Y = entropy.grad(X)

    if _single_seed:
        if n_chains != 1:
            raise InvalidParameters("_single_seed only applies to one chain")
        seedseqs = [
            base_seed
            if isinstance(base_seed, np.random.SeedSequence)
            else np.random.SeedSequence(base_seed)
        ]
    else:
        root = (
            base_seed
            if isinstance(base_seed, np.random.SeedSequence)
            else np.random.SeedSequence(base_seed)
        )
        seedseqs = root.spawn(n_chains)
    retry_rngs = [np.random.Generator(np.random.Philox(_retry_seedseq(ss))) for ss in seedseqs]
    main_rngs = [np.random.Generator(np.random.Philox(ss)) for ss in seedseqs]

    record_ks = [
        k for k in range(n_steps + 1)
        if k >= burn_in and (k - burn_in) % record_every == 0
    ]
    rec_points = np.empty((n_chains, len(record_ks), p))
    rec_h = np.zeros(len(record_ks))
    rec_pos = 0
    if record_ks and record_ks[0] == 0:
        rec_points[:, 0, :] = X
        rec_pos = 1
    rejections = np.zeros(n_chains, dtype=np.int64)

    k = 0
    while k < n_steps:
        chunk = min(_NOISE_CHUNK, n_steps - k)
        noise = np.stack([g.standard_normal((chunk, p)) for g in main_rngs])
        for j in range(chunk):
            h = schedule.h_at(k + 1)
            gf = target.grad(X)
            sq = _sqrt_metric(entropy, X)
            Y, X, rej = _advance_rows(entropy, Y, gf, sq, h, noise[:, j, :], retry_rngs)
            rejections += rej
            k += 1
            if rec_pos < len(record_ks) and record_ks[rec_pos] == k:
                rec_points[:, rec_pos, :] = X
                rec_h[rec_pos] = h
                rec_pos += 1

    return [
        Trajectory(
            points=rec_points[c].copy(),
            steps=np.asarray(record_ks, dtype=np.int64),
            step_sizes=rec_h.copy(),
            rejections=int(rejections[c]),
            chain_index=c,
        )
        for c in range(n_chains)
    ]


def largest_admissible_a(entropy, target) -> float:
    """Largest harmonic coefficient whose first step passes the gate."""
    window = _gate_window(entropy, target)
    if window is None:
        raise Unavailable("gate window needs declared kappa, m, M, delta")
    if window <= 0.0:
        raise InadmissibleStepSize(0.0, window)
    return float(np.nextafter(window, 0.0))


def reference_chain(entropy, target, s: float, substeps: int, seed,
                    n_replicas: int = 1):
    """Stationary-start increments of the fine-step surrogate flow.

    Draws L0 from the exact sampler and advances the HRLMC iterate with step
    s / substeps; returns (grad_phi(L0), grad_phi(L_s)) for the increment
    test.  The ensemble shares one noise stream; determinism is per seed.
    """
    if not target.has_exact_sampler:
        raise Unavailable(f"{target.name}: reference chain needs an exact sampler")
    if substeps < 100:
        raise InvalidParameters("substeps must be at least 100")
    if s < 0.0:
        raise InvalidParameters("time span must be nonnegative")
    rng = np.random.default_rng(seed)
    X = target.sample_exact(rng, n_replicas)
    Y0 = entropy.grad(X)
    if s == 0.0:
        return Y0.copy(), Y0.copy()
    h = s / substeps
    Y = Y0.copy()
    retry_rngs = [rng] * n_replicas  # retries are vanishing at fine steps
    for _ in range(substeps):
        gf = target.grad(X)
        sq = _sqrt_metric(entropy, X)
        xi = rng.standard_normal((n_replicas, entropy.dim))
        Y, X, _ = _advance_rows(entropy, Y, gf, sq, h, xi, retry_rngs)
    return Y0, Y


# ----------------------------------------------------------------- internals


def _sqrt_metric(entropy, X):
    if entropy.separable:
        return entropy.hessian_sqrt_diag(X)
    return entropy.hessian_sqrt(X)


def _propose(Y, gf, sq, h, xi):
    if sq.ndim == xi.ndim:
        noise_term = sq * xi
    else:
        noise_term = np.einsum("...ij,...j->...i", sq, xi)
    return Y - h * gf + np.sqrt(2.0 * h) * noise_term


def _try_invert(entropy, y_new):
    """(acceptance mask, inverted points); never raises on bad rows."""
    ok = entropy.dual_contains(y_new)
    x_new = np.full_like(y_new, np.nan)
    if np.any(ok):
        cand = entropy._grad_conjugate_unchecked(y_new[ok])
        inside = entropy.contains(cand)
        x_new[ok] = cand
        full = np.zeros(y_new.shape[0], dtype=bool)
        full[np.flatnonzero(ok)[inside]] = True
        ok = full
    return ok, x_new


def _advance_rows(entropy, Y, gf, sq, h, xi, retry_rngs):
    """One step for every row with the rejection/step-halving policy."""
    p = Y.shape[-1]
    y_new = _propose(Y, gf, sq, h, xi)
    ok, x_new = _try_invert(entropy, y_new)
    rejections = np.zeros(Y.shape[0], dtype=np.int64)
    if np.all(ok):
        return y_new, x_new, rejections

    for attempt in range(MAX_RETRIES):
        bad = np.flatnonzero(~ok)
        if bad.size == 0:
            break
        rejections[bad] += 1
        for c in bad:
            xi_c = retry_rngs[c].standard_normal((1, p))
            sq_c = sq[c : c + 1] if sq.ndim == 2 else sq[c : c + 1, :, :]
            y_c = _propose(Y[c : c + 1], gf[c : c + 1], sq_c, h, xi_c)
            ok_c, x_c = _try_invert(entropy, y_c)
            if ok_c[0]:
                y_new[c] = y_c[0]
                x_new[c] = x_c[0]
                ok[c] = True

    bad = np.flatnonzero(~ok)
    for c in bad:
        h_c = h
        sq_c = sq[c : c + 1] if sq.ndim == 2 else sq[c : c + 1, :, :]
        accepted = False
        for _ in range(MAX_HALVINGS):
            h_c *= 0.5
            for _ in range(MAX_RETRIES):
                xi_c = retry_rngs[c].standard_normal((1, p))
                y_c = _propose(Y[c : c + 1], gf[c : c + 1], sq_c, h_c, xi_c)
                ok_c, x_c = _try_invert(entropy, y_c)
                if ok_c[0]:
                    y_new[c] = y_c[0]
                    x_new[c] = x_c[0]
                    accepted = True
                    break
                rejections[c] += 1
            if accepted:
                break
        if not accepted:
            raise NumericalBreakdown(
                f"chain row {c}: no admissible step after {MAX_HALVINGS} halvings"
            )
    return y_new, x_new, rejections


def _gate_window(entropy, target):
    # Declared (m, M, delta) are relative to the target's paired entropy;
    # the gate is meaningless for any other pairing.
    if entropy.name != target.paired_entropy:
        return None
    if entropy.kappa_declared is None or not target.constants_declared():
        return None
    kappa = entropy.kappa_declared
    if not math.isfinite(kappa):
        return 0.0
    kt = kappa_tilde(kappa, target.m, target.M, target.delta)
    if kt * kt >= 2.0 * target.m:
        return 0.0
    return admissible_step_window(target.m, target.M, kt)


def _check_gate(entropy, target, schedule, override_gate):
    if override_gate or schedule.kind != "constant":
        return
    window = _gate_window(entropy, target)
    if window is None:
        return
    if not schedule.h < window:
        raise InadmissibleStepSize(schedule.h, window)
