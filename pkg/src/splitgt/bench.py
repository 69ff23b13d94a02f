"""Monte-Carlo harness: runs design -> evaluate -> decode trials and
aggregates recovery rates and cost counters.

A trial is a pure function of (config, base seed, trial index): the defective
set, the design and the channel noise each consume their own substream of
``RandomnessKey(base_seed, (trial_index,))``, so any run is reproducible and
trials are independent.  Success means exact set recovery; partial-recovery
counts are reported as supplementary columns only.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from . import baselines
from . import gamma as gamma_mod
from . import noisy as noisy_mod
from . import rho as rho_mod
from .core import (
    DecodeReport,
    NoiseChannel,
    ProblemInstance,
    RandomnessKey,
    evaluate_design,
    round_instance,
)
from .gamma import DEFAULT_C_CONST
from .noisy import DEFAULT_EPSILON, DEFAULT_T
from .rho import DEFAULT_C_DEPTH, DEFAULT_C_FINAL, DEFAULT_N_REPS

ALGORITHMS = ("gamma", "rho", "noisy", "comp", "ncomp")


@dataclass(frozen=True)
class TrialConfig:
    algorithm: str
    n: int
    k: int
    trials: int = 100
    base_seed: int = 0
    # channel (symmetric p unless p01/p10 given explicitly)
    p: float = 0.0
    p01: Optional[float] = None
    p10: Optional[float] = None
    # gamma scheme
    gamma: Optional[int] = None
    gamma_prime: Optional[int] = None
    c_const: float = DEFAULT_C_CONST
    beta_exp: float = 2.0
    # rho scheme
    rho: Optional[int] = None
    depth: int = DEFAULT_C_DEPTH
    reps: Optional[int] = None
    final_reps: Optional[int] = None
    # noisy scheme
    design_p: Optional[float] = None
    t: float = DEFAULT_T
    epsilon: float = DEFAULT_EPSILON
    mode: str = "practice"
    lookahead: Optional[int] = None
    # flat baselines
    tests: Optional[int] = None
    threshold: float = baselines.DEFAULT_NCOMP_THRESHOLD
    # shared
    hash_mode: str = "full"
    defectives: Optional[tuple[int, ...]] = None
    jobs: int = 1

    def channel(self) -> NoiseChannel:
        if self.p01 is not None or self.p10 is not None:
            return NoiseChannel(p01=self.p01 or 0.0, p10=self.p10 or 0.0)
        return NoiseChannel.symmetric(self.p)


@dataclass(frozen=True)
class AggregateResult:
    algorithm: str
    n: int
    k: int
    t_total: int
    trials: int
    successes: int
    success_rate: float
    ci_lo: float
    ci_hi: float
    mean_outcomes_read: float
    max_outcomes_read: int
    mean_nodes_visited: float
    mean_labels: float
    mean_false_positives: float
    mean_false_negatives: float
    storage_words: int
    seed: int
    hash_mode: str
    params: dict = field(default_factory=dict)
    error: Optional[str] = None
    # environment-dependent; excluded from equality and serialisation so that
    # results stay a pure function of (config, base seed)
    mean_wall_nanos: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("mean_wall_nanos")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AggregateResult":
        return cls(**d)


def wilson_interval(successes: int, trials: int,
                    z: float = 1.959963984540054) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def validate_config(config: TrialConfig) -> None:
    if config.algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {config.algorithm!r}; expected one of {ALGORITHMS}")
    if config.trials < 0:
        raise ValueError("trials must be non-negative")
    if config.algorithm == "gamma" and config.gamma is None:
        raise ValueError("the gamma scheme needs a divisibility budget (gamma)")
    if config.algorithm == "rho" and config.rho is None:
        raise ValueError("the rho scheme needs a test-size cap (rho)")
    if config.algorithm == "noisy":
        dp = config.design_p if config.design_p is not None else config.p
        if not 0.0 < dp < 0.5:
            raise ValueError(
                f"the noisy scheme needs a design noise level in (0, 0.5); got {dp}"
            )
    config.channel()  # validates channel probabilities


def _rounded(config: TrialConfig) -> tuple[int, int, Optional[int]]:
    return round_instance(config.n, config.k, config.rho)


def _gamma_params(config: TrialConfig, n: int, k: int) -> gamma_mod.GammaParams:
    return gamma_mod.gamma_params(
        n, k, config.gamma, beta_n=1.0 / math.log2(n) ** config.beta_exp,
        c_const=config.c_const, gamma_prime=config.gamma_prime,
    )


def _rho_params(config: TrialConfig, n: int, k: int, rounded_rho: int) -> rho_mod.RhoParams:
    return rho_mod.rho_params(
        n, k, rounded_rho, c_depth=config.depth,
        n_reps=config.reps if config.reps is not None else DEFAULT_N_REPS,
        c_final=config.final_reps if config.final_reps is not None else DEFAULT_C_FINAL,
    )


def _noisy_params(config: TrialConfig, n: int, k: int) -> noisy_mod.NoisyParams:
    return noisy_mod.noisy_params(
        n, k, config.design_p if config.design_p is not None else config.p,
        t=config.t, epsilon=config.epsilon, mode=config.mode,
        n_reps=config.reps, r=config.lookahead, c_final=config.final_reps,
    )


def _params_echo(config: TrialConfig, n: int, k: int) -> dict:
    if config.algorithm == "gamma":
        p = _gamma_params(config, n, k)
        return {
            "gamma": p.gamma, "gamma_prime": p.gamma_prime, "branching": p.branching,
            "level1_size": p.level1_size, "t_len": p.t_len,
            "t_len_prime": p.t_len_prime, "t_len_dprime": p.t_len_dprime,
            "c_const": p.c_const, "beta_n": p.beta_n,
        }
    if config.algorithm == "rho":
        _, _, rounded_rho = _rounded(config)
        p = _rho_params(config, n, k, rounded_rho)
        return {
            "rho": p.rho, "c_depth": p.c_depth, "n_reps": p.n_reps,
            "c_final": p.c_final, "branch": p.branch,
        }
    if config.algorithm == "noisy":
        p = _noisy_params(config, n, k)
        return {
            "p": p.p, "t": p.t, "epsilon": p.epsilon, "c_const": p.c_const,
            "n_reps": p.n_reps, "r": p.r, "c_final": p.c_final,
            "t_len": p.t_len, "mode": p.mode,
        }
    t = config.tests or baselines.default_baseline_tests(n, k)
    echo = {"tests": t, "p": config.p}
    if config.algorithm == "ncomp":
        echo["threshold"] = config.threshold
    return echo


def _draw_defectives(config: TrialConfig, key: RandomnessKey) -> tuple[int, ...]:
    if config.defectives is not None:
        return tuple(sorted(config.defectives))
    count = min(config.k, config.n)
    rng = key.generator()
    # dummy items added by rounding sit above the raw n and stay non-defective
    return tuple(sorted(int(v) for v in rng.choice(config.n, size=count, replace=False)))


def run_trial(config: TrialConfig, index: int) -> dict:
    """One seeded trial; returns the per-trial record used for aggregation."""
    n, k, rounded_rho = _rounded(config)
    key = RandomnessKey(config.base_seed, (index,))
    defectives = _draw_defectives(config, key.child("defectives"))
    instance = ProblemInstance(n=n, k=k, defectives=defectives)
    channel = config.channel()
    design_key = key.child("design")
    noise_key = key.child("noise")

    if config.algorithm == "gamma":
        design = gamma_mod.build_gamma_design(
            _gamma_params(config, n, k), n, design_key, config.hash_mode
        )
        outcomes = evaluate_design(design, instance, channel, noise_key)
        _, report = gamma_mod.decode_gamma(design, outcomes)
    elif config.algorithm == "rho":
        design = rho_mod.build_rho_design(
            _rho_params(config, n, k, rounded_rho), n, design_key, config.hash_mode
        )
        outcomes = evaluate_design(design, instance, channel, noise_key)
        _, report = rho_mod.decode_rho(design, outcomes)
    elif config.algorithm == "noisy":
        design = noisy_mod.build_noisy_design(
            _noisy_params(config, n, k), n, k, design_key, config.hash_mode
        )
        outcomes = evaluate_design(design, instance, channel, noise_key)
        _, report = noisy_mod.decode_noisy(design, outcomes)
    else:
        t = config.tests or baselines.default_baseline_tests(n, k)
        design = baselines.build_flat_design(n, t, design_key, k=k)
        outcomes = evaluate_design(design, instance, channel, noise_key)
        start = time.perf_counter_ns()
        if config.algorithm == "comp":
            estimate = baselines.decode_comp(design, outcomes)
        else:
            estimate = baselines.decode_ncomp(design, outcomes, config.threshold)
        report = DecodeReport(
            estimate=estimate, outcomes_read=design.t_total,
            nodes_visited=design.n, wall_nanos=time.perf_counter_ns() - start,
            storage_words=design.storage_words + (design.t_total + 63) // 64,
        )

    report = report.with_match(defectives)
    est = set(report.estimate)
    truth = set(defectives)
    return {
        "exact": bool(report.exact_match),
        "outcomes_read": report.outcomes_read,
        "nodes_visited": report.nodes_visited,
        "labels": report.labels_computed,
        "false_positives": len(est - truth),
        "false_negatives": len(truth - est),
        "wall_nanos": report.wall_nanos,
        "storage_words": report.storage_words,
        "t_total": outcomes.t_total,
        "estimate": report.estimate,
        "defectives": defectives,
    }


def _run_trial_annotated(config: TrialConfig, index: int) -> dict:
    try:
        return run_trial(config, index)
    except Exception as exc:
        raise RuntimeError(f"trial {index} failed: {exc}") from exc


def run_trials(config: TrialConfig) -> AggregateResult:
    validate_config(config)
    n, k, _ = _rounded(config)
    echo = _params_echo(config, n, k)

    indices = list(range(config.trials))
    if config.jobs > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(_run_trial_annotated, [config] * config.trials,
                                    indices,
                                    chunksize=max(1, config.trials // (4 * config.jobs))))
    else:
        records = [_run_trial_annotated(config, i) for i in indices]

    successes = sum(r["exact"] for r in records)
    trials = len(records)
    rate = successes / trials if trials else 0.0
    lo, hi = wilson_interval(successes, trials)

    def mean(name: str) -> float:
        return sum(r[name] for r in records) / trials if trials else 0.0

    return AggregateResult(
        algorithm=config.algorithm,
        n=n,
        k=k,
        t_total=records[0]["t_total"] if records else 0,
        trials=trials,
        successes=successes,
        success_rate=rate,
        ci_lo=lo,
        ci_hi=hi,
        mean_outcomes_read=mean("outcomes_read"),
        max_outcomes_read=max((r["outcomes_read"] for r in records), default=0),
        mean_nodes_visited=mean("nodes_visited"),
        mean_labels=mean("labels"),
        mean_false_positives=mean("false_positives"),
        mean_false_negatives=mean("false_negatives"),
        mean_wall_nanos=mean("wall_nanos"),
        storage_words=max((r["storage_words"] for r in records), default=0),
        seed=config.base_seed,
        hash_mode=config.hash_mode,
        params=echo,
    )


def sweep(configs: list[TrialConfig]) -> list[AggregateResult]:
    """Run a grid of configs in order; a failing cell is recorded as an error
    row and the sweep continues."""
    if not configs:
        raise ValueError("sweep needs at least one config")
    results = []
    for config in configs:
        try:
            results.append(run_trials(config))
        except Exception as exc:  # recorded, not raised: later cells still run
            results.append(AggregateResult(
                algorithm=config.algorithm, n=config.n, k=config.k, t_total=0,
                trials=0, successes=0, success_rate=0.0, ci_lo=0.0, ci_hi=1.0,
                mean_outcomes_read=0.0, max_outcomes_read=0,
                mean_nodes_visited=0.0, mean_labels=0.0,
                mean_false_positives=0.0, mean_false_negatives=0.0,
                mean_wall_nanos=0.0, storage_words=0, seed=config.base_seed,
                hash_mode=config.hash_mode, params={}, error=str(exc),
            ))
    return results


def eta_hat(n: float, k: float, gamma_value: float, t_total: float) -> float:
    """Finite-size test-count efficiency exponent:
    log(n/k) / (gamma * log(T / (gamma * k)))."""
    if not n > k > 0:
        raise ValueError(f"need n > k > 0, got n={n}, k={k}")
    if t_total <= gamma_value * k:
        raise ValueError(
            f"T={t_total} must exceed gamma*k={gamma_value * k} for eta to be defined"
        )
    return math.log(n / k) / (gamma_value * math.log(t_total / (gamma_value * k)))


def splitting_test_exponent(theta: float, gamma_value: int) -> float:
    """Exponent of n in the splitting scheme's test count at density theta,
    optimised over the tree height (vanishing error-term contribution)."""
    gp = gamma_mod.select_gamma_prime(gamma_value, theta)
    return gamma_mod._objective(gamma_value, gp, theta)


def eta_curve(gammas: list[int], theta_steps: int = 9) -> list[dict]:
    """Efficiency-exponent rows for COMP and the splitting scheme.

    Evaluated through :func:`eta_hat` on the closed-form test counts at a
    reference size; the resulting ratio is size-free, so these are the
    limiting curves.  COMP's curve does not depend on the budget.
    """
    n_ref = 2.0 ** 64
    rows = []
    for i in range(1, theta_steps + 1):
        theta = i / (theta_steps + 1)
        k_ref = n_ref ** theta
        g0 = gammas[0]
        t_comp = g0 * k_ref * n_ref ** (1.0 / g0)
        rows.append({
            "theta": theta,
            "variant": "comp",
            "eta_hat": eta_hat(n_ref, k_ref, g0, t_comp),
        })
        for gamma_value in gammas:
            exponent = splitting_test_exponent(theta, gamma_value)
            t_split = gamma_value * k_ref * n_ref ** exponent
            rows.append({
                "theta": theta,
                "variant": f"split-gamma{gamma_value}",
                "eta_hat": eta_hat(n_ref, k_ref, gamma_value, t_split),
            })
    return rows


def results_to_json(results: list[AggregateResult]) -> str:
    return json.dumps([r.to_dict() for r in results], indent=2)


def results_from_json(text: str) -> list[AggregateResult]:
    return [AggregateResult.from_dict(d) for d in json.loads(text)]
