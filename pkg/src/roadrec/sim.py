"""Monte Carlo simulator for the infinite-horizon recommendation schemes.

Simulates the road-state chain, the coordinator's dispatch rules, compliant
agents, and (for deviation rollouts) a single monitored agent who defects at
the first visit to a chosen state and is punished forever after.

Determinism: every random draw comes from numpy generators seeded with the
tuple (seed, trial, stream), stream 0 for the road chain, 1 for scheme
dispatch (experimenter and recruit lotteries), 2 for punishment-regime
recommendations. Results are therefore reproducible and trial-parallelisable,
and a deviation rollout shares the chain and dispatch draws of its compliant
twin until the moment of deviation (common random numbers).

Horizons are finite, so every estimate carries an explicit truncation bound:
discounting delta^T of the worst possible stage cost, summed to infinity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    AssumptionError,
    GameParams,
    ParameterError,
    belief_step,
    check_assumption_infinite,
    expected_theta,
)
from .infinite import InfiniteScheme

_STREAM_CHAIN = 0
_STREAM_DISPATCH = 1
_STREAM_PUNISH = 2


def _rng(seed: int, trial: int, stream: int) -> np.random.Generator:
    return np.random.default_rng((seed, trial, stream))


@dataclass(frozen=True)
class SimConfig:
    """Knobs shared by all simulation entry points.

    horizon is the number of simulated (and, in rollouts, valued) stages;
    start is the latent road state before stage one ("high" matches the
    cost conventions of the closed forms, which price an excursion that
    begins right after a high observation). max_wait bounds how long a
    rollout waits for its trigger state before skipping the trial.
    """

    c: int
    d: int
    trials: int = 1000
    horizon: int = 64
    seed: int = 0
    start: str = "high"
    max_wait: int = 256

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ParameterError(f"trials must be positive, got {self.trials}")
        if self.horizon < 1:
            raise ParameterError(f"horizon must be positive, got {self.horizon}")
        if self.max_wait < 2:
            raise ParameterError(f"max_wait must be at least 2, got {self.max_wait}")
        if self.start not in ("high", "low"):
            raise ParameterError(f"start must be 'high' or 'low', got {self.start!r}")

    def scheme(self) -> InfiniteScheme:
        return InfiniteScheme(c=self.c, d=self.d)


@dataclass(frozen=True)
class AgentState:
    """What one agent knows when a recommendation arrives.

    prev_flow   risky flow it observed last stage (None matches any)
    tag         "low"/"high" if it was on the risky road and saw the state,
                "pooled" if it sat on the safe road and cannot tell
    rec         the recommendation just received, "risky" or "safe"
    """

    prev_flow: int | None
    tag: str
    rec: str

    def __post_init__(self) -> None:
        if self.tag not in ("low", "high", "pooled"):
            raise ParameterError(f"tag must be low/high/pooled, got {self.tag!r}")
        if self.rec not in ("risky", "safe"):
            raise ParameterError(f"rec must be risky/safe, got {self.rec!r}")


@dataclass(frozen=True)
class Trajectory:
    """One simulated path: states, flows, and discounted realised costs."""

    thetas: tuple[str, ...]
    flows: tuple[int, ...]
    total: float
    agent_totals: tuple[float, ...]


@dataclass(frozen=True)
class RunManifest:
    c: int
    d: int
    trials: int
    horizon: int
    seed: int
    start: str


@dataclass(frozen=True)
class RunStats:
    """Monte Carlo estimates from compliant runs of a scheme.

    total_* estimate the aggregate discounted cost (all agents, all stages),
    per_agent_* the per-agent average; tail_bound bounds what truncating the
    horizon can have cut off the aggregate estimate (divide by n for the
    per-agent version). sample is the first trial's trajectory.
    """

    manifest: RunManifest
    total_mean: float
    total_se: float
    per_agent_mean: float
    per_agent_se: float
    tail_bound: float
    sample: Trajectory


def simulate_chain(
    params: GameParams, horizon: int, seed: int, trial: int = 0, start: str = "high"
) -> np.ndarray:
    """Simulate the road-state chain; returns a boolean array, True = low.

    Entry t (0-indexed) is the state at stage t+1. The chain starts from a
    latent pre-stage state given by start, so the first entry is already a
    transition draw (from high, it is low with probability gamma_h).
    """
    if horizon < 1:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    if start not in ("high", "low"):
        raise ParameterError(f"start must be 'high' or 'low', got {start!r}")
    u = _rng(seed, trial, _STREAM_CHAIN).random(horizon)
    lows = np.empty(horizon, dtype=bool)
    low = start == "low"
    for t in range(horizon):
        low = u[t] < (1.0 - params.gamma_l) if low else u[t] < params.gamma_h
        lows[t] = low
    return lows


def _stage_agent_costs(
    risky: np.ndarray, low: bool, params: GameParams
) -> np.ndarray:
    coef = params.l if low else params.h
    x = int(risky.sum())
    costs = np.full(params.n, params.s0 + params.s1 * (params.n - x))
    costs[risky] = coef * x
    return costs


def _dispatch(
    risky_prev: np.ndarray | None,
    prev_low: bool,
    prev2_low: bool,
    c: int,
    d: int,
    rng: np.random.Generator,
    n: int,
) -> np.ndarray:
    """Recommendations for one stage of compliant play (True = risky)."""
    risky = np.zeros(n, dtype=bool)
    if risky_prev is None or not prev_low:
        risky[int(rng.integers(n))] = True
        return risky
    target = c if not prev2_low else d
    risky |= risky_prev
    need = target - int(risky.sum())
    if need < 0:
        raise AssumptionError(
            "dispatch would need to evict risky incumbents; scheme flows are invalid"
        )
    if need:
        pool = np.flatnonzero(~risky)
        risky[rng.choice(pool, size=need, replace=False)] = True
    return risky


def _require_sim_gate(config: SimConfig, params: GameParams) -> None:
    config.scheme().validate(params)
    gate = check_assumption_infinite(params)
    if not gate.passed:
        raise AssumptionError("simulation gate fails: " + "; ".join(gate.failures()))


def _worst_stage_cost(params: GameParams) -> float:
    """Largest cost any single agent can pay in one stage."""
    return max(params.h * params.n, params.s0 + params.s1 * params.n)


def run_scheme(config: SimConfig, params: GameParams) -> RunStats:
    """Estimate the discounted cost of compliant play under scheme (c, d).

    Every agent follows its recommendation each stage; the estimates are
    directly comparable to the closed-form aggregate cost and per-agent
    reset value when start='high'.
    """
    _require_sim_gate(config, params)
    n, delta = params.n, params.delta
    totals = np.empty(config.trials)
    sample: Trajectory | None = None
    for trial in range(config.trials):
        lows = simulate_chain(params, config.horizon, config.seed, trial, config.start)
        rng = _rng(config.seed, trial, _STREAM_DISPATCH)
        agent_totals = np.zeros(n)
        risky = None
        flows = []
        start_low = config.start == "low"
        disc = 1.0
        for t in range(1, config.horizon + 1):
            prev_low = lows[t - 2] if t >= 2 else start_low
            prev2_low = lows[t - 3] if t >= 3 else start_low
            risky = _dispatch(risky, prev_low, prev2_low, config.c, config.d, rng, n)
            agent_totals += disc * _stage_agent_costs(risky, bool(lows[t - 1]), params)
            flows.append(int(risky.sum()))
            disc *= delta
        totals[trial] = agent_totals.sum()
        if sample is None:
            sample = Trajectory(
                thetas=tuple("L" if low else "H" for low in lows),
                flows=tuple(flows),
                total=float(agent_totals.sum()),
                agent_totals=tuple(float(v) for v in agent_totals),
            )
    tail = delta**config.horizon * n * _worst_stage_cost(params) / (1.0 - delta)
    total_se = float(totals.std(ddof=1) / np.sqrt(config.trials)) if config.trials > 1 else float("nan")
    return RunStats(
        manifest=RunManifest(config.c, config.d, config.trials, config.horizon,
                             config.seed, config.start),
        total_mean=float(totals.mean()),
        total_se=total_se,
        per_agent_mean=float(totals.mean() / n),
        per_agent_se=total_se / n,
        tail_bound=float(tail),
        sample=sample,
    )


# ---------------------------------------------------------------------------
# deviation rollouts

@dataclass(frozen=True)
class RolloutStats:
    """Paired follow/deviate values of the monitored agent at a trigger state.

    Values discount from the trigger stage (weight one there) over `horizon`
    stages. diff_* summarise deviate minus follow per trial (paired, common
    random numbers), so obedience at the state means diff is nonnegative up
    to sampling noise and the truncation tail. Trials whose chain never
    produces the trigger within max_wait stages are skipped; if all are, the
    state was unreachable and the means are None.
    """

    trigger: AgentState
    n_triggered: int
    n_skipped: int
    follow_mean: float | None
    follow_se: float | None
    deviate_mean: float | None
    deviate_se: float | None
    diff_mean: float | None
    diff_se: float | None
    tail_bound: float
    horizon: int
    note: str = ""


def _match(
    trigger: AgentState,
    prev_flow: int,
    was_risky: bool,
    prev_low: bool,
    rec_risky: bool,
) -> bool:
    if trigger.prev_flow is not None and prev_flow != trigger.prev_flow:
        return False
    if trigger.tag == "pooled":
        if was_risky:
            return False
    elif trigger.tag == "low":
        if not (was_risky and prev_low):
            return False
    else:
        if not (was_risky and not prev_low):
            return False
    return rec_risky == (trigger.rec == "risky")


def deviation_rollout(
    config: SimConfig, trigger: AgentState, params: GameParams
) -> RolloutStats:
    """Value one agent's first deviation opportunity at a trigger state.

    Each trial simulates compliant play until agent 0 first finds itself in
    the trigger state (within max_wait stages). The follow arm keeps
    everybody compliant; the deviate arm flips agent 0's action at that
    stage, after which the coordinator switches to the punishment regime:
    independent recommendations priced so a compliant agent expects the safe
    cost s0 each stage (probability s0 / (n * expected coefficient), capped
    at one), while the deviant stays safe for good. Both arms share the
    chain and all dispatch draws up to the deviation.
    """
    _require_sim_gate(config, params)
    n, s0, delta = params.n, params.s0, params.delta
    length = config.max_wait + config.horizon
    follow_vals: list[float] = []
    deviate_vals: list[float] = []
    skipped = 0

    for trial in range(config.trials):
        lows = simulate_chain(params, length, config.seed, trial, config.start)
        rng = _rng(config.seed, trial, _STREAM_DISPATCH)
        start_low = config.start == "low"

        # Compliant pass, recording recommendations and flows so the deviate
        # arm can replay the shared history exactly.
        riskys: list[np.ndarray] = []
        risky = None
        t_star = None
        for t in range(1, length + 1):
            prev_low = lows[t - 2] if t >= 2 else start_low
            prev2_low = lows[t - 3] if t >= 3 else start_low
            prev_risky = risky
            risky = _dispatch(risky, prev_low, prev2_low, config.c, config.d, rng, n)
            riskys.append(risky)
            if t_star is None and t >= 2 and t <= config.max_wait:
                if _match(trigger, int(prev_risky.sum()), bool(prev_risky[0]),
                          prev_low, bool(risky[0])):
                    t_star = t
        if t_star is None:
            skipped += 1
            continue

        window = range(t_star, t_star + config.horizon)

        follow = 0.0
        for t in window:
            costs = _stage_agent_costs(riskys[t - 1], bool(lows[t - 1]), params)
            follow += delta ** (t - t_star) * float(costs[0])
        follow_vals.append(follow)

        # Deviate arm: flip agent 0 at t_star, punish ever after.
        deviate = 0.0
        flipped = riskys[t_star - 1].copy()
        flipped[0] = not flipped[0]
        costs = _stage_agent_costs(flipped, bool(lows[t_star - 1]), params)
        deviate += float(costs[0])
        prng = _rng(config.seed, trial, _STREAM_PUNISH)
        # Coordinator's belief that the last stage was low.
        flow = int(flipped.sum())
        belief = float(lows[t_star - 1]) if flow >= 1 else belief_step(
            float(lows[t_star - 2]) if t_star >= 2 else float(start_low), params
        )
        for t in range(t_star + 1, t_star + config.horizon):
            mu_ahead = expected_theta(belief_step(belief, params), params)
            p = min(1.0, s0 / (n * mu_ahead))
            recs = prng.random(n) < p
            recs[0] = False  # the deviant hides on the safe road
            low = bool(lows[t - 1])
            costs = _stage_agent_costs(recs, low, params)
            deviate += delta ** (t - t_star) * float(costs[0])
            flow = int(recs.sum())
            belief = float(low) if flow >= 1 else belief_step(belief, params)
        deviate_vals.append(deviate)

    tail = delta**config.horizon * _worst_stage_cost(params) / (1.0 - delta)
    if not follow_vals:
        return RolloutStats(
            trigger=trigger,
            n_triggered=0,
            n_skipped=skipped,
            follow_mean=None, follow_se=None,
            deviate_mean=None, deviate_se=None,
            diff_mean=None, diff_se=None,
            tail_bound=float(tail),
            horizon=config.horizon,
            note=f"trigger state never reached within {config.max_wait} stages",
        )
    fol = np.asarray(follow_vals)
    dev = np.asarray(deviate_vals)
    diff = dev - fol
    m = len(fol)

    def se(a: np.ndarray) -> float:
        return float(a.std(ddof=1) / np.sqrt(m)) if m > 1 else float("nan")

    return RolloutStats(
        trigger=trigger,
        n_triggered=m,
        n_skipped=skipped,
        follow_mean=float(fol.mean()),
        follow_se=se(fol),
        deviate_mean=float(dev.mean()),
        deviate_se=se(dev),
        diff_mean=float(diff.mean()),
        diff_se=se(diff),
        tail_bound=float(tail),
        horizon=config.horizon,
    )
