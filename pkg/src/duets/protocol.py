"""The DUETS agent/server state machines and the full simulated run.

The protocol alternates, per epoch: uniform exploration at the agents,
zero-cost reconstruction of all query locations at the server (shared
randomness), Bernoulli selection of an inducing subset, projection of
rewards onto inducing-point features at the agents, ridge aggregation at
the server, and a deterministic trim of the active region that both sides
replay identically.

Communication accounting, in real numbers: broadcasting the inducing set
costs ``|S| * d + 1`` (the points plus the uncertainty scale; ``|S| + 1``
under index encoding), broadcasting the aggregated weights costs ``|S|``,
and each agent uplinks ``|S|`` projected values.  Reconstruction costs
nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import rng as streams
from .errors import NumericalError, ProtocolInvariantError
from .gp import GpPosterior, SparsePosterior, confidence_width, gram_inv_sqrt, nystrom_features
from .grid import ActiveRegion, GridDomain, trim, uniform_sample_indices
from .kernels import KernelSpec, as_points, kernel_cross
from .objectives import Objective, make_objective, noisy_query
from .trace import CommLedger, EpochRecord, RunTrace, assemble_rows


@dataclass
class EpochSchedule:
    """Epoch lengths T_1, T_2, ... with the final epoch truncated at T.

    Non-final lengths follow ``T_{j+1} = floor(sqrt(T * T_j))``, which is
    nondecreasing until the horizon cuts the last epoch short.
    """

    horizon: int
    first_length: int
    lengths: list[int]

    def __post_init__(self):
        if sum(self.lengths) != self.horizon:
            raise ValueError("epoch lengths must sum to the horizon")

    @property
    def num_epochs(self) -> int:
        return len(self.lengths)

    def epoch_of_step(self) -> np.ndarray:
        """1-based epoch index for each step 1..T."""
        return np.repeat(np.arange(1, self.num_epochs + 1), self.lengths)

    def epoch_ends(self) -> list[int]:
        return list(np.cumsum(self.lengths))


def epoch_schedule(T: int, T_1: int) -> EpochSchedule:
    """Build the epoch schedule for horizon T with first epoch length T_1."""
    if T < 1:
        raise ValueError("T must be at least 1")
    if not 1 <= T_1 <= T:
        raise ValueError(f"T_1 must lie in [1, T]; got T_1={T_1}, T={T}")
    lengths = []
    used, length = 0, T_1
    while used < T:
        length = min(length, T - used)
        lengths.append(length)
        used += length
        length = math.floor(math.sqrt(T * length))
    return EpochSchedule(T, T_1, lengths)


def epoch_count_bound(N: int, T: int) -> float:
    """log(log(max(N, T))) + 4, the guaranteed cap on the number of epochs."""
    return math.log(math.log(max(N, T))) + 4.0


def trimming_delta(delta: float, grid_size: int, N: int, T: int) -> float:
    """Per-comparison failure probability used inside the trim threshold.

    Splits ``delta`` across all grid points and epochs; the log-log epoch
    factor is floored at 1 so tiny N or T cannot push it negative.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    inner = math.log(max(N, 1)) * math.log(max(T, 1))
    loglog = math.log(inner) if inner > 0 else float("-inf")
    return delta / (2.0 * grid_size * (max(1.0, loglog) + 4.0))


@dataclass
class AgentState:
    """One agent's view: its coin, the shared active region, and progress."""

    agent_id: int
    master_seed: int
    horizon: int
    region: ActiveRegion
    epoch: int = 1
    t: int = 0
    query_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    queries: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    rewards: np.ndarray = field(default_factory=lambda: np.zeros(0))


def agent_explore(agent: AgentState, T_j: int, f_query) -> tuple[np.ndarray, np.ndarray]:
    """Draw this epoch's uniform queries and observe their rewards.

    Uses the agent's dedicated (agent, epoch) substream, so the draw is
    reproducible from the agent state alone.  Returns (points, rewards) in
    query order; both are truncated at the horizon.
    """
    if agent.region.count == 0:
        raise ProtocolInvariantError("agent has an empty active region")
    n_draw = min(T_j, agent.horizon - agent.t)
    if n_draw <= 0:
        agent.query_indices = np.zeros(0, dtype=int)
        agent.queries = np.zeros((0, agent.region.grid.dimension))
        agent.rewards = np.zeros(0)
        return agent.queries, agent.rewards
    gen = streams.query_stream(agent.master_seed, agent.agent_id, agent.epoch)
    idx = uniform_sample_indices(agent.region, gen, n_draw)
    pts = agent.region.grid.points[idx]
    agent.query_indices = idx
    agent.queries = pts
    agent.rewards = np.array([float(f_query(x)) for x in pts])
    agent.t += n_draw
    return pts, agent.rewards


@dataclass
class ServerState:
    """The server's view: every agent's coin plus the shared active region."""

    master_seed: int
    num_agents: int
    horizon: int
    region: ActiveRegion
    epoch: int = 1
    t: int = 0
    query_indices: list[np.ndarray] = field(default_factory=list)


def server_reconstruct(server: ServerState, T_j: int) -> np.ndarray:
    """Replay every agent's uniform draws for this epoch from their coins.

    Returns the combined query set in agent order, bitwise identical to
    what the agents actually queried.  Contributes nothing to any ledger.
    """
    if server.region.count == 0:
        raise ProtocolInvariantError("server has an empty active region")
    n_draw = max(min(T_j, server.horizon - server.t), 0)
    per_agent = []
    for n in range(server.num_agents):
        gen = streams.query_stream(server.master_seed, n, server.epoch)
        per_agent.append(uniform_sample_indices(server.region, gen, n_draw))
    server.query_indices = per_agent
    server.t += n_draw
    idx = np.concatenate(per_agent) if per_agent else np.zeros(0, dtype=int)
    return server.region.grid.points[idx]


def build_inducing_set(D, sigma_max: float, p_0: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Keep each query point independently with probability min(1, p_0 * sigma_max^2).

    Order is preserved, so the result is a subsequence of D.
    """
    if sigma_max < 0:
        raise ValueError("sigma_max must be nonnegative")
    if not p_0 > 0:
        raise ValueError("p_0 must be positive")
    D = as_points(D)
    p = min(1.0, p_0 * sigma_max * sigma_max)
    return D[rng.random(len(D)) < p]


def project_rewards(D, S, Y, spec: KernelSpec) -> np.ndarray:
    """One agent's uplink message: rewards projected onto inducing features.

    Returns sum_i z_S(x_i) * y_i, an |S|-vector (empty when S is empty).
    """
    D = as_points(D)
    Y = np.asarray(Y, dtype=float).ravel()
    if len(D) != len(Y):
        raise ValueError(f"|D| = {len(D)} but |Y| = {len(Y)}")
    S = as_points(S)
    if len(S) == 0:
        return np.zeros(0)
    Z = nystrom_features(spec, S, D)
    return Z.T @ Y


def _ridge_solve(ztz: np.ndarray, rhs: np.ndarray, lam: float) -> np.ndarray:
    r = len(rhs)
    if r == 0:
        return np.zeros(0)
    try:
        factor = cho_factor(ztz + lam * np.eye(r), lower=True)
    except LinAlgError as exc:
        raise NumericalError(f"aggregation solve failed: {exc}") from exc
    return cho_solve(factor, rhs)


def aggregate(v_list, D, S, lam: float, spec: KernelSpec) -> np.ndarray:
    """Server-side ridge aggregation of the agents' projected rewards.

    Solves (lam*I + Z_D^T Z_D) out = sum_n v_n, where Z_D stacks the
    inducing features of the full combined query set D.  Summation follows
    the list order, so results are bitwise reproducible.
    """
    S = as_points(S)
    r = len(S)
    v_sum = np.zeros(r)
    for v in v_list:
        v = np.asarray(v, dtype=float).ravel()
        if len(v) != r:
            raise ValueError("every projected vector must have one entry per inducing point")
        v_sum = v_sum + v
    if r == 0:
        return np.zeros(0)
    Z = nystrom_features(spec, S, as_points(D))
    ztz = Z.T @ Z
    ztz = 0.5 * (ztz + ztz.T)
    return _ridge_solve(ztz, v_sum, lam)


def resolve_beta(cfg, grid: GridDomain, objective: Objective) -> float:
    """The width multiplier used in trimming (and the UCB baseline).

    ``fixed`` mode returns the configured constant; ``theoretical`` mode
    evaluates the confidence width at the per-comparison failure
    probability, with B defaulting to a coarse grid bound on |f|.
    """
    if cfg.beta_mode == "fixed":
        return float(cfg.beta)
    if cfg.beta_mode != "theoretical":
        raise ValueError(f"cannot run with beta_mode {cfg.beta_mode!r}; pick a beta first")
    B = cfg.B
    if B is None:
        B = float(np.ceil(np.max(np.abs(objective.value(grid.points)))))
    dprime = trimming_delta(cfg.delta, len(grid), cfg.N, cfg.T)
    return confidence_width(B, cfg.noise_std, cfg.lam, dprime)


def run_duets(cfg, objective: Objective | None = None,
              grid: GridDomain | None = None) -> RunTrace:
    """Simulate one full seeded run of the protocol.

    ``objective`` and ``grid`` are built from the config when omitted;
    passing them in lets callers share a domain across algorithms or test
    with synthetic objectives.
    """
    from .experiment import make_grid  # local import: experiment builds on protocol

    cfg = cfg.resolved()
    if objective is None:
        objective = make_objective(cfg.objective, streams.objective_stream(cfg.seed), dim=10)
    if grid is None:
        grid = make_grid(cfg, objective)
    spec = cfg.kernel_spec()
    lam = cfg.lam
    opt_index, opt_value = objective.grid_optimum(grid)
    schedule = epoch_schedule(cfg.T, cfg.T_1)
    beta = resolve_beta(cfg, grid, objective)
    point_cost = grid.dimension if cfg.set_encoding == "vectors" else 1

    region = ActiveRegion.full(grid)
    agents = [AgentState(n, cfg.seed, cfg.T, region) for n in range(cfg.N)]
    server = ServerState(cfg.seed, cfg.N, cfg.T, region)
    noise_rngs = [streams.noise_stream(cfg.seed, n) for n in range(cfg.N)]
    ledger = CommLedger(cfg.N)
    records: list[EpochRecord] = []
    per_step: dict[tuple[int, int], tuple[int, float, float]] = {}
    uplink_at_step = np.zeros(cfg.T)
    downlink_at_step = np.zeros(cfg.T)

    t0 = 0
    for j, T_j in enumerate(schedule.lengths, start=1):
        ledger.begin_epoch()
        active_before = region.count

        # agents: uniform exploration with private noise
        agent_points, agent_rewards = [], []
        for n, agent in enumerate(agents):
            def f_query(x, _rng=noise_rngs[n]):
                return noisy_query(objective, x, cfg.noise_std, _rng)

            pts, rewards = agent_explore(agent, T_j, f_query)
            agent_points.append(pts)
            agent_rewards.append(rewards)
            regrets = opt_value - objective.value(pts)
            for i in range(len(pts)):
                per_step[(t0 + 1 + i, n)] = (
                    int(agent.query_indices[i]), float(rewards[i]), float(regrets[i]),
                )

        # server: zero-cost reconstruction via the shared coins
        D = server_reconstruct(server, T_j)
        union = np.concatenate(agent_points) if agent_points else np.zeros((0, grid.dimension))
        reconstruction_exact = bool(
            np.array_equal(D, union)
            and all(
                np.array_equal(si, a.query_indices)
                for si, a in zip(server.query_indices, agents)
            )
        )
        if not reconstruction_exact:
            raise ProtocolInvariantError(
                f"epoch {j}: server reconstruction diverged from agent queries"
            )

        # uncertainty scale over the active region, from query locations only
        var = GpPosterior(spec, D, None, lam).variance(region.points())
        sigma_max = math.sqrt(float(np.max(var)))

        # inducing subset, broadcast with the uncertainty scale
        S = build_inducing_set(D, sigma_max, cfg.p_0, streams.inducing_stream(cfg.seed, j))
        ledger.add_downlink(len(S) * point_cost + 1)

        # agents project their rewards onto the inducing features
        v_list = []
        for n in range(cfg.N):
            v_list.append(project_rewards(agent_points[n], S, agent_rewards[n], spec))
            ledger.add_uplink(n, len(S))

        # server aggregates and broadcasts the mean weights
        vbar = aggregate(v_list, D, S, lam, spec)
        ledger.add_downlink(len(S))

        # deterministic trim shared by the server and every agent
        inv_sqrt = gram_inv_sqrt(spec, S)
        ztz = None
        if len(S):
            Zfull = (inv_sqrt @ kernel_cross(spec, S, D)).T
            ztz = Zfull.T @ Zfull
            ztz = 0.5 * (ztz + ztz.T)
        sparse = SparsePosterior(spec, S, lam, ztz=ztz, mean_weights=vbar, inv_sqrt=inv_sqrt)
        region = trim(region, sparse.mean, beta, sigma_max)
        for agent in agents:
            agent.region = region
            agent.epoch += 1
        server.region = region
        server.epoch += 1

        t_end = t0 + T_j
        prev_up = uplink_at_step[t0 - 1] if t0 else 0.0
        prev_down = downlink_at_step[t0 - 1] if t0 else 0.0
        uplink_at_step[t0:t_end - 1] = prev_up
        downlink_at_step[t0:t_end - 1] = prev_down
        uplink_at_step[t_end - 1] = prev_up + float(ledger.epoch_uplink[-1][0])
        downlink_at_step[t_end - 1] = prev_down + float(ledger.epoch_downlink[-1])

        records.append(EpochRecord(
            epoch=j, length=T_j, n_queries=len(D), n_inducing=len(S),
            sigma_max=sigma_max, p_keep=min(1.0, cfg.p_0 * sigma_max**2),
            active_before=active_before, active_after=region.count,
            uplink_per_agent=float(ledger.epoch_uplink[-1][0]),
            downlink=float(ledger.epoch_downlink[-1]),
            reconstruction_exact=reconstruction_exact, reconstruction_reals=0.0,
        ))
        t0 = t_end

    return assemble_rows(
        cfg.seed, "duets", objective.name, cfg.T, cfg.N, per_step, ledger,
        schedule.epoch_of_step(), uplink_at_step, downlink_at_step, records,
        opt_index, opt_value,
    )
