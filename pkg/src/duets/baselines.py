"""No-communication baseline: N independent GP-UCB agents.

Each agent keeps an exact posterior over its own history only and queries
the grid argmax of mean + beta * std every step.  The communication ledger
stays identically zero, which is the whole point of the comparison.
"""

from __future__ import annotations

import numpy as np

from . import rng as streams
from .gp import GpPosterior
from .grid import GridDomain
from .objectives import Objective, make_objective, noisy_query
from .trace import CommLedger, RunTrace, assemble_rows


class UcbAgentState:
    """One agent's private history plus its acquisition parameters."""

    def __init__(self, agent_id: int, spec, lam: float, beta: float, dim: int):
        self.agent_id = agent_id
        self.spec = spec
        self.lam = lam
        self.beta = beta
        self.X = np.zeros((0, dim))
        self.Y = np.zeros(0)

    @property
    def t(self) -> int:
        return len(self.Y)

    def observe(self, x: np.ndarray, y: float) -> None:
        self.X = np.vstack([self.X, x.reshape(1, -1)])
        self.Y = np.append(self.Y, y)


def ucb_step_index(agent: UcbAgentState, grid: GridDomain) -> int:
    """Flat index of argmax(mean + beta * std); ties take the lowest index."""
    post = GpPosterior(agent.spec, agent.X, agent.Y, agent.lam)
    score = post.mean(grid.points) + agent.beta * np.sqrt(post.variance(grid.points))
    return int(np.argmax(score))


def ucb_step(agent: UcbAgentState, grid: GridDomain) -> np.ndarray:
    """The point this agent queries next."""
    return grid.points[ucb_step_index(agent, grid)]


def run_nkernelucb(cfg, objective: Objective | None = None,
                   grid: GridDomain | None = None,
                   agent_noise_seeds: list[int] | None = None) -> RunTrace:
    """Simulate N independent UCB agents for T steps; ledger stays zero.

    ``agent_noise_seeds`` overrides the per-agent noise streams (useful for
    checking that relabeling agents merely permutes their traces).
    """
    from .experiment import make_grid
    from .protocol import resolve_beta

    cfg = cfg.resolved()
    if objective is None:
        objective = make_objective(cfg.objective, streams.objective_stream(cfg.seed), dim=10)
    if grid is None:
        grid = make_grid(cfg, objective)
    spec = cfg.kernel_spec()
    opt_index, opt_value = objective.grid_optimum(grid)
    beta = resolve_beta(cfg, grid, objective)

    agents = [UcbAgentState(n, spec, cfg.lam, beta, grid.dimension) for n in range(cfg.N)]
    if agent_noise_seeds is None:
        noise_rngs = [streams.noise_stream(cfg.seed, n) for n in range(cfg.N)]
    else:
        if len(agent_noise_seeds) != cfg.N:
            raise ValueError("need one noise seed per agent")
        noise_rngs = [np.random.default_rng(s) for s in agent_noise_seeds]

    ledger = CommLedger(cfg.N)
    per_step: dict[tuple[int, int], tuple[int, float, float]] = {}
    for t in range(1, cfg.T + 1):
        for n, agent in enumerate(agents):
            idx = ucb_step_index(agent, grid)
            x = grid.points[idx]
            y = noisy_query(objective, x, cfg.noise_std, noise_rngs[n])
            agent.observe(x, y)
            per_step[(t, n)] = (idx, y, opt_value - objective.value(x))

    zeros = np.zeros(cfg.T)
    return assemble_rows(
        cfg.seed, "nkernelucb", objective.name, cfg.T, cfg.N, per_step, ledger,
        np.zeros(cfg.T, dtype=int), zeros, zeros, [], opt_index, opt_value,
    )
