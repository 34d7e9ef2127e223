"""Run artifacts: communication ledger, epoch records, per-step traces.

Communication is measured in real numbers transmitted.  Uplink is tracked
per agent; downlink counts each server broadcast once (every agent receives
the same broadcast, so the per-agent average equals the broadcast size).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CSV_COLUMNS = (
    "seed", "algo", "step", "agent", "epoch",
    "instantaneous_regret", "cumulative_regret", "uplink_reals", "downlink_reals",
)


class CommLedger:
    """Running uplink/downlink real-number counts with a per-epoch breakdown."""

    def __init__(self, num_agents: int):
        if num_agents < 1:
            raise ValueError("need at least one agent")
        self.num_agents = num_agents
        self.uplink = np.zeros(num_agents)
        self.downlink = 0.0
        self.epoch_uplink: list[np.ndarray] = []
        self.epoch_downlink: list[float] = []

    def begin_epoch(self) -> None:
        self.epoch_uplink.append(np.zeros(self.num_agents))
        self.epoch_downlink.append(0.0)

    def add_uplink(self, agent: int, reals: float) -> None:
        if reals < 0:
            raise ValueError("communication cannot be negative")
        self.uplink[agent] += reals
        self.epoch_uplink[-1][agent] += reals

    def add_downlink(self, reals: float) -> None:
        if reals < 0:
            raise ValueError("communication cannot be negative")
        self.downlink += reals
        self.epoch_downlink[-1] += reals

    @property
    def num_epochs(self) -> int:
        return len(self.epoch_downlink)


def comm_totals(ledger: CommLedger, N: int) -> tuple[float, float, float]:
    """(C_up, C_down, C): per-agent average uplink, broadcast reals, total."""
    if N != ledger.num_agents:
        raise ValueError("agent count does not match the ledger")
    c_up = float(np.sum(ledger.uplink)) / N
    c_down = float(ledger.downlink)
    return c_up, c_down, c_up + c_down


@dataclass
class EpochRecord:
    """Per-epoch protocol artifacts kept for diagnostics and tests."""

    epoch: int
    length: int
    n_queries: int
    n_inducing: int
    sigma_max: float
    p_keep: float
    active_before: int
    active_after: int
    uplink_per_agent: float
    downlink: float
    reconstruction_exact: bool = True
    reconstruction_reals: float = 0.0


@dataclass
class RunTrace:
    """Everything one seeded run produced, in step-major row order.

    Rows are ordered by (step, agent): all N agent queries of step 1, then
    step 2, and so on; ``cum_regret`` is the prefix sum of
    ``instantaneous_regret`` over that order.  ``uplink_cum`` is the row
    agent's cumulative uplink and ``downlink_cum`` the cumulative broadcast
    size, both as of the end of the row's step (epoch communication lands on
    the epoch's final step).
    """

    seed: int
    algo: str
    objective: str
    horizon: int
    num_agents: int
    step: np.ndarray
    agent: np.ndarray
    epoch: np.ndarray
    point_index: np.ndarray
    reward: np.ndarray
    instantaneous_regret: np.ndarray
    cum_regret: np.ndarray
    uplink_cum: np.ndarray
    downlink_cum: np.ndarray
    ledger: CommLedger
    epochs: list[EpochRecord] = field(default_factory=list)
    optimum_value: float = 0.0
    optimum_index: int = 0

    def __post_init__(self):
        n = self.horizon * self.num_agents
        for name in ("step", "agent", "epoch", "point_index", "reward",
                     "instantaneous_regret", "cum_regret", "uplink_cum", "downlink_cum"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} must have N*T = {n} rows")

    def regret_series(self) -> np.ndarray:
        """Cumulative regret after each time step (length T)."""
        return self.cum_regret[self.num_agents - 1 :: self.num_agents]

    def comm_series(self) -> np.ndarray:
        """Total communication cost after each time step (length T).

        Per-agent-average uplink plus broadcast downlink; uplink is uniform
        across agents in every implemented algorithm, so the last row of
        each step carries the average already.
        """
        tail = slice(self.num_agents - 1, None, self.num_agents)
        return self.uplink_cum[tail] + self.downlink_cum[tail]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for i in range(len(self.step)):
                fh.write(
                    f"{self.seed},{self.algo},{self.step[i]},{self.agent[i]},{self.epoch[i]},"
                    f"{self.instantaneous_regret[i]!r},{self.cum_regret[i]!r},"
                    f"{self.uplink_cum[i]!r},{self.downlink_cum[i]!r}\n"
                )

    def dump_epochs(self, path) -> None:
        """Structured text sidecar with the per-epoch protocol artifacts."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"run seed={self.seed} algo={self.algo} objective={self.objective}\n")
            for rec in self.epochs:
                fh.write(
                    f"epoch {rec.epoch}: length={rec.length} queries={rec.n_queries} "
                    f"inducing={rec.n_inducing} sigma_max={rec.sigma_max!r} "
                    f"p_keep={rec.p_keep!r} active {rec.active_before}->{rec.active_after} "
                    f"uplink/agent={rec.uplink_per_agent!r} downlink={rec.downlink!r} "
                    f"reconstruction_exact={rec.reconstruction_exact} "
                    f"reconstruction_reals={rec.reconstruction_reals!r}\n"
                )


def assemble_rows(seed: int, algo: str, objective_name: str, horizon: int,
                  num_agents: int, per_step: dict, ledger: CommLedger,
                  epoch_of_step: np.ndarray, uplink_at_step: np.ndarray,
                  downlink_at_step: np.ndarray, epochs: list[EpochRecord],
                  optimum_index: int, optimum_value: float) -> RunTrace:
    """Flatten per-(step, agent) data into a RunTrace.

    ``per_step`` maps (step, agent) -> (point_index, reward, inst_regret);
    ``uplink_at_step``/``downlink_at_step`` are cumulative totals indexed by
    step (1-based positions 0..T-1).
    """
    n = horizon * num_agents
    step = np.empty(n, dtype=int)
    agent = np.empty(n, dtype=int)
    epoch = np.empty(n, dtype=int)
    point_index = np.empty(n, dtype=int)
    reward = np.empty(n)
    inst = np.empty(n)
    uplink_cum = np.empty(n)
    downlink_cum = np.empty(n)
    i = 0
    for t in range(1, horizon + 1):
        for a in range(num_agents):
            pi, rw, rg = per_step[(t, a)]
            step[i] = t
            agent[i] = a
            epoch[i] = epoch_of_step[t - 1]
            point_index[i] = pi
            reward[i] = rw
            inst[i] = rg
            uplink_cum[i] = uplink_at_step[t - 1]
            downlink_cum[i] = downlink_at_step[t - 1]
            i += 1
    return RunTrace(
        seed=seed, algo=algo, objective=objective_name, horizon=horizon,
        num_agents=num_agents, step=step, agent=agent, epoch=epoch,
        point_index=point_index, reward=reward, instantaneous_regret=inst,
        cum_regret=np.cumsum(inst), uplink_cum=uplink_cum,
        downlink_cum=downlink_cum, ledger=ledger, epochs=epochs,
        optimum_value=optimum_value, optimum_index=optimum_index,
    )
