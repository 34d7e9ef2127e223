"""Seeded random-stream derivation.

A single master seed fans out into independent substreams with fixed roles:

* query streams, keyed by (agent, epoch) -- derivable by both an agent and
  the server, which is what lets the server replay every query location
  without any communication;
* noise streams, keyed by agent -- owned by the environment, never visible
  to the server;
* inducing-set streams, keyed by epoch -- server-only Bernoulli coins;
* an objective stream -- randomized objective parameters (so that, for a
  given run seed, every algorithm faces the same reward function).

Streams are derived from ``numpy.random.SeedSequence`` over disjoint key
tuples, so creation order is irrelevant and any stream can be rebuilt from
``(master_seed, role, indices)`` alone.
"""

from __future__ import annotations

import numpy as np

_QUERY = 1
_NOISE = 2
_INDUCING = 3
_OBJECTIVE = 4
_RUN = 5


def _generator(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key))))


def query_stream(master_seed: int, agent: int, epoch: int) -> np.random.Generator:
    """Stream driving agent ``agent``'s uniform draws in epoch ``epoch``."""
    return _generator(master_seed, _QUERY, agent, epoch)


def noise_stream(master_seed: int, agent: int) -> np.random.Generator:
    """Observation-noise stream for one agent, private to the environment."""
    return _generator(master_seed, _NOISE, agent)


def inducing_stream(master_seed: int, epoch: int) -> np.random.Generator:
    """Server-side stream for the epoch's inducing-set Bernoulli draws."""
    return _generator(master_seed, _INDUCING, epoch)


def objective_stream(master_seed: int) -> np.random.Generator:
    """Stream for randomized objective parameters."""
    return _generator(master_seed, _OBJECTIVE)


def run_seed(master_seed: int, index: int) -> int:
    """Master seed of the ``index``-th Monte Carlo run."""
    ss = np.random.SeedSequence([master_seed, _RUN, index])
    return int(ss.generate_state(1, np.uint64)[0])
