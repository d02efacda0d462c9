"""Deterministic lockstep message-passing simulation of the agent network.

Each inner iteration has three phases with a global barrier between them:

  1. every agent runs its x-update, then broadcasts xbar[i] and the
     consensus dual mu_i^(j) to each neighbor j;
  2. every agent runs its w-update from the received blocks, then sends
     each neighbor j its fresh copy w_i^(j);
  3. every agent runs its dual updates locally.

Messages are the only cross-agent channel; an agent can only address its
neighbors. Message delivery order is sorted by (sender, receiver), so a
run is bit-reproducible. Optional thread parallelism (FDIRNET_THREADS)
only parallelizes the per-agent compute inside a phase and produces
identical results to the single-threaded mode.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agent import AgentState
from .exceptions import ProtocolViolation
from .topology import NeighborTables

PHASE_XBAR = 1
PHASE_COPY = 2
PHASE_DUAL = 3

KIND_XBAR = "xbar"
KIND_MU = "dual_mu"
KIND_COPY = "copy_of_you"


@dataclass(frozen=True)
class Message:
    sender: int
    receiver: int
    round: int
    phase: int
    kind: str
    payload: tuple  # immutable float tuple


def _threads() -> int:
    try:
        return int(os.environ.get("FDIRNET_THREADS", "0"))
    except ValueError:
        return 0


class Network:
    """A set of agents plus the sole communication channel between them."""

    def __init__(self, agents: dict[int, AgentState], tables: NeighborTables,
                 record_trace: bool = False):
        self.agents = agents
        self.tables = tables
        self.record_trace = record_trace
        self.trace: list[Message] = []
        self.round = 0

    def _for_each_agent(self, fn):
        ids = sorted(self.agents)
        nthreads = _threads()
        if nthreads > 1:
            with ThreadPoolExecutor(max_workers=nthreads) as pool:
                list(pool.map(lambda i: fn(self.agents[i]), ids))
        else:
            for i in ids:
                fn(self.agents[i])

    def _deliver(self, messages: list[Message]) -> list[Message]:
        messages.sort(key=lambda m: (m.sender, m.receiver, m.kind))
        for m in messages:
            if m.receiver not in self.tables.neighbors[m.sender]:
                raise ProtocolViolation(
                    f"agent {m.sender} sent to non-neighbor {m.receiver}"
                )
            dst = self.agents[m.receiver]
            payload = np.array(m.payload)
            if m.kind == KIND_XBAR:
                dst.nbr_xbar[m.sender] = payload
            elif m.kind == KIND_MU:
                dst.nbr_mu[m.sender] = payload
            elif m.kind == KIND_COPY:
                dst.nbr_copy_of_me[m.sender] = payload
            else:
                raise ProtocolViolation(f"unknown message kind {m.kind!r}")
        if self.record_trace:
            self.trace.extend(messages)
        return messages

    def run_phase(self, phase: int, prox_tol: float = 1e-9) -> list[Message]:
        """Run one phase at every agent and deliver its messages."""
        if phase == PHASE_XBAR:
            self._for_each_agent(lambda a: a.primal_update_x(tol=prox_tol))
            out = []
            for i in sorted(self.agents):
                a = self.agents[i]
                for j in a.neighbors:
                    out.append(Message(i, j, self.round, phase, KIND_XBAR,
                                       tuple(a.x_bar)))
                    out.append(Message(i, j, self.round, phase, KIND_MU,
                                       tuple(a.mu[j])))
            return self._deliver(out)
        if phase == PHASE_COPY:
            self._for_each_agent(lambda a: a.primal_update_w())
            out = []
            for i in sorted(self.agents):
                a = self.agents[i]
                for j in a.neighbors:
                    out.append(Message(i, j, self.round, phase, KIND_COPY,
                                       tuple(a.w[j])))
            return self._deliver(out)
        if phase == PHASE_DUAL:
            self._for_each_agent(lambda a: a.dual_update())
            return []
        raise ValueError(f"unknown phase {phase}")

    def run_iteration(self, prox_tol: float = 1e-9) -> None:
        for phase in (PHASE_XBAR, PHASE_COPY, PHASE_DUAL):
            self.run_phase(phase, prox_tol=prox_tol)
        self.round += 1


def message_stats(trace: list[Message]) -> dict[int, dict]:
    """Per-agent outgoing message and float counts, per round.

    Costs depend only on the agent's neighborhood and block sizes, never on
    the network size.
    """
    stats: dict[int, dict] = {}
    for m in trace:
        per_agent = stats.setdefault(m.sender, {})
        per_round = per_agent.setdefault(m.round, {"messages": 0, "floats": 0})
        per_round["messages"] += 1
        per_round["floats"] += len(m.payload)
    return stats


def dump_trace_csv(trace: list[Message], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "phase", "sender", "receiver", "kind",
                        "payload_norm"])
        for m in trace:
            writer.writerow([m.round, m.phase, m.sender, m.receiver, m.kind,
                             float(np.linalg.norm(m.payload))])
