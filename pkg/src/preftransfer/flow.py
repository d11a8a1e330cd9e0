"""Capacitated min-cost flow via successive shortest augmenting paths.

Costs are real and nonnegative; capacities may be real (transportation with
fractional marginals) or integer (scaled joint program). Node potentials keep
reduced costs nonnegative so Dijkstra drives every augmentation.
"""

from __future__ import annotations

import heapq

import numpy as np

EPS = 1e-12


class MinCostFlow:
    def __init__(self, num_nodes: int):
        self.n = num_nodes
        self.head: list[list[int]] = [[] for _ in range(num_nodes)]
        # arc storage: to, residual capacity, cost; arc i^1 is the reverse of i
        self.to: list[int] = []
        self.cap: list[float] = []
        self.cost: list[float] = []

    def add_edge(self, u: int, v: int, capacity: float, cost: float) -> int:
        if cost < -EPS:
            raise ValueError("negative arc costs are not supported")
        idx = len(self.to)
        self.to.extend([v, u])
        self.cap.extend([capacity, 0.0])
        self.cost.extend([cost, -cost])
        self.head[u].append(idx)
        self.head[v].append(idx + 1)
        return idx

    def flow_on(self, arc: int) -> float:
        return self.cap[arc ^ 1]

    def solve(self, source: int, sink: int, amount: float) -> float:
        """Push ``amount`` units from source to sink; returns the total cost."""
        potential = np.zeros(self.n)
        remaining = amount
        total_cost = 0.0
        while remaining > EPS:
            dist, parent_arc = self._dijkstra(source, potential)
            if not np.isfinite(dist[sink]):
                raise ValueError("flow infeasible: sink unreachable")
            # bottleneck along the path
            push = remaining
            v = sink
            while v != source:
                arc = parent_arc[v]
                push = min(push, self.cap[arc])
                v = self.to[arc ^ 1]
            v = sink
            while v != source:
                arc = parent_arc[v]
                self.cap[arc] -= push
                self.cap[arc ^ 1] += push
                total_cost += push * self.cost[arc]
                v = self.to[arc ^ 1]
            finite = np.isfinite(dist)
            potential[finite] += dist[finite]
            remaining -= push
        return total_cost

    def _dijkstra(self, source: int, potential: np.ndarray):
        dist = np.full(self.n, np.inf)
        parent_arc = [-1] * self.n
        dist[source] = 0.0
        heap = [(0.0, source)]
        done = [False] * self.n
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for arc in self.head[u]:
                if self.cap[arc] <= EPS:
                    continue
                v = self.to[arc]
                nd = d + self.cost[arc] + potential[u] - potential[v]
                if nd < dist[v] - EPS:
                    dist[v] = nd
                    parent_arc[v] = arc
                    heapq.heappush(heap, (nd, v))
        return dist, parent_arc


def transport_min_cost(supplies: np.ndarray, demands: np.ndarray, costs: np.ndarray):
    """Exact optimal transport between two discrete measures.

    Returns (optimal cost, coupling matrix). Marginal sums must agree within
    1e-9; residual float drift is absorbed on the last unit of flow.
    """
    supplies = np.asarray(supplies, dtype=float)
    demands = np.asarray(demands, dtype=float)
    costs = np.asarray(costs, dtype=float)
    n_sup, n_dem = costs.shape
    if supplies.size != n_sup or demands.size != n_dem:
        raise ValueError("marginal/cost shape mismatch")
    if abs(supplies.sum() - demands.sum()) > 1e-9:
        raise ValueError(
            f"marginal sums differ: {supplies.sum()} vs {demands.sum()}"
        )
    total = min(supplies.sum(), demands.sum())

    # node layout: 0 = super source, 1 = super sink, then supplies, then demands
    mcf = MinCostFlow(2 + n_sup + n_dem)
    sup_arcs = []
    for i in range(n_sup):
        sup_arcs.append(mcf.add_edge(0, 2 + i, supplies[i], 0.0))
    for j in range(n_dem):
        mcf.add_edge(2 + n_sup + j, 1, demands[j], 0.0)
    mid_arcs = np.empty((n_sup, n_dem), dtype=int)
    for i in range(n_sup):
        for j in range(n_dem):
            mid_arcs[i, j] = mcf.add_edge(2 + i, 2 + n_sup + j, np.inf, costs[i, j])
    cost = mcf.solve(0, 1, total)
    coupling = np.empty((n_sup, n_dem))
    for i in range(n_sup):
        for j in range(n_dem):
            coupling[i, j] = mcf.flow_on(int(mid_arcs[i, j]))
    return cost, coupling
