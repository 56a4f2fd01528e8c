"""Graph topology helpers for fingerprinting.

Cycle membership is defined through bridges: in a simple graph an edge lies
on some cycle exactly when removing it does not disconnect its component,
i.e. when it is not a bridge. An atom is "in a cycle" when any incident
edge is a cycle edge. Bridges are found with an iterative low-link scan so
deep chain molecules cannot hit the recursion limit.
"""

from __future__ import annotations

from molsieve.chem.smiles import MolGraph


def cycle_atoms(graph: MolGraph) -> tuple[bool, ...]:
    """Per-atom flag: incident to at least one edge that lies on a cycle."""
    n = len(graph)
    # adjacency as (neighbor, edge id) pairs; parallel edges cannot occur
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for eid, bond in enumerate(graph.bonds):
        adj[bond.a].append((bond.b, eid))
        adj[bond.b].append((bond.a, eid))

    disc = [-1] * n
    low = [0] * n
    is_bridge = [False] * len(graph.bonds)
    timer = 0

    for root in range(n):
        if disc[root] != -1:
            continue
        # stack entries: (node, incoming edge id, iterator position)
        stack = [(root, -1, 0)]
        disc[root] = low[root] = timer
        timer += 1
        while stack:
            node, in_edge, it = stack[-1]
            if it < len(adj[node]):
                stack[-1] = (node, in_edge, it + 1)
                nxt, eid = adj[node][it]
                if eid == in_edge:
                    continue
                if disc[nxt] == -1:
                    disc[nxt] = low[nxt] = timer
                    timer += 1
                    stack.append((nxt, eid, 0))
                else:
                    low[node] = min(low[node], disc[nxt])
            else:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[node])
                    if low[node] > disc[parent]:
                        is_bridge[in_edge] = True

    in_cycle = [False] * n
    for eid, bond in enumerate(graph.bonds):
        if not is_bridge[eid]:
            in_cycle[bond.a] = True
            in_cycle[bond.b] = True
    return tuple(in_cycle)


def pair_distances(graph: MolGraph, max_distance: int) -> list[tuple[int, int, int]]:
    """All unordered atom pairs (i, j, d) with shortest-path d <= max_distance.

    Breadth-first search from every atom, truncated at `max_distance`;
    each pair is reported once with i < j and d >= 1.
    """
    n = len(graph)
    out: list[tuple[int, int, int]] = []
    for start in range(n):
        dist = {start: 0}
        frontier = [start]
        d = 0
        while frontier and d < max_distance:
            d += 1
            nxt: list[int] = []
            for node in frontier:
                for nbr, _ in graph.adjacency[node]:
                    if nbr not in dist:
                        dist[nbr] = d
                        nxt.append(nbr)
                        if nbr > start:
                            out.append((start, nbr, d))
            frontier = nxt
    return out
