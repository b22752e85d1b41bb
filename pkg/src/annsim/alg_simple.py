"""The simple k-round search over distance scales.

The search keeps a window (l, u] of scale indices with the invariant that
the candidate set at scale l is empty while the one at scale u is not. Each
of at most k-1 shrinking rounds probes tau-1 evenly spaced scales inside the
window and narrows it by roughly a factor of tau; one completion round then
probes every scale left in the window in parallel and returns the content of
the smallest non-empty one. The branching factor tau is the smallest integer
whose k-round reach covers the whole scale grid, which caps the total probe
count at (tau-1)(k-1) + tau, plus the two first-round membership probes that
dispose of the exact-match and distance-1 degenerate cases.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Params, Point, scale_count
from .probe_engine import ProbeSession
from .search_common import (
    SearchTrace,
    completion_round,
    main_address,
    membership_addresses,
    membership_hit,
    scale_grid,
)
from .tables import EMPTY


@dataclass
class SearchState:
    """Window of candidate scales plus the branching factor."""

    l: int
    u: int
    tau: int


def tau_simple(k: int, d: int, alpha: float) -> int:
    """Smallest integer tau >= 2 with tau * (tau/2)^(k-1) >= ceil(log_alpha d).

    The inequality is evaluated exactly as tau^k >= I * 2^(k-1) in integer
    arithmetic.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    target = scale_count(d, alpha) << (k - 1)
    tau = 2
    while tau**k < target:
        tau += 1
    return tau


def probe_bound_simple(params: Params) -> int:
    """Worst-case total probes: (tau-1)(k-1) + tau + 2 membership probes."""
    tau = tau_simple(params.k, params.d, params.alpha)
    return (tau - 1) * (params.k - 1) + tau + 2


def run_simple(
    x: Point,
    session: ProbeSession,
    params: Params,
    trace: SearchTrace | None = None,
) -> Point:
    """Run the k-round search for one query on a fresh session."""
    if session.rounds_used != 0:
        raise ValueError("run_simple needs a fresh session")
    if x.dim != params.d:
        raise ValueError(f"query dim {x.dim} does not match params d {params.d}")
    k = params.k
    state = SearchState(l=0, u=params.scale_count, tau=tau_simple(k, params.d, params.alpha))
    pending = membership_addresses(x)
    shrinks = 0

    # Shrinking rounds; capped at k-1 so the completion round always fits
    # the budget even when the tau inequality is tight.
    while state.u - state.l >= state.tau and shrinks < k - 1:
        if trace is not None:
            trace.windows.append((state.l, state.u))
        grid = scale_grid(state.l, state.u, state.tau)
        probe_scales = grid[1:state.tau]
        batch = pending + [main_address(session.coin, params, x, i) for i in probe_scales]
        contents = session.probe_round(batch)
        if pending:
            hit = membership_hit(contents)
            if hit is not None:
                if trace is not None:
                    trace.early_exit = "exact" if contents[0] is not EMPTY else "near1"
                return hit
            contents = contents[len(pending):]
            pending = []
        r_star = state.tau
        for r, content in enumerate(contents, start=1):
            if content is not EMPTY:
                r_star = r
                break
        new_l, new_u = grid[r_star - 1], grid[r_star]
        assert new_u - new_l <= (state.u - state.l) / state.tau + 1 + 1e-9, (
            "window shrank too little"
        )
        state.l, state.u = new_l, new_u
        shrinks += 1

    if trace is not None:
        trace.final_window = (state.l, state.u)
    return completion_round(session, x, state.l, state.u, params, pending, trace)
