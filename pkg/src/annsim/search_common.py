"""Pieces shared by the multi-round search algorithms.

Both searches walk the same scale grid, carry the same two degenerate
membership probes in their first round, and finish with the same completion
round over the remaining window of scales.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import Params, Point
from .errors import AssumptionViolated
from .probe_engine import ProbeSession
from .sketch import SketchVector, derive_matrix, sketch_apply
from .tables import (
    EMPTY,
    KIND_MEMBER_EXACT,
    KIND_MEMBER_NEAR1,
    CellAddress,
    DataPoint,
)


def scale_grid(l: int, u: int, tau: int) -> list[int]:
    """Grid markers rho(0..tau) = floor(l + r*(u-l)/tau), exact in integers."""
    return [l + (r * (u - l)) // tau for r in range(tau + 1)]


def query_sketch(coin, params: Params, x: Point, scale: int) -> SketchVector:
    matrix = derive_matrix(coin, "main", scale, params.r_main, params.d, params.alpha)
    return sketch_apply(matrix, x)


def main_address(coin, params: Params, x: Point, scale: int) -> CellAddress:
    return CellAddress.main(scale, query_sketch(coin, params, x, scale))


def membership_addresses(x: Point) -> list[CellAddress]:
    return [
        CellAddress.member(KIND_MEMBER_EXACT, x),
        CellAddress.member(KIND_MEMBER_NEAR1, x),
    ]


def membership_hit(contents: list) -> Point | None:
    """Resolve the two leading membership contents; exact match wins."""
    exact, near1 = contents[0], contents[1]
    if isinstance(exact, DataPoint):
        return exact.point
    if isinstance(near1, DataPoint):
        return near1.point
    return None


@dataclass
class SearchTrace:
    """Optional instrumentation for invariant checks in tests."""

    windows: list[tuple[int, int]] = field(default_factory=list)
    final_window: tuple[int, int] | None = None
    phases: list[dict] = field(default_factory=list)
    early_exit: str | None = None
    result_scale: int | None = None


def completion_round(
    session: ProbeSession,
    x: Point,
    l: int,
    u: int,
    params: Params,
    pending: list[CellAddress],
    trace: SearchTrace | None,
) -> Point:
    """Probe every scale in (l, u] in parallel; return the smallest hit.

    An all-EMPTY window means the sketch sandwich failed for this coin, so
    the condition is surfaced as AssumptionViolated rather than guessed
    around.
    """
    scales = list(range(l + 1, u + 1))
    batch = pending + [main_address(session.coin, params, x, i) for i in scales]
    contents = session.probe_round(batch)
    if pending:
        hit = membership_hit(contents)
        if hit is not None:
            if trace is not None:
                trace.early_exit = "exact" if contents[0] is not EMPTY else "near1"
            return hit
        contents = contents[len(pending):]
    for scale, content in zip(scales, contents):
        if isinstance(content, DataPoint):
            if trace is not None:
                trace.result_scale = scale
            return content.point
    raise AssumptionViolated(
        f"no candidate in completion window ({l}, {u}]: sketch sandwich failed"
    )
