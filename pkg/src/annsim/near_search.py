"""One-probe near-neighbor search.

For a distance budget lambda the querier reads a single main cell at the
scale just covering lambda. If any database point lies within lambda, that
scale's candidate set is nonempty (under the sketch sandwich) and whatever
point the cell holds is within gamma*lambda; if no point lies within
gamma*lambda the cell is empty and the answer is NO.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Params, Point
from .probe_engine import ProbeSession
from .search_common import main_address
from .tables import DataPoint


@dataclass(frozen=True)
class NearAnswer:
    """Either a database point or NO."""

    point: Point | None = None

    @property
    def is_no(self) -> bool:
        return self.point is None


NO = NearAnswer()


def near_scale(lam: float, params: Params) -> int:
    """Smallest scale i with alpha^i >= lambda, clamped to the scale grid."""
    lam = min(max(lam, 1.0), float(params.d))
    i = 0
    while params.ball_radius(i) < lam and i < params.scale_count:
        i += 1
    return i


def run_near(x: Point, lam: float, session: ProbeSession, params: Params) -> NearAnswer:
    """Answer a lambda-near-neighbor query with exactly one probe."""
    if session.rounds_used != 0:
        raise ValueError("run_near needs a fresh session")
    scale = near_scale(lam, params)
    (content,) = session.probe_round([main_address(session.coin, params, x, scale)])
    if isinstance(content, DataPoint):
        return NearAnswer(content.point)
    return NO
