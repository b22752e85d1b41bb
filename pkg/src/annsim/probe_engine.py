"""Round-limited probe engine.

A session enforces the batch discipline of the cost model: probes are
submitted one round at a time, contents come back only after the whole
batch is in, and nothing inside a batch can depend on another probe of the
same batch because the caller has no way to see those contents earlier.
Duplicate addresses inside one batch are coalesced before counting, since a
real table answers a cell once.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Database, Params
from .errors import RoundBudgetExceeded, SessionClosed
from .randomness import PublicCoin
from .tables import (
    EMPTY,
    CellAddress,
    CellContent,
    DataPoint,
    SmallInt,
    cell_content,
)


@dataclass(frozen=True)
class ProbeTranscript:
    """Immutable record of a finished session."""

    round_budget: int
    rounds: tuple[tuple[tuple[CellAddress, CellContent], ...], ...]

    @property
    def rounds_used(self) -> int:
        return len(self.rounds)

    @property
    def probes_total(self) -> int:
        return sum(len(batch) for batch in self.rounds)

    def serialize(self) -> str:
        lines = []
        for r, batch in enumerate(self.rounds, start=1):
            for addr, content in batch:
                lines.append(
                    f"round {r}: {_address_str(addr)} -> {_content_str(content)}"
                )
        return "\n".join(lines)


class ProbeSession:
    """One query's view of the tables, good for at most k rounds."""

    def __init__(
        self,
        db: Database,
        coin: PublicCoin,
        k: int,
        params: Params,
        s_int: int | None = None,
        s_real: float | None = None,
    ):
        if k < 1:
            raise ValueError("round budget must be >= 1")
        self.db = db
        self.coin = coin
        self.round_budget = k
        self.params = params
        self.s_int = s_int
        self.s_real = s_real
        self.rounds_used = 0
        self.probes_total = 0
        self._rounds: list[tuple[tuple[CellAddress, CellContent], ...]] = []
        self._closed = False

    def probe_round(self, addresses: list[CellAddress]) -> list[CellContent]:
        """Submit one parallel batch; contents come back in request order."""
        if self._closed:
            raise SessionClosed("session already closed")
        if not addresses:
            raise ValueError("a probe round must contain at least one address")
        if self.rounds_used >= self.round_budget:
            raise RoundBudgetExceeded(
                f"round budget {self.round_budget} exhausted"
            )
        distinct: dict[CellAddress, CellContent] = {}
        for addr in addresses:
            if addr not in distinct:
                distinct[addr] = cell_content(
                    self.db, self.coin, self.params, addr, self.s_int, self.s_real
                )
        self.rounds_used += 1
        self.probes_total += len(distinct)
        self._rounds.append(tuple(distinct.items()))
        return [distinct[addr] for addr in addresses]

    def close(self) -> ProbeTranscript:
        if self._closed:
            raise SessionClosed("session already closed")
        self._closed = True
        return ProbeTranscript(round_budget=self.round_budget, rounds=tuple(self._rounds))


def open_session(
    db: Database,
    coin: PublicCoin,
    k: int,
    params: Params,
    s_int: int | None = None,
    s_real: float | None = None,
) -> ProbeSession:
    """Fresh session with round budget k against (db, coin)."""
    return ProbeSession(db, coin, k, params, s_int=s_int, s_real=s_real)


def probe_round(session: ProbeSession, addresses: list[CellAddress]) -> list[CellContent]:
    return session.probe_round(addresses)


def close_session(session: ProbeSession) -> ProbeTranscript:
    return session.close()


def _address_str(addr: CellAddress) -> str:
    if addr.kind == "main":
        return f"main:{addr.scale}:{addr.sketch.to_hex()}"
    if addr.kind == "aux":
        lo, hi = addr.aux.group_bounds
        scales = ",".join(str(s) for s in addr.aux.scales)
        sketches = ",".join(sk.to_hex() for sk in addr.aux.sketches)
        return f"aux:{addr.scale}:{addr.sketch.to_hex()}.{lo}-{hi}.{scales}.{sketches}"
    return f"{addr.kind}:-:{addr.point.to_hex()}"


def _content_str(content: CellContent) -> str:
    if content is EMPTY:
        return "EMPTY"
    if isinstance(content, DataPoint):
        return f"point:{content.point.to_hex()}"
    if isinstance(content, SmallInt):
        return f"int:{content.value}"
    raise TypeError(f"not a cell content: {content!r}")
