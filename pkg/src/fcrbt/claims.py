"""Relative-behavior expectations between variants, evaluated against a
measured sweep. These are reported, never asserted: they describe scheduling
outcomes on particular hardware, not correctness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .bench import BenchResult

SOFT_CLAIM = "V6 >= V5 at 4+ threads"
LOCK_CLAIM = "V1..V4 <= CoarseLock"


@dataclass(frozen=True)
class ClaimCheck:
    claim: str
    threads: int
    upper: str  # variant expected to be at least as fast
    lower: str  # variant expected not to exceed it
    upper_rate: Optional[float]
    lower_rate: Optional[float]

    @property
    def agrees(self) -> Optional[bool]:
        if self.upper_rate is None or self.lower_rate is None:
            return None  # missing or failed cell: nothing to compare
        return self.upper_rate >= self.lower_rate


def evaluate_claims(results: Iterable[BenchResult]) -> List[ClaimCheck]:
    rates: Dict[Tuple[str, int], float] = {}
    threads_seen = set()
    for r in results:
        threads_seen.add(r.threads)
        if r.ok:
            rates[(r.variant, r.threads)] = r.ops_per_sec
    checks: List[ClaimCheck] = []
    for t in sorted(threads_seen):
        if t >= 4:
            checks.append(
                ClaimCheck(SOFT_CLAIM, t, "V6", "V5",
                           rates.get(("V6", t)), rates.get(("V5", t)))
            )
    for t in sorted(threads_seen):
        for v in ("V1", "V2", "V3", "V4"):
            checks.append(
                ClaimCheck(LOCK_CLAIM, t, "CoarseLock", v,
                           rates.get(("CoarseLock", t)), rates.get((v, t)))
            )
    return checks


def format_report(checks: List[ClaimCheck]) -> str:
    lines = ["relative-behavior report (informational, not asserted)"]
    agree = differ = missing = 0
    for c in checks:
        if c.agrees is None:
            verdict, missing = "no-data", missing + 1
        elif c.agrees:
            verdict, agree = "agree", agree + 1
        else:
            verdict, differ = "differ", differ + 1
        up = f"{c.upper_rate:,.0f}" if c.upper_rate is not None else "?"
        lo = f"{c.lower_rate:,.0f}" if c.lower_rate is not None else "?"
        lines.append(
            f"  [{verdict:7}] threads={c.threads:<2} "
            f"{c.upper}={up} ops/s vs {c.lower}={lo} ops/s  ({c.claim})"
        )
    lines.append(f"  {agree} agree, {differ} differ, {missing} no-data")
    return "\n".join(lines)
