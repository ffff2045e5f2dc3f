"""Throughput sweep: one fresh map per (variant, threads) cell, each worker
replaying its deterministic slice of the percentage mix, wall time measured
from the first op started to the last op finished."""

from __future__ import annotations

import os
import time
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, TextIO, Tuple

from .ops import OpKind
from .stress import DeadlockError, run_workers
from .variants import make_variant
from .workload import WorkloadSpec, generate_ops, split_ops, warmup_keys

CSV_HEADER = (
    "variant,threads,total_ops,wall_ns,ops_per_sec,"
    "gets,inserts,deletes,stop_worlds,compactions"
)


@dataclass
class BenchResult:
    variant: str
    threads: int
    total_ops: int
    wall_ns: int
    gets: int
    inserts: int
    deletes: int
    stop_worlds: int
    compactions: int
    ok: bool = True
    error: str = ""
    checksums: Tuple[int, ...] = ()  # per-thread result folds, not in the CSV

    @property
    def ops_per_sec(self) -> float:
        if self.wall_ns <= 0:
            return 0.0
        return self.total_ops * 1e9 / self.wall_ns

    def csv_row(self) -> str:
        cells = (
            self.variant,
            self.threads,
            self.total_ops,
            self.wall_ns,
            f"{self.ops_per_sec:.2f}",
            self.gets,
            self.inserts,
            self.deletes,
            self.stop_worlds,
            self.compactions,
        )
        return ",".join(str(c) for c in cells)


def _failed(spec: WorkloadSpec, variant: str, threads: int,
            exc: BaseException) -> BenchResult:
    return BenchResult(
        variant=variant,
        threads=threads,
        total_ops=spec.total_ops,
        wall_ns=0,
        gets=0,
        inserts=0,
        deletes=0,
        stop_worlds=0,
        compactions=0,
        ok=False,
        error=f"{type(exc).__name__}: {exc}",
    )


def fold_result(acc: int, result) -> int:
    """Order-sensitive fold over op results, for cross-variant comparison."""
    if result is None:
        code = 0xA5A5A5A5
    elif result is True:
        code = 1
    elif result is False:
        code = 2
    else:
        code = (int(result) << 2) | 3
    return ((acc * 0x100000001B3) ^ code) & 0xFFFFFFFFFFFFFFFF


def run_cell(
    spec: WorkloadSpec, variant: str, threads: int, fold_results: bool = False
) -> BenchResult:
    """One timed cell. ``fold_results`` adds a per-thread result checksum for
    equivalence checks; it stays off in sweeps to keep the timed loop bare."""
    counts = split_ops(spec.total_ops, threads)
    streams = [generate_ops(spec, i, counts[i]) for i in range(threads)]
    tally = {OpKind.GET: 0, OpKind.INSERT: 0, OpKind.DELETE: 0}
    for ops in streams:
        for kind, _, _ in ops:
            tally[kind] += 1

    # +1 slot so the warmup can run on the sweep thread itself
    m = make_variant(variant, spec.max_nodes, threads + 1)
    try:
        if spec.warmup:
            m.register_thread()
            for k, v in warmup_keys(spec):
                m.insert(k, v)

        starts = [0] * threads
        ends = [0] * threads
        folds = [0] * threads

        def worker(index: int) -> Callable[[], None]:
            ops = streams[index]

            def run():
                m.register_thread()
                starts[index] = time.perf_counter_ns()
                if fold_results:
                    acc = 0
                    for op in ops:
                        acc = fold_result(acc, m.apply(op))
                    folds[index] = acc
                else:
                    for op in ops:
                        m.apply(op)
                ends[index] = time.perf_counter_ns()

            return run

        errors = run_workers(
            [worker(i) for i in range(threads)], spec.watchdog_secs
        )
        if errors:
            raise RuntimeError(f"workers failed: {errors!r}")
        report = m.validate()
        if not report.ok:
            raise RuntimeError(f"post-run validation: {report.violations}")
    except DeadlockError:
        raise  # combiner may be wedged; joining it would hang the sweep
    except BaseException:
        m.shutdown()
        raise
    stats = m.stats
    result = BenchResult(
        variant=variant,
        threads=threads,
        total_ops=spec.total_ops,
        wall_ns=max(ends) - min(starts),
        gets=tally[OpKind.GET],
        inserts=tally[OpKind.INSERT],
        deletes=tally[OpKind.DELETE],
        stop_worlds=stats.stop_worlds,
        compactions=stats.compactions,
        checksums=tuple(folds) if fold_results else (),
    )
    m.shutdown()
    return result


def run_bench(
    spec: WorkloadSpec,
    progress: Optional[Callable[[BenchResult], None]] = None,
) -> List[BenchResult]:
    """Full sweep. A failing cell is recorded, not fatal: the row keeps the
    error text, the sweep moves on, and the caller decides the exit code."""
    cpus = os.cpu_count() or 1
    widest = max(spec.thread_counts)
    if widest > cpus:
        warnings.warn(
            f"sweep requests {widest} threads on {cpus} schedulable core(s); "
            "running anyway",
            RuntimeWarning,
            stacklevel=2,
        )
    results: List[BenchResult] = []
    for variant in spec.variants:
        for threads in spec.thread_counts:
            try:
                res = run_cell(spec, variant, threads)
            except Exception as exc:
                res = _failed(spec, variant, threads, exc)
            results.append(res)
            if progress is not None:
                progress(res)
    return results


def emit_csv(results: Iterable[BenchResult], out: TextIO) -> int:
    """Write measured rows; failed cells carry no numbers and are skipped."""
    out.write(CSV_HEADER + "\n")
    rows = 0
    for r in results:
        if r.ok:
            out.write(r.csv_row() + "\n")
            rows += 1
    return rows


def parse_csv(lines: Iterable[str]) -> List[BenchResult]:
    """Inverse of emit_csv; ops_per_sec is re-derived from wall_ns."""
    it = iter(lines)
    header = next(it, "").strip()
    if header != CSV_HEADER:
        raise ValueError(f"unrecognized header: {header!r}")
    results = []
    for line in it:
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 10:
            raise ValueError(f"expected 10 columns, got {len(parts)}: {line!r}")
        results.append(
            BenchResult(
                variant=parts[0],
                threads=int(parts[1]),
                total_ops=int(parts[2]),
                wall_ns=int(parts[3]),
                gets=int(parts[5]),
                inserts=int(parts[6]),
                deletes=int(parts[7]),
                stop_worlds=int(parts[8]),
                compactions=int(parts[9]),
            )
        )
    return results
