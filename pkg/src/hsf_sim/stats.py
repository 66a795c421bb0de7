"""Monte Carlo estimates of acknowledgements, completion time and deadlock rate."""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
from dataclasses import asdict, dataclass, fields
from multiprocessing import Pool
from typing import Iterable, List, Sequence, Tuple

from scipy.stats import beta

from .config import ExperimentConfig
from .engine import RunResult, run

Z95 = 1.96
THREADS_ENV = "HSF_SIM_THREADS"


def estimate(samples: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and normal-approximation 95% half-width."""
    k = len(samples)
    if k < 2:
        raise ValueError("need at least 2 samples")
    mean = math.fsum(samples) / k
    if all(s == samples[0] for s in samples):
        return mean, 0.0
    return mean, Z95 * statistics.stdev(samples) / math.sqrt(k)


def clopper_pearson(successes: int, trials: int, alpha: float = 0.05) -> Tuple[float, float]:
    """Exact binomial interval for a proportion."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials and trials >= 1")
    lo = 0.0 if successes == 0 else float(beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


@dataclass(frozen=True)
class EstimateRow:
    ordering: str
    variant: str
    runs: int
    mean_acks: float
    hw_acks: float
    mean_time: float
    hw_time: float
    deadlock_fraction: float

    @property
    def deadlocks(self) -> bool:
        return self.deadlock_fraction > 0

    def deadlock_interval(self) -> Tuple[float, float]:
        return clopper_pearson(round(self.deadlock_fraction * self.runs), self.runs)


COLUMNS = [f.name for f in fields(EstimateRow)]
_FLOATS = {"mean_acks", "hw_acks", "mean_time", "hw_time", "deadlock_fraction"}


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _one(args) -> RunResult:
    cfg, seed = args
    return run(cfg, seed, trace=False)


def collect(cfg: ExperimentConfig, runs: int, base_seed: int, threads: int | None = None) -> List[RunResult]:
    """``runs`` independent runs seeded ``base_seed + i``, in index order."""
    jobs = [(cfg, base_seed + i) for i in range(runs)]
    threads = min(threads or _threads(), runs)
    if threads <= 1:
        return [_one(j) for j in jobs]
    with Pool(threads) as pool:
        return pool.map(_one, jobs, chunksize=max(1, runs // (4 * threads)))


def summarize(cfg: ExperimentConfig, results: Sequence[RunResult]) -> EstimateRow:
    acks = [float(r.acks) for r in results]
    times = [float(r.time) for r in results]
    ma, ha = estimate(acks)
    mt, ht = estimate(times)
    dead = sum(r.deadlocked for r in results)
    # rounded to the CSV precision so rows survive a round trip unchanged
    return EstimateRow(
        cfg.ordering.value,
        cfg.variant.name,
        len(results),
        round(ma, 4),
        round(ha, 4),
        round(mt, 4),
        round(ht, 4),
        round(dead / len(results), 4),
    )


def run_experiment(cfg: ExperimentConfig, runs: int | None = None, base_seed: int | None = None) -> EstimateRow:
    runs = cfg.runs if runs is None else runs
    if runs < 2:
        raise ValueError("runs must be at least 2")
    base_seed = cfg.seed if base_seed is None else base_seed
    return summarize(cfg, collect(cfg, runs, base_seed))


def to_csv(rows: Iterable[EstimateRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([f"{v:.4f}" if k in _FLOATS else v for k, v in asdict(r).items()])
    return buf.getvalue()


def from_csv(text: str) -> List[EstimateRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for rec in reader:
        out.append(
            EstimateRow(
                rec["ordering"],
                rec["variant"],
                int(rec["runs"]),
                *(float(rec[k]) for k in COLUMNS[3:]),
            )
        )
    return out
