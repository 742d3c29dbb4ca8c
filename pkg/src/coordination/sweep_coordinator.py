import asyncio
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence

logger = logging.getLogger(__name__)


class TaskStatus(Enum):
    PENDING = "pending"
    IN_PROGRESS = "in_progress"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class SeedResult:
    seed: int
    status: TaskStatus
    result: Any
    execution_time: float
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == TaskStatus.COMPLETED

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "status": self.status.value,
            "execution_time": self.execution_time,
            "error": self.error,
        }


class SweepCoordinator:
    """
    Runs one job per seed on a thread pool and gathers the results.

    Jobs are independent; results always come back in the order of the
    seeds given, whatever order they finish in.
    """

    def __init__(self, max_workers: int = 4):
        self.max_workers = max(1, int(max_workers))
        self.status: Dict[int, TaskStatus] = {}
        self.results: Dict[int, SeedResult] = {}

    async def _run_one(
        self, loop: asyncio.AbstractEventLoop, pool: ThreadPoolExecutor, job: Callable[[int], Any], seed: int
    ) -> SeedResult:
        self.status[seed] = TaskStatus.IN_PROGRESS
        start_time = time.perf_counter()
        try:
            result = await loop.run_in_executor(pool, job, seed)
            seed_result = SeedResult(
                seed=seed,
                status=TaskStatus.COMPLETED,
                result=result,
                execution_time=time.perf_counter() - start_time,
            )
        except Exception as e:
            logger.error(f"Seed {seed} failed: {e}")
            seed_result = SeedResult(
                seed=seed,
                status=TaskStatus.FAILED,
                result=None,
                execution_time=time.perf_counter() - start_time,
                error=str(e),
            )
        self.status[seed] = seed_result.status
        self.results[seed] = seed_result
        return seed_result

    async def run_sweep_async(self, job: Callable[[int], Any], seeds: Sequence[int]) -> List[SeedResult]:
        seeds = list(seeds)
        if len(set(seeds)) != len(seeds):
            raise ValueError(f"duplicate seeds in sweep: {seeds}")
        for seed in seeds:
            self.status[seed] = TaskStatus.PENDING

        logger.info(f"Running sweep over {len(seeds)} seeds with {self.max_workers} workers")
        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            results = await asyncio.gather(*(self._run_one(loop, pool, job, seed) for seed in seeds))
        return list(results)

    def run_sweep(self, job: Callable[[int], Any], seeds: Sequence[int]) -> List[SeedResult]:
        return asyncio.run(self.run_sweep_async(job, seeds))

    def get_sweep_summary(self) -> Dict[str, Any]:
        total = len(self.results)
        completed = sum(1 for r in self.results.values() if r.ok)
        failed = total - completed

        return {
            "total_seeds": total,
            "completed_seeds": completed,
            "failed_seeds": failed,
            "success_rate": completed / total if total > 0 else 0,
            "avg_execution_time": self._calculate_avg_execution_time(),
        }

    def _calculate_avg_execution_time(self) -> float:
        completed_results = [r for r in self.results.values() if r.ok]
        if not completed_results:
            return 0.0

        total_time = sum(r.execution_time for r in completed_results)
        return total_time / len(completed_results)
