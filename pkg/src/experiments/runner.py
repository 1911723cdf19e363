"""Worker pool over independent (cell, replication) tasks."""

import logging
import threading
from collections.abc import Callable, Hashable
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Any

logger = logging.getLogger(__name__)

# Set by the CLI's signal handler; no new tasks start once it is set.
shutdown = threading.Event()


@dataclass
class RunOutcome:
    """Task results keyed as submitted; None marks a failed or skipped task."""

    results: dict[Hashable, Any] = field(default_factory=dict)
    failed: list[Hashable] = field(default_factory=list)
    skipped: list[Hashable] = field(default_factory=list)

    @property
    def interrupted(self) -> bool:
        return bool(self.skipped)

    @property
    def ok(self) -> bool:
        return not self.failed and not self.skipped

    def successful(self) -> dict[Hashable, Any]:
        return {k: v for k, v in self.results.items() if v is not None}


class TaskRunner:
    """Run callables concurrently, isolating failures per task."""

    def __init__(self, threads: int = 1):
        """Initialize task runner.

        Args:
            threads: Maximum number of tasks in flight
        """
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        self.threads = threads

    def _run_one(self, key: Hashable, task: Callable[[], Any]) -> Any:
        try:
            return task()
        except Exception as e:
            logger.error(f"Task {key} failed: {e}", exc_info=True)
            return None

    def run(self, tasks: dict[Hashable, Callable[[], Any]]) -> RunOutcome:
        """Run every task; results come back in submission order.

        Args:
            tasks: Mapping from task key to a zero-argument callable

        Returns:
            RunOutcome with one entry per key (None for failures and skipped tasks)
        """
        outcome = RunOutcome(results=dict.fromkeys(tasks))
        pending = list(tasks.items())
        in_flight: dict[Future, Hashable] = {}

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            while pending or in_flight:
                while pending and len(in_flight) < self.threads and not shutdown.is_set():
                    key, task = pending.pop(0)
                    in_flight[pool.submit(self._run_one, key, task)] = key
                if shutdown.is_set() and pending:
                    outcome.skipped.extend(key for key, _ in pending)
                    logger.warning(f"Shutdown requested: skipping {len(pending)} queued tasks")
                    pending = []
                if not in_flight:
                    break
                done, _ = wait(in_flight, return_when=FIRST_COMPLETED)
                for future in done:
                    key = in_flight.pop(future)
                    result = future.result()
                    outcome.results[key] = result
                    if result is None:
                        outcome.failed.append(key)

        logger.info(
            f"Ran {len(tasks) - len(outcome.skipped)} of {len(tasks)} tasks, "
            f"{len(outcome.failed)} failed"
        )
        return outcome
