"""
ensquant.scheduler.job_queue
----------------------------
Bounded pool of worker threads over a priority queue. Jobs are keyed by the
caller; a failed job stores its exception as the result so one bad
(repetition, scheme) never stops the run.

Priority levels
---------------
"high"   → 0   (runs first, e.g. the pooled variant)
"normal" → 1   (default)
"low"    → 2   (runs last)
"""

from __future__ import annotations

import itertools
import threading
import time
import uuid
from dataclasses import dataclass, field
from queue import Empty, PriorityQueue
from typing import Any, Callable, Dict, Hashable, Tuple, Union

from ..monitoring import logger as job_log

_PRIO_MAP = {"high": 0, "normal": 1, "low": 2}


def priority_value(priority: Union[str, int]) -> int:
    if isinstance(priority, int):
        return priority
    try:
        return _PRIO_MAP[priority.lower()]
    except KeyError:
        raise ValueError(f"Priority '{priority}' is not one of {', '.join(_PRIO_MAP)}") from None


@dataclass(order=True)
class _PQItem:
    priority: int
    seq: int  # FIFO among equal priorities

    job_id: str = field(compare=False)
    key: Hashable = field(compare=False)
    fn: Callable[..., Any] = field(compare=False)
    args: Tuple[Any, ...] = field(compare=False, default=())
    context: Dict[str, Any] = field(compare=False, default_factory=dict)


class JobQueue:
    """Submit callables, then `results()` blocks until every job has finished.

    Usable as a context manager; leaving the block stops the workers.
    """

    def __init__(self, workers: int = 4, name: str = "ensquant"):
        if workers < 1:
            raise ValueError(f"need at least one worker, got {workers}")
        self._pq: PriorityQueue[_PQItem] = PriorityQueue()
        self._results: Dict[Hashable, Any] = {}
        self._lock = threading.Lock()
        self._seq = itertools.count()
        self._stop = threading.Event()
        self._threads = [
            threading.Thread(target=self._worker, daemon=True, name=f"{name}-worker-{i}") for i in range(workers)
        ]
        for t in self._threads:
            t.start()

    def _worker(self) -> None:
        while not self._stop.is_set():
            try:
                item: _PQItem = self._pq.get(timeout=0.2)
            except Empty:
                continue
            t0 = time.perf_counter()
            try:
                result: Any = item.fn(*item.args)
                job_log.log_complete(item.job_id, int(1000 * (time.perf_counter() - t0)), **item.context)
            except Exception as e:
                job_log.log_error(
                    item.job_id, f"{type(e).__name__}: {e}", int(1000 * (time.perf_counter() - t0)), **item.context
                )
                result = e
            with self._lock:
                self._results[item.key] = result
            self._pq.task_done()

    def submit(
        self,
        key: Hashable,
        fn: Callable[..., Any],
        *args: Any,
        priority: Union[str, int] = "normal",
        **context: Any,
    ) -> str:
        job_id = str(uuid.uuid4())
        item = _PQItem(
            priority=priority_value(priority),
            seq=next(self._seq),
            job_id=job_id,
            key=key,
            fn=fn,
            args=args,
            context=context,
        )
        job_log.log_submit(job_id, **context)
        self._pq.put(item)
        return job_id

    def results(self) -> Dict[Hashable, Any]:
        """Wait for all submitted jobs; results (or exceptions) keyed and sorted by job key."""
        self._pq.join()
        with self._lock:
            done, self._results = self._results, {}
        return {k: done[k] for k in sorted(done, key=repr)}

    def shutdown(self) -> None:
        self._stop.set()
        for t in self._threads:
            t.join(timeout=1.0)

    def __enter__(self) -> "JobQueue":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()
