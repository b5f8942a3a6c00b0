"""Evaluation back-ends sharing one interface: ``submit``, ``wait``, ``now``, ``pending``.

``SimulatedExecutor`` runs a discrete-event clock: the objective is evaluated
at submission and its completion is scheduled after the sampled duration, so
schedules are reproduced exactly and instantly. ``ThreadedExecutor`` runs
evaluations in worker threads against the real clock.
"""
from __future__ import annotations

import heapq
import math
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor
from concurrent.futures import wait as wait_futures
from typing import NamedTuple


class Completion(NamedTuple):
    id: int
    time: float
    value: float | None
    ok: bool
    error: str | None = None


def _call(fn, x):
    try:
        value = float(fn(x))
    except Exception as exc:  # any evaluator failure is an unknown-constraint violation
        return None, False, f"{type(exc).__name__}: {exc}"
    if not math.isfinite(value):
        return None, False, "non-finite output"
    return value, True, None


class SimulatedExecutor:
    def __init__(self, cutoff=None, start_time=0.0):
        self.cutoff = cutoff
        self.clock = float(start_time)
        self._heap = []

    def now(self):
        return self.clock

    def pending(self):
        return len(self._heap)

    def submit(self, rid, fn, x, duration):
        value, ok, error = _call(fn, x)
        if self.cutoff is not None and duration > self.cutoff:
            duration, value, ok, error = self.cutoff, None, False, "timeout"
        end = self.clock + float(duration)
        heapq.heappush(self._heap, (end, rid, Completion(rid, end, value, ok, error)))

    def wait(self):
        """Advance to the next completion time; return every completion due then."""
        if not self._heap:
            return []
        t = self._heap[0][0]
        done = []
        while self._heap and self._heap[0][0] == t:
            done.append(heapq.heappop(self._heap)[2])
        self.clock = t
        return done

    def close(self):
        pass


class ThreadedExecutor:
    """Real-time pool; ``sleep`` appends the sampled duration after each evaluation.

    A job running past ``cutoff`` seconds is reported as a timeout; its thread is
    left to finish in the background and its result discarded.
    """

    def __init__(self, max_workers, cutoff=None, sleep=True, start_time=0.0):
        # spare threads so abandoned (timed-out) jobs do not starve new ones
        self._pool = ThreadPoolExecutor(max_workers=max_workers * 2)
        self.cutoff = cutoff
        self.sleep = sleep
        self._t0 = time.monotonic() - float(start_time)
        self._jobs = {}

    def now(self):
        return time.monotonic() - self._t0

    def pending(self):
        return len(self._jobs)

    def _work(self, fn, x, duration):
        result = _call(fn, x)
        if self.sleep:
            time.sleep(duration)
        return result

    def submit(self, rid, fn, x, duration):
        fut = self._pool.submit(self._work, fn, x, duration)
        self._jobs[fut] = (rid, self.now())

    def wait(self):
        if not self._jobs:
            return []
        timeout = None
        if self.cutoff is not None:
            first_deadline = min(t0 for _, t0 in self._jobs.values()) + self.cutoff
            timeout = max(first_deadline - self.now(), 0.0)
        finished, _ = wait_futures(list(self._jobs), timeout=timeout, return_when=FIRST_COMPLETED)
        now = self.now()
        done = []
        for fut in finished:
            rid, _ = self._jobs.pop(fut)
            value, ok, error = fut.result()
            done.append(Completion(rid, now, value, ok, error))
        if self.cutoff is not None:
            for fut, (rid, t0) in list(self._jobs.items()):
                if now - t0 >= self.cutoff:
                    del self._jobs[fut]
                    fut.cancel()
                    done.append(Completion(rid, now, None, False, "timeout"))
        done.sort(key=lambda c: (c.time, c.id))
        return done

    def close(self):
        self._pool.shutdown(wait=False, cancel_futures=True)
