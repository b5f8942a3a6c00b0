"""Append-only JSON-lines run log."""
from __future__ import annotations

import enum
import json
from pathlib import Path

import numpy as np


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def encode(event):
    return json.dumps(event, default=_default, sort_keys=True, allow_nan=True)


class RunLog:
    """Events kept in memory and, when ``path`` is given, mirrored to disk line by line."""

    def __init__(self, path=None, events=None, append=False):
        self.path = Path(path) if path is not None else None
        self.events = list(events or [])
        self._fh = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a" if append else "w", encoding="utf-8")

    def append(self, event):
        line = encode(event)
        # round-trip so in-memory events match what a reader of the file sees
        self.events.append(json.loads(line))
        if self._fh is not None:
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def of(self, kind):
        return [e for e in self.events if e["event"] == kind]

    def dumps(self):
        return "".join(encode(e) + "\n" for e in self.events)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            events = [json.loads(line) for line in fh if line.strip()]
        return cls(events=events)


def best_trace(events):
    """``(time, completed_count, best)`` after each completion; best is over feasible ones."""
    trace = []
    best = None
    count = 0
    for e in events:
        if e["event"] != "complete":
            continue
        count += 1
        if e["status"] == "feasible" and (best is None or e["y"] > best):
            best = e["y"]
        trace.append((e["t"], count, best))
    return trace
