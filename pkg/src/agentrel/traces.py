"""Trace corpora: JSONL ingestion, fit/test splitting, empirical RDC.

One trace per line::

    {"trace_id": "t1", "task_id": "x", "outcome": "success",
     "steps": [{"tool_type": "plan", "retry": false, "error_code": null, "extra": {}}]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DuplicateTraceId, EmptyCorpus, ParseError

OUTCOMES = ("success", "failure", "censored")
_STEP_KEYS = {"tool_type", "retry", "error_code", "extra"}
_TRACE_KEYS = {"trace_id", "task_id", "steps", "outcome"}


@dataclass(frozen=True)
class Step:
    tool_type: str
    retry: bool = False
    error_code: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = {"tool_type": self.tool_type, "retry": self.retry}
        if self.error_code is not None:
            d["error_code"] = self.error_code
        if self.extra:
            d["extra"] = dict(self.extra)
        return d


@dataclass(frozen=True)
class Trace:
    trace_id: str
    steps: tuple
    outcome: str
    task_id: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.steps:
            raise ValueError(f"trace {self.trace_id!r} has no steps")
        if self.outcome not in OUTCOMES:
            raise ValueError(f"trace {self.trace_id!r}: unknown outcome {self.outcome!r}")
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def length(self):
        return len(self.steps)

    def to_dict(self):
        d = {"trace_id": self.trace_id}
        if self.task_id is not None:
            d["task_id"] = self.task_id
        d["steps"] = [s.to_dict() for s in self.steps]
        d["outcome"] = self.outcome
        d.update(self.extra)
        return d


@dataclass(frozen=True)
class TraceCorpus:
    traces: tuple = ()
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        seen = set()
        for t in self.traces:
            if t.trace_id in seen:
                raise DuplicateTraceId(t.trace_id)
            seen.add(t.trace_id)

    def __len__(self):
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def subset(self, indices, provenance=None):
        return TraceCorpus([self.traces[i] for i in indices], provenance or self.provenance)

    @property
    def lengths(self):
        return np.array([t.length for t in self.traces], dtype=np.int64)

    @property
    def outcomes(self):
        return [t.outcome for t in self.traces]


def _parse_step(obj, lineno):
    if not isinstance(obj, dict):
        raise ParseError(lineno, "step is not an object")
    tool = obj.get("tool_type")
    if not isinstance(tool, str) or not tool:
        raise ParseError(lineno, "step.tool_type must be a nonempty string")
    retry = obj.get("retry", False)
    if not isinstance(retry, bool):
        raise ParseError(lineno, "step.retry must be a boolean")
    err = obj.get("error_code")
    if err is not None and not isinstance(err, str):
        raise ParseError(lineno, "step.error_code must be a string or null")
    extra = obj.get("extra") or {}
    if not isinstance(extra, dict):
        raise ParseError(lineno, "step.extra must be an object")
    unknown = {k: v for k, v in obj.items() if k not in _STEP_KEYS}
    if unknown:
        extra = {**extra, **unknown}
    return Step(tool, retry, err, extra)


def parse_trace(line, lineno=0):
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(lineno, f"invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise ParseError(lineno, "record is not an object")
    tid = obj.get("trace_id")
    if not isinstance(tid, str) or not tid:
        raise ParseError(lineno, "trace_id must be a nonempty string")
    task = obj.get("task_id")
    if task is not None and not isinstance(task, str):
        raise ParseError(lineno, "task_id must be a string")
    outcome = obj.get("outcome")
    if outcome not in OUTCOMES:
        raise ParseError(lineno, f"outcome must be one of {OUTCOMES}, got {outcome!r}")
    steps = obj.get("steps")
    if not isinstance(steps, list) or not steps:
        raise ParseError(lineno, "steps must be a nonempty list")
    parsed = tuple(_parse_step(s, lineno) for s in steps)
    extra = {k: v for k, v in obj.items() if k not in _TRACE_KEYS}
    return Trace(tid, parsed, outcome, task, extra)


def load_corpus(path):
    """Read a JSONL trace file; blank lines are skipped."""
    traces = []
    seen = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            t = parse_trace(line, lineno)
            if t.trace_id in seen:
                raise DuplicateTraceId(f"{t.trace_id!r} on lines {seen[t.trace_id]} and {lineno}")
            seen[t.trace_id] = lineno
            traces.append(t)
    return TraceCorpus(traces, provenance=str(path))


def dump_corpus(corpus):
    return "".join(json.dumps(t.to_dict(), separators=(",", ":")) + "\n" for t in corpus)


def save_corpus(corpus, path):
    with open(path, "w") as fh:
        fh.write(dump_corpus(corpus))


def split_corpus(corpus, fit_fraction, seed):
    """Seeded random fit/test split; the fit half gets ``floor(n * fraction)`` traces."""
    if not 0.0 < fit_fraction < 1.0:
        raise ValueError("fit_fraction must lie in (0, 1)")
    n = len(corpus)
    perm = np.random.default_rng(seed).permutation(n)
    n_fit = int(np.floor(n * fit_fraction))
    return corpus.subset(perm[:n_fit]), corpus.subset(perm[n_fit:])


def empirical_rdc(corpus, d_max):
    """Fraction of all traces that succeeded within ``d`` steps, ``d = 0 .. d_max``.

    Censored and failed traces count in the denominator only.
    """
    if d_max < 1:
        raise ValueError("d_max must be at least 1")
    if len(corpus) == 0:
        raise EmptyCorpus("empirical RDC of an empty corpus")
    lengths = np.array([t.length for t in corpus if t.outcome == "success"], dtype=np.int64)
    counts = np.bincount(np.minimum(lengths, d_max + 1), minlength=d_max + 2)[: d_max + 1]
    return np.cumsum(counts) / len(corpus)
