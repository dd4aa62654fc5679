"""Decision epochs and the age processes they sample.

A decision made at time tau acts on the freshest update already delivered,
so its age upon decision is tau minus that update's generation (arrival)
epoch.  Decisions falling before the first departure have no delivered
update to act on; they carry an undefined-age marker and are counted
separately rather than imputed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .distributions import SeededStream
from .errors import InsufficientDataError, ParameterError, TruncationError
from .queueing import UpdateTrace

UNDEFINED_INDEX = -1


class DecisionRecord(NamedTuple):
    """One decision: epoch, freshest delivered update, its generation epoch, age."""

    time: float
    freshest_index: int  # 0-based index into the trace; -1 when undefined
    generation_time: float  # NaN when undefined
    age: float  # NaN when undefined


@dataclass(frozen=True)
class DecisionSet:
    """Columnar sequence of decision records over one trace."""

    times: np.ndarray
    freshest_index: np.ndarray
    generation_times: np.ndarray
    ages: np.ndarray

    def __post_init__(self):
        if not (
            len(self.times)
            == len(self.freshest_index)
            == len(self.generation_times)
            == len(self.ages)
        ):
            raise ParameterError("decision columns must be equally long")

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, j: int) -> DecisionRecord:
        return DecisionRecord(
            float(self.times[j]),
            int(self.freshest_index[j]),
            float(self.generation_times[j]),
            float(self.ages[j]),
        )

    @property
    def defined(self) -> np.ndarray:
        return self.freshest_index >= 0

    @property
    def defined_ages(self) -> np.ndarray:
        return self.ages[self.defined]

    @property
    def n_undefined(self) -> int:
        return int((~self.defined).sum())


class AudSummary(NamedTuple):
    mean: float
    n_defined: int
    n_undefined: int


def decisions_at(trace: UpdateTrace, times) -> DecisionSet:
    """Evaluate decision records at explicit epochs (sorted, within the trace).

    Epochs beyond the last departure cannot certify the freshest update and
    raise TruncationError.  Epochs before the first departure yield records
    with the undefined-age marker.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if trace.n < 1:
        raise InsufficientDataError("empty trace")
    if len(times) and times.max() > trace.last_departure:
        raise TruncationError("decision epochs extend beyond the last departure")
    if len(times) and times.min() <= 0.0:
        raise ParameterError("decision epochs must be positive")
    freshest = np.searchsorted(trace.departure_times, times, side="right") - 1
    defined = freshest >= 0
    generation = np.full(len(times), np.nan)
    ages = np.full(len(times), np.nan)
    generation[defined] = trace.arrival_times[freshest[defined]]
    ages[defined] = times[defined] - generation[defined]
    freshest[~defined] = UNDEFINED_INDEX
    return DecisionSet(times, freshest, generation, ages)


def generate_decisions(
    trace: UpdateTrace,
    decision_rate: float,
    horizon: float,
    stream: SeededStream,
) -> DecisionSet:
    """Poisson decision epochs at ``decision_rate`` on (0, horizon].

    The horizon must not exceed the last departure epoch.  Epoch generation
    consumes ``stream`` sequentially, so the result is deterministic in
    (trace, decision_rate, horizon, stream).
    """
    if trace.n < 1:
        raise InsufficientDataError("empty trace")
    if not (math.isfinite(decision_rate) and decision_rate > 0.0):
        raise ParameterError(f"decision_rate must be positive, got {decision_rate!r}")
    if not (math.isfinite(horizon) and horizon > 0.0):
        raise ParameterError(f"horizon must be positive, got {horizon!r}")
    if horizon > trace.last_departure:
        raise TruncationError(
            f"horizon {horizon:.6g} exceeds last departure {trace.last_departure:.6g}"
        )
    expected = decision_rate * horizon
    chunk = int(expected + 10.0 * math.sqrt(expected) + 16.0)
    gaps = -np.log(stream.uniform_open(chunk)) / decision_rate
    epochs = np.cumsum(gaps)
    while epochs[-1] <= horizon:
        gaps = -np.log(stream.uniform_open(chunk)) / decision_rate
        epochs = np.concatenate([epochs, epochs[-1] + np.cumsum(gaps)])
    epochs = epochs[epochs <= horizon]
    return decisions_at(trace, epochs)


def periodic_decisions(trace: UpdateTrace, decision_rate: float, horizon: float) -> DecisionSet:
    """Deterministic decisions every 1/decision_rate time units on (0, horizon]."""
    if not (math.isfinite(decision_rate) and decision_rate > 0.0):
        raise ParameterError(f"decision_rate must be positive, got {decision_rate!r}")
    count = int(math.floor(horizon * decision_rate))
    epochs = np.arange(1, count + 1, dtype=float) / decision_rate
    return decisions_at(trace, epochs)


def average_aud(decisions: DecisionSet) -> AudSummary:
    """Arithmetic mean age over defined decisions, plus the undefined count."""
    ages = decisions.defined_ages
    if len(ages) == 0:
        raise InsufficientDataError("no decision with a defined age")
    return AudSummary(float(ages.mean()), len(ages), decisions.n_undefined)


@dataclass(frozen=True)
class AoiPath:
    """Age-of-information sawtooth: slope-1 growth, resetting at each departure.

    Stored compactly as the drop epochs (departures) and the post-drop ages
    (system times); the path is defined on [first drop, last drop].
    """

    drop_epochs: np.ndarray
    drop_values: np.ndarray

    @property
    def support(self) -> tuple[float, float]:
        return float(self.drop_epochs[0]), float(self.drop_epochs[-1])

    def evaluate(self, t):
        """Age at time(s) t within the support; post-drop value at drop epochs."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.support
        if (t < lo).any() or (t > hi).any():
            raise ParameterError(f"evaluation epoch outside path support [{lo:.6g}, {hi:.6g}]")
        idx = np.searchsorted(self.drop_epochs, t, side="right") - 1
        return self.drop_values[idx] + (t - self.drop_epochs[idx])

    def vertices(self) -> np.ndarray:
        """Explicit (epoch, age) polyline, two vertices per interior drop."""
        e, v = self.drop_epochs, self.drop_values
        pre_ages = v[:-1] + np.diff(e)
        out = np.empty((2 * len(e) - 1, 2))
        out[0] = (e[0], v[0])
        out[1::2, 0] = e[1:]
        out[1::2, 1] = pre_ages
        out[2::2, 0] = e[1:]
        out[2::2, 1] = v[1:]
        return out


def aoi_path(trace: UpdateTrace) -> AoiPath:
    """Sawtooth age process of the trace: drops to the system time at each departure."""
    if trace.n < 1:
        raise InsufficientDataError("empty trace")
    return AoiPath(trace.departure_times, trace.system_times)


def time_average_aoi(path: AoiPath, start: float, end: float) -> float:
    """Exact time average of the sawtooth over [start, end] within its support."""
    lo, hi = path.support
    if not start < end:
        raise ParameterError(f"need start < end, got [{start}, {end}]")
    if start < lo or end > hi:
        raise ParameterError(f"window [{start}, {end}] outside path support [{lo:.6g}, {hi:.6g}]")
    e, v = path.drop_epochs, path.drop_values
    seg_lo = np.maximum(e[:-1], start)
    seg_hi = np.minimum(e[1:], end)
    dur = np.clip(seg_hi - seg_lo, 0.0, None)
    age_at_lo = v[:-1] + (seg_lo - e[:-1])
    integral = float(np.sum(dur * age_at_lo + 0.5 * dur * dur))
    return integral / (end - start)


def write_decisions_csv(decisions: DecisionSet, path: str) -> None:
    """Export decisions as CSV; undefined records leave ``aud`` empty.

    ``freshest_index`` is written 1-based to match the trace CSV's ``k``
    column; undefined records carry 0.
    """
    times = decisions.times.tolist()
    fresh = decisions.freshest_index.tolist()
    ages = decisions.ages.tolist()
    with open(path, "w", newline="") as fh:
        fh.write("j,tau,freshest_index,aud\n")
        fh.writelines(
            f"{j + 1},{times[j]!r},{fresh[j] + 1},{'' if fresh[j] < 0 else repr(ages[j])}\n"
            for j in range(len(times))
        )
