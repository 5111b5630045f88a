"""Electrical core: exact single-capacitor transients and threshold times.

The exact path reduces the resistive network seen by the touch capacitor to
its Thevenin equivalent and maps the capacitor voltage back to the receive
pin by superposition. The receive pin's pull resistor (r_recv, typically
100 Mohm) sits between the receive pin and ground; with small in-chain
resistances the closed forms collapse to the familiar approximations
  double-wire: v(t) ~ v_in (1 - exp(-t / (c R_till)))
  single-wire: v(t) ~ v_in (1 - (r_1/R_till) exp(-t / (c R_till)))
and their log-form threshold times.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "CircuitSpec",
    "DelayProfile",
    "ThresholdMarker",
    "SINGLE",
    "DOUBLE",
    "transient_exact",
    "threshold_time",
    "delay_profile",
    "delay_separations",
    "synthesize_session",
    "initial_voltage",
    "BASELINE",
]

SINGLE = "single-wire"
DOUBLE = "double-wire"
BASELINE = float("inf")  # no-touch sentinel in synthesized sessions


class ThresholdMarker(enum.Enum):
    """Non-numeric threshold outcomes (explicit variants, never NaN)."""

    UNREACHABLE = "unreachable"
    ALREADY_ABOVE = "already-above-threshold"


@dataclass(frozen=True)
class CircuitSpec:
    """Electrical model of one printed interface.

    `r[0]` is the external resistor in single-wire mode and the first in-chain
    resistor in double-wire mode; `r_recv` is the paper's r_{N+1}.
    """

    mode: str
    r: np.ndarray  # (N,) ohm
    v_in: float = 5.0
    v_thres: float = 2.5
    c: float = 100e-12
    r_recv: float = 100e6

    def __post_init__(self):
        if self.mode not in (SINGLE, DOUBLE):
            raise ValueError(f"unknown mode {self.mode!r}")
        r = np.asarray(self.r, dtype=np.float64)
        if r.ndim != 1 or len(r) < 1:
            raise ValueError("r must hold at least one resistance")
        if (r <= 0).any() or self.r_recv <= 0:
            raise ValueError("resistances must be positive")
        if not (0 < self.v_thres < self.v_in):
            raise ValueError("need 0 < v_thres < v_in")
        if self.c <= 0:
            raise ValueError("capacitance must be positive")
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return len(self.r)

    def r_till(self, p: int) -> float:
        """Resistance from the source to touchpoint p (1-based)."""
        return float(self.r[:p].sum())

    def r_after(self, p: int) -> float:
        return float(self.r[p:].sum() + self.r_recv)

    @property
    def r_all(self) -> float:
        return float(self.r.sum() + self.r_recv)

    def with_c(self, c: float) -> "CircuitSpec":
        return replace(self, c=c)


def _check_p(spec: CircuitSpec, p: int) -> None:
    if not (1 <= p <= spec.n):
        raise ValueError(f"touch index {p} out of range 1..{spec.n}")


def _single_parts(spec: CircuitSpec, p: int):
    """(R_chain from receive node to the cap, R_src, V_open, tau)."""
    r1 = float(spec.r[0])
    r_chain = spec.r_till(p) - r1
    r_src = r1 * spec.r_recv / (r1 + spec.r_recv)
    v_open = spec.v_in * spec.r_recv / (r1 + spec.r_recv)
    tau = spec.c * (r_chain + r_src)
    return r_chain, r_src, v_open, tau


def transient_exact(spec: CircuitSpec, p: int, t) -> np.ndarray | float:
    """Receive-pin voltage at time(s) t when touchpoint p is held."""
    _check_p(spec, p)
    t = np.asarray(t, dtype=np.float64)
    if (t < 0).any():
        raise ValueError("t must be >= 0")
    if spec.mode == DOUBLE:
        r_till = spec.r_till(p)
        r_after = spec.r_after(p)
        tau = spec.c * r_till * r_after / spec.r_all
        v = spec.v_in * (spec.r_recv / spec.r_all) * (1.0 - np.exp(-t / tau))
        return v if v.shape else float(v)
    r_chain, r_src, v_open, tau = _single_parts(spec, p)
    v_cap = v_open * (1.0 - np.exp(-t / tau))
    if r_chain == 0.0:
        out = v_cap
    else:
        s = 1.0 / spec.r[0] + 1.0 / spec.r_recv + 1.0 / r_chain
        out = (spec.v_in / spec.r[0] + v_cap / r_chain) / s
    return out if out.shape else float(out)


def initial_voltage(spec: CircuitSpec, p: int, method: str = "exact") -> float:
    """Receive-pin voltage at t = 0 (the single-wire hard-constraint quantity)."""
    _check_p(spec, p)
    if method == "approx":
        if spec.mode == DOUBLE:
            return 0.0
        return spec.v_in * (1.0 - spec.r[0] / spec.r_till(p))
    return float(transient_exact(spec, p, 0.0))


def steady_voltage(spec: CircuitSpec, p: int) -> float:
    if spec.mode == DOUBLE:
        return spec.v_in * spec.r_recv / spec.r_all
    return spec.v_in * spec.r_recv / (spec.r[0] + spec.r_recv)


def threshold_time(spec: CircuitSpec, p: int, method: str = "exact") -> float | ThresholdMarker:
    """Time for the receive pin to reach v_thres, or a marker variant.

    approx: Eq.-3 form (double) / Eq.-6 form (single). exact: bisection on the
    Thevenin transient to 1 ns.
    """
    _check_p(spec, p)
    if method == "approx":
        ratio = spec.v_in / (spec.v_in - spec.v_thres)
        r_till = spec.r_till(p)
        if spec.mode == DOUBLE:
            return spec.c * r_till * np.log(ratio)
        arg = (spec.r[0] / r_till) * ratio
        if arg <= 1.0:
            return ThresholdMarker.ALREADY_ABOVE
        return spec.c * r_till * np.log(arg)
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")

    if initial_voltage(spec, p) >= spec.v_thres:
        return ThresholdMarker.ALREADY_ABOVE
    if steady_voltage(spec, p) <= spec.v_thres:
        return ThresholdMarker.UNREACHABLE

    if spec.mode == DOUBLE:
        r_th = spec.r_till(p) * spec.r_after(p) / spec.r_all
    else:
        r_chain, r_src, _, _ = _single_parts(spec, p)
        r_th = r_chain + r_src
    lo, hi = 0.0, 50.0 * r_th * spec.c
    # v(t) is strictly increasing; expand the bracket defensively
    while transient_exact(spec, p, hi) < spec.v_thres:
        hi *= 2.0
        if hi > 1e6:
            return ThresholdMarker.UNREACHABLE
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if transient_exact(spec, p, mid) < spec.v_thres:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class DelayProfile:
    """Per-touchpoint threshold times; `baseline` is the no-touch sentinel."""

    t_thres: list  # floats and/or ThresholdMarker
    source: str  # "exact" | "approx"
    baseline: float = BASELINE

    @property
    def finite(self) -> np.ndarray:
        return np.array([t for t in self.t_thres if not isinstance(t, ThresholdMarker)])

    def as_array(self) -> np.ndarray:
        """Markers mapped to nan for numeric work that tolerates gaps."""
        return np.array(
            [np.nan if isinstance(t, ThresholdMarker) else float(t) for t in self.t_thres]
        )


def delay_profile(spec: CircuitSpec, method: str = "exact") -> DelayProfile:
    return DelayProfile([threshold_time(spec, p, method) for p in range(1, spec.n + 1)], method)


def delay_separations(spec: CircuitSpec, method: str = "exact") -> list[tuple[int, float]]:
    """|t_{p+1} - t_p| for consecutive touchpoints; unreachable points excluded."""
    prof = delay_profile(spec, method)
    out = []
    for p in range(1, spec.n):
        a, b = prof.t_thres[p - 1], prof.t_thres[p]
        if isinstance(a, ThresholdMarker) or isinstance(b, ThresholdMarker):
            continue
        out.append((p, abs(b - a)))
    return out


def synthesize_session(
    spec: CircuitSpec,
    script: list[tuple[int | None, float]],
    sample_rate: float = 64.0,
    noise: float = 0.0,
    seed: int = 0,
    method: str = "exact",
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample measured delays for a touch script.

    `script` is a list of (touch index or None, duration s). Untouched spans
    emit the baseline sentinel; touched spans emit t_thres_p plus Gaussian
    noise of the given RMS (seconds).
    """
    prof = delay_profile(spec, method)
    rng = np.random.default_rng(seed)
    chunks = []
    for idx, dur in script:
        ns = int(round(dur * sample_rate))
        if idx is None:
            chunks.append(np.full(ns, BASELINE))
            continue
        t = prof.t_thres[idx - 1]
        if isinstance(t, ThresholdMarker):
            chunks.append(np.full(ns, BASELINE))
            continue
        vals = np.full(ns, float(t))
        if noise > 0:
            vals = vals + rng.normal(0.0, noise, ns)
        chunks.append(vals)
    delays = np.concatenate(chunks) if chunks else np.empty(0)
    times = np.arange(len(delays)) / sample_rate
    return times, delays
