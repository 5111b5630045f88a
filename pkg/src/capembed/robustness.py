"""Capacitance-shift robustness: Monte Carlo, analytic windows, SNR, classifier.

The analytic windows bound the capacitance error epsilon = c_touch - c_cal
for which a touch is still recognized against its two neighbors. Under the
approximate models every threshold time is linear in c, so the windows are
ratios of R_till * log-term products and scale with c.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import DOUBLE, SINGLE, CircuitSpec, DelayProfile, delay_profile

__all__ = [
    "PerturbationSpec",
    "LadderSpec",
    "SnrSample",
    "perturbation_accuracy",
    "epsilon_range",
    "compute_snr",
    "classify_session",
    "robust_single_ladder",
    "double_wire_max_fill",
]


@dataclass
class PerturbationSpec:
    mu_c: float = 100e-12
    sigma_list: tuple = tuple(s * 1e-12 for s in range(6))
    samples: int = 100
    seed: int = 0

    def __post_init__(self):
        if any(s < 0 for s in self.sigma_list):
            raise ValueError("sigma must be >= 0")
        if self.samples < 1:
            raise ValueError("need at least one sample")


@dataclass
class LadderSpec:
    """Geometric resistance ladder (sec 8.5.3 designs).

    ascending: double-wire, r_p = a * r_{p-1}. descending: single-wire,
    r_{p-1} = a * r_p over the in-model resistors, with r1 set by `r1_rule`
    (either an explicit ohm value or a multiple of the in-model sum).
    """

    base_r: float
    a: float
    n: int
    direction: str  # "ascending" | "descending"
    r1_rule: float | str = 1.01  # multiple of sum, or explicit with "ohm:<value>"

    def resistances(self) -> np.ndarray:
        if self.a <= 0 or self.base_r <= 0:
            raise ValueError("ladder parameters must be positive")
        if self.direction == "ascending":
            return self.base_r * self.a ** np.arange(self.n)
        if self.direction != "descending":
            raise ValueError(f"unknown direction {self.direction!r}")
        n_in = self.n - 1
        rin = self.base_r * self.a ** np.arange(n_in - 1, -1, -1)  # r2 largest
        if isinstance(self.r1_rule, str):
            r1 = float(self.r1_rule.split(":", 1)[1])
        else:
            r1 = float(self.r1_rule) * rin.sum()
        return np.concatenate([[r1], rin])


def _threshold_vector(spec: CircuitSpec, method: str) -> np.ndarray:
    prof = delay_profile(spec, method)
    t = prof.as_array()
    if np.isnan(t).any():
        bad = [p + 1 for p in np.nonzero(np.isnan(t))[0]]
        raise ValueError(f"touchpoints {bad} have no finite threshold time")
    return t


def perturbation_accuracy(
    spec: CircuitSpec,
    pert: PerturbationSpec | None = None,
    method: str = "approx",
) -> dict[float, float]:
    """Mean recognition accuracy per sigma under Gaussian capacitance shift.

    Calibration runs at mu_c; each trial redraws c (resampling non-positive
    draws), recomputes every touchpoint's threshold time, and classifies by
    nearest calibration delay. Ties count as incorrect.
    """
    pert = pert or PerturbationSpec()
    base = spec.with_c(pert.mu_c)
    t_cal = _threshold_vector(base, method)
    n = spec.n
    out = {}
    for k, sigma in enumerate(pert.sigma_list):
        rng = np.random.default_rng((pert.seed, k))
        correct = 0
        for _ in range(pert.samples):
            c = rng.normal(pert.mu_c, sigma) if sigma > 0 else pert.mu_c
            while c <= 0:
                c = rng.normal(pert.mu_c, sigma)
            t_rec = _threshold_vector(base.with_c(c), method)
            d = np.abs(t_rec[:, None] - t_cal[None, :])
            mins = d.min(axis=1)
            arg = d.argmin(axis=1)
            unique = (d == mins[:, None]).sum(axis=1) == 1
            correct += int(((arg == np.arange(n)) & unique).sum())
        out[sigma] = correct / (pert.samples * n)
    return out


def epsilon_range(spec: CircuitSpec, p: int, method: str = "approx") -> tuple[float, float]:
    """Capacitance-error window (lower, upper) for recognizing touchpoint p
    against its adjacent neighbors. Endpoints use only the applicable
    one-sided condition (+-inf on the open side).
    """
    if not (1 <= p <= spec.n):
        raise ValueError(f"touch index {p} out of range 1..{spec.n}")
    t = _threshold_vector(spec, method)  # t_q = c * T_q, linear in c
    c = spec.c
    lower, upper = -np.inf, np.inf

    def guard(q):
        nonlocal lower, upper
        tp, tq = t[p - 1], t[q - 1]
        if tq > tp:
            upper = min(upper, (c / 2.0) * (tq / tp - 1.0))
        elif tq < tp:
            lower = max(lower, -(c / 2.0) * (1.0 - tq / tp))
        else:  # identical delays: no window at all
            lower, upper = 0.0, 0.0

    if p + 1 <= spec.n:
        guard(p + 1)
    if p - 1 >= 1:
        guard(p - 1)
    return lower, upper


def average_epsilon_width(spec: CircuitSpec, p_range=None, method: str = "approx") -> float:
    """Mean two-sided window width over interior touchpoints, in units of c."""
    ps = p_range if p_range is not None else range(2, spec.n)
    widths = []
    for p in ps:
        lo, hi = epsilon_range(spec, p, method)
        widths.append((hi - lo) / spec.c)
    return float(np.mean(widths))


# ---------------------------------------------------------------------------
# Comparison ladders (Fig. 12-style experiments)


def robust_single_ladder(
    n: int,
    base_r: float,
    r1_rule: float = 1.01,
    ratios=(1.0, 1.05, 1.1, 1.2, 1.3, 1.4, 1.5),
    v_in: float = 5.0,
    v_thres: float = 2.5,
    c: float = 100e-12,
    r_recv: float = 100e6,
) -> tuple[CircuitSpec, float]:
    """Pick the descending-ladder ratio that maximizes the worst epsilon window.

    This is the sec-8.5.3 design recipe: in-model resistances descend from r2,
    r1 sits just above the hard-constraint boundary.
    """
    best = None
    for a in ratios:
        rs = LadderSpec(base_r, a, n, "descending", r1_rule).resistances()
        spec = CircuitSpec(SINGLE, rs, v_in=v_in, v_thres=v_thres, c=c, r_recv=r_recv)
        worst = np.inf
        for p in range(1, n + 1):
            lo, hi = epsilon_range(spec, p)
            worst = min(worst, min(hi, -lo if np.isfinite(lo) else np.inf))
        if best is None or worst > best[1]:
            best = (spec, worst, a)
    return best[0], best[2]


def double_wire_max_fill(n: int, r_max: float, v_in=5.0, v_thres=2.5, c=100e-12, r_recv=100e6) -> CircuitSpec:
    """The fabrication default for double wire: every conduit filled to its max."""
    return CircuitSpec(DOUBLE, np.full(n, r_max), v_in=v_in, v_thres=v_thres, c=c, r_recv=r_recv)


# ---------------------------------------------------------------------------
# SNR


@dataclass
class SnrSample:
    mu_untouched: float
    mu_pressed: float
    sigma_untouched: float

    def __post_init__(self):
        if self.sigma_untouched <= 0:
            raise ValueError("sigma_untouched must be positive (no noise recorded?)")


@dataclass
class SnrReport:
    matrix: np.ndarray  # (n, n), nan on the diagonal
    minimum: float
    below_7: bool
    below_15: bool


def snr_from_sessions(
    spec: CircuitSpec,
    noise: float,
    seconds: float = 3.0,
    sample_rate: float = 64.0,
    seed: int = 0,
    method: str = "exact",
) -> tuple[list[SnrSample], "SnrReport"]:
    """Per-touchpoint delay statistics from synthesized noisy sessions.

    Mirrors the bench protocol: hold each touchpoint, record the measured
    delays, and treat every other touchpoint's stream as background.
    """
    from .circuit import synthesize_session

    samples = []
    for p in range(1, spec.n + 1):
        _, delays = synthesize_session(
            spec, [(p, seconds)], sample_rate=sample_rate, noise=noise, seed=seed + p, method=method
        )
        mu = float(np.mean(delays))
        sigma = float(np.std(delays))
        samples.append(SnrSample(mu_untouched=mu, mu_pressed=mu, sigma_untouched=max(sigma, 1e-15)))
    # pressed mean of p against untouched stats of q: same calibration stream
    report = compute_snr(samples)
    return samples, report


def snr_report_text(report: "SnrReport") -> str:
    lines = ["pairwise SNR (pressed row vs untouched column):"]
    n = report.matrix.shape[0]
    lines.append("\t" + "\t".join(f"q={q + 1}" for q in range(n)))
    for p in range(n):
        row = [f"{report.matrix[p, q]:,.1f}" if p != q else "-" for q in range(n)]
        lines.append(f"p={p + 1}\t" + "\t".join(row))
    verdict = "fails both" if report.below_7 else ("below the 15 real-world bar" if report.below_15 else "passes 7 and 15")
    lines.append(f"minimum: {report.minimum:,.1f} ({verdict})")
    return "\n".join(lines)


def classification_log_text(results) -> str:
    lines = ["start_s\tend_s\tlabel\tfraction\treason"]
    for w in results:
        label = w.label if w.label is not None else "not recognized"
        lines.append(f"{w.start:.2f}\t{w.end:.2f}\t{label}\t{w.fraction:.2f}\t{w.reason}")
    return "\n".join(lines)


def compute_snr(samples: list[SnrSample]) -> SnrReport:
    """Pairwise |mu_U(q) - mu_P(p)| / sigma_U(q) for q != p, plus the minimum.

    The minimum is flagged against the 7 (floor) and 15 (real-world) limits.
    """
    n = len(samples)
    if n < 2:
        raise ValueError("need statistics for at least two touchpoints")
    m = np.full((n, n), np.nan)
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            m[p, q] = abs(samples[q].mu_untouched - samples[p].mu_pressed) / samples[q].sigma_untouched
    mn = float(np.nanmin(m))
    return SnrReport(matrix=m, minimum=mn, below_7=mn < 7.0, below_15=mn < 15.0)


# ---------------------------------------------------------------------------
# Dominance classification


@dataclass
class WindowResult:
    start: float
    end: float
    label: int | str | None  # touch index, "no touch", or None when unrecognized
    fraction: float
    reason: str = ""


def classify_session(
    delays: np.ndarray,
    calibration: DelayProfile,
    trim: float = 3.5,
    dominance: float = 0.70,
    sample_rate: float = 64.0,
    windows: list[tuple[int, int]] | None = None,
) -> list[WindowResult]:
    """Classify touch windows by dominant nearest-calibration label.

    Without explicit windows, windows are maximal runs of non-baseline samples.
    The first `trim` seconds of each window are dropped; a window is labeled
    only if one label covers at least `dominance` of the remaining samples.
    """
    delays = np.asarray(delays, dtype=np.float64)
    if windows is None:
        windows = _touch_windows(delays)
    cal = calibration.as_array()
    finite_ids = np.nonzero(~np.isnan(cal))[0]
    cal_f = cal[finite_ids]

    out = []
    skip = int(round(trim * sample_rate))
    for s, e in windows:
        t0, t1 = s / sample_rate, e / sample_rate
        body = delays[s + skip : e]
        if len(body) == 0:
            out.append(WindowResult(t0, t1, None, 0.0, reason=f"window shorter than trim ({trim:g} s)"))
            continue
        labels = np.where(
            np.isinf(body),
            -1,  # baseline sentinel -> "no touch"
            finite_ids[np.abs(body[:, None] - cal_f[None, :]).argmin(axis=1)] + 1,
        )
        vals, counts = np.unique(labels, return_counts=True)
        top = counts.argmax()
        frac = counts[top] / len(labels)
        if frac >= dominance:
            lab = "no touch" if vals[top] == -1 else int(vals[top])
            out.append(WindowResult(t0, t1, lab, float(frac)))
        else:
            out.append(WindowResult(t0, t1, None, float(frac), reason="no dominant label"))
    return out


def _touch_windows(delays: np.ndarray) -> list[tuple[int, int]]:
    touched = ~np.isinf(delays)
    if not touched.any():
        return []
    edges = np.diff(touched.astype(np.int8))
    starts = (np.nonzero(edges == 1)[0] + 1).tolist()
    ends = (np.nonzero(edges == -1)[0] + 1).tolist()
    if touched[0]:
        starts.insert(0, 0)
    if touched[-1]:
        ends.append(len(delays))
    return list(zip(starts, ends))
