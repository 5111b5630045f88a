"""Single-wire resistance optimization and fabrication-scalability math.

The grid search walks (r1, r) cells, simulates every touchpoint's threshold
time, rejects hard-constraint violations (any touchpoint whose receive pin
starts at or above threshold), scores feasible cells by the minimum
consecutive delay separation, and picks a close-to-optimal cell that keeps
every initial voltage at or below 0.9 v_thres.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import DOUBLE, SINGLE, CircuitSpec, delay_separations, initial_voltage
from .serpentine import ResistivityModel, estimate_resistance, fill_serpentine

__all__ = [
    "GridSearchSpec",
    "OptimizationResult",
    "InfeasibleError",
    "optimize_single_wire",
    "min_conduit_length",
    "MinConduitResult",
]


class InfeasibleError(RuntimeError):
    pass


@dataclass
class GridSearchSpec:
    n: int
    r_max: float  # min over low conduits of max achievable resistance
    r1_range: tuple = (200e3, 10e6)
    r1_step: float = 200e3
    r_step: float = 50e3
    v_in: float = 5.0
    v_thres: float = 2.5
    c: float = 100e-12
    r_recv: float = 100e6
    safety: float = 0.9
    method: str = "approx"  # scoring method for the feasibility map

    def __post_init__(self):
        if self.r1_step <= 0 or self.r_step <= 0:
            raise ValueError("steps must be positive")
        if self.r1_range[0] > self.r1_range[1]:
            raise ValueError("empty r1 range")
        if not (0 < self.safety <= 1):
            raise ValueError("safety must be in (0, 1]")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    def r1_values(self) -> np.ndarray:
        lo, hi = self.r1_range
        k = int(np.floor((hi - lo) / self.r1_step + 1e-9))
        return lo + self.r1_step * np.arange(k + 1)

    def r_values(self) -> np.ndarray:
        if self.r_max < self.r_step:
            raise InfeasibleError(
                f"max achievable conduit resistance {self.r_max:.0f} ohm is below one r step "
                f"({self.r_step:.0f} ohm); use longer conduits"
            )
        k = int(np.floor(self.r_max / self.r_step + 1e-9))
        return self.r_step * np.arange(1, k + 1)


@dataclass
class OptimizationResult:
    r1: float
    r: float
    min_separation: float
    feasibility: np.ndarray  # (len(r1), len(r)) score, nan = hard-constraint violation
    r1_values: np.ndarray
    r_values: np.ndarray
    headroom: float
    spec: CircuitSpec


def _cell_spec(gss: GridSearchSpec, r1: float, r: float) -> CircuitSpec:
    rs = np.concatenate([[r1], np.full(gss.n - 1, r)])
    return CircuitSpec(SINGLE, rs, v_in=gss.v_in, v_thres=gss.v_thres, c=gss.c, r_recv=gss.r_recv)


def _cell_score(gss: GridSearchSpec, r1: float, r: float) -> tuple[float, float]:
    """(map score, max exact initial voltage) for one feasible cell.

    The map is scored with the configured (default approximate) threshold
    forms; the safety margin always uses the exact receive-pin voltage, which
    is the physically meaningful quantity.
    """
    spec = _cell_spec(gss, r1, r)
    vmax = max(initial_voltage(spec, p, "exact") for p in range(1, gss.n + 1))
    if gss.n == 1:
        return 0.0, vmax
    seps = delay_separations(spec, gss.method)
    if len(seps) < gss.n - 1:
        return np.nan, np.inf  # a marker slipped through: treat as infeasible
    return min(s for _, s in seps), vmax


def hard_constraint_ok(gss: GridSearchSpec, r1: float, r: float) -> bool:
    """r1 / R_till_p > 1 - v_thres/v_in for every p (worst case p = N)."""
    limit = 1.0 - gss.v_thres / gss.v_in
    r_till_n = r1 + (gss.n - 1) * r
    return r1 / r_till_n > limit


def optimize_single_wire(gss: GridSearchSpec) -> OptimizationResult:
    r1s = gss.r1_values()
    rs = gss.r_values()
    scores = np.full((len(r1s), len(rs)), np.nan)
    vmaxs = np.full((len(r1s), len(rs)), np.nan)
    for j, r in enumerate(rs):
        for i, r1 in enumerate(r1s):
            if not hard_constraint_ok(gss, r1, r):
                continue
            s, v = _cell_score(gss, r1, r)
            scores[i, j] = s
            vmaxs[i, j] = v

    if not np.isfinite(scores).any():
        raise InfeasibleError(
            "no feasible grid cell satisfies the hard constraint; "
            "use longer conduits (larger r1/r headroom) or fewer touchpoints"
        )
    best = np.nanmax(scores)
    near = np.isfinite(scores) & (scores >= 0.95 * best)
    safe = near & (vmaxs <= gss.safety * gss.v_thres)
    if not safe.any():
        # widen: any feasible cell meeting the safety margin, best score first
        safe = np.isfinite(scores) & (vmaxs <= gss.safety * gss.v_thres)
        if not safe.any():
            raise InfeasibleError(
                f"no feasible cell keeps v_p(0) <= {gss.safety:g} * v_thres; "
                "use longer conduits or fewer touchpoints"
            )
        smax = np.nanmax(np.where(safe, scores, np.nan))
        safe &= scores >= smax

    headroom = np.where(safe, gss.safety * gss.v_thres - vmaxs, -np.inf)
    hmax = headroom.max()
    pick = np.argwhere(np.isclose(headroom, hmax, rtol=0, atol=1e-12))
    # tie-break: larger r, then smaller r1
    pick = sorted(pick.tolist(), key=lambda ij: (-rs[ij[1]], r1s[ij[0]]))
    i, j = pick[0]
    spec = _cell_spec(gss, float(r1s[i]), float(rs[j]))
    # report the selected design's exact re-simulated separation
    if gss.n > 1:
        exact_sep = min(s for _, s in delay_separations(spec, "exact"))
    else:
        exact_sep = 0.0
    return OptimizationResult(
        r1=float(r1s[i]),
        r=float(rs[j]),
        min_separation=float(exact_sep),
        feasibility=scores,
        r1_values=r1s,
        r_values=rs,
        headroom=float(gss.safety * gss.v_thres - vmaxs[i, j]),
        spec=spec,
    )


# ---------------------------------------------------------------------------
# Fabrication scalability (minimum conduit length per segment)


@dataclass
class MinConduitResult:
    mode: str
    n: int
    r_required: float  # ohm per segment
    trace_length: float  # mm of in-plane trace
    conduit_length: float  # mm of conduit centerline
    packing: float  # ohm per conduit mm at minimum margins


@dataclass
class _Calibration:
    centerline: np.ndarray
    diameter: float


def _packing_ohm_per_mm(diameter: float, model: ResistivityModel) -> float:
    """Measured resistance density of a dense fill in a straight calibration
    capsule six diameters long (end effects present but not dominant)."""
    length = 6.0 * diameter
    cal = _Calibration(np.array([[0.0, 0.0, 0.0], [length, 0.0, 0.0]]), diameter)
    return estimate_resistance(fill_serpentine(cal), model) / length


def _single_wire_best_min_sep(n: int, r: float, v_in: float, v_thres: float, c: float) -> float:
    """Best achievable min separation over r1 (approx forms, continuous r1).

    The minimum consecutive separation is largest as r1 approaches the hard
    constraint boundary from above; probe a short ladder to stay robust.
    """
    q = v_thres / v_in
    hard_lo = (1 - q) / q * (n - 1) * r
    ratio = v_in / (v_in - v_thres)
    best = 0.0
    for bump in (1e-9, 1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0):
        r1 = hard_lo * (1.0 + bump) if hard_lo > 0 else r * (1.0 + bump)
        r_till = r1 + np.arange(n) * r
        t = c * r_till * np.log(r1 / r_till * ratio)
        sep = float(np.min(np.abs(np.diff(t)))) if n > 1 else float(t[0])
        best = max(best, sep)
    return best


def min_conduit_length(
    n: int,
    mode: str,
    diameter: float = 5.0,
    model: ResistivityModel | None = None,
    delta_t_min: float = 5e-6,
    v_in: float = 5.0,
    v_thres: float = 2.5,
    c: float = 100e-12,
    r_ceiling: float = 50e6,
) -> MinConduitResult:
    """Minimum low-conduit length whose trace meets the delay-separation floor.

    Double-wire: the separation formula gives a per-segment resistance that is
    constant in N. Single-wire: the minimum uniform r whose best grid score
    reaches delta_t_min (continuous sweep; see ledger), non-decreasing in N.
    """
    model = model or ResistivityModel()
    ratio = np.log(v_in / (v_in - v_thres))
    if mode == DOUBLE:
        r_req = delta_t_min / (c * ratio)
    elif mode == SINGLE:
        if n < 2:
            r_req = 0.0
        else:
            lo, hi = 1.0, r_ceiling
            if _single_wire_best_min_sep(n, hi, v_in, v_thres, c) < delta_t_min:
                raise InfeasibleError(
                    f"single-wire separation {delta_t_min:g} s unreachable within "
                    f"{r_ceiling:.0f} ohm at N={n}"
                )
            while hi / lo > 1 + 1e-9:
                mid = (lo * hi) ** 0.5
                if _single_wire_best_min_sep(n, mid, v_in, v_thres, c) >= delta_t_min:
                    hi = mid
                else:
                    lo = mid
            r_req = hi
    else:
        raise ValueError(f"unknown mode {mode!r}")

    packing = _packing_ohm_per_mm(diameter, model)
    conduit_length = r_req / packing
    return MinConduitResult(
        mode=mode,
        n=n,
        r_required=float(r_req),
        trace_length=float(r_req / model.rho_xy),
        conduit_length=float(conduit_length),
        packing=float(packing),
    )
