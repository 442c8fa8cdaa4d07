"""Path simulation and Monte Carlo probability checks.

Sampling is competing-risks, one round per jump: draw a unit exponential,
invert the total cumulative intensity from the current time, then pick the
jumping component with probability proportional to its intensity at the
solved time. Each subject owns a fixed, padded block of a counter-based
random stream keyed by the seed, so subject i's draws depend only on
(seed, i): cohorts can be generated in any chunking, on any thread count,
with bit-identical results, and a single path can be re-drawn in isolation.

The inversion is closed-form when every baseline is time-constant, a
segment walk when baselines are step functions, and a fixed-iteration
bisection otherwise (deterministic, resolution ~1e-13 of the horizon).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HazardInversionError, InvalidInputError
from .models import IntensityModel, JumpHistory, MultiplicativeComponent, PatternTableComponent
from .observation import (
    Exact,
    Interval,
    ObservationScheme,
    PseudoAtomRecord,
    SurvivedBeyond,
    coarsen,
)

_CHUNK = 1 << 17
_BISECT_ITERS = 64


@dataclass(frozen=True)
class SimulatedPath:
    """Jump times of one subject (inf = no jump), with its stream address."""

    times: tuple[float, ...]
    horizon: float
    seed: int
    index: int

    def as_history(self) -> JumpHistory:
        C = self.horizon
        return JumpHistory(
            tuple((t, True) if t <= C else (C, False) for t in self.times), C
        )


def _block_words(p: int) -> int:
    # two uniforms per round, up to p rounds, padded to the 4-word
    # granularity of the counter so blocks start on counter boundaries
    need = 2 * p
    return -(-need // 4) * 4


def subject_uniforms(seed: int, start: int, n: int, p: int) -> np.ndarray:
    """Uniform draws for subjects start..start+n-1, shape (n, 2p).

    Column 2r is the exponential draw of round r, column 2r+1 the component
    pick. Depends only on (seed, subject index), not on chunking.
    """
    if not (0 <= int(seed) < 2 ** 64):
        raise InvalidInputError(f"seed must fit an unsigned 64-bit integer, got {seed}")
    block = _block_words(p)
    bit = np.random.Philox(key=np.uint64(seed), counter=[start * block // 4, 0, 0, 0])
    u = np.random.Generator(bit).random((n, block))
    return u[:, : 2 * p]


def _baselines(model: IntensityModel):
    for comp in model.components:
        if isinstance(comp, MultiplicativeComponent):
            yield comp.baseline
        elif isinstance(comp, PatternTableComponent):
            for _, base in comp.entries:
                yield base
        else:
            raise InvalidInputError(f"cannot inspect baselines of {type(comp).__name__}")


def _inversion_mode(model: IntensityModel) -> str:
    bases = list(_baselines(model))
    if all(getattr(b, "time_constant", False) for b in bases):
        return "linear"
    if all(hasattr(b, "grid") or getattr(b, "time_constant", False) for b in bases):
        return "grid"
    return "bisect"


def _rates_at(model: IntensityModel, t, T, jumped) -> np.ndarray:
    """Stacked pre-jump intensities, zero for components already jumped."""
    cols = []
    for j in range(model.p):
        r = model.rate(j, t, T)
        cols.append(np.where(jumped[:, j], 0.0, r))
    return np.stack(cols, axis=1)


def _invert_total(model, t0, T, E, C, mode):
    """Smallest t with total integrated intensity over (t0, t] equal to E.

    Returns (t_star, solved): solved False where the target exceeds the
    total over (t0, C] (no further jump by the horizon).
    """
    T_list = list(T.T) if isinstance(T, np.ndarray) else T
    jumped = [np.isfinite(x) for x in T_list]
    total_to_C = np.asarray(model.total_cum(t0, C, T_list), dtype=float)
    solved = total_to_C >= E

    def total_rate(t):
        # a finite entry is a past jump; its own pre-jump rate no longer counts
        rate = np.zeros_like(t0)
        for j in range(model.p):
            rate = rate + np.where(jumped[j], 0.0, model.rate(j, t, T_list))
        return rate

    if mode == "linear":
        rate = total_rate(np.nextafter(t0, np.inf))
        with np.errstate(divide="ignore", invalid="ignore"):
            t_star = t0 + np.where(rate > 0, E / rate, np.inf)
        return np.where(solved, t_star, np.inf), solved

    if mode == "grid":
        edges = [b for b in model.breakpoints if b < C] + [C]
        prev_edge = t0
        cum_prev = np.zeros_like(t0)
        t_star = np.full_like(t0, np.inf)
        done = ~solved
        for e in edges:
            hi = np.maximum(t0, e)
            cum_here = np.asarray(model.total_cum(t0, hi, T_list), dtype=float)
            crosses = ~done & (cum_here >= E)
            if crosses.any():
                seg_lo = np.maximum(t0, prev_edge)
                rate = total_rate(0.5 * (seg_lo + hi))
                with np.errstate(divide="ignore", invalid="ignore"):
                    t_cand = seg_lo + (E - cum_prev) / rate
                t_star = np.where(crosses, t_cand, t_star)
                done = done | crosses
            prev_edge = e
            cum_prev = cum_here
        return np.where(solved, t_star, np.inf), solved

    lo = t0.copy()
    hi = np.full_like(t0, C)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        val = np.asarray(model.total_cum(t0, mid, T_list), dtype=float)
        take_hi = val >= E
        hi = np.where(take_hi, mid, hi)
        lo = np.where(take_hi, lo, mid)
    return np.where(solved, hi, np.inf), solved


def simulate_cohort(model: IntensityModel, C: float, n: int, seed: int,
                    start: int = 0, chunk: int = _CHUNK) -> np.ndarray:
    """Jump-time matrix (n, p) for subjects start..start+n-1 (inf = no jump)."""
    if n < 0 or start < 0:
        raise InvalidInputError("subject counts and start index must be nonnegative")
    p = model.p
    mode = _inversion_mode(model)
    out = np.empty((n, p))
    for lo in range(0, n, chunk):
        m = min(chunk, n - lo)
        out[lo:lo + m] = _simulate_chunk(model, C, m, seed, start + lo, mode)
    return out


def _simulate_chunk(model, C, n, seed, start, mode):
    p = model.p
    U = subject_uniforms(seed, start, n, p)
    T = np.full((n, p), np.inf)
    t0 = np.zeros(n)
    active = np.ones(n, dtype=bool)
    for r in range(p):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        E = -np.log1p(-U[idx, 2 * r])
        t_star, solved = _invert_total(model, t0[idx], T[idx], E, C, mode)
        hit = solved & (t_star <= C)
        if not hit.any():
            active[idx] = False
            continue
        sub = idx[hit]
        ts = t_star[hit]
        T_list = list(T[sub].T)
        jumped = np.isfinite(T[sub])
        rates = _rates_at(model, ts, T_list, jumped)
        totals = rates.sum(axis=1)
        if np.any(totals <= 0):
            raise HazardInversionError("zero total intensity at a solved jump time")
        cum = np.cumsum(rates, axis=1)
        u = U[sub, 2 * r + 1] * totals
        pick = np.sum(cum <= u[:, None], axis=1)
        pick = np.minimum(pick, p - 1)
        T[sub, pick] = ts
        t0[sub] = ts
        active[idx] = hit
        active[sub] = ~np.isfinite(T[sub]).all(axis=1)
    return T


def simulate_path(model: IntensityModel, C: float, seed: int, index: int = 0) -> SimulatedPath:
    """Single subject's path, identical to its row in any cohort."""
    times = simulate_cohort(model, C, 1, seed, start=index)[0]
    return SimulatedPath(tuple(float(t) for t in times), C, seed, index)


def coarsen_cohort(scheme: ObservationScheme, times: np.ndarray):
    """Vectorized scheme application: per-component status code arrays.

    Returns (kind, x1, x2, flag): kind 0 = exact (x1 = time, flag = jump
    observed), kind 1 = interval (x1, x2], kind 2 = survived beyond x1.
    """
    n, p = times.shape
    if p != scheme.p:
        raise InvalidInputError(f"{p} columns for {scheme.p} components")
    C = scheme.horizon
    d = scheme.death_component
    kind = np.zeros((n, p), dtype=np.uint8)
    x1 = np.zeros((n, p))
    x2 = np.full((n, p), np.nan)
    flag = np.zeros((n, p), dtype=bool)

    if d is not None:
        td = times[:, d]
        cut = np.where(td <= C, td, np.inf)
        kind[:, d] = 0
        x1[:, d] = np.minimum(td, C)
        flag[:, d] = td <= C
    else:
        cut = np.full(n, np.inf)

    for j in range(p):
        if j == d:
            continue
        sched = scheme.schedules[j]
        t = times[:, j]
        in_window = np.zeros(n, dtype=bool)
        for a, b in sched.windows:
            in_window |= (a <= t) & (t < np.minimum(b, cut))
        covered = sched.covers_through(C) & (cut >= C)

        detections = np.asarray(sched.detection_epochs(), dtype=float)
        zeros = np.asarray(sched.zero_epochs(), dtype=float)
        e = np.full(n, np.inf)
        if detections.size:
            ei = np.searchsorted(detections, np.where(np.isfinite(t), t, np.inf))
            has = ei < detections.size
            e[has] = detections[ei[has]]
        detected = np.isfinite(t) & (t <= C) & (e < cut) & ~in_window
        zi = np.maximum(np.searchsorted(zeros, np.where(np.isfinite(t), t, 0.0)), 1) - 1
        z = zeros[zi]

        # survival bound: last response under the (possibly cut) schedule
        v_static = zeros[-1]
        vi = np.maximum(np.searchsorted(zeros, np.minimum(cut, C)), 1) - 1
        v = zeros[vi]
        for a, b in sched.windows:
            v = np.maximum(v, np.where(a < cut, np.minimum(np.minimum(b, cut), C), 0.0))
        v = np.where(cut >= C, v_static, v)

        kind[:, j] = np.where(in_window, 0, np.where(covered, 0, np.where(detected, 1, 2)))
        x1[:, j] = np.where(in_window, t, np.where(covered, C, np.where(detected, z, v)))
        x2[:, j] = np.where(detected & ~in_window & ~covered, e, np.nan)
        flag[:, j] = in_window
    return kind, x1, x2, flag


def record_from_codes(kind, x1, x2, flag) -> PseudoAtomRecord:
    """One subject's coded row back into a record object."""
    statuses = []
    for k, a, b, f in zip(kind, x1, x2, flag):
        if k == 0:
            statuses.append(Exact(float(a), bool(f)))
        elif k == 1:
            statuses.append(Interval(float(a), float(b)))
        else:
            statuses.append(SurvivedBeyond(float(a)))
    return PseudoAtomRecord(tuple(statuses))


def mc_check(model: IntensityModel, scheme: ObservationScheme, atom: PseudoAtomRecord,
             n_paths: int, seed: int, bin_width: float = 0.05,
             chunk: int = _CHUNK):
    """Monte Carlo estimate of a record's probability, as a density in the
    coordinates of exactly observed jumps (each binned to bin_width).

    A survival bound float-equal to an exactly observed death time means
    "watched until that death cut the schedule", so it is matched against
    each path's own death coordinate, not the literal number; every other
    bound is a schedule constant and must match exactly.

    Returns (estimate, standard_error, matches). Zero matches return a
    one-sided 95% bound as the error.
    """
    if bin_width <= 0:
        raise InvalidInputError(f"bin width must be positive, got {bin_width}")
    targets = list(atom.statuses)
    density_dims = sum(
        1 for st in targets if isinstance(st, Exact) and st.observed_jump
    )
    factor = bin_width ** density_dims
    d = scheme.death_component
    death_tied = set()
    if d is not None and isinstance(targets[d], Exact) and targets[d].observed_jump:
        death_tied = {j for j, st in enumerate(targets)
                      if j != d and isinstance(st, SurvivedBeyond)
                      and st.time == targets[d].time}
    matches = 0
    for lo in range(0, n_paths, chunk):
        m = min(chunk, n_paths - lo)
        times = simulate_cohort(model, scheme.horizon, m, seed, start=lo, chunk=chunk)
        kind, x1, x2, flag = coarsen_cohort(scheme, times)
        ok = np.ones(m, dtype=bool)
        for j, st in enumerate(targets):
            if isinstance(st, Exact):
                if st.observed_jump:
                    ok &= (kind[:, j] == 0) & flag[:, j]
                    ok &= np.abs(x1[:, j] - st.time) <= 0.5 * bin_width
                else:
                    ok &= (kind[:, j] == 0) & ~flag[:, j]
            elif isinstance(st, Interval):
                ok &= (kind[:, j] == 1) & (x1[:, j] == st.lower) & (x2[:, j] == st.upper)
            elif j in death_tied:
                ok &= (kind[:, j] == 2) & (x1[:, j] == x1[:, d])
            else:
                ok &= (kind[:, j] == 2) & (x1[:, j] == st.time)
        matches += int(ok.sum())
    phat = matches / n_paths
    if matches == 0:
        return 0.0, 3.0 / (n_paths * factor), 0
    se = np.sqrt(phat * (1.0 - phat) / n_paths) / factor
    return phat / factor, float(se), matches
