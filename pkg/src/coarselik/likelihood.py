"""Exact observed-data likelihoods for one-jump component models.

The continuous-observation density of a path with jump coordinates s over a
horizon C multiplies the intensity of every component at its own jump time
(components with s_j = C never jumped and contribute no rate factor) by
exp(-Lambda(C)), the total integrated intensity along that history. The
likelihood of a coarse record then integrates this density over the
coordinates the record leaves free:

- an Interval(a, b] component ranges over (a, b],
- a SurvivedBeyond(v) component either jumped unseen in (v, C] or never
  jumped; summing those two cases for every such component expands into
  2^(#survived) terms, each a rectangle integral with some coordinates
  pinned at C (the "corner" terms).

All terms are nonnegative, so the log of their sum is well defined, with
-inf a legitimate value for impossible records rather than an error.

Integrals run on the nested quadrature engine with panels split at model
rate discontinuities, at every pinned jump time, and at the bounds of the
other free coordinates, so integrand kinks always land on panel edges. When
a pinned jump provably switches another component off (a death-style gate),
that component's integration range is cut there; the discarded region
carries zero intensity, so the value is unchanged and panels are saved.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .errors import InconsistentObservationError, InvalidInputError
from .models import IntensityModel, JumpHistory, MultiplicativeComponent, PatternTableComponent
from .observation import Exact, Interval, PseudoAtomRecord, SurvivedBeyond
from .quadrature import (
    DEFAULT_ABS_TOL,
    DEFAULT_MAX_EVALS,
    DEFAULT_REL_TOL,
    Dim,
    integrate_nested,
)


def _value_at(model: IntensityModel, times, jumped_flags, C: float):
    """Density factor: rates at flagged jump times, times exp(-Lambda(C)).

    times entries may be scalars or broadcastable arrays.
    """
    out = 1.0
    for j, flag in enumerate(jumped_flags):
        if flag:
            out = out * model.rate(j, times[j], times)
    out = out * np.exp(-model.total_cum(0.0, C, times))
    return out


def f_theta(model: IntensityModel, s, C: float):
    """Normalized joint density at coordinates s; s_j = C means no jump."""
    s = [np.asarray(x, dtype=float) if np.ndim(x) else float(x) for x in s]
    if len(s) != model.p:
        raise InvalidInputError(f"{len(s)} coordinates for {model.p} components")
    for x in s:
        if np.any(np.asarray(x) <= 0) or np.any(np.asarray(x) > C):
            raise InvalidInputError(f"coordinates must lie in (0, {C}]")
    flags = [np.all(np.asarray(x) < C) for x in s]
    for j, x in enumerate(s):
        if np.ndim(x) and not flags[j] and np.any(np.asarray(x) < C):
            raise InvalidInputError("mixed jump/no-jump coordinate arrays are not supported")
    return _value_at(model, s, flags, C)


def loglik_continuous(model: IntensityModel, history: JumpHistory) -> float:
    """Log density of a completely observed path up to its horizon."""
    if history.p != model.p:
        raise InvalidInputError(f"history has {history.p} components, model has {model.p}")
    C = history.horizon
    times = [t for t, _ in history.times]
    flags = [obs for _, obs in history.times]
    val = _value_at(model, times, flags, C)
    with np.errstate(divide="ignore"):
        return float(np.log(val))


def _switched_off_by(component, e: int) -> bool:
    """True when component e's jump provably zeroes this intensity."""
    if isinstance(component, MultiplicativeComponent):
        return e in component.gates
    if isinstance(component, PatternTableComponent):
        return all(bits[e] == 0 for bits, _ in component.entries)
    return False


def _parse_atom(atom: PseudoAtomRecord, C: float):
    """Split statuses into pinned coordinates and free ranges."""
    exact: list[tuple[int, float, bool]] = []
    interval: list[tuple[int, float, float]] = []
    survived: list[tuple[int, float]] = []
    for j, st in enumerate(atom.statuses):
        if isinstance(st, Exact):
            if st.observed_jump:
                if not (0 < st.time <= C):
                    raise InvalidInputError(f"component {j}: jump time {st.time} outside (0, {C}]")
            elif st.time != C:
                raise InvalidInputError(
                    f"component {j}: no-jump-by-{st.time} with later times unobserved "
                    "should be SurvivedBeyond"
                )
            exact.append((j, st.time, st.observed_jump))
        elif isinstance(st, Interval):
            if st.upper > C:
                raise InvalidInputError(f"component {j}: interval end {st.upper} beyond {C}")
            interval.append((j, st.lower, st.upper))
        elif isinstance(st, SurvivedBeyond):
            if not (0 <= st.time <= C):
                raise InvalidInputError(f"component {j}: survival time {st.time} outside [0, {C}]")
            survived.append((j, st.time))
        else:
            raise InvalidInputError(f"component {j}: unknown status {st!r}")
    return exact, interval, survived


def loglik_atom(
    model: IntensityModel,
    atom: PseudoAtomRecord,
    C: float,
    *,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    max_evals: int = DEFAULT_MAX_EVALS,
    tighten: bool = True,
) -> float:
    """Normalized log-likelihood of one coarse record over horizon C.

    The value exponentiates to the record's probability, as a density in the
    coordinates of components with an observed exact jump time.
    """
    if atom.p != model.p:
        raise InvalidInputError(f"record has {atom.p} components, model has {model.p}")
    exact, interval, survived = _parse_atom(atom, C)

    if not interval and not survived:
        times = [t for _, t, _ in exact]
        flags = [f for _, _, f in exact]
        order = [j for j, _, _ in exact]
        s = [0.0] * model.p
        fl = [False] * model.p
        for k, j in enumerate(order):
            s[j] = times[k]
            fl[j] = flags[k]
        with np.errstate(divide="ignore"):
            return float(np.log(_value_at(model, s, fl, C)))

    # integration range is cut where a pinned jump switches a component off
    cut_for: dict[int, float] = {}
    if tighten:
        for (e, t, flag) in exact:
            if not flag:
                continue
            for j, _, _ in interval:
                if _switched_off_by(model.components[j], e):
                    cut_for[j] = min(cut_for.get(j, np.inf), t)
            for j, _ in survived:
                if _switched_off_by(model.components[j], e):
                    cut_for[j] = min(cut_for.get(j, np.inf), t)

    pinned = {j: t for j, t, _ in exact}
    pin_flags = {j: f for j, _, f in exact}
    bound_times = sorted(
        {t for _, t, _ in exact}
        | {x for _, a, b in interval for x in (a, b)}
        | {v for _, v in survived}
    )
    base_cuts = tuple(sorted(set(model.breakpoints) | set(bound_times)))

    total = 0.0
    surv_idx = [j for j, _ in survived]
    surv_from = {j: v for j, v in survived}
    for r in range(len(survived) + 1):
        for pinned_set in combinations(surv_idx, r):
            free: list[tuple[int, float, float]] = []
            for j, a, b in interval:
                free.append((j, a, min(b, cut_for.get(j, np.inf))))
            for j in surv_idx:
                if j not in pinned_set:
                    free.append((j, surv_from[j], min(C, cut_for.get(j, np.inf))))
            if any(hi <= lo for _, lo, hi in free):
                continue
            term = _corner_term(model, C, pinned, pin_flags, pinned_set, free, base_cuts,
                                rel_tol, abs_tol, max_evals)
            total += term
    with np.errstate(divide="ignore"):
        return float(np.log(max(total, 0.0)))


def _corner_term(model, C, pinned, pin_flags, pinned_set, free, base_cuts,
                 rel_tol, abs_tol, max_evals) -> float:
    """One term of the corner expansion: free coords integrated, rest pinned."""
    s_fixed = [0.0] * model.p
    flags = [False] * model.p
    for j, t in pinned.items():
        s_fixed[j] = t
        flags[j] = pin_flags[j]
    for j in pinned_set:
        s_fixed[j] = C
        flags[j] = False

    if not free:
        return float(_value_at(model, s_fixed, flags, C))

    free_order = [j for j, _, _ in free]
    for j in free_order:
        flags[j] = True

    def integrand(*coords):
        s = list(s_fixed)
        for k, j in enumerate(free_order):
            s[j] = coords[k]
        val = _value_at(model, s, flags, C)
        return val if np.ndim(val) else np.full(np.shape(coords[-1]), float(val))

    dims = tuple(Dim(lo, hi, breakpoints=base_cuts) for _, lo, hi in free)
    result = integrate_nested(integrand, dims, rel_tol=rel_tol, abs_tol=abs_tol,
                              max_evals=max_evals)
    return result.value


def conditional_loglik(model: IntensityModel, atom: PseudoAtomRecord, C: float,
                       v0: float, **quad_opts) -> float:
    """Log-likelihood given no component had jumped by v0.

    Statuses incompatible with that conditioning are rejected; interval and
    survival ranges are clipped at v0 (their mass below v0 is impossible
    under the conditioning, and the scheme should not have produced it).
    """
    if not (0 <= v0 < C):
        raise InvalidInputError(f"conditioning time {v0} outside [0, {C})")
    clipped = []
    for j, st in enumerate(atom.statuses):
        if isinstance(st, Exact) and st.observed_jump and st.time <= v0:
            raise InconsistentObservationError(
                f"component {j}: jump at {st.time} contradicts no jumps by {v0}"
            )
        if isinstance(st, Interval):
            if st.upper <= v0:
                raise InconsistentObservationError(
                    f"component {j}: jump in ({st.lower}, {st.upper}] contradicts "
                    f"no jumps by {v0}"
                )
            st = Interval(max(st.lower, v0), st.upper)
        elif isinstance(st, SurvivedBeyond) and st.time < v0:
            st = SurvivedBeyond(v0)
        clipped.append(st)
    base = loglik_atom(model, PseudoAtomRecord(tuple(clipped)), C, **quad_opts)
    no_jumps = [np.inf] * model.p
    return base + float(model.total_cum(0.0, v0, no_jumps))
