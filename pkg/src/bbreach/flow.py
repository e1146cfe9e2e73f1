"""Validated one-step successor sets for ``x' = f(x, a)`` with constant ``a``.

Each sub-step is an interval Taylor series in time around the start box.
A Picard a priori enclosure ``B`` (``box + [0, h] * f(B) ⊆ B``) bounds the
solution over the sub-step and the Lagrange remainder term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import interval as iv
from .expr import Dynamics
from .interval import Interval, IntervalBox


class EnclosureFailure(RuntimeError):
    """No a priori enclosure found; the step is too long for these dynamics."""


class StepFailure(RuntimeError):
    """Sub-division reached the minimum step without a valid enclosure."""


@dataclass(frozen=True)
class SolverParams:
    order: int = 5
    max_attempts: int = 30
    growth: float = 1.5
    max_substeps: int = 64
    min_step_fraction: float = 1.0 / 1024

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("solver order must be >= 1")
        if self.max_attempts < 1 or self.max_substeps < 1:
            raise ValueError("max_attempts and max_substeps must be >= 1")
        if self.growth <= 1.0:
            raise ValueError("growth must be > 1")
        if not 0 < self.min_step_fraction <= 1:
            raise ValueError("min_step_fraction must be in (0, 1]")

    def to_dict(self) -> dict:
        return {"order": self.order, "max_attempts": self.max_attempts, "growth": self.growth,
                "max_substeps": self.max_substeps, "min_step_fraction": self.min_step_fraction}


@dataclass(frozen=True)
class TaylorStep:
    order: int
    start: IntervalBox
    coeffs: tuple[tuple[Interval, ...], ...]   # per dimension, c_0..c_k over ``start``
    rem_coeff: tuple[Interval, ...]            # c_{k+1} over the a priori enclosure
    remainder: tuple[Interval, ...]            # rem_coeff * [0, t]^(k+1)
    t: float
    apriori: IntervalBox


@dataclass(frozen=True)
class PostResult:
    end_box: IntervalBox
    tube_box: IntervalBox
    substeps: tuple[TaylorStep, ...]


def picard_image(box: IntervalBox, enclosure: IntervalBox, act: Sequence[float],
                 dyn: Dynamics, t: float) -> IntervalBox:
    """``box + [0, t] * f(enclosure)``."""
    span = Interval(0.0, t)
    f = dyn.rhs_box(enclosure, act)
    return tuple.__new__(IntervalBox, tuple(b + span * fi for b, fi in zip(box, f)))


def picard_holds(box: IntervalBox, enclosure: IntervalBox, act: Sequence[float],
                 dyn: Dynamics, t: float) -> bool:
    return picard_image(box, enclosure, act, dyn, t).subset(enclosure)


def apriori_enclosure(box: IntervalBox, act: Sequence[float], dyn: Dynamics, t: float,
                      max_attempts: int = 30, growth: float = 1.5) -> IntervalBox:
    """A box ``B`` with ``box + [0, t] * f(B) ⊆ B``, checked before returning."""
    if not t > 0:
        raise ValueError("step length must be positive")
    f0 = dyn.rhs_box(box, act)
    cand = iv.inflate(box, [t * fi.mag() for fi in f0])
    for _ in range(max_attempts):
        img = picard_image(box, cand, act, dyn, t)
        if img.subset(cand):
            # the image is a tighter enclosure whenever it maps into itself
            if picard_holds(box, img, act, dyn, t):
                cand = img
            assert picard_holds(box, cand, act, dyn, t)
            return cand
        grown = []
        for c, m in zip(cand, img):
            lo, hi = min(c.lo, m.lo), max(c.hi, m.hi)
            mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo) * growth + 1e-300
            grown.append(Interval(min(lo, mid - rad), max(hi, mid + rad)))
        cand = iv.inflate(IntervalBox(grown), 0.0)
        if not all(abs(c.lo) < 1e300 and abs(c.hi) < 1e300 for c in cand):
            break
    raise EnclosureFailure(f"no a priori enclosure after {max_attempts} attempts (t={t})")


def _horner(coeffs: Sequence[Interval], rem: Interval, tau: Interval | float) -> Interval:
    acc = rem
    for c in reversed(coeffs[1:]):
        acc = c + tau * acc
    return coeffs[0] + tau * acc


def taylor_step(box: IntervalBox, act: Sequence[float], dyn: Dynamics, t: float,
                params: SolverParams = SolverParams()) -> TaylorStep:
    k = params.order
    enc = apriori_enclosure(box, act, dyn, t, params.max_attempts, params.growth)
    tape = dyn.tape()
    coeffs = tape.taylor(list(box), act, k)
    rem_coeff = [c[k + 1] for c in tape.taylor(list(enc), act, k + 1)]
    span = iv.ipow(Interval(0.0, t), k + 1)
    return TaylorStep(
        order=k,
        start=box,
        coeffs=tuple(tuple(c) for c in coeffs),
        rem_coeff=tuple(rem_coeff),
        remainder=tuple(r * span for r in rem_coeff),
        t=t,
        apriori=enc,
    )


def evaluate_step(step: TaylorStep, tau: float | Interval) -> IntervalBox:
    """Enclosure of the solution at time ``tau`` (or over an interval of times)."""
    span = tau if isinstance(tau, Interval) else Interval(float(tau), float(tau))
    if span.lo < 0 or span.hi > step.t:
        raise ValueError(f"tau {tau} outside [0, {step.t}]")
    out = []
    for c, r, b in zip(step.coeffs, step.rem_coeff, step.apriori):
        v = _horner(c, r, span)
        # the a priori enclosure bounds every intermediate time as well
        lo, hi = max(v.lo, b.lo), min(v.hi, b.hi)
        out.append(Interval(lo, hi) if lo <= hi else v)
    return tuple.__new__(IntervalBox, tuple(out))


def post(box: IntervalBox, act: Sequence[float], dyn: Dynamics, delta: float,
         params: SolverParams = SolverParams()) -> PostResult:
    """Enclose the states reached at ``delta`` and during ``[0, delta]``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    min_step = delta * params.min_step_fraction
    elapsed, h = 0.0, delta
    cur = box
    tube = box
    steps: list[TaylorStep] = []
    while delta - elapsed > 1e-12 * delta:
        h = min(h, delta - elapsed)
        try:
            step = taylor_step(cur, act, dyn, h, params)
        except EnclosureFailure:
            h *= 0.5
            if h < min_step * (1 - 1e-9):
                raise StepFailure(f"step size fell below {min_step} at t={elapsed}") from None
            continue
        if not picard_holds(cur, step.apriori, act, dyn, step.t):
            raise StepFailure("accepted enclosure failed the Picard re-check")
        steps.append(step)
        if len(steps) > params.max_substeps:
            raise StepFailure(f"more than {params.max_substeps} sub-steps needed")
        tube = iv.hull(tube, evaluate_step(step, Interval(0.0, step.t)))
        cur = evaluate_step(step, step.t)
        elapsed += step.t
    return PostResult(end_box=cur, tube_box=iv.hull(tube, cur), substeps=tuple(steps))
