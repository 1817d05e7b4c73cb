"""Classify three period averages into a change pattern and render its sentence.

A pitch or energy track reduced to three period averages (p1, p2, p3) is
summarized by two step relations, p1->p2 and p2->p3.  Each relation is one of
Inc / Dec / Hold, where Hold uses a relative tolerance band so the result is
invariant under positive rescaling of the track.  The 3x3 relation table maps
onto five patterns:

    a  decrease      (Dec,Dec) (Dec,Hold) (Hold,Dec)
    b  increase      (Inc,Inc) (Inc,Hold) (Hold,Inc)
    c  fall then rise  (Dec,Inc)
    d  rise then fall  (Inc,Dec)
    e  flat            (Hold,Hold)
"""

from __future__ import annotations

import enum

from .locales import LocaleTable

DEFAULT_EPS_REL = 0.02
PITCH_FLOOR_ABS = 1.0      # Hz
ENERGY_FLOOR_ABS = 1e-4    # RMS on samples normalized to [-1, 1]


class StepRelation(enum.Enum):
    INC = "inc"
    DEC = "dec"
    HOLD = "hold"


class ChangePattern(enum.Enum):
    A_DECREASE = "a"
    B_INCREASE = "b"
    C_FALL_THEN_RISE = "c"
    D_RISE_THEN_FALL = "d"
    E_FLAT = "e"


class Feature(enum.Enum):
    PITCH = "pitch"
    ENERGY = "energy"


def step_relation(x: float, y: float, eps_rel: float = DEFAULT_EPS_REL,
                  floor_abs: float = PITCH_FLOOR_ABS) -> StepRelation:
    """Relation of the step x -> y under a relative hold band.

    Hold when |y - x| <= eps_rel * max(|x|, |y|, floor_abs); otherwise Inc or
    Dec by sign.  floor_abs keeps the band from collapsing near zero.
    """
    if eps_rel < 0:
        raise ValueError("eps_rel must be >= 0")
    if floor_abs <= 0:
        raise ValueError("floor_abs must be > 0")
    if abs(y - x) <= eps_rel * max(abs(x), abs(y), floor_abs):
        return StepRelation.HOLD
    return StepRelation.INC if y > x else StepRelation.DEC


_PATTERN_TABLE = {
    (StepRelation.DEC, StepRelation.DEC): ChangePattern.A_DECREASE,
    (StepRelation.DEC, StepRelation.HOLD): ChangePattern.A_DECREASE,
    (StepRelation.HOLD, StepRelation.DEC): ChangePattern.A_DECREASE,
    (StepRelation.INC, StepRelation.INC): ChangePattern.B_INCREASE,
    (StepRelation.INC, StepRelation.HOLD): ChangePattern.B_INCREASE,
    (StepRelation.HOLD, StepRelation.INC): ChangePattern.B_INCREASE,
    (StepRelation.DEC, StepRelation.INC): ChangePattern.C_FALL_THEN_RISE,
    (StepRelation.INC, StepRelation.DEC): ChangePattern.D_RISE_THEN_FALL,
    (StepRelation.HOLD, StepRelation.HOLD): ChangePattern.E_FLAT,
}


def classify(p1: float, p2: float, p3: float, eps_rel: float = DEFAULT_EPS_REL,
             floor_abs: float = PITCH_FLOOR_ABS) -> ChangePattern:
    """Map three period averages to one of the five change patterns."""
    r12 = step_relation(p1, p2, eps_rel, floor_abs)
    r23 = step_relation(p2, p3, eps_rel, floor_abs)
    return _PATTERN_TABLE[(r12, r23)]


def describe(pattern: ChangePattern, feature: Feature, locale: LocaleTable) -> str:
    """Locale sentence for a pattern, e.g. 'pitch decreases from high to low'."""
    return locale.get(f"pattern.{pattern.value}.{feature.value}")
