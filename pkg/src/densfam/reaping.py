"""Bisection checks and family extensions.

A set S bisects a set B when the fraction of B's members below n that
also lie in S tends to 1/2.  ``thin_extension`` builds a density-1/2
set that provably bisects every nonempty intersection from a family, by
keeping every other member of each sign-pattern intersection; its counts
obey an exact ceiling identity, so the bisection error at n is at most
2**k indices.  ``nonindependence_witness`` reports the gap between an
intersection's empirical density and the product of declared densities.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence, Union

from .constructors import Family
from .density import (
    DEFAULT_SCHEDULE,
    TAIL_WINDOWS,
    Rational,
    WindowSchedule,
    as_fraction,
)
from .sets import OmegaSet, SetBase, intersect, thin, union
from .verify import atom


@dataclass(frozen=True)
class BisectMemberReport:
    name: str
    windows: tuple[int, ...]
    member_counts: tuple[int, ...]
    joint_counts: tuple[int, ...]
    ratios: tuple[Fraction, ...]
    final: Fraction
    deviation: Fraction
    oscillation: Fraction
    passed: bool


@dataclass(frozen=True)
class BisectReport:
    schedule: WindowSchedule
    tol: Fraction
    members: tuple[BisectMemberReport, ...]
    passed: bool


def _named_sets(r: Union[Family, Sequence], prefix: str = "R") -> list[tuple[str, SetBase]]:
    if isinstance(r, Family):
        return [(n, s) for n, s, _ in r.items()]
    out = []
    for i, entry in enumerate(r):
        if isinstance(entry, tuple):
            out.append((str(entry[0]), entry[1]))
        else:
            out.append((f"{prefix}{i}", entry))
    return out


def bisect_check(
    s: SetBase,
    targets: Union[Family, Sequence],
    schedule: WindowSchedule = DEFAULT_SCHEDULE,
    tol: Rational = Fraction(5, 1000),
    workers: int = 1,
) -> BisectReport:
    """Check that S bisects every target set on the schedule.

    Each target must have at least one member below the first window.
    A target passes when its final within-target ratio is within tol of
    1/2 and the last three ratios spread by at most tol.
    """
    tol_f = as_fraction(tol)
    windows = schedule.windows()
    named = _named_sets(targets)
    if not named:
        raise ValueError("need at least one target set")
    half = Fraction(1, 2)
    reports = []
    all_pass = True
    for name, b in named:
        first = b.prefix_count(windows[0], workers)
        if first == 0:
            raise ValueError(
                f"target {name!r} has no members below the first window {windows[0]}"
            )
        joint = intersect(s, b)
        member_counts = tuple(b.prefix_count(n, workers) for n in windows)
        joint_counts = tuple(joint.prefix_count(n, workers) for n in windows)
        ratios = tuple(Fraction(j, m) for j, m in zip(joint_counts, member_counts))
        tail = ratios[-TAIL_WINDOWS:]
        osc = max(tail) - min(tail)
        dev = abs(ratios[-1] - half)
        ok = dev <= tol_f and osc <= tol_f
        all_pass = all_pass and ok
        reports.append(
            BisectMemberReport(
                name=name,
                windows=windows,
                member_counts=member_counts,
                joint_counts=joint_counts,
                ratios=ratios,
                final=ratios[-1],
                deviation=dev,
                oscillation=osc,
                passed=ok,
            )
        )
    return BisectReport(schedule=schedule, tol=tol_f, members=tuple(reports), passed=all_pass)


def thin_extension(family: Family) -> OmegaSet:
    """Union of the thinned sign-pattern intersections of the family.

    Every sign pattern keeps exactly the even-rank members of its
    intersection, so within each intersection the new set holds
    ceil(count/2) of the first n indices: it bisects every nonempty
    intersection up to a one-index rounding error per pattern, and its
    own density is 1/2.  The returned set carries no counting shortcut;
    its counts come from actual membership masks, which keeps count
    cross-checks meaningful.
    """
    k = len(family.names)
    thins = []
    for bits in product((0, 1), repeat=k):
        thins.append(thin(atom(family, bits)))
    combined = union(*thins) if len(thins) > 1 else thins[0]

    return OmegaSet(
        combined.member,
        descriptor={"kind": "thin-ext", "family": list(family.names)},
        chunk_fn=combined.chunk_mask,
    )


@dataclass(frozen=True)
class WitnessReport:
    """Empirical product-rule gap between two sets."""

    window: int
    joint_count: int
    empirical: Fraction
    declared_product: Fraction
    gap: Fraction
    margin: Fraction
    flagged: bool


def nonindependence_witness(
    b: SetBase,
    a: SetBase,
    b_density: Rational,
    a_density: Rational,
    schedule: WindowSchedule = DEFAULT_SCHEDULE,
    margin: Optional[Rational] = None,
    workers: int = 1,
) -> WitnessReport:
    """Compare the empirical density of B ∩ A at the largest window with
    the product of the declared densities.

    The gap is flagged when it reaches `margin`.  If no margin is given
    and B was built by a biased-coin extension, half its built-in bias
    is used; otherwise a margin is required.
    """
    if margin is None:
        params = b.descriptor.get("params") if isinstance(b.descriptor, dict) else None
        if params and "eps" in params:
            margin_f = Fraction(params["eps"]) / 2
        else:
            raise ValueError("margin required when the set carries no built-in bias")
    else:
        margin_f = as_fraction(margin)
    n_max = schedule.windows()[-1]
    joint = intersect(b, a).prefix_count(n_max, workers)
    empirical = Fraction(joint, n_max)
    declared = as_fraction(b_density) * as_fraction(a_density)
    gap = abs(empirical - declared)
    return WitnessReport(
        window=n_max,
        joint_count=joint,
        empirical=empirical,
        declared_product=declared,
        gap=gap,
        margin=margin_f,
        flagged=gap >= margin_f,
    )
