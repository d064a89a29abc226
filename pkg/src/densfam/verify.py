"""Empirical certification of the product rule over sign patterns.

A family is independence-certified on a window schedule when, for every
sign pattern over the chosen members, the exact empirical density of the
pattern's intersection at the largest window sits within tolerance of
the product of declared densities, and the last windows agree with each
other to the same tolerance.  Passing is evidence on this schedule, not
a proof about the limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence, Union

from .constructors import Family, KWSet, atom_density
from .density import (
    DEFAULT_SCHEDULE,
    TAIL_WINDOWS,
    Rational,
    WindowSchedule,
    as_fraction,
    default_tolerance,
)
from .sets import SetBase, SetExpr, complement, intersect

MAX_VERIFY_MEMBERS = 5
MAX_FIELD_MEMBERS = 4


@dataclass(frozen=True)
class SignPattern:
    """Membership/complement selector over an ordered tuple of names."""

    names: tuple[str, ...]
    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.names) != len(self.bits):
            raise ValueError("pattern arity mismatch")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("pattern bits must be 0 or 1")

    def label(self) -> str:
        return ",".join(f"{n}={b}" for n, b in zip(self.names, self.bits))


def _resolve_names(family: Family, names: Optional[Sequence[str]], cap: int) -> tuple[str, ...]:
    chosen = tuple(names) if names is not None else family.names
    if len(chosen) == 0:
        raise ValueError("need at least one member")
    if len(set(chosen)) != len(chosen):
        raise ValueError("member names must be distinct")
    for n in chosen:
        family.index(n)  # raises KeyError for unknown names
    if len(chosen) > cap:
        raise ValueError(f"at most {cap} members supported here, got {len(chosen)}")
    return chosen


def atom(family: Family, bits: Sequence[int], names: Optional[Sequence[str]] = None) -> SetExpr:
    """Intersection selecting each named member (bit 1) or its
    complement (bit 0)."""
    chosen = tuple(names) if names is not None else family.names
    if len(bits) != len(chosen):
        raise ValueError("one bit per member required")
    parts = []
    for name, b in zip(chosen, bits):
        s = family.set_of(name)
        parts.append(s if b else complement(s))
    if len(parts) == 1:
        # keep a uniform SetExpr return type for single-member patterns
        return intersect(parts[0])
    return intersect(*parts)


def expected_atom_density(
    family: Family, bits: Sequence[int], names: Optional[Sequence[str]] = None
) -> Fraction:
    chosen = tuple(names) if names is not None else family.names
    densities = [family.density_of(n) for n in chosen]
    return atom_density(densities, bits)


@dataclass(frozen=True)
class AtomReport:
    pattern: SignPattern
    expected: Fraction
    windows: tuple[int, ...]
    counts: tuple[int, ...]
    densities: tuple[Fraction, ...]
    empirical: Fraction
    deviation: Fraction
    oscillation: Fraction
    passed: bool


@dataclass(frozen=True)
class BandDiagnostic:
    """Guard-band hit counts for a threshold-comparison set."""

    name: str
    window: int
    hits: int
    bound: Fraction

    @property
    def ok(self) -> bool:
        return self.hits <= self.bound


@dataclass(frozen=True)
class VerificationReport:
    names: tuple[str, ...]
    schedule: WindowSchedule
    tol: Fraction
    atoms: tuple[AtomReport, ...]
    band_diagnostics: tuple[BandDiagnostic, ...]
    passed: bool

    def atom_by_bits(self, bits: Sequence[int]) -> AtomReport:
        for a in self.atoms:
            if a.pattern.bits == tuple(bits):
                return a
        raise KeyError(f"no atom with bits {bits}")


def _family_is_randomized(family: Family, names: Sequence[str]) -> bool:
    return any(
        family.set_of(n).descriptor.get("kind") == "random-ext" for n in names
    )


def verify_independence(
    family: Family,
    names: Optional[Sequence[str]] = None,
    schedule: WindowSchedule = DEFAULT_SCHEDULE,
    tol: Optional[Rational] = None,
    workers: int = 1,
) -> VerificationReport:
    """Check every sign pattern over the chosen members on the schedule.

    An atom passes when |empirical - expected| <= tol at the largest
    window and its own last-three-window spread is at most tol.  The
    default tolerance widens to 4/sqrt(N_max) when a randomized member
    is involved.
    """
    chosen = _resolve_names(family, names, MAX_VERIFY_MEMBERS)
    windows = schedule.windows()
    if tol is None:
        tol_f = default_tolerance(windows[-1], _family_is_randomized(family, chosen))
    else:
        tol_f = as_fraction(tol)

    reports = []
    all_pass = True
    for bits in product((0, 1), repeat=len(chosen)):
        expr = atom(family, bits, chosen)
        expected = expected_atom_density(family, bits, chosen)
        counts = tuple(expr.prefix_count(n, workers) for n in windows)
        densities = tuple(Fraction(c, n) for c, n in zip(counts, windows))
        tail = densities[-TAIL_WINDOWS:]
        osc = max(tail) - min(tail)
        dev = abs(densities[-1] - expected)
        ok = dev <= tol_f and osc <= tol_f
        all_pass = all_pass and ok
        reports.append(
            AtomReport(
                pattern=SignPattern(chosen, bits),
                expected=expected,
                windows=windows,
                counts=counts,
                densities=densities,
                empirical=densities[-1],
                deviation=dev,
                oscillation=osc,
                passed=ok,
            )
        )

    diagnostics = []
    for name in chosen:
        s = family.set_of(name)
        if isinstance(s, KWSet):
            n_max = windows[-1]
            diagnostics.append(
                BandDiagnostic(
                    name=name,
                    window=n_max,
                    hits=s.band_count(n_max),
                    bound=KWSet.band_bound(n_max),
                )
            )

    return VerificationReport(
        names=chosen,
        schedule=schedule,
        tol=tol_f,
        atoms=tuple(reports),
        band_diagnostics=tuple(diagnostics),
        passed=all_pass,
    )


# -- the generated field of sets ----------------------------------------


@dataclass(frozen=True)
class FieldElement:
    """A union of atoms, encoded by an atom-index bitmask: atom index i
    is the integer whose binary digits are the pattern bits, least
    member first."""

    names: tuple[str, ...]
    atom_mask: int
    expected: Fraction

    def patterns(self) -> tuple[tuple[int, ...], ...]:
        k = len(self.names)
        out = []
        for i in range(1 << k):
            if (self.atom_mask >> i) & 1:
                out.append(tuple((i >> j) & 1 for j in range(k)))
        return tuple(out)


def field_elements(
    family: Family, names: Optional[Sequence[str]] = None
) -> list[FieldElement]:
    """All 2**(2**k) elements of the finite field of sets generated by k
    members, with exact expected densities."""
    chosen = _resolve_names(family, names, MAX_FIELD_MEMBERS)
    k = len(chosen)
    densities = [family.density_of(n) for n in chosen]
    atoms = [
        atom_density(densities, tuple((i >> j) & 1 for j in range(k)))
        for i in range(1 << k)
    ]
    n_atoms = 1 << k
    values = [Fraction(0)] * (1 << n_atoms)
    for mask in range(1, 1 << n_atoms):
        low = (mask & -mask).bit_length() - 1
        values[mask] = values[mask & (mask - 1)] + atoms[low]
    return [FieldElement(chosen, mask, values[mask]) for mask in range(1 << n_atoms)]


def field_image(family: Family, names: Optional[Sequence[str]] = None) -> tuple[Fraction, ...]:
    """The multiset of expected densities over the generated field,
    sorted ascending (duplicates kept)."""
    return tuple(sorted(e.expected for e in field_elements(family, names)))


# -- grid coverage of the field image -----------------------------------


@dataclass(frozen=True)
class CellReport:
    index: int
    lo: Fraction
    hi: Fraction
    hit: bool
    witness: Optional[Fraction]


@dataclass(frozen=True)
class ScanReport:
    names: tuple[str, ...]
    delta: Fraction
    cells: tuple[CellReport, ...]
    full_coverage_expected: bool

    @property
    def unhit(self) -> tuple[CellReport, ...]:
        return tuple(c for c in self.cells if not c.hit)


def image_density_scan(
    family: Family,
    delta: Rational,
    names: Optional[Sequence[str]] = None,
    max_values: int = 1 << 20,
) -> ScanReport:
    """Report which width-delta grid cells of [0,1] contain an expected
    field-element density.

    Subset sums of the atom densities are enumerated exactly by grouping
    equal atom values, so a family of many equal-density members stays
    cheap; genuinely distinct atom values cap out at max_values sums.
    Full coverage is expected when the largest atom is below delta,
    i.e. when the product of max(p, 1-p) over the members is below it.
    """
    chosen = _resolve_names(family, names, len(family.names))
    d = as_fraction(delta)
    if not 0 < d < 1:
        raise ValueError("grid step must lie strictly in (0,1)")
    k = len(chosen)
    densities = [family.density_of(n) for n in chosen]
    atom_values: dict[Fraction, int] = {}
    for i in range(1 << k):
        v = atom_density(densities, tuple((i >> j) & 1 for j in range(k)))
        atom_values[v] = atom_values.get(v, 0) + 1

    sums = {Fraction(0)}
    for value, count in sorted(atom_values.items()):
        if len(sums) * (count + 1) > max_values:
            raise ValueError(
                f"field image too rich to enumerate (> {max_values} sums); "
                "scan fewer members"
            )
        sums = {s + j * value for s in sums for j in range(count + 1)}
    ordered = sorted(sums)

    largest_atom = max(atom_values)
    cell_count = int(-(-Fraction(1) // d))  # ceil(1/delta)
    import bisect as _bisect

    cells = []
    for j in range(cell_count):
        lo = j * d
        hi = min((j + 1) * d, Fraction(1))
        i = _bisect.bisect_left(ordered, lo)
        witness = None
        if i < len(ordered) and (ordered[i] < hi or (hi == 1 and ordered[i] == 1)):
            witness = ordered[i]
        cells.append(CellReport(j, lo, hi, witness is not None, witness))

    return ScanReport(
        names=chosen,
        delta=d,
        cells=tuple(cells),
        full_coverage_expected=largest_atom < d,
    )
