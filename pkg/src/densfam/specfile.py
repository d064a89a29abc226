"""Family specification files.

A spec file is a JSON document naming the sets to build.  The schema,
not the syntax, is normative; every entry is a descriptor with a unique
name, a construction kind, and kind-specific parameters:

    {
      "family": [
        {"name": "A0", "kind": "kw", "radicand": 2, "threshold": "0.3"},
        {"name": "C0", "kind": "coded", "sigma": "00", "depth_limit": 4},
        {"name": "B0", "kind": "block", "classical": "C0"},
        {"name": "R",  "kind": "random-ext", "family": ["A0"],
         "distinguished": "A0", "target": "0.5", "seed": 123},
        {"name": "G",  "kind": "gap", "target": "0.9", "size": 4},
        {"name": "T",  "kind": "thin-ext", "family": ["A0"]},
        {"name": "E",  "kind": "expr", "density": "0.15",
         "expr": {"op": "intersect",
                  "args": [{"ref": "A0"},
                           {"op": "complement", "args": [{"ref": "A1"}]}]}}
      ],
      "schedule": {"start": 10000, "ratio": "2", "count": 10},
      "tol": "0.005"
    }

Entries may reference earlier entries by name.  A "gap" entry expands
into `size` members named `<name>0 .. <name><size-1>`.  Entries that
carry a density (kw, block, random-ext, gap, thin-ext, and expr with an
explicit "density") form the verification family, in definition order;
"coded" entries and density-less exprs are auxiliary building blocks.
Rationals are strings like "0.3" or "3/10" so nothing is lost to float
parsing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .constructors import (
    BlockParitySet,
    ExtensionParams,
    Family,
    coded_independent_set,
    gap_family,
    kw_set,
    random_extension,
)
from .density import WindowSchedule, as_fraction
from .reaping import thin_extension
from .sets import (
    SetBase,
    complement,
    intersect,
    omega,
    scale,
    sym_diff,
    union,
)


class SpecError(ValueError):
    """Malformed or inconsistent spec document."""


@dataclass
class LoadedSpec:
    doc: dict
    sets: dict[str, SetBase]
    family: Optional[Family]
    schedule: WindowSchedule
    tol: Optional[Fraction]
    seeds: dict[str, int] = field(default_factory=dict)
    extension_params: dict[str, ExtensionParams] = field(default_factory=dict)

    def require_family(self) -> Family:
        if self.family is None:
            raise SpecError("family must be nonempty: no entry declares a density")
        return self.family


def parse_spec_text(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"spec is not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise SpecError("spec document must be a JSON object")
    return doc


def read_spec_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_spec_text(fh.read())


def _need(entry: dict, key: str, name: str):
    if key not in entry:
        raise SpecError(f"entry {name!r} is missing required field {key!r}")
    return entry[key]


def _rational(value, what: str) -> Fraction:
    try:
        return as_fraction(value)
    except (ValueError, TypeError, ZeroDivisionError):
        raise SpecError(f"{what} is not a rational: {value!r}") from None


def _build_expr(node, sets: dict[str, SetBase], name: str) -> SetBase:
    if not isinstance(node, dict):
        raise SpecError(f"entry {name!r}: expression nodes must be objects")
    if "ref" in node:
        ref = node["ref"]
        if ref not in sets:
            raise SpecError(f"entry {name!r} references unknown set {ref!r}")
        return sets[ref]
    op = node.get("op")
    if op == "omega":
        return omega()
    args = node.get("args", [])
    built = [_build_expr(a, sets, name) for a in args]
    if op == "complement":
        if len(built) != 1:
            raise SpecError(f"entry {name!r}: complement takes one argument")
        return complement(built[0])
    if op == "scale":
        if len(built) != 1 or "factor" not in node:
            raise SpecError(f"entry {name!r}: scale takes one argument and a factor")
        return scale(built[0], int(node["factor"]))
    if op == "intersect":
        return intersect(*built)
    if op == "union":
        return union(*built)
    if op == "sym_diff":
        if len(built) != 2:
            raise SpecError(f"entry {name!r}: sym_diff takes two arguments")
        return sym_diff(built[0], built[1])
    raise SpecError(f"entry {name!r}: unknown expression op {op!r}")


def _subfamily(
    names: list, sets: dict[str, SetBase],
    densities: dict[str, Fraction], context: str,
) -> Family:
    if not isinstance(names, list) or not names:
        raise SpecError(f"entry {context!r}: 'family' must be a nonempty name list")
    for n in names:
        if n not in sets:
            raise SpecError(f"entry {context!r} references unknown set {n!r}")
        if n not in densities:
            raise SpecError(
                f"entry {context!r}: set {n!r} has no declared density"
            )
    return Family(
        tuple(names),
        tuple(sets[n] for n in names),
        tuple(densities[n] for n in names),
    )


def load_spec(doc: dict, default_seed: Optional[int] = None) -> LoadedSpec:
    """Build every named set in the document, in order."""
    entries = doc.get("family")
    if not isinstance(entries, list):
        raise SpecError("spec needs a 'family' list of set descriptors")

    sets: dict[str, SetBase] = {}
    densities: dict[str, Fraction] = {}
    family_names: list[str] = []
    seeds: dict[str, int] = {}
    ext_params: dict[str, ExtensionParams] = {}

    def define(name: str, s: SetBase, density: Optional[Fraction]) -> None:
        if not isinstance(name, str) or not name:
            raise SpecError("every entry needs a nonempty string name")
        if name in sets:
            raise SpecError(f"duplicate set name {name!r}")
        sets[name] = s
        if density is not None:
            if not 0 < density < 1:
                raise SpecError(
                    f"entry {name!r} declares density {density} outside (0,1)"
                )
            densities[name] = density
            family_names.append(name)

    for entry in entries:
        if not isinstance(entry, dict):
            raise SpecError("each family entry must be an object")
        name = _need(entry, "name", "<unnamed>")
        kind = _need(entry, "kind", name)

        if kind == "kw":
            radicand = int(_need(entry, "radicand", name))
            threshold = _rational(_need(entry, "threshold", name), f"{name} threshold")
            try:
                s = kw_set(radicand, threshold)
            except ValueError as e:
                raise SpecError(f"entry {name!r}: {e}") from None
            define(name, s, threshold)

        elif kind == "coded":
            sigma = str(_need(entry, "sigma", name))
            if any(c not in "01" for c in sigma):
                raise SpecError(f"entry {name!r}: sigma must be a string of 0/1")
            depth = int(entry.get("depth_limit", 4))
            try:
                s = coded_independent_set(tuple(int(c) for c in sigma), depth)
            except ValueError as e:
                raise SpecError(f"entry {name!r}: {e}") from None
            define(name, s, None)

        elif kind == "block":
            ref = _need(entry, "classical", name)
            if ref not in sets:
                raise SpecError(f"entry {name!r} references unknown set {ref!r}")
            define(name, BlockParitySet(sets[ref]), Fraction(1, 2))

        elif kind == "random-ext":
            sub = _subfamily(
                _need(entry, "family", name), sets, densities, name
            )
            distinguished = _need(entry, "distinguished", name)
            target = _rational(_need(entry, "target", name), f"{name} target")
            seed = entry.get("seed", default_seed)
            if seed is None:
                raise SpecError(
                    f"entry {name!r} needs a seed (in the entry or via --seed)"
                )
            try:
                s, params = random_extension(sub, distinguished, target, int(seed))
            except (ValueError, KeyError) as e:
                raise SpecError(f"entry {name!r}: {e}") from None
            seeds[name] = int(seed)
            ext_params[name] = params
            define(name, s, target)

        elif kind == "gap":
            target = _rational(_need(entry, "target", name), f"{name} target")
            size = int(_need(entry, "size", name))
            try:
                fam = gap_family(target, size, names=[f"{name}{i}" for i in range(size)])
            except ValueError as e:
                raise SpecError(f"entry {name!r}: {e}") from None
            for n, s, d in fam.items():
                define(n, s, d)

        elif kind == "thin-ext":
            sub = _subfamily(
                _need(entry, "family", name), sets, densities, name
            )
            define(name, thin_extension(sub), Fraction(1, 2))

        elif kind == "expr":
            s = _build_expr(_need(entry, "expr", name), sets, name)
            density = None
            if "density" in entry:
                density = _rational(entry["density"], f"{name} density")
            define(name, s, density)

        else:
            raise SpecError(f"entry {name!r} has unknown kind {kind!r}")

    family = None
    if family_names:
        family = Family(
            tuple(family_names),
            tuple(sets[n] for n in family_names),
            tuple(densities[n] for n in family_names),
        )

    schedule = schedule_from_doc(doc.get("schedule"))
    tol = None
    if "tol" in doc:
        tol = _rational(doc["tol"], "tol")

    return LoadedSpec(
        doc=doc,
        sets=sets,
        family=family,
        schedule=schedule,
        tol=tol,
        seeds=seeds,
        extension_params=ext_params,
    )


def schedule_from_doc(node) -> WindowSchedule:
    if node is None:
        return WindowSchedule()
    if not isinstance(node, dict):
        raise SpecError("'schedule' must be an object")
    try:
        return WindowSchedule(
            start=int(node.get("start", 10_000)),
            ratio=as_fraction(node.get("ratio", 2)),
            count=int(node.get("count", 10)),
            end=int(node["end"]) if "end" in node and node["end"] is not None else None,
        )
    except ValueError as e:
        raise SpecError(f"bad schedule: {e}") from None
