"""JSON problem documents: parsing, validation and typed access.

A document carries the instance geometry (atoms, dipoles, segments, vector
atoms, cell fields, plans, test functions) plus named options.  Unknown keys
are rejected so typos fail loudly; the domain may be given explicitly or is
the 5%-padded bounding box of everything in the file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError
from .funcs import Coordinate, Polynomial, RadialBump, polynomial_family
from .genplan import GeneralizedPlan, PlanAtom, validate_plan_domain
from .geom import Domain, Grid
from .measures import (
    CellField,
    DipoleChain,
    Distribution,
    SignedAtomMeasure,
    StructuredVectorMeasure,
    from_dipoles,
)

__all__ = ["ProblemDocument", "load_document", "parse_document"]

_TOP_KEYS = {
    "version",
    "domain",
    "atoms",
    "dipoles",
    "segments",
    "vector_atoms",
    "cells",
    "plan",
    "test_functions",
    "options",
}


def _require_keys(obj, allowed, where: str):
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ValidationError(f"unknown key(s) {sorted(unknown)} in {where}")


def _get(obj: dict, key: str, where: str):
    if key not in obj:
        raise ValidationError(f"{where}: missing required key {key!r}")
    return obj[key]


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class ProblemDocument:
    version: int
    domain: Domain
    atoms: SignedAtomMeasure
    dipoles: Optional[DipoleChain]
    vector_measure: StructuredVectorMeasure
    plan: Optional[GeneralizedPlan]
    test_functions: Optional[tuple]
    options: dict = field(default_factory=dict)

    def atom_distribution(self, warnings_out: Optional[list] = None) -> Distribution:
        """The measure-type distribution of the document: atoms plus truncated
        dipole pairs."""
        measure = self.atoms
        if self.dipoles is not None:
            eps = self.options.get("truncation_eps", 0.0)
            truncated, bound = from_dipoles(self.dipoles, truncation_eps=float(eps))
            measure = measure + truncated.measure_part
            if warnings_out is not None and bound > 0.0:
                warnings_out.append(
                    f"dipole chain truncated: norm error bound {bound!r}"
                )
        return Distribution.from_measure(measure)

    def full_distribution(self, warnings_out: Optional[list] = None) -> Distribution:
        f = self.atom_distribution(warnings_out)
        return Distribution(f.measure_part, self.vector_measure)

    def family(self, dim: int):
        if self.test_functions is not None:
            return self.test_functions
        return polynomial_family(dim, 3)


def _parse_point(value, where: str):
    if not isinstance(value, (list, tuple)) or not 2 <= len(value) <= 3:
        raise ValidationError(f"{where}: expected a 2-d or 3-d coordinate list")
    return [_as_float(v, where) for v in value]


def _parse_test_function(obj: dict, dim: int, idx: int):
    where = f"test_functions[{idx}]"
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValidationError(f"{where}: expected an object with a 'kind'")
    kind = obj["kind"]
    if kind == "coordinate":
        _require_keys(obj, {"kind", "axis"}, where)
        axis = int(obj.get("axis", 0))
        if not 0 <= axis < dim:
            raise ValidationError(f"{where}: axis {axis} out of range for dim {dim}")
        return Coordinate(axis=axis, dim=dim)
    if kind == "polynomial":
        _require_keys(obj, {"kind", "coeffs"}, where)
        coeffs = {}
        for key, c in obj.get("coeffs", {}).items():
            exps = tuple(int(e) for e in key.split(","))
            coeffs[exps] = float(c)
        return Polynomial(coeffs=coeffs, dim=dim)
    if kind == "radial_bump":
        _require_keys(obj, {"kind", "center", "radius", "amplitude"}, where)
        return RadialBump(
            center=_parse_point(_get(obj, "center", where), where),
            radius=_as_float(_get(obj, "radius", where), f"{where}.radius"),
            amplitude=_as_float(obj.get("amplitude", 1.0), f"{where}.amplitude"),
        )
    raise ValidationError(f"{where}: unknown test function kind {kind!r}")


def parse_document(data: dict) -> ProblemDocument:
    if not isinstance(data, dict):
        raise ValidationError("document root must be a JSON object")
    _require_keys(data, _TOP_KEYS, "document root")
    version = data.get("version")
    if version != 1:
        raise ValidationError(f"unsupported document version {version!r} (expected 1)")

    atoms = []
    for k, entry in enumerate(data.get("atoms", [])):
        _require_keys(entry, {"point", "mass"}, f"atoms[{k}]")
        atoms.append(
            (
                _parse_point(_get(entry, "point", f"atoms[{k}]"), f"atoms[{k}].point"),
                _as_float(_get(entry, "mass", f"atoms[{k}]"), f"atoms[{k}].mass"),
            )
        )

    dipoles = None
    if "dipoles" in data:
        block = data["dipoles"]
        _require_keys(block, {"pairs", "tail"}, "dipoles")
        pairs = []
        for k, entry in enumerate(block.get("pairs", [])):
            _require_keys(entry, {"p", "n"}, f"dipoles.pairs[{k}]")
            pairs.append(
                (
                    _parse_point(_get(entry, "p", f"dipoles.pairs[{k}]"), f"dipoles.pairs[{k}].p"),
                    _parse_point(_get(entry, "n", f"dipoles.pairs[{k}]"), f"dipoles.pairs[{k}].n"),
                )
            )
        tail = None
        if block.get("tail") is not None:
            _require_keys(block["tail"], {"ratio", "first_term"}, "dipoles.tail")
            tail = (
                _as_float(_get(block["tail"], "ratio", "dipoles.tail"), "dipoles.tail.ratio"),
                _as_float(_get(block["tail"], "first_term", "dipoles.tail"), "dipoles.tail.first_term"),
            )
        dipoles = DipoleChain(pairs=tuple(pairs), tail=tail)

    segments = []
    for k, entry in enumerate(data.get("segments", [])):
        _require_keys(entry, {"a", "b", "density"}, f"segments[{k}]")
        segments.append(
            tuple(
                _parse_point(_get(entry, key, f"segments[{k}]"), f"segments[{k}].{key}")
                for key in ("a", "b", "density")
            )
        )

    vector_atoms = []
    for k, entry in enumerate(data.get("vector_atoms", [])):
        _require_keys(entry, {"point", "vector"}, f"vector_atoms[{k}]")
        vector_atoms.append(
            (
                _parse_point(_get(entry, "point", f"vector_atoms[{k}]"), f"vector_atoms[{k}].point"),
                _parse_point(_get(entry, "vector", f"vector_atoms[{k}]"), f"vector_atoms[{k}].vector"),
            )
        )

    plan = None
    if "plan" in data:
        plan_atoms = []
        for k, entry in enumerate(data["plan"]):
            _require_keys(entry, {"base", "dir", "t", "mass"}, f"plan[{k}]")
            plan_atoms.append(
                PlanAtom(
                    base=_parse_point(_get(entry, "base", f"plan[{k}]"), f"plan[{k}].base"),
                    dir=_parse_point(_get(entry, "dir", f"plan[{k}]"), f"plan[{k}].dir"),
                    t=_as_float(_get(entry, "t", f"plan[{k}]"), f"plan[{k}].t"),
                    mass=_as_float(_get(entry, "mass", f"plan[{k}]"), f"plan[{k}].mass"),
                )
            )
        plan = GeneralizedPlan(tuple(plan_atoms))

    options = data.get("options", {})
    if not isinstance(options, dict):
        raise ValidationError("options must be an object")

    # the instance dimension: from any geometry present
    dims = set()
    for p, _ in atoms:
        dims.add(len(p))
    if dipoles is not None and len(dipoles):
        dims.add(dipoles.dim)
    for a, b, d in segments:
        dims.update({len(a), len(b), len(d)})
    for p, v in vector_atoms:
        dims.update({len(p), len(v)})
    if plan is not None and len(plan):
        dims.add(plan.atoms[0].base.size)
    if "domain" in data:
        _require_keys(data["domain"], {"lower", "upper"}, "domain")
        dims.add(len(_get(data["domain"], "lower", "domain")))
    if len(dims) > 1:
        raise ValidationError(f"mixed dimensions in document: {sorted(dims)}")
    dim = dims.pop() if dims else 2

    if "cells" in data:
        _require_keys(data["cells"], {"resolution", "vectors", "domain"}, "cells")
        if "domain" not in data and "domain" not in data["cells"]:
            raise ValidationError("cells require an explicit domain")

    measure = SignedAtomMeasure.from_atoms(atoms, dim=dim)

    geometry = [measure.points] if len(measure) else []
    if dipoles is not None:
        for p, n in dipoles.pairs:
            geometry.append(np.vstack([p, n]))
    for a, b, _ in segments:
        geometry.append(np.array([a, b], dtype=float))
    for p, _ in vector_atoms:
        geometry.append(np.array([p], dtype=float))
    if plan is not None:
        for atom in plan.atoms:
            geometry.append(np.vstack([atom.base, atom.head]))

    if "domain" in data:
        domain = Domain(
            _parse_point(_get(data["domain"], "lower", "domain"), "domain.lower"),
            _parse_point(_get(data["domain"], "upper", "domain"), "domain.upper"),
        )
    elif geometry:
        domain = Domain.from_geometry(np.vstack(geometry))
    else:
        domain = Domain([0.0] * dim, [1.0] * dim)

    cell_field = None
    if "cells" in data:
        block = data["cells"]
        if "domain" in block:
            cell_domain = Domain(
                _parse_point(_get(block["domain"], "lower", "cells.domain"), "cells.domain.lower"),
                _parse_point(_get(block["domain"], "upper", "cells.domain"), "cells.domain.upper"),
            )
        else:
            cell_domain = domain
        grid = Grid(cell_domain, tuple(int(r) for r in _get(block, "resolution", "cells")))
        try:
            vectors = np.asarray(_get(block, "vectors", "cells"), dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"cells.vectors: {exc}") from exc
        cell_field = CellField(grid=grid, vectors=vectors)

    vector_measure = StructuredVectorMeasure.build(
        dim, atoms=vector_atoms, segments=segments, cells=cell_field
    )

    for pts in geometry:
        for p in pts:
            if not domain.contains(p, tol=1e-12):
                raise ValidationError(
                    f"geometry point {np.asarray(p).tolist()} lies outside the domain"
                )
    if plan is not None:
        validate_plan_domain(plan, domain)

    test_functions = None
    if "test_functions" in data:
        test_functions = tuple(
            _parse_test_function(obj, dim, k) for k, obj in enumerate(data["test_functions"])
        )

    return ProblemDocument(
        version=1,
        domain=domain,
        atoms=measure,
        dipoles=dipoles,
        vector_measure=vector_measure,
        plan=plan,
        test_functions=test_functions,
        options=dict(options),
    )


def load_document(path: str) -> ProblemDocument:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        data = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_document(data)
