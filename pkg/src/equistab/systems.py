"""System definitions: built-in registry and the JSON file format.

A system file looks like::

    {
      "schema": "equistab.system/1",
      "name": "rigid_body",
      "dim": 3,
      "variables": ["m1", "m2", "m3"],
      "parameters": {"I1": 3.0, "I2": 2.0, "I3": 1.0, "M": 1.0},
      "vector_field": [[{"c": 0.5, "e": [0, 1, 1]}], ...],
      "constants": {"C1": [...], "C2": [...]},
      "equilibria": {"spin-major": [1.0, 0.0, 0.0]}
    }

Polynomials are arrays of ``{"c": coefficient, "e": exponents}`` objects.
Parameters are recorded for provenance; coefficients are already numeric.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .fields import (
    EquilibriumError,
    EquilibriumPoint,
    PolyScalarField,
    PolyVectorField,
    format_monomial,
    validate_conservation,
)
from .methods import AnalysisProblem

SYSTEM_SCHEMA = "equistab.system/1"
DATA_DIR = Path(__file__).parent / "data"


class SystemFormatError(ValueError):
    """Malformed system file; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = "$", line: int | None = None):
        where = f"{path}" + (f" (line {line})" if line is not None else "")
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


class SystemValidationError(ValueError):
    """Well-formed file whose content violates an invariant."""


@dataclass
class SystemDefinition:
    name: str
    vector_field: PolyVectorField
    constants: dict[str, PolyScalarField] = field(default_factory=dict)
    parameters: dict[str, float] = field(default_factory=dict)
    equilibria: dict[str, np.ndarray] = field(default_factory=dict)
    variables: list[str] = field(default_factory=list)
    description: str = ""

    def __post_init__(self):
        if not self.variables:
            self.variables = [f"x{k + 1}" for k in range(self.dim)]

    @property
    def dim(self) -> int:
        return self.vector_field.dim

    def validate(self) -> None:
        report = validate_conservation(self.vector_field, list(self.constants.values()), list(self.constants))
        if not report.passed:
            lines = []
            for r in report.failures:
                mons = ", ".join(f"{c:+.6g}*{format_monomial(e, self.variables)}" for c, e in r.offending)
                lines.append(f"constant {r.name!r} is not conserved; L_f {r.name} has residual monomials {mons}")
            raise SystemValidationError("\n".join(lines))
        for name, x in self.equilibria.items():
            try:
                EquilibriumPoint.of(self.vector_field, x)
            except EquilibriumError as exc:
                raise SystemValidationError(f"equilibrium {name!r}: {exc}") from None

    def equilibrium(self, name: str) -> EquilibriumPoint:
        if name not in self.equilibria:
            known = ", ".join(self.equilibria) or "none"
            raise KeyError(f"unknown equilibrium {name!r} (known: {known})")
        return EquilibriumPoint.of(self.vector_field, self.equilibria[name])

    def problem(self, equilibrium: str, pivot: int = 1) -> AnalysisProblem:
        return AnalysisProblem(
            self.vector_field,
            tuple(self.constants.values()),
            pivot,
            self.equilibrium(equilibrium),
            tuple(self.constants),
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "schema": SYSTEM_SCHEMA,
            "name": self.name,
            "description": self.description,
            "dim": self.dim,
            "variables": list(self.variables),
            "parameters": {k: float(v) for k, v in self.parameters.items()},
            "vector_field": [poly_to_json(c) for c in self.vector_field.components],
            "constants": {k: poly_to_json(c) for k, c in self.constants.items()},
            "equilibria": {k: [float(v) for v in x] for k, x in self.equilibria.items()},
        }


def poly_to_json(p: PolyScalarField) -> list[dict[str, Any]]:
    return [{"c": c, "e": list(e)} for c, e in p.terms]


def poly_from_json(data: Any, dim: int, path: str) -> PolyScalarField:
    if not isinstance(data, list):
        raise SystemFormatError("polynomial must be an array of {c, e} terms", path)
    terms = []
    for t, term in enumerate(data):
        tp = f"{path}[{t}]"
        if not isinstance(term, dict) or set(term) != {"c", "e"}:
            raise SystemFormatError("term must be an object with exactly the keys 'c' and 'e'", tp)
        c, e = term["c"], term["e"]
        if isinstance(c, bool) or not isinstance(c, (int, float)):
            raise SystemFormatError("coefficient must be a number", f"{tp}.c")
        if not isinstance(e, list) or len(e) != dim:
            raise SystemFormatError(f"exponent vector must be an array of length {dim}", f"{tp}.e")
        if any(isinstance(p, bool) or not isinstance(p, int) or p < 0 for p in e):
            raise SystemFormatError("exponents must be non-negative integers", f"{tp}.e")
        terms.append((float(c), e))
    return PolyScalarField(dim, terms)


def canonical_json(data: dict[str, Any]) -> dict[str, Any]:
    """Normalize a raw system document the way a load/serialize round trip does."""
    return system_from_json(data, validate=False).to_json()


def system_from_json(data: Any, validate: bool = True) -> SystemDefinition:
    if not isinstance(data, dict):
        raise SystemFormatError("top level must be an object")
    schema = data.get("schema", SYSTEM_SCHEMA)
    if schema != SYSTEM_SCHEMA:
        raise SystemFormatError(f"unsupported schema {schema!r}", "$.schema")
    for key in ("name", "dim", "vector_field"):
        if key not in data:
            raise SystemFormatError("missing required field", f"$.{key}")
    dim = data["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SystemFormatError("dim must be a positive integer", "$.dim")
    if not isinstance(data["name"], str):
        raise SystemFormatError("name must be a string", "$.name")
    vf_data = data["vector_field"]
    if not isinstance(vf_data, list) or len(vf_data) != dim:
        raise SystemFormatError(f"vector_field must list {dim} component polynomials", "$.vector_field")
    vf = PolyVectorField([poly_from_json(p, dim, f"$.vector_field[{k}]") for k, p in enumerate(vf_data)])

    constants_data = data.get("constants", {})
    if not isinstance(constants_data, dict):
        raise SystemFormatError("constants must be an object of name -> polynomial", "$.constants")
    constants = {name: poly_from_json(p, dim, f"$.constants.{name}") for name, p in constants_data.items()}

    params = data.get("parameters", {})
    if not isinstance(params, dict) or any(
        isinstance(v, bool) or not isinstance(v, (int, float)) for v in params.values()
    ):
        raise SystemFormatError("parameters must map names to numbers", "$.parameters")

    eq_data = data.get("equilibria", {})
    if not isinstance(eq_data, dict):
        raise SystemFormatError("equilibria must be an object of name -> coordinates", "$.equilibria")
    equilibria = {}
    for name, x in eq_data.items():
        if not isinstance(x, list) or len(x) != dim or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in x
        ):
            raise SystemFormatError(f"coordinates must be {dim} numbers", f"$.equilibria.{name}")
        equilibria[name] = np.array(x, dtype=float)

    variables = data.get("variables") or []
    if not isinstance(variables, list) or (variables and len(variables) != dim):
        raise SystemFormatError(f"variables must list {dim} names", "$.variables")

    system = SystemDefinition(
        name=data["name"],
        vector_field=vf,
        constants=constants,
        parameters={k: float(v) for k, v in params.items()},
        equilibria=equilibria,
        variables=list(variables),
        description=str(data.get("description", "")),
    )
    if validate:
        system.validate()
    return system


def load_system(path) -> SystemDefinition:
    """Parse and fully validate a system file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemFormatError(exc.msg, "$", exc.lineno) from None
    return system_from_json(data)


def save_system(system: SystemDefinition, path) -> None:
    Path(path).write_text(json.dumps(system.to_json(), indent=2) + "\n")


# -- built-in systems -----------------------------------------------------


def rigid_body(I1: float = 3.0, I2: float = 2.0, I3: float = 1.0, M: float = 1.0) -> SystemDefinition:
    """Euler equations for the free rigid body, ``I1 > I2 > I3 > 0``."""
    n = 3
    m1, m2, m3 = (PolyScalarField.variable(k, n) for k in range(n))
    vf = PolyVectorField(
        [
            (1 / I3 - 1 / I2) * (m2 * m3),
            (1 / I1 - 1 / I3) * (m1 * m3),
            (1 / I2 - 1 / I1) * (m1 * m2),
        ]
    )
    C1 = 0.5 * (m1 * m1 * (1 / I1) + m2 * m2 * (1 / I2) + m3 * m3 * (1 / I3))
    C2 = 0.5 * (m1 * m1 + m2 * m2 + m3 * m3)
    return SystemDefinition(
        name="rigid_body",
        description="Free rigid body (Euler momentum equations)",
        vector_field=vf,
        constants={"C1": C1, "C2": C2},
        parameters={"I1": I1, "I2": I2, "I3": I3, "M": M},
        equilibria={
            "spin-major": np.array([M, 0.0, 0.0]),
            "spin-middle": np.array([0.0, M, 0.0]),
            "spin-minor": np.array([0.0, 0.0, M]),
        },
        variables=["m1", "m2", "m3"],
    )


def lorenz5(b: float = 1.0, eps: float = 0.5, M: float = 1.0) -> SystemDefinition:
    """Lorenz five-component model.

    The last equation is ``x5' = x4/eps + b*x1*x2``; with that forcing term
    both quadratic constants are conserved.
    """
    n = 5
    x1, x2, x3, x4, x5 = (PolyScalarField.variable(k, n) for k in range(n))
    vf = PolyVectorField(
        [
            -1.0 * (x2 * x3) + b * (x2 * x5),
            x1 * x3 - b * (x1 * x5),
            -1.0 * (x1 * x2),
            (-1 / eps) * x5,
            (1 / eps) * x4 + b * (x1 * x2),
        ]
    )
    C1 = 0.5 * (x1 * x1 + 2.0 * (x2 * x2) + x3 * x3 + x4 * x4 + x5 * x5)
    C2 = 0.5 * (x1 * x1 + x2 * x2)
    return SystemDefinition(
        name="lorenz5",
        description="Lorenz five-component model",
        vector_field=vf,
        constants={"C1": C1, "C2": C2},
        parameters={"b": b, "eps": eps, "M": M},
        equilibria={"rest-M": np.array([0.0, 0.0, M, 0.0, 0.0])},
    )


REGISTRY: dict[str, Callable[..., SystemDefinition]] = {
    "rigid_body": rigid_body,
    "lorenz5": lorenz5,
}


def get_system(name_or_path: str) -> SystemDefinition:
    """Registry name, bundled data file stem, or a path to a system file."""
    if name_or_path in REGISTRY:
        system = REGISTRY[name_or_path]()
        system.validate()
        return system
    bundled = DATA_DIR / f"{name_or_path}.json"
    if bundled.exists():
        return load_system(bundled)
    path = Path(name_or_path)
    if path.exists():
        return load_system(path)
    raise KeyError(f"unknown system {name_or_path!r}; known: {', '.join(REGISTRY)}")
