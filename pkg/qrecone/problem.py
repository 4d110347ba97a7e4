from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .barriers import Cone, ConePoint, OpPerspHypo, PSDCone, TracePerspHypo, parse_cone
from .errors import ProblemFormatError
from .ipm import ProblemSpec, SolverOptions

FORMAT_VERSION = 1


class _Reader:
    """Locates keys in the source text so errors carry a line and column."""

    def __init__(self, text: str) -> None:
        self.text = text

    def error(self, message: str, key: str | None = None) -> ProblemFormatError:
        line = column = None
        if key is not None:
            leaf = key.rsplit(".", 1)[-1].split("[", 1)[0]
            match = re.search(rf'"{re.escape(leaf)}"\s*:', self.text)
            if match:
                line = self.text.count("\n", 0, match.start()) + 1
                column = match.start() - (self.text.rfind("\n", 0, match.start()) + 1) + 1
        return ProblemFormatError(message, line, column, key)

    def require(self, obj: Mapping[str, Any], key: str, where: str) -> Any:
        if key not in obj:
            raise self.error(f"missing required key '{key}'", f"{where}.{key}" if where else key)
        return obj[key]


def _entry(value: Any) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex entries are [re, im] pairs, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"matrix entries must be numbers or [re, im] pairs, got {value!r}")
    return complex(float(value))


def matrix_from_json(data: Any) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(row, list) for row in data):
        raise ValueError("matrices are non-empty lists of rows")
    rows = [[_entry(v) for v in row] for row in data]
    if len({len(row) for row in rows}) != 1:
        raise ValueError("matrix rows must have equal length")
    return np.array(rows, dtype=np.complex128)


def matrix_to_json(M: np.ndarray) -> list[list[list[float]]]:
    M = np.atleast_2d(np.asarray(M, dtype=np.complex128))
    return [[[float(v.real), float(v.imag)] for v in row] for row in M]


def point_from_json(cone: Cone, data: Mapping[str, Any], reader: _Reader, where: str) -> ConePoint:
    try:
        if isinstance(cone, PSDCone):
            return ConePoint(matrix_from_json(reader.require(data, "X", where)))
        Y = matrix_from_json(reader.require(data, "Y", where))
        if isinstance(cone, TracePerspHypo):
            return ConePoint(float(reader.require(data, "X", where)), Y, float(reader.require(data, "z", where)))
        X = matrix_from_json(reader.require(data, "X", where))
        if isinstance(cone, OpPerspHypo):
            return ConePoint(X, Y, matrix_from_json(reader.require(data, "Z", where)))
        return ConePoint(X, Y, float(reader.require(data, "z", where)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ProblemFormatError):
            raise
        raise reader.error(str(exc), where) from exc


def point_to_json(cone: Cone, pt: ConePoint) -> dict[str, Any]:
    if isinstance(cone, PSDCone):
        return {"X": matrix_to_json(pt.X)}
    if isinstance(cone, TracePerspHypo):
        return {"X": float(np.real(pt.X)), "Y": matrix_to_json(pt.Y), "z": float(pt.Z)}
    if isinstance(cone, OpPerspHypo):
        return {"X": matrix_to_json(pt.X), "Y": matrix_to_json(pt.Y), "Z": matrix_to_json(pt.Z)}
    return {"X": matrix_to_json(pt.X), "Y": matrix_to_json(pt.Y), "z": float(pt.Z)}


def cone_from_json(data: Mapping[str, Any], reader: _Reader, where: str) -> Cone:
    if not isinstance(data, Mapping):
        raise reader.error("cone entries must be objects", where)
    kind = reader.require(data, "kind", where)
    n = reader.require(data, "n", where)
    if not isinstance(kind, str):
        raise reader.error(f"cone kind must be a string, got {kind!r}", f"{where}.kind")
    if isinstance(n, bool) or not isinstance(n, int):
        raise reader.error(f"cone size n must be an integer, got {n!r}", f"{where}.n")
    params = data.get("params")
    if params is not None and "kraus" in params:
        try:
            params = {**params, "kraus": [matrix_from_json(K) for K in params["kraus"]]}
        except ValueError as exc:
            raise reader.error(str(exc), f"{where}.params.kraus") from exc
    try:
        return parse_cone(kind, n, data.get("m"), params)
    except ValueError as exc:
        raise reader.error(str(exc), f"{where}.kind") from exc


def cone_to_json(cone: Cone) -> dict[str, Any]:
    out: dict[str, Any] = {"kind": cone.spec, "n": cone.n}
    if isinstance(cone, OpPerspHypo):
        out["m"] = cone.m
        if cone.phi.variant == "kraus":
            out["params"] = {"kraus": [matrix_to_json(K) for K in cone.phi.kraus]}
    return out


def _vector(reader: _Reader, data: Any, key: str) -> np.ndarray:
    try:
        return np.asarray(data, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise reader.error(f"'{key}' must be a list of numbers", key) from exc


def parse_problem(text: str) -> ProblemSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(exc.msg, exc.lineno, exc.colno) from exc
    reader = _Reader(text)
    if not isinstance(doc, dict):
        raise ProblemFormatError("a problem file is a JSON object", 1, 1)
    version = doc.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise reader.error(f"unsupported format version {version!r}, expected {FORMAT_VERSION}", "version")
    cone_docs = reader.require(doc, "cones", "")
    if not isinstance(cone_docs, list) or not cone_docs:
        raise reader.error("'cones' must be a non-empty list", "cones")
    cones = [cone_from_json(entry, reader, f"cones[{i}]") for i, entry in enumerate(cone_docs)]

    A_doc = reader.require(doc, "A", "")
    try:
        A = np.asarray(A_doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise reader.error("'A' must be a list of numeric rows", "A") from exc
    b = _vector(reader, reader.require(doc, "b", ""), "b")
    c = _vector(reader, reader.require(doc, "c", ""), "c")
    if A.size == 0:
        A = np.zeros((0, sum(cone.dim for cone in cones)))

    start = None
    if "start" in doc:
        entries = doc["start"]
        if not isinstance(entries, list) or len(entries) != len(cones):
            raise reader.error(f"'start' must list one point per cone ({len(cones)})", "start")
        start = [point_from_json(cone, entry, reader, f"start[{i}]") for i, (cone, entry) in enumerate(zip(cones, entries))]

    solver = SolverOptions()
    if "solver" in doc:
        try:
            solver = SolverOptions.from_mapping(doc["solver"])
        except KeyError as exc:
            raise reader.error(f"unknown solver option '{exc.args[0]}'", f"solver.{exc.args[0]}") from exc
        except (TypeError, ValueError) as exc:
            raise reader.error(str(exc), "solver") from exc

    try:
        return ProblemSpec(
            cones=cones,
            A=A,
            b=b,
            c=c,
            start=start,
            name=str(doc.get("name", "")),
            description=str(doc.get("description", "")),
            solver=solver,
            expected=doc.get("expected"),
        )
    except ValueError as exc:
        raise reader.error(str(exc), "A") from exc


def problem_to_json(problem: ProblemSpec) -> str:
    doc: dict[str, Any] = {
        "version": FORMAT_VERSION,
        "name": problem.name,
        "description": problem.description,
        "cones": [cone_to_json(cone) for cone in problem.cones],
        "A": problem.A.tolist(),
        "b": problem.b.tolist(),
        "c": problem.c.tolist(),
    }
    if problem.start is not None:
        doc["start"] = [point_to_json(cone, pt) for cone, pt in zip(problem.cones, problem.start)]
    doc["solver"] = problem.solver.to_mapping()
    if problem.expected is not None:
        doc["expected"] = problem.expected
    return json.dumps(doc, indent=2)


def load_problem(path: Path) -> ProblemSpec:
    return parse_problem(Path(path).read_text())


def parse_point(cone: Cone, text: str) -> ConePoint:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError("a point file is a JSON object", 1, 1)
    return point_from_json(cone, doc, _Reader(text), "point")


def load_point(cone: Cone, path: Path) -> ConePoint:
    return parse_point(cone, Path(path).read_text())
