"""JSON files for specifications and solutions."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Any, Mapping

from .architecture import Architecture
from .logic import ConjunctiveSpec, LtlSyntaxError, to_text
from .machines import GuaranteeTs, LocalStrategy, MachineFormatError, MooreTs, loads, dumps, to_dot


class SpecFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SpecFile:
    arch: Architecture
    spec: ConjunctiveSpec
    texts: tuple[str, ...]


def _str_list(data: Mapping, key: str, where: str) -> list[str]:
    value = data.get(key, [])
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise SpecFormatError(f"{where}: {key!r} must be a list of strings")
    return value


def spec_from_dict(data: Any) -> SpecFile:
    if not isinstance(data, dict):
        raise SpecFormatError("specification must be a JSON object")
    procs = data.get("processes")
    if not isinstance(procs, list):
        raise SpecFormatError("'processes' must be a list")
    entries = []
    for k, p in enumerate(procs):
        if not isinstance(p, dict) or not isinstance(p.get("name"), str):
            raise SpecFormatError(f"process #{k} needs a string 'name'")
        entries.append((p["name"], _str_list(p, "inputs", p["name"]), _str_list(p, "outputs", p["name"])))
    env = _str_list(data, "env_outputs", "specification")
    texts = _str_list(data, "conjuncts", "specification")
    try:
        spec = ConjunctiveSpec.parse(texts)
    except LtlSyntaxError as exc:
        raise SpecFormatError(f"bad conjunct: {exc}") from exc
    return SpecFile(Architecture.build(entries, env), spec, tuple(texts))


def spec_to_dict(arch: Architecture, spec: ConjunctiveSpec, texts=None) -> dict:
    return {
        "processes": [
            {"name": p.name, "inputs": sorted(p.inputs), "outputs": sorted(p.outputs)} for p in arch.processes
        ],
        "env_outputs": sorted(arch.env_outputs),
        "conjuncts": list(texts) if texts is not None else [to_text(c) for c in spec.conjuncts],
    }


def dump_spec(sf: SpecFile) -> dict:
    return spec_to_dict(sf.arch, sf.spec, sf.texts)


def load_spec(path: str) -> SpecFile:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"{path}: invalid JSON: {exc}") from exc
    return spec_from_dict(data)


def save_spec(path: str, sf: SpecFile) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dump_spec(sf), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# solutions


@dataclass
class LoadedSolution:
    strategies: dict[str, MooreTs]
    certificates: dict[str, GuaranteeTs]
    local: dict[str, LocalStrategy]


def write_solution(directory: str, sol, report: dict | None = None, fmt: str = "both") -> list[str]:
    """Write ``<p>.strategy``, ``<p>.certificate`` and ``local/<p>`` files plus ``report.json``."""
    if fmt not in ("json", "dot", "both"):
        raise ValueError(f"unknown format {fmt!r}")
    os.makedirs(os.path.join(directory, "local"), exist_ok=True)
    written = []

    def put(path, text):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        written.append(path)

    groups = (("strategy", sol.strategies, ""), ("certificate", sol.certificates, ""),
              ("local", getattr(sol, "local", {}) or {}, "local"))
    for kind, machines, sub in groups:
        for name, m in machines.items():
            base = os.path.join(directory, sub, name) if sub else os.path.join(directory, f"{name}.{kind}")
            if fmt in ("json", "both"):
                put(base + ".json", dumps(m) + "\n")
            if fmt in ("dot", "both"):
                put(base + ".dot", to_dot(m, f"{kind}_{name}"))
    if report is not None:
        put(os.path.join(directory, "report.json"), json.dumps(report, indent=2) + "\n")
    return written


def read_solution(directory: str, arch: Architecture) -> LoadedSolution:
    """Read machines written by :func:`write_solution`; local strategies are optional."""
    def read(path):
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())

    strategies, certificates, local = {}, {}, {}
    for name in arch.names:
        strategies[name] = read(os.path.join(directory, f"{name}.strategy.json"))
        cert = read(os.path.join(directory, f"{name}.certificate.json"))
        if not isinstance(cert, GuaranteeTs):
            raise MachineFormatError(f"{name}.certificate.json is not a certificate")
        certificates[name] = cert
        path = os.path.join(directory, "local", f"{name}.json")
        if os.path.exists(path):
            local[name] = read(path)
    return LoadedSolution(strategies, certificates, local)
