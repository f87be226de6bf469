"""Lookup of packaged contract and suite fixtures."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from ..contract import ContractSpec

_PKG = "tokrail.fixtures"


def _read_packaged(kind: str, name: str) -> str:
    base = resources.files(_PKG) / kind / f"{name}.json"
    return base.read_text(encoding="utf-8")


def list_fixtures(kind: str) -> list[str]:
    base = resources.files(_PKG) / kind
    return sorted(p.name.removesuffix(".json") for p in base.iterdir() if p.name.endswith(".json"))


def load_contract_spec(ref: str) -> ContractSpec:
    """Resolve a contract reference: packaged fixture name or a file path."""
    p = Path(ref)
    if p.suffix == ".json" or p.exists():
        return ContractSpec.from_json(p.read_text(encoding="utf-8"))
    return ContractSpec.from_json(_read_packaged("contracts", ref))


def load_suite(ref: str) -> dict:
    """Resolve a suite reference: packaged fixture name or a file path."""
    p = Path(ref)
    if p.suffix == ".json" or p.exists():
        doc = json.loads(p.read_text(encoding="utf-8"))
    else:
        doc = json.loads(_read_packaged("suites", ref))
    if "tasks" not in doc or not doc["tasks"]:
        raise ValueError(f"suite {ref!r} has no tasks")
    return doc
