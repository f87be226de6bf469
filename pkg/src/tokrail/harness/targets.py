"""Seeded synthetic target records for the benchmark tasks."""

from __future__ import annotations

import json

import numpy as np

from ..contract import ContractSpec

_NAMES = ("Ada", "Grace", "Alan", "Edsger", "Barbara", "Donald", "Radia", "Ken")
_CITIES = ("London", "Zurich", "Boston", "Oslo", "Kyoto", "Austin", "Dublin", "Lagos")
_TITLES = ("Solaris", "Stalker", "Metropolis", "Playtime", "Brazil", "Alphaville")
_DIRECTORS = ("Tarkovsky", "Lang", "Tati", "Gilliam", "Godard", "Varda")
_COUNTRIES = ("Norway", "Japan", "Ghana", "Chile", "Portugal", "Canada")
_CAPITALS = ("Oslo", "Tokyo", "Accra", "Santiago", "Lisbon", "Ottawa")
_WORDS = ("quarterly", "report", "roadmap", "metrics", "launch", "review", "status", "incident")
_USERS = ("ada", "grace", "alan", "kay", "lin", "mira")
_DOMAINS = ("example.com", "corp.test", "mail.test")
_TABLES = ("orders", "users", "events", "invoices")


def _string_for(key: str, rng: np.random.Generator) -> str:
    def pick(pool):
        return str(pool[int(rng.integers(len(pool)))])

    if key == "name":
        return pick(_NAMES)
    if key == "city":
        return pick(_CITIES)
    if key == "title":
        return pick(_TITLES)
    if key == "director":
        return pick(_DIRECTORS)
    if key == "country":
        return pick(_COUNTRIES)
    if key == "capital":
        return pick(_CAPITALS)
    if key == "to":
        return f"{pick(_USERS)}@{pick(_DOMAINS)}"
    if key == "query" or key == "filter" or key == "subject":
        return f"{pick(_WORDS)} {pick(_WORDS)}"
    if key == "table":
        return pick(_TABLES)
    if key == "body":
        return f"Please see the {pick(_WORDS)} {pick(_WORDS)} attached."
    if key == "summary":
        return f"{pick(_WORDS)} update"
    return pick(_WORDS)


def _integer_for(key: str, rng: np.random.Generator) -> int:
    if key == "age":
        return int(rng.integers(18, 90))
    if key == "year":
        return int(rng.integers(1950, 2025))
    if key == "population":
        return int(rng.integers(50_000, 40_000_000))
    return int(rng.integers(0, 1000))


def make_target(spec: ContractSpec, seed: int, drop_key: dict | None = None) -> str:
    """Compact serialized record in spec key order; optionally drops one key."""
    rng = np.random.default_rng(seed)
    dropped = None
    if drop_key and rng.random() < float(drop_key.get("p", 0.0)):
        dropped = drop_key["name"]
    record = {}
    for k in spec.keys:
        if k.name == dropped:
            continue
        if k.value_type == "const":
            record[k.name] = k.const_value
        elif k.value_type == "string":
            record[k.name] = _string_for(k.name, rng)
        elif k.value_type == "integer":
            record[k.name] = _integer_for(k.name, rng)
        elif k.value_type == "number":
            record[k.name] = round(float(rng.uniform(0, 1000)), 2)
        elif k.value_type == "boolean":
            record[k.name] = bool(rng.integers(2))
    return json.dumps(record, separators=(",", ":"))
