"""Instance descriptors, random CNF generation and instance files."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..basis import Clause
from ..graphs import Graph

PROBLEMS = ("gp", "gc", "sat")
METHODS = ("penalty", "cqa")


def derive_seed(*parts: int) -> int:
    """Independent 63-bit seed for a tuple of integers (master seed, size, index, ...)."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, dtype=np.uint64)[0] >> 1)


def random_3sat(n: int, m: int, seed) -> list[Clause]:
    """Uniform random 3SAT: three variables drawn with replacement, retried until distinct."""
    if n < 3:
        raise ValueError("3SAT needs at least 3 variables")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = []
    while len(out) < m:
        vs = rng.integers(0, n, size=3)
        if len(set(vs.tolist())) < 3:
            continue
        out.append(Clause(tuple(vs.tolist()), tuple(rng.integers(0, 2, size=3).tolist())))
    return out


@dataclass
class InstanceDescriptor:
    problem: str
    n: int
    payload: object  # Graph for gp/gc, list[Clause] for sat
    method: str = "cqa"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.problem in ("gp", "gc"):
            if not isinstance(self.payload, Graph):
                self.payload = Graph.from_dict(self.payload)
            if self.payload.n != self.n:
                raise ValueError("graph size does not match n")
        else:
            self.payload = [c if isinstance(c, Clause) else Clause.from_dict(c) for c in self.payload]
            if any(max(c.vars) >= self.n for c in self.payload):
                raise ValueError("clause refers to a variable outside 0..n-1")

    def payload_dict(self):
        if self.problem == "sat":
            return {"n": self.n, "clauses": [c.to_dict() for c in self.payload]}
        return self.payload.to_dict()

    @property
    def id(self) -> str:
        """Hash of problem, payload and parameters; the method is excluded so both methods share it."""
        blob = json.dumps(
            {"problem": self.problem, "n": self.n, "payload": self.payload_dict(), "params": self.params},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def seed(self) -> int:
        return int(self.params.get("seed", 0))

    def with_method(self, method: str) -> InstanceDescriptor:
        return InstanceDescriptor(self.problem, self.n, self.payload, method, dict(self.params))

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "n": self.n,
            "payload": self.payload_dict(),
            "params": dict(self.params, method=self.method),
            "id": self.id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> InstanceDescriptor:
        params = dict(data.get("params", {}))
        method = params.pop("method", "cqa")
        payload = data["payload"]
        if data["problem"] == "sat":
            payload = payload["clauses"]
        desc = cls(data["problem"], int(data["n"]), payload, method, params)
        if "id" in data and data["id"] != desc.id:
            raise ValueError(f"instance id mismatch: file says {data['id']}, content hashes to {desc.id}")
        return desc


def write_instance(desc: InstanceDescriptor, path) -> None:
    Path(path).write_text(json.dumps(desc.to_dict(), sort_keys=True) + "\n")


def read_instance(path) -> InstanceDescriptor:
    data = json.loads(Path(path).read_text())
    if "problem" not in data and "edges" in data:
        # bare graph file: treat as a GP instance
        g = Graph.from_dict(data)
        return InstanceDescriptor("gp", g.n, g)
    return InstanceDescriptor.from_dict(data)
