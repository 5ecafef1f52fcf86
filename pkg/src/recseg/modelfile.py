"""JSON model files.

Floats are written with Python's shortest round-trip ``repr`` (what ``json``
emits), so reading a file back yields bit-identical numbers.  Group and level
indices are 1-based on disk and 0-based in memory.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import LambdaTensor, LevelMapping, Model, Partition, Segmentation, TemporalGraph

SCHEMA_VERSION = 1


@dataclass
class ModelFile:
    n: int
    m: int
    R: int
    K: int
    H: int
    window: list[float]
    groups: dict[str, int]
    boundaries: list[float]
    level_map: list[int]
    lam: list[list[list[float]]]
    loglik: float
    normalized_loglik: float
    iterations: int
    converged: bool
    seed: Optional[int] = None
    config: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_model(cls, G: TemporalGraph, M: Model, seed: Optional[int] = None,
                   config: Optional[dict] = None) -> "ModelFile":
        return cls(
            n=G.n, m=G.m, R=M.R, K=M.K, H=M.H,
            window=[float(G.window[0]), float(G.window[1])],
            groups={lab: int(grp) + 1 for lab, grp in zip(G.labels, M.partition.assign)},
            boundaries=[float(T.hi) for T in M.segmentation.intervals],
            level_map=[int(h) + 1 for h in M.levels.g],
            lam=[[[float(M.lam.rates[i, j, h]) for j in range(M.R)] for i in range(M.R)] for h in range(M.H)],
            loglik=float(M.loglik),
            normalized_loglik=float(M.normalized_loglik),
            iterations=int(M.iterations),
            converged=bool(M.converged),
            seed=seed,
            config=dict(config or {}),
        )

    def to_model(self, G: TemporalGraph) -> Model:
        """Rebuild the in-memory model against the graph it was fitted on."""
        if G.n != self.n:
            raise ValueError(f"model has n={self.n} nodes but the edge list has n={G.n}")
        try:
            assign = np.array([self.groups[lab] - 1 for lab in G.labels], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"node {exc.args[0]!r} missing from model") from None
        T = Segmentation.from_times(G, self.boundaries[:-1])
        rates = np.transpose(np.array(self.lam, dtype=np.float64), (1, 2, 0))
        return Model(Partition(assign, self.R), T, LevelMapping(np.array(self.level_map) - 1, self.H),
                     LambdaTensor(rates), self.loglik, self.normalized_loglik, self.iterations, self.converged)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "n": self.n, "m": self.m, "R": self.R, "K": self.K, "H": self.H,
            "window": self.window,
            "groups": self.groups,
            "boundaries": self.boundaries,
            "level_map": self.level_map,
            "lambda": self.lam,
            "loglik": self.loglik,
            "normalized_loglik": self.normalized_loglik,
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
            "config": self.config,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ModelFile":
        d = json.loads(text)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
        return cls(
            n=d["n"], m=d["m"], R=d["R"], K=d["K"], H=d["H"], window=d["window"], groups=d["groups"],
            boundaries=d["boundaries"], level_map=d["level_map"], lam=d["lambda"], loglik=d["loglik"],
            normalized_loglik=d["normalized_loglik"], iterations=d["iterations"], converged=d["converged"],
            seed=d.get("seed"), config=d.get("config", {}), schema_version=d["schema_version"],
        )

    def save(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "ModelFile":
        with open(path) as fh:
            return cls.loads(fh.read())
