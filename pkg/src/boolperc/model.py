"""Model configuration value object."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

from .exceptions import ConfigError
from .graph import GraphView, build_graph
from .laws import RadiusLaw, check_probability

DEFAULT_MAX_VERTICES = 100_000
DEFAULT_MAX_LAYERS = 1_000


@dataclass(frozen=True)
class ModelConfig:
    """Boolean model on one graph: activation ``p``, radius law, root and seed.

    ``radius_cap`` truncates sampled radii (``min(R, radius_cap)``) when the
    law itself is uncapped.
    """

    p: float
    law: RadiusLaw
    graph_spec: dict[str, Any]
    seed: int
    root: int | None = None
    max_vertices: int = DEFAULT_MAX_VERTICES
    max_layers: int = DEFAULT_MAX_LAYERS
    radius_cap: int | None = None
    _graph: GraphView | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        try:
            object.__setattr__(self, "p", check_probability(self.p))
        except ValueError as exc:
            raise ConfigError("model.p", str(exc)) from None
        if self.max_vertices < 1:
            raise ConfigError("model.max_vertices", "must be positive")
        if self.max_layers < 1:
            raise ConfigError("model.max_layers", "must be positive")
        if self.radius_cap is not None and self.radius_cap < 1:
            raise ConfigError("model.radius_cap", "must be positive")

    @cached_property
    def graph(self) -> GraphView:
        g = self._graph if self._graph is not None else build_graph(self.graph_spec)
        rho = self.rho_in(g)
        if g.interior is not None and rho not in g.interior:
            raise ConfigError("model.root", f"root {rho} is not in the window interior")
        return g

    def rho_in(self, g: GraphView) -> int:
        rho = g.center if self.root is None else int(self.root)
        if not 0 <= rho < g.n_vertices:
            raise ConfigError("model.root", f"root {rho} is not a vertex")
        return rho

    @property
    def rho(self) -> int:
        return self.rho_in(self.graph)

    @property
    def cap(self) -> int | None:
        """Largest radius the simulations will ever use."""
        caps = [c for c in (self.law.support_max, self.radius_cap) if c is not None]
        return min(caps) if caps else None

    def with_graph(self, g: GraphView) -> "ModelConfig":
        """Same model on an already built graph."""
        return self.replace(_graph=g)

    def replace(self, **changes) -> "ModelConfig":
        fields = dict(
            p=self.p, law=self.law, graph_spec=self.graph_spec, seed=self.seed, root=self.root,
            max_vertices=self.max_vertices, max_layers=self.max_layers, radius_cap=self.radius_cap,
            _graph=self._graph,
        )
        fields.update(changes)
        return ModelConfig(**fields)

    def to_dict(self) -> dict:
        return {
            "graph": dict(self.graph_spec),
            "law": self.law.to_dict(),
            "model": {
                "p": self.p,
                "seed": self.seed,
                "root": self.root,
                "max_vertices": self.max_vertices,
                "max_layers": self.max_layers,
                "radius_cap": self.radius_cap,
            },
        }
