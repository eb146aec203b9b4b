"""JSON run configuration: strict schema, key-path error messages."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .exceptions import BoolPercError, ConfigError
from .laws import RadiusLaw
from .model import DEFAULT_MAX_LAYERS, DEFAULT_MAX_VERTICES, ModelConfig
from .rng import fresh_seed


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# graph ----------------------------------------------------------------------


class ZWindowSpec(_Strict):
    kind: Literal["z_window"]
    d: int = Field(ge=1, le=4, description="lattice dimension")
    half_width: int = Field(ge=1, description="interior is the box of this sup-norm radius")
    halo: int = Field(0, ge=0, description="extra layers outside the interior")


class TreeSpec(_Strict):
    kind: Literal["oriented_tree_ball"]
    d: int = Field(ge=2, description="children per vertex (tree degree d+1)")
    depth: int = Field(ge=1, description="interior radius around the center")
    halo: int = Field(0, ge=0, description="extra layers outside the interior")


class EdgeListSpec(_Strict):
    kind: Literal["edge_list"]
    path: str = Field(description="edge-list file; relative paths resolve against the config file")
    directed: bool | None = Field(None, description="must match the file header when given")
    max_degree: int = Field(64, ge=1, description="reject graphs above this degree")


class RandomDigraphSpec(_Strict):
    kind: Literal["random_digraph"]
    n: int = Field(ge=2, description="vertex count")
    mean_out_degree: float = Field(ge=0, description="expected out-degree")
    seed: int = Field(ge=0, description="graph seed (independent of the model seed)")
    max_degree: int = Field(64, ge=1, description="reject graphs above this degree")


GraphSpec = Annotated[
    Union[ZWindowSpec, TreeSpec, EdgeListSpec, RandomDigraphSpec], Field(discriminator="kind")
]


# law ------------------------------------------------------------------------


class DeterministicLaw(_Strict):
    kind: Literal["deterministic"]
    k: int = Field(ge=1, description="the constant radius")
    cap: int | None = Field(None, ge=1, description="condition on R <= cap")


class GeometricLaw(_Strict):
    kind: Literal["geometric"]
    a: float = Field(ge=0, lt=1, description="P(R > n) = a^n")
    cap: int | None = Field(None, ge=1, description="condition on R <= cap")


class ZetaLaw(_Strict):
    kind: Literal["zeta"]
    s: float = Field(gt=1, description="P(R = n) proportional to n^-s")
    cap: int | None = Field(None, ge=1, description="condition on R <= cap")


class TableLaw(_Strict):
    kind: Literal["table"]
    pmf: list[float] = Field(min_length=1, description="P(R = 1), P(R = 2), ... summing to 1")
    cap: int | None = Field(None, ge=1, description="condition on R <= cap")

    @field_validator("pmf")
    @classmethod
    def _nonnegative(cls, v):
        for i, x in enumerate(v):
            if not x >= 0:
                raise ValueError(f"pmf[{i}]={x} is negative")
        return v


LawSpec = Annotated[Union[DeterministicLaw, GeometricLaw, ZetaLaw, TableLaw], Field(discriminator="kind")]


# model and experiment ---------------------------------------------------------


class ModelSection(_Strict):
    p: float = Field(ge=0, le=1, description="activation probability")
    seed: int | None = Field(None, ge=0, lt=2**64, description="master seed; drawn from entropy when absent")
    root: int | None = Field(None, ge=0, description="root vertex (default: the window center / vertex 0)")
    max_vertices: int = Field(DEFAULT_MAX_VERTICES, ge=1, description="exploration vertex budget")
    max_layers: int = Field(DEFAULT_MAX_LAYERS, ge=1, description="exploration layer budget")
    radius_cap: int | None = Field(None, ge=1, description="simulate min(R, radius_cap)")


class ExperimentSection(_Strict):
    trials: int = Field(1000, ge=1, description="replicates per batch")
    threads: int | None = Field(None, ge=1, description="worker processes (default: available CPUs)")
    n_grid: list[int] | None = Field(None, description="tail grid (default 0..50)")
    fit_range: tuple[int, int] | None = Field(None, description="[lo, hi] for the decay fit")
    p_grid: list[float] | None = Field(None, description="sweep grid in [0, 1]")
    t: float = Field(0.1, gt=0, description="exponential-decay parameter for the bounds")
    t_grid: list[float] = Field([0.1], description="t values for the offspring MGF check")
    r_max: int | None = Field(None, ge=1, description="growth-profile horizon")
    pc_site: float | None = Field(None, ge=0, le=1, description="site-percolation threshold, reported as a note")
    replicate: int = Field(0, ge=0, description="replicate index for single-run commands")

    @field_validator("p_grid")
    @classmethod
    def _probabilities(cls, v):
        if v is not None:
            for i, p in enumerate(v):
                if not 0 <= p <= 1:
                    raise ValueError(f"p_grid[{i}]={p} is not in [0, 1]")
        return v

    @model_validator(mode="after")
    def _range(self):
        if self.fit_range is not None and self.fit_range[0] >= self.fit_range[1]:
            raise ValueError("fit_range must be increasing")
        return self


class RunConfig(_Strict):
    graph: GraphSpec
    law: LawSpec
    model: ModelSection
    experiment: ExperimentSection = ExperimentSection()


# loading ------------------------------------------------------------------------


def _key_path(loc: tuple, data: Any) -> str:
    parts: list[str] = []
    node = data
    for item in loc:
        if isinstance(item, int):
            if parts:
                parts[-1] += f"[{item}]"
            node = node[item] if isinstance(node, list) and item < len(node) else None
            continue
        # discriminated unions insert the tag value into the location
        if isinstance(node, dict) and node.get("kind") == item and item not in node:
            continue
        parts.append(str(item))
        node = node.get(item) if isinstance(node, dict) else None
    return ".".join(parts) or "<root>"


def parse_config(data: Any, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        msg = err["msg"].removeprefix("Value error, ")
        if err["type"] == "extra_forbidden":
            msg = "unknown key"
        raise ConfigError(_key_path(err["loc"], data), msg) from None
    if isinstance(cfg.graph, EdgeListSpec) and base_dir is not None and not Path(cfg.graph.path).is_absolute():
        cfg = cfg.model_copy(update={"graph": cfg.graph.model_copy(update={"path": str(base_dir / cfg.graph.path)})})
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(data, path.parent)


def build_model(cfg: RunConfig) -> ModelConfig:
    """Validated model; graph and law errors are reported against their sections."""
    try:
        law = RadiusLaw.from_dict(cfg.law.model_dump(exclude_none=True))
    except BoolPercError as exc:
        raise ConfigError("law", str(exc)) from None
    m = cfg.model
    seed = fresh_seed() if m.seed is None else m.seed
    model = ModelConfig(
        p=m.p, law=law, graph_spec=cfg.graph.model_dump(exclude_none=True), seed=seed, root=m.root,
        max_vertices=m.max_vertices, max_layers=m.max_layers, radius_cap=m.radius_cap,
    )
    try:
        model.graph
    except ConfigError:
        raise
    except BoolPercError as exc:
        raise ConfigError("graph", str(exc)) from None
    except OSError as exc:
        raise ConfigError("graph.path", f"cannot read edge list: {exc.strerror}") from None
    return model


def echo(cfg: RunConfig, seed: int) -> dict:
    """Config as JSON with the seed actually used, suitable for feeding back in."""
    d = cfg.model_dump(mode="json")
    d["model"]["seed"] = seed
    return d


def describe_keys() -> list[tuple[str, str]]:
    """``(key path, domain)`` for every config key, for the help text."""
    rows: list[tuple[str, str]] = []

    def walk(prefix: str, model: type[BaseModel]):
        for name, f in model.model_fields.items():
            if name == "kind":
                continue
            ann = f.annotation
            rows.append((f"{prefix}.{name}", f"{_type_name(ann)}; {f.description or ''}".rstrip("; ")))

    for section, variants in (("graph", (ZWindowSpec, TreeSpec, EdgeListSpec, RandomDigraphSpec)),
                              ("law", (DeterministicLaw, GeometricLaw, ZetaLaw, TableLaw))):
        kinds = [v.model_fields["kind"].annotation.__args__[0] for v in variants]
        rows.append((f"{section}.kind", "one of " + ", ".join(kinds)))
        for v, k in zip(variants, kinds):
            walk(f"{section}[{k}]", v)
    walk("model", ModelSection)
    walk("experiment", ExperimentSection)
    return rows


def _type_name(ann) -> str:
    s = getattr(ann, "__name__", None) or str(ann)
    return s.replace("typing.", "").replace("NoneType", "null")
