"""Problem files: a TOML document validated into a :class:`ProblemSpec`.

A problem file looks like::

    p = 2.0
    s = 0.5
    n_cells = 64

    [nonlinearity]
    family = "logistic"
    lambda_lin = 40.0
    b = 1.0

    [solve]
    starts = 5
    seed = 7

Every omitted key takes its default; :meth:`ProblemSpec.resolved` returns the
complete document that is echoed into every report.  Validation problems are
collected into one :class:`~mixop.bo.errors.ConfigError` whose message lists
one ``field.path: message`` line per issue.
"""
from __future__ import annotations

import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .eigen import EigenOptions, WeightFn
from .errors import ConfigError
from .forms import DEFAULT_DIAG_ORDER, DEFAULT_FAR_ORDER, MIN_ORDER, FormContext, build_context
from .mesh import MIN_CELLS, FeSpace, build_space
from .minimize import SolverOptions, default_tol_res
from .nonlinearity import Coefficient, NonlinearityModel

SWEEP_PARAMS = ("lambda_lin", "s", "p", "n_cells")

Samples = Union[float, List[float]]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class NonlinearityBlock(_Block):
    """``power``: c·t^θ; ``logistic``: λt^(p-1) - b·t^(q-1); ``mixed``: the sum.

    ``c`` and ``b`` are a constant or samples on a uniform grid of [0, 1].
    """

    family: Literal["power", "logistic", "mixed"] = "power"
    theta: float = Field(default=0.5, ge=0.0)
    c: Samples = 1.0
    lambda_lin: float = 0.0
    b: Samples = 1.0
    q: Optional[float] = None

    def build(self, p: float) -> NonlinearityModel:
        power = self.family in ("power", "mixed")
        logistic = self.family in ("logistic", "mixed")
        q = self.q if self.q is not None else (p + 2.0 if logistic else p + 1.0)
        return NonlinearityModel(
            p=p,
            c_coeff=_coefficient(self.c if power else 0.0),
            theta=self.theta if power else 0.0,
            lambda_lin=self.lambda_lin if logistic else 0.0,
            b_coeff=_coefficient(self.b if logistic else 0.0),
            q_exp=q,
            family=self.family,
        )


def _coefficient(value: Samples) -> Coefficient:
    if isinstance(value, list):
        return Coefficient(np.asarray(value, dtype=np.float64))
    return Coefficient.const(value)


class SolveBlock(_Block):
    tol_res: Optional[float] = Field(default=None, gt=0.0)
    max_iters: int = Field(default=20_000, ge=1)
    starts: int = Field(default=5, ge=2)
    seed: int = 0
    metric: Literal["sobolev", "euclidean"] = "sobolev"
    tol_unique: float = Field(default=1e-5, gt=0.0)


class EigenBlock(_Block):
    tol_eig: Optional[float] = Field(default=None, gt=0.0)
    max_iters: int = Field(default=10_000, ge=1)
    method: Literal["auto", "dense", "descent"] = "auto"
    weight: Samples = 0.0


class QuadBlock(_Block):
    diag_order: int = Field(default=DEFAULT_DIAG_ORDER, ge=MIN_ORDER)
    far_order: int = Field(default=DEFAULT_FAR_ORDER, ge=MIN_ORDER)


class VerifyBlock(_Block):
    delta: float = Field(default=0.5, gt=0.0, lt=1.0)
    levels: int = Field(default=12, ge=3)
    max_halvings: int = Field(default=10, ge=0)


class OutputBlock(_Block):
    directory: str = "out"
    formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])


class ProblemSpec(_Block):
    """Fully validated problem description."""

    p: float = Field(gt=1.0)
    s: float = Field(gt=0.0, lt=1.0)
    n_cells: int = Field(ge=MIN_CELLS)
    nonlinearity: NonlinearityBlock = Field(default_factory=NonlinearityBlock)
    solve: SolveBlock = Field(default_factory=SolveBlock)
    eigen: EigenBlock = Field(default_factory=EigenBlock)
    quad: QuadBlock = Field(default_factory=QuadBlock)
    verify: VerifyBlock = Field(default_factory=VerifyBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    @model_validator(mode="after")
    def _check_model(self) -> "ProblemSpec":
        try:
            model = self.nonlinearity.build(self.p)
        except ValueError as exc:
            raise ValueError(f"nonlinearity: {exc}") from exc
        b = model.b_coeff.values
        if np.any(b > 0.0) and not np.all(b > 0.0):
            raise ValueError(
                "nonlinearity.b: samples must be positive everywhere or zero everywhere"
            )
        weight = self.eigen.weight
        samples = weight if isinstance(weight, list) else [weight]
        if not all(math.isfinite(v) for v in samples):
            raise ValueError("eigen.weight: samples must be finite")
        return self

    def build_space(self) -> FeSpace:
        return build_space(self.n_cells, self.p, self.s)

    def build_context(self, space: Optional[FeSpace] = None) -> FormContext:
        return build_context(
            space or self.build_space(), self.quad.diag_order, self.quad.far_order
        )

    def build_model(self) -> NonlinearityModel:
        return self.nonlinearity.build(self.p)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            tol_res=self.solve.tol_res,
            max_iters=self.solve.max_iters,
            metric=self.solve.metric,
            tol_unique=self.solve.tol_unique,
        )

    def eigen_options(self) -> EigenOptions:
        return EigenOptions(
            tol_eig=self.eigen.tol_eig,
            max_iters=self.eigen.max_iters,
            method=self.eigen.method,
            metric=self.solve.metric,
        )

    def eigen_weight(self) -> WeightFn:
        weight = self.eigen.weight
        if isinstance(weight, list):
            if len(weight) == 1:
                return WeightFn.const(weight[0])
            return WeightFn(
                np.linspace(0.0, 1.0, len(weight)), np.asarray(weight, dtype=np.float64)
            )
        return WeightFn.const(weight)

    def resolved(self) -> Dict[str, Any]:
        """The complete document with automatic tolerances filled in."""
        doc = self.model_dump(mode="json")
        if doc["solve"]["tol_res"] is None:
            doc["solve"]["tol_res"] = default_tol_res(self.p)
        if doc["eigen"]["tol_eig"] is None:
            method = self.eigen_options().resolved_method(self.p)
            doc["eigen"]["tol_eig"] = self.eigen_options().resolved_tol(method)
        if doc["nonlinearity"]["q"] is None:
            doc["nonlinearity"]["q"] = self.build_model().q_exp
        return doc

    def with_param(self, name: str, value: float) -> "ProblemSpec":
        """Copy with one sweep parameter replaced, validated again."""
        if name not in SWEEP_PARAMS:
            raise ConfigError(
                f"unknown sweep parameter {name!r}; expected one of {', '.join(SWEEP_PARAMS)}"
            )
        doc = self.model_dump()
        if name == "lambda_lin":
            doc["nonlinearity"]["lambda_lin"] = value
        else:
            doc[name] = value
        return parse_spec(doc, source=f"{name}={value}")


def format_validation_error(exc: ValidationError) -> List[str]:
    """One ``field.path: message`` line per pydantic error."""
    lines = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "spec"
        lines.append(f"{loc}: {err['msg']}")
    return lines


def parse_spec(data: Dict[str, Any], source: str = "<dict>") -> ProblemSpec:
    try:
        return ProblemSpec.model_validate(data)
    except ValidationError as exc:
        issues = format_validation_error(exc)
        raise ConfigError(f"invalid problem in {source}:\n  " + "\n  ".join(issues)) from exc


def load_spec(path: Path) -> ProblemSpec:
    """Read and validate a TOML problem file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_spec(data, source=str(path))
