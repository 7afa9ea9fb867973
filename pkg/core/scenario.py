"""
Scenario files: YAML documents validated by pydantic models.

Unknown keys are rejected everywhere. Validation errors are mapped back to
the YAML node they came from, so a ScenarioError carries line and column.
The format is documented in docs/scenario_format.md.
"""

from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from chains.config import GALLERY_DIMENSION, GALLERY_NAMES, GRID_SWEEP_SIZES
from chains.grid_chain import GridChainParams
from chains.kernel_chain import KernelChainParams

from . import settings
from .errors import ScenarioError
from .ergodicity import VerdictThresholds
from .obsb import SpaceDescriptor, SpaceKind, gridSpace, lorentzSpace, quadratureRule, sequenceSpace, simplexSpace


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ---------- space ----------


class SpaceBlock(Strict):
    kind: SpaceKind
    dimension: Optional[int] = Field(None, ge=1)
    p: Optional[float] = None
    grid: Optional[list[float]] = None
    quadrature_rule: Optional[Literal["midpoint", "gauss"]] = None
    quadrature_size: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def checkFields(self) -> "SpaceBlock":
        if self.kind == "GridFunction":
            if self.grid is None and self.dimension is None:
                raise ValueError("GridFunction needs 'grid' or 'dimension'")
        elif self.kind == "LorentzLp" and (self.quadrature_rule or self.quadrature_size):
            if self.quadrature_size is None and self.dimension is None:
                raise ValueError("quadrature needs 'quadrature_size' or 'dimension'")
        elif self.dimension is None:
            raise ValueError(f"{self.kind} needs 'dimension'")
        if self.kind in ("LorentzLp", "SequenceLpCone") and self.p is None:
            raise ValueError(f"{self.kind} needs 'p'")
        # InputError is a ValueError, so descriptor problems surface as schema errors
        self.build()
        return self

    def build(self) -> SpaceDescriptor:
        if self.kind == "Simplex":
            return simplexSpace(self.dimension)
        if self.kind == "GridFunction":
            return gridSpace(self.grid if self.grid is not None else self.dimension)
        if self.kind == "SequenceLpCone":
            return sequenceSpace(self.p, self.dimension)
        if self.quadrature_rule or self.quadrature_size:
            size = self.quadrature_size or self.dimension - 1
            rule = quadratureRule(self.quadrature_rule or settings.QUADRATURE_RULE, size)
            return lorentzSpace(self.p, rule.weights)
        return lorentzSpace(self.p, dimension=self.dimension)


# ---------- chain ----------


class GalleryParams(Strict):
    name: Literal[tuple(GALLERY_NAMES)]
    dimension: int = Field(GALLERY_DIMENSION, ge=2)
    seed: Optional[int] = None


class KernelTableParams(Strict):
    p: float = Field(gt=1.0)
    rule: Literal["midpoint", "gauss"] = "midpoint"
    g: list[float] = Field(min_length=1)
    kernel: list[list[float]] = Field(min_length=1)

    @model_validator(mode="after")
    def checkShape(self) -> "KernelTableParams":
        m = len(self.g)
        if len(self.kernel) != m or any(len(row) != m for row in self.kernel):
            raise ValueError("kernel must be a square table with one row per g value")
        return self


class HomogeneousParams(Strict):
    matrix: list[list[float]]
    label: str = "T"


class ListParams(Strict):
    matrices: list[list[list[float]]] = Field(min_length=1)
    cycling: Literal["cycle", "hold"] = "cycle"
    start_index: int = Field(0, ge=0)


class GridChainBlock(Strict):
    family: Literal["grid_multiplication"]
    params: GridChainParams = GridChainParams()


class KernelChainBlock(Strict):
    family: Literal["kernel_lorentz"]
    params: KernelChainParams = KernelChainParams()


class KernelTableBlock(Strict):
    family: Literal["kernel_table"]
    params: KernelTableParams


class GalleryBlock(Strict):
    family: Literal["gallery"]
    params: GalleryParams


class HomogeneousBlock(Strict):
    family: Literal["homogeneous"]
    params: HomogeneousParams


class ListBlock(Strict):
    family: Literal["list"]
    params: ListParams


ChainBlock = Annotated[
    Union[GridChainBlock, KernelChainBlock, KernelTableBlock, GalleryBlock, HomogeneousBlock, ListBlock],
    Field(discriminator="family"),
]

SPACE_FAMILIES = ("homogeneous", "list")


# ---------- analyses ----------

Coords = list[float]


class AnalysisBase(Strict):
    id: Optional[str] = None


class ProbeMixin(Strict):
    probes: Optional[list[Coords]] = None
    probe_count: Optional[int] = Field(None, ge=0)


class UniformAnalysis(AnalysisBase):
    kind: Literal["uniform"]
    n_max: int = Field(40, ge=2)
    budget: Optional[int] = Field(None, ge=1)


class WeakAnalysis(AnalysisBase):
    kind: Literal["weak"]
    ks: Optional[list[int]] = None
    n_max: int = Field(60, ge=1)
    budget: Optional[int] = Field(None, ge=1)
    product_bound: bool = True


class LWeakAnalysis(AnalysisBase, ProbeMixin):
    kind: Literal["l_weak"]
    ks: Optional[list[int]] = None
    n_max: int = Field(60, ge=1)
    pairs: Optional[list[tuple[Coords, Coords]]] = None


class LStrongAnalysis(AnalysisBase, ProbeMixin):
    kind: Literal["l_strong"]
    ks: Optional[list[int]] = None
    n_max: int = Field(100, ge=1)
    window: Optional[int] = Field(None, ge=2)


class DoeblinCheckAnalysis(AnalysisBase, ProbeMixin):
    kind: Literal["doeblin_check"]
    condition: Literal["D", "D1", "D2"] = "D"
    k: Optional[int] = None
    # "family": the chain family's own target (kernel: (1, 2g_k), grid: 𝟙)
    z: Union[Literal["family"], Coords] = "family"
    lam: Optional[float] = None
    n_k: Optional[int] = None
    horizon: Optional[int] = None


class DoeblinSearchAnalysis(AnalysisBase, ProbeMixin):
    kind: Literal["doeblin_search"]
    k: Optional[int] = None
    horizon: int = Field(200, ge=1)


class CoefficientBatteryAnalysis(AnalysisBase):
    kind: Literal["coefficient_battery"]
    steps: Optional[tuple[int, int]] = None
    budget: Optional[int] = Field(None, ge=1)


class ImplicationChainAnalysis(AnalysisBase, ProbeMixin):
    kind: Literal["implication_chain"]
    ks: Optional[list[int]] = None
    horizon: int = Field(100, ge=1)


class DecayBoundAnalysis(AnalysisBase, ProbeMixin):
    kind: Literal["decay_bound"]
    k: Optional[int] = None
    alpha: float = Field(gt=0.0, le=2.0)
    n_max: int = Field(100, ge=1)
    spacing: Optional[int] = Field(None, ge=1)


class DeltaAnalysis(AnalysisBase):
    kind: Literal["delta"]
    k: Optional[int] = None
    n: int
    budget: Optional[int] = Field(None, ge=1)


class VanishingSlackAnalysis(AnalysisBase, ProbeMixin):
    kind: Literal["vanishing_slack"]
    k: Optional[int] = None
    horizon: int = Field(100, ge=1)


class GridSweepAnalysis(AnalysisBase):
    kind: Literal["grid_sweep"]
    sizes: list[int] = Field(default_factory=lambda: list(GRID_SWEEP_SIZES), min_length=1)
    k: int = Field(1, ge=1)
    horizon: int = Field(400, ge=2)


class KernelBoundsAnalysis(AnalysisBase):
    kind: Literal["kernel_bounds"]
    ks: Optional[list[int]] = None


class OpennessAnalysis(AnalysisBase):
    kind: Literal["openness"]
    n: int = Field(1, ge=1)
    eps: float = Field(0.1, gt=0.0, lt=2.0)
    budget: Optional[int] = Field(None, ge=1)


Analysis = Annotated[
    Union[
        UniformAnalysis, WeakAnalysis, LWeakAnalysis, LStrongAnalysis, DoeblinCheckAnalysis,
        DoeblinSearchAnalysis, CoefficientBatteryAnalysis, ImplicationChainAnalysis, DecayBoundAnalysis,
        DeltaAnalysis, VanishingSlackAnalysis, GridSweepAnalysis, KernelBoundsAnalysis, OpennessAnalysis,
    ],
    Field(discriminator="kind"),
]

ANALYSIS_KINDS = [
    "uniform", "weak", "l_weak", "l_strong", "doeblin_check", "doeblin_search", "coefficient_battery",
    "implication_chain", "decay_bound", "delta", "vanishing_slack", "grid_sweep", "kernel_bounds", "openness",
]

# analysis kind -> chain families it applies to
FAMILY_ONLY = {"grid_sweep": ("grid_multiplication",), "kernel_bounds": ("kernel_lorentz",)}


# ---------- scenario ----------


class OutputBlock(Strict):
    report: str = "report.json"
    csv: bool = True


class ToleranceBlock(Strict):
    cone_tol: Optional[float] = Field(None, ge=0.0)
    pass_threshold: Optional[float] = Field(None, gt=0.0)
    stall_threshold: Optional[float] = Field(None, gt=0.0)
    d2_threshold: Optional[float] = Field(None, gt=0.0)
    d2_burn_in: Optional[int] = Field(None, ge=0)
    limit_agreement: Optional[float] = Field(None, gt=0.0)
    contraction_slack: Optional[float] = Field(None, ge=0.0)

    def thresholds(self) -> VerdictThresholds:
        base = VerdictThresholds()
        return VerdictThresholds(
            passThreshold=self.pass_threshold if self.pass_threshold is not None else base.passThreshold,
            stallThreshold=self.stall_threshold if self.stall_threshold is not None else base.stallThreshold,
            d2Threshold=self.d2_threshold if self.d2_threshold is not None else base.d2Threshold,
            d2BurnIn=self.d2_burn_in if self.d2_burn_in is not None else base.d2BurnIn,
            limitAgreement=self.limit_agreement if self.limit_agreement is not None else base.limitAgreement,
            contractionSlack=self.contraction_slack if self.contraction_slack is not None else base.contractionSlack,
        )


class Scenario(Strict):
    name: Optional[str] = None
    seed: int = settings.SEED
    space: Optional[SpaceBlock] = None
    chain: ChainBlock
    analyses: list[Analysis] = Field(min_length=1)
    output: OutputBlock = OutputBlock()
    tolerances: ToleranceBlock = ToleranceBlock()

    @model_validator(mode="after")
    def checkCrossRefs(self) -> "Scenario":
        family = self.chain.family
        if family in SPACE_FAMILIES and self.space is None:
            raise ValueError(f"chain family '{family}' needs a 'space' block")
        if family not in SPACE_FAMILIES and self.space is not None:
            raise ValueError(f"chain family '{family}' defines its own space; remove the 'space' block")
        if family in SPACE_FAMILIES:
            d = self.space.build().dimension
            mats = [self.chain.params.matrix] if family == "homogeneous" else self.chain.params.matrices
            for i, m in enumerate(mats):
                if len(m) != d or any(len(row) != d for row in m):
                    raise ValueError(f"matrix {i} must be {d}x{d} for the given space")
        seen = set()
        for a in self.analyses:
            allowed = FAMILY_ONLY.get(a.kind)
            if allowed and family not in allowed:
                raise ValueError(f"analysis '{a.kind}' needs chain family {list(allowed)}, got '{family}'")
            if a.id is not None:
                if a.id in seen:
                    raise ValueError(f"duplicate analysis id '{a.id}'")
                seen.add(a.id)
        return self

    def analysisIds(self) -> list[str]:
        """Given ids, or `<position>-<kind>` for analyses without one."""
        return [a.id or f"{i + 1:02d}-{a.kind}" for i, a in enumerate(self.analyses)]

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)


# ---------- loading ----------


def _nodeAt(root: Optional[yaml.Node], loc: tuple) -> Optional[yaml.Node]:
    """Deepest YAML node along a pydantic error location; union tags in `loc` are skipped."""
    node = root
    for part in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if getattr(k, "value", None) == part), None)
            if nxt is None:
                continue
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int):
            if part >= len(node.value):
                break
            node = node.value[part]
        else:
            break
    return node


def _firstError(e: ValidationError) -> tuple[str, tuple]:
    err = e.errors()[0]
    loc = tuple(err.get("loc", ()))
    where = ".".join(str(p) for p in loc)
    msg = err.get("msg", str(e))
    return (f"{where}: {msg}" if where else msg), loc


def loadScenarioDict(data: Any, path: str = "<dict>", root: Optional[yaml.Node] = None) -> Scenario:
    """
    Validate an already-parsed scenario (e.g. the `scenario` echo of a report).

    Raises:
        ScenarioError: with line/column when `root` (the composed YAML tree) is given.
    """
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping at the top level", 1 if root is not None else None, 1, path)
    try:
        return Scenario(**data)
    except ValidationError as e:
        msg, loc = _firstError(e)
        node = _nodeAt(root, loc) if root is not None else None
        if node is None:
            raise ScenarioError(f"Invalid scenario: {msg}", path=path) from e
        mark = node.start_mark
        raise ScenarioError(f"Invalid scenario: {msg}", mark.line + 1, mark.column + 1, path) from e


def loadScenario(path: Union[str, Path]) -> Scenario:
    """
    Read and validate a YAML scenario file.

    Raises:
        ScenarioError: unreadable file, YAML syntax error or schema violation.
    """
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario: {e}", path=str(p)) from e
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        problem = getattr(e, "problem", None) or str(e)
        if mark is not None:
            raise ScenarioError(f"YAML syntax error: {problem}", mark.line + 1, mark.column + 1, str(p)) from e
        raise ScenarioError(f"YAML syntax error: {problem}", path=str(p)) from e
    return loadScenarioDict(data, str(p), root)


__all__ = [
    "Scenario",
    "SpaceBlock",
    "OutputBlock",
    "ToleranceBlock",
    "ANALYSIS_KINDS",
    "loadScenario",
    "loadScenarioDict",
]
