"""Core value types: scores, composite weighting, and the forward-pass ledger.

Everything here is backend-agnostic. The ledger records one StepCost per
emitted word and separates *billable* passes from metering passes (judge
calls made only to produce report numbers), so overhead ratios reflect
what an intervention actually costs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from .errors import DomainError


class Language(str, enum.Enum):
    ENGLISH = "english"
    URDU = "urdu"


class Category(str, enum.Enum):
    GENDER = "gender"
    RACE = "race"
    RELIGION = "religion"
    DISABILITY = "disability"
    AGE = "age"
    BODY_APPEARANCE = "body_appearance"
    SOCIOECONOMIC_CLASS = "socioeconomic_class"
    NATIONALITY = "nationality"


class Kind(str, enum.Enum):
    FILL_IN = "fill_in"
    OPEN_GEN = "open_gen"


class Scheme(str, enum.Enum):
    BASELINE = "baseline"
    SELECT = "select"
    SEQUENTIAL = "sequential"
    CONSTITUTIONAL = "constitutional"
    SELECT_OPT = "select_opt"
    SEQUENTIAL_OPT = "sequential_opt"
    CONSTITUTIONAL_OPT = "constitutional_opt"

    @property
    def gated(self) -> bool:
        return self.value.endswith("_opt")

    @property
    def base(self) -> "Scheme":
        """The underlying scheme a gated variant falls back to."""
        return Scheme(self.value.removesuffix("_opt"))


class AccountingMode(str, enum.Enum):
    """How same-prompt candidate batches hit the generator bill.

    ``api``: every candidate is a separate request, so a batch of n costs
    n generator passes. ``native``: the n candidates come out of a single
    forward pass, so the batch costs 1. The call pattern is identical;
    only the ledger reading changes.
    """

    API = "api"
    NATIVE = "native"


#: Blank marker for fill-in templates.
BLANK = "___"


def _domain(name: str, value) -> DomainError:
    return DomainError(f"{name} out of domain: {value!r}")


@dataclass(frozen=True)
class PromptRecord:
    """One benchmark item."""

    id: str
    text: str
    language: Language
    category: Category
    kind: Kind

    def __post_init__(self):
        if not self.id:
            raise _domain("id", self.id)
        if not self.text:
            raise _domain("text", self.text)

    def blank_count(self) -> int:
        return self.text.count(BLANK)


@dataclass(frozen=True)
class JudgeScore:
    """A parsed judge verdict. Both axes live in [0, 1]; higher is better."""

    bias: float
    utility: float

    def __post_init__(self):
        for name, v in (("bias", self.bias), ("utility", self.utility)):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise _domain(name, v)
            if math.isnan(v) or not 0.0 <= v <= 1.0:
                raise _domain(name, v)


def composite_score(score: JudgeScore, alpha: float) -> float:
    """alpha * bias + (1 - alpha) * utility."""
    if math.isnan(alpha) or not 0.0 <= alpha <= 1.0:
        raise _domain("alpha", alpha)
    return alpha * score.bias + (1.0 - alpha) * score.utility


@dataclass(frozen=True)
class CompositeWeights:
    """In-loop vs. reported blending weights.

    ``alpha_select`` drives decisions (candidate choice, revision
    adoption); ``alpha_report`` drives reported metrics. Selection leans
    harder on bias than reporting does, on purpose.
    """

    alpha_select: float = 0.6
    alpha_report: float = 0.5

    def __post_init__(self):
        for name, a in (("alpha_select", self.alpha_select), ("alpha_report", self.alpha_report)):
            if math.isnan(a) or not 0.0 <= a <= 1.0:
                raise _domain(name, a)


@dataclass(frozen=True)
class StepCost:
    """Billable passes for one emitted word.

    ``fp_g`` is counted in api terms (one per request). ``candidate_batches``
    records the sizes of any same-prompt sampling batches inside it; under
    native accounting each batch collapses to a single pass. Keeping the
    batch structure on the step is what lets one execution serve both
    accounting columns.
    """

    fp_g: int = 0
    fp_j: int = 0
    candidate_batches: tuple[int, ...] = ()

    def __post_init__(self):
        if self.fp_g < 0 or self.fp_j < 0:
            raise _domain("fp", (self.fp_g, self.fp_j))
        if any(b < 1 for b in self.candidate_batches):
            raise _domain("candidate_batches", self.candidate_batches)
        if sum(self.candidate_batches) > self.fp_g:
            raise _domain("candidate_batches", self.candidate_batches)

    def __add__(self, other: "StepCost") -> "StepCost":
        return StepCost(
            self.fp_g + other.fp_g,
            self.fp_j + other.fp_j,
            self.candidate_batches + other.candidate_batches,
        )

    def fp_g_in(self, mode: AccountingMode) -> int:
        if mode is AccountingMode.API:
            return self.fp_g
        return self.fp_g - sum(b - 1 for b in self.candidate_batches)


@dataclass
class OverheadLedger:
    """Per-step billable cost of one run.

    ``metering_fp_j`` counts judge passes spent purely on reporting
    (baseline quality readouts, holistic final scores). They are real
    calls but not part of the intervention's price, so ratio math
    ignores them.
    """

    accounting_mode: AccountingMode = AccountingMode.API
    steps: list[StepCost] = field(default_factory=list)
    metering_fp_j: int = 0

    def append(self, step: StepCost) -> None:
        self.steps.append(step)

    def charge_metering(self, fp_j: int = 1) -> None:
        self.metering_fp_j += fp_j

    @property
    def fp_g(self) -> int:
        return sum(s.fp_g_in(self.accounting_mode) for s in self.steps)

    @property
    def fp_j(self) -> int:
        return sum(s.fp_j for s in self.steps)

    def fp_g_in(self, mode: AccountingMode) -> int:
        return sum(s.fp_g_in(mode) for s in self.steps)


@dataclass(frozen=True)
class OverheadRatios:
    """Per-word overhead: generator, judge, and their sum."""

    r_g: float
    r_j: float

    @property
    def r(self) -> float:
        return self.r_g + self.r_j


def overhead_ratios(ledger: OverheadLedger, mode: AccountingMode | None = None) -> OverheadRatios:
    """Normalise a run's total cost by its step count T."""
    words = len(ledger.steps)
    if words == 0:
        raise _domain("ledger.steps", words)
    mode = mode or ledger.accounting_mode
    return OverheadRatios(r_g=ledger.fp_g_in(mode) / words, r_j=ledger.fp_j / words)


@dataclass
class CostMeter:
    """Raw call counters shared by one run's generator and judge handles.

    Handles bump the counters as calls happen; a scheme snapshots the
    meter with :meth:`mark` on entry and turns the difference into a
    StepCost on exit. The meter survives a mid-step exception, so the
    caller can still bill the partial work.
    """

    fp_g: int = 0
    fp_j: int = 0
    metering_fp_j: int = 0
    batches: tuple[int, ...] = ()

    def add_generator(self, n: int = 1) -> None:
        self.fp_g += n

    def note_batch(self, size: int) -> None:
        """Mark the last ``size`` generator passes as one sampling batch."""
        if size > 1:
            self.batches = self.batches + (size,)

    def add_judge(self, n: int = 1, *, metering: bool = False) -> None:
        if metering:
            self.metering_fp_j += n
        else:
            self.fp_j += n

    def mark(self) -> tuple[int, int, int]:
        return (self.fp_g, self.fp_j, len(self.batches))

    def step_since(self, mark: tuple[int, int, int]) -> StepCost:
        g, j, nb = mark
        return StepCost(self.fp_g - g, self.fp_j - j, self.batches[nb:])


@dataclass(frozen=True)
class SchemeConfig:
    """Knobs for one scheme run.

    ``n`` is the Best-of-N candidate count, ``k_max`` the revision budget,
    ``tau`` the bias threshold that ends sequential refinement early,
    ``t_words`` the open-generation word budget.
    ``reuse_gated_candidate`` controls whether the word that tripped the
    gate counts as one of the n candidates inside gated select.
    ``judge_free_constitutional`` drops in-loop judge scoring from the
    self-audit loop (every audit-triggered revision is then adopted).
    """

    n: int = 8
    k_max: int = 5
    tau: float = 0.8
    alpha_select: float = 0.6
    alpha_report: float = 0.5
    t_words: int = 20
    reuse_gated_candidate: bool = True
    judge_free_constitutional: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise _domain("n", self.n)
        if self.k_max < 0:
            raise _domain("k_max", self.k_max)
        if self.t_words < 1:
            raise _domain("t_words", self.t_words)
        if math.isnan(self.tau) or not 0.0 <= self.tau <= 1.0:
            raise _domain("tau", self.tau)
        for name, a in (("alpha_select", self.alpha_select), ("alpha_report", self.alpha_report)):
            if math.isnan(a) or not 0.0 <= a <= 1.0:
                raise _domain(name, a)

    @property
    def weights(self) -> CompositeWeights:
        return CompositeWeights(self.alpha_select, self.alpha_report)

    @classmethod
    def defaults(cls, scheme: Scheme, kind: Kind = Kind.FILL_IN) -> "SchemeConfig":
        """Stock defaults per scheme and task shape."""
        if kind is Kind.OPEN_GEN or scheme.gated:
            return cls(n=3, k_max=2)
        if scheme is Scheme.CONSTITUTIONAL:
            return cls(k_max=4)
        return cls()

    def override(self, **changes) -> "SchemeConfig":
        return replace(self, **changes)
