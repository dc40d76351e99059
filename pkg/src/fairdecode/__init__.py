"""Decoding-time debiasing for text-API language models.

Wraps any chat-completion backend with a process-reward judge and three
intervention schemes (Best-of-N, critique-and-revise, constitutional
self-audit), a gated word-by-word open-generation loop, and a ledger
that prices generator and judge forward passes separately.
"""

from .core import (
    AccountingMode,
    Category,
    CompositeWeights,
    CostMeter,
    JudgeScore,
    Kind,
    Language,
    OverheadLedger,
    OverheadRatios,
    PromptRecord,
    Scheme,
    SchemeConfig,
    StepCost,
    composite_score,
    overhead_ratios,
)
from .contracts import Backend, ChatRequest, Generator, Judge
from .dataset import Dataset, bundled_dataset, load_dataset
from .errors import FairdecodeError
from .http import BackendConfig, HttpBackend
from .mock import MockBackend, MockScript
from .opengen import (
    GenerationRun,
    debias_step,
    expected_gated_overhead,
    gated_step,
    generate_open,
    measure_firing_rate,
    select_opt_delta,
)
from .parsing import AuditResult
from .prompts import Constitution, DEFAULT_CONSTITUTION
from .schemes import (
    StepTrace,
    run_baseline,
    run_constitutional,
    run_select,
    run_sequential,
)

__version__ = "0.1.0"

__all__ = [
    "AccountingMode",
    "AuditResult",
    "Backend",
    "BackendConfig",
    "Category",
    "ChatRequest",
    "CompositeWeights",
    "Constitution",
    "CostMeter",
    "DEFAULT_CONSTITUTION",
    "Dataset",
    "FairdecodeError",
    "GenerationRun",
    "Generator",
    "HttpBackend",
    "Judge",
    "JudgeScore",
    "Kind",
    "Language",
    "MockBackend",
    "MockScript",
    "OverheadLedger",
    "OverheadRatios",
    "PromptRecord",
    "Scheme",
    "SchemeConfig",
    "StepCost",
    "StepTrace",
    "bundled_dataset",
    "composite_score",
    "debias_step",
    "expected_gated_overhead",
    "gated_step",
    "generate_open",
    "load_dataset",
    "measure_firing_rate",
    "overhead_ratios",
    "run_baseline",
    "run_constitutional",
    "run_select",
    "run_sequential",
    "select_opt_delta",
]
