"""Campaign harness: adapters, run loop, reports, CLI."""

from .adapters import (
    DbmsAdapter,
    MySqlFamilyAdapter,
    PostgresFamilyAdapter,
    ReferenceAdapter,
    make_adapter,
)
from .campaign import RunConfig, RunStats, run_campaign, still_fails_probe
from .report import (
    IssueReport,
    ReplayResult,
    build_report,
    dedup_signature,
    load_report,
    load_test_case,
    persist_report,
    replay,
)

__all__ = [
    "DbmsAdapter",
    "IssueReport",
    "MySqlFamilyAdapter",
    "PostgresFamilyAdapter",
    "ReferenceAdapter",
    "ReplayResult",
    "RunConfig",
    "RunStats",
    "build_report",
    "dedup_signature",
    "load_report",
    "load_test_case",
    "make_adapter",
    "persist_report",
    "replay",
    "run_campaign",
    "still_fails_probe",
]
