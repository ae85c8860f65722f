from ._ioa import (
    Diagnostic,
    Error,
    EventLog,
    Finding,
    LayerReport,
    Record,
    Spec,
    VerificationReport,
    check,
    run_cli,
)

__all__ = [
    "Diagnostic",
    "Error",
    "EventLog",
    "Finding",
    "LayerReport",
    "Record",
    "Spec",
    "VerificationReport",
    "check",
    "run_cli",
]
