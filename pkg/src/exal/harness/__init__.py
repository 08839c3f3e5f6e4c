"""Command line, report serialisation and the property-verification suite."""

from .cli import RunConfig, main, run_command
from .serialize import serialize_report
from .verify import CheckResult, run_suite

__all__ = ["RunConfig", "main", "run_command", "serialize_report", "CheckResult", "run_suite"]
