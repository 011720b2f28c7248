"""Exception hierarchy shared across the package."""

from __future__ import annotations


class MicrotuneError(Exception):
    """Base class for all microtune errors.

    ``code`` is a stable machine-readable slug used by the HTTP API and CLI
    diagnostics.
    """

    code = "error"


class SpaceError(MicrotuneError, ValueError):
    """Invalid search-space document, configuration, or index."""

    code = "invalid-space"


class TraceError(MicrotuneError, ValueError):
    """Invalid trace structure or trace document."""

    code = "invalid-trace"


class InsufficientSamplesError(TraceError):
    """Fewer post-warmup samples than the measurement protocol requires."""

    code = "insufficient-samples"


class ScenarioError(MicrotuneError, ValueError):
    """Invalid simulation scenario document."""

    code = "invalid-scenario"


class SimulatedFailure(MicrotuneError):
    """A scenario failure rule matched the configuration under test."""

    code = "simulated-failure"

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class RunSpecError(MicrotuneError, ValueError):
    """Invalid run specification document."""

    code = "invalid-run-spec"


class TargetConfigError(MicrotuneError):
    """External target is misconfigured (e.g. unresolvable command).

    Aborts the run; deliberately distinct from an Incomplete trial.
    """

    code = "target-config"


class TrialLogError(MicrotuneError, ValueError):
    """Trial log violates the append-only record contract."""

    code = "invalid-log"


class ReportError(MicrotuneError, ValueError):
    """Report cannot be built or exported as requested."""

    code = "invalid-report"
