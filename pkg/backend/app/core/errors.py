"""
Domain exceptions shared by the orchestrator modules.

Every exception carries a machine-readable ``code`` so the API layer can turn it
into an error body without string matching.
"""

from typing import Iterable, Optional


class S3Error(Exception):
    """Base class for orchestrator errors"""
    code = "INTERNAL"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ConfigError(S3Error):
    code = "CONFIG"


class IllegalTransition(S3Error):
    code = "ILLEGAL_TRANSITION"

    def __init__(self, state, event):
        self.state = state
        self.event = event
        super().__init__(f"event {_value(event)} is not allowed in state {_value(state)}")


class UnknownBeam(S3Error):
    code = "UNKNOWN_BEAM"

    def __init__(self, beam_id: str):
        self.beam_id = beam_id
        super().__init__(f"beam {beam_id!r} is not part of the pool")


class AdmissionRace(S3Error):
    code = "ADMISSION_RACE"

    def __init__(self, slice_id: str, reason: str):
        self.slice_id = slice_id
        self.reason = reason
        super().__init__(f"capacity changed while admitting {slice_id!r} ({reason})")


class UnknownAllocation(S3Error):
    code = "UNKNOWN_ALLOCATION"

    def __init__(self, slice_id: str):
        self.slice_id = slice_id
        super().__init__(f"no live allocation for slice {slice_id!r}")


class Uncoverable(S3Error):
    code = "UNCOVERABLE"

    def __init__(self, missing: Iterable[str]):
        self.missing = sorted(missing)
        super().__init__(f"no catalog function provides {self.missing}")


class InsufficientCompute(S3Error):
    code = "COMPUTE"

    def __init__(self, nf_id: str):
        self.nf_id = nf_id
        super().__init__(f"no host can take network function {nf_id!r}")


class ConflictingRules(S3Error):
    code = "CONFLICTING_RULES"

    def __init__(self, first: str, second: str, match: Optional[dict] = None):
        self.first = first
        self.second = second
        self.match = match
        super().__init__(f"slices {first!r} and {second!r} produce the same match {match}")


class InconsistentState(S3Error):
    code = "INCONSISTENT_STATE"

    def __init__(self, slice_id: str, detail: str = "active slice has no allocation"):
        self.slice_id = slice_id
        super().__init__(f"slice {slice_id!r}: {detail}")


class CorruptLog(S3Error):
    code = "CORRUPT_LOG"

    def __init__(self, index: int, detail: str):
        self.index = index
        super().__init__(f"event log record {index} is corrupt: {detail}")


def _value(item) -> str:
    return getattr(item, "value", str(item))
