"""Exception hierarchy shared across the engine.

Every error carries a stable machine-readable ``code`` so the CLI and the
HTTP service can map failures without string matching.
"""

from __future__ import annotations


class PfmError(Exception):
    """Base class for all domain errors."""

    code = "error"


# -- chronicle ---------------------------------------------------------------

class DuplicateId(PfmError):
    code = "duplicate_id"


class InvalidEvent(PfmError):
    code = "invalid_event"

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InvalidRange(PfmError):
    code = "invalid_range"


class ParseError(PfmError):
    code = "parse_error"

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class SchemaVersionMismatch(PfmError):
    code = "schema_version_mismatch"


# -- enrichment --------------------------------------------------------------

class UnresolvedFood(PfmError):
    code = "unresolved_food"


class ClientUnavailable(PfmError):
    """Transient client failure; the caller may retry."""

    code = "client_unavailable"


class NotFound(PfmError):
    code = "not_found"


class MalformedBarcode(PfmError):
    code = "malformed_barcode"


# -- taste space -------------------------------------------------------------

class EmptySamples(PfmError):
    code = "empty_samples"


class UnknownIngredient(PfmError):
    code = "unknown_ingredient"


class BadProportions(PfmError):
    code = "bad_proportions"


class NoRatedEvents(PfmError):
    code = "no_rated_events"


class NoCandidates(PfmError):
    code = "no_candidates"


# -- event mining ------------------------------------------------------------

class MissingConfounderValue(PfmError):
    code = "missing_confounder_value"

    def __init__(self, unit_id: str, confounder: str):
        self.unit_id = unit_id
        self.confounder = confounder
        super().__init__(f"unit {unit_id} has no value for confounder {confounder!r}")


class NoOccurrences(PfmError):
    code = "no_occurrences"


class NoControls(PfmError):
    code = "no_controls"


class DegenerateOutcome(PfmError):
    code = "degenerate_outcome"


# -- personal food model -----------------------------------------------------

class SchemaError(PfmError):
    code = "schema_error"


class InsufficientData(PfmError):
    code = "insufficient_data"

    def __init__(self, min_days: int, got_days: float):
        self.min_days = min_days
        self.got_days = got_days
        super().__init__(
            f"chronicle spans {got_days:.1f} days; at least {min_days} required"
        )


class NoProfile(PfmError):
    code = "no_profile"


class NoModel(PfmError):
    code = "no_model"
