"""Typed rejections and operational errors shared across modules."""

from __future__ import annotations


class EpiwatchError(Exception):
    """Base class for all errors raised by this package."""

    rule = "Error"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        msg = super().__str__()
        return f"{self.rule}: {msg}" if msg else self.rule


class RejectionError(EpiwatchError):
    """A single input value or row violated a validation rule.

    Rejections never abort a batch; callers collect them per line.
    """

    def __init__(self, rule: str, field: str = "", detail: str = ""):
        super().__init__(detail)
        self.rule = rule
        self.field = field
        self.detail = detail


# --- core-model rejections -------------------------------------------------

class WrongLength(RejectionError):
    def __init__(self, actual: int):
        super().__init__("WrongLength", "civil_id", f"got {actual} digits, need 16")
        self.actual = actual


class NonNumeric(RejectionError):
    def __init__(self):
        super().__init__("NonNumeric", "civil_id", "civil id must be decimal digits only")


class Empty(RejectionError):
    def __init__(self):
        super().__init__("Empty", "civil_id", "civil id is empty")


class EmptyName(RejectionError):
    def __init__(self):
        super().__init__("EmptyName", "name", "name is empty")


class FutureBirthDate(RejectionError):
    def __init__(self, detail: str = ""):
        super().__init__("FutureBirthDate", "date_of_birth", detail)


# --- batch-level failures --------------------------------------------------

class MissingHeader(EpiwatchError):
    rule = "MissingHeader"


class MissingMandatoryColumn(EpiwatchError):
    rule = "MissingMandatoryColumn"

    def __init__(self, columns: list[str]):
        super().__init__(", ".join(columns))
        self.columns = columns


# --- bed board -------------------------------------------------------------

class OccupiedExceedsTotal(EpiwatchError):
    rule = "OccupiedExceedsTotal"


class UnauthorizedReporter(EpiwatchError):
    rule = "UnauthorizedReporter"


class SupersededTimestamp(EpiwatchError):
    rule = "SupersededTimestamp"


class UnknownHospital(EpiwatchError):
    rule = "UnknownHospital"


# --- aggregates ------------------------------------------------------------

class DateOutOfRange(EpiwatchError):
    rule = "DateOutOfRange"


class InvertedRange(EpiwatchError):
    rule = "InvertedRange"


class ZeroDenominator(EpiwatchError):
    rule = "ZeroDenominator"


# --- service / storage -----------------------------------------------------

class ConfigInvalid(EpiwatchError):
    rule = "ConfigInvalid"


class StorageCorrupt(EpiwatchError):
    rule = "StorageCorrupt"

    def __init__(self, sequence: int, detail: str):
        super().__init__(f"sequence {sequence}: {detail}")
        self.sequence = sequence


class StorageUnavailable(EpiwatchError):
    rule = "StorageUnavailable"


class EmptyLog(EpiwatchError):
    rule = "EmptyLog"
