"""Shared domain vocabulary: identity, people, regions, categories.

Everything here is an immutable value; instances are safe to share between
threads without coordination. Integer enum codes are stable because they are
persisted inside the derived-state arrays and the transition-table fixture.
"""

from __future__ import annotations

import hashlib
import re
import unicodedata
from dataclasses import dataclass
from datetime import date, datetime
from enum import IntEnum

from .errors import Empty, EmptyName, FutureBirthDate, NonNumeric, WrongLength

CIVIL_ID_LENGTH = 16

_DIGITS_RE = re.compile(r"^[0-9]+$")

# Honorific/title tokens commonly prepended in facility exports. Compared
# after uppercasing and dot-stripping.
HONORIFICS = frozenset({
    "DR", "DRG", "DRA", "DRS", "IR", "PROF", "H", "HJ", "KH", "NY", "NN",
    "TN", "SDR", "SDRI", "BPK", "IBU", "MR", "MRS", "MS",
})


class Sex(IntEnum):
    UNKNOWN = 0
    MALE = 1
    FEMALE = 2


class EpiCategory(IntEnum):
    """Epidemiological case category; exactly one per person at any time."""

    SUSPECT = 1
    PROBABLE = 2
    TRAVELER = 3
    CLOSE_CONTACT = 4
    DISCARDED = 5
    CONFIRMED = 6


class CaseStatus(IntEnum):
    """Isolation/outcome status; DEAD and RECOVERED are terminal."""

    FINISHED_ISOLATION = 1
    HOME_ISOLATION = 2
    HOSPITAL_ISOLATION = 3
    HOSPITALIZED = 4
    SELF_ISOLATION = 5
    RECOVERED = 6
    DEAD = 7


class SymptomStatus(IntEnum):
    UNKNOWN = 0
    ASYMPTOMATIC = 1
    SYMPTOMATIC = 2


class DeathProtocol(IntEnum):
    NONE = 0
    WITH_PROTOCOL = 1
    WITHOUT_PROTOCOL = 2


TERMINAL_STATUSES = frozenset({CaseStatus.RECOVERED, CaseStatus.DEAD})


def validate_civil_id(raw: str) -> str:
    """Return the canonical 16-digit civil id, or raise a typed rejection.

    Only surrounding whitespace is healed. Separator characters inside the
    id are rejected (NonNumeric), never stripped: linkage keys must be
    canonical at the source.
    """
    digits = raw.strip()
    if not digits:
        raise Empty()
    if not _DIGITS_RE.match(digits):
        raise NonNumeric()
    if len(digits) != CIVIL_ID_LENGTH:
        raise WrongLength(len(digits))
    return digits


def civil_id_pseudonym(digits: str, key: bytes) -> str:
    """Keyed one-way digest of a civil id; the only identity form exported."""
    return hashlib.blake2b(digits.encode(), key=key, digest_size=12).hexdigest()


def normalize_name(raw: str) -> str:
    """Canonical person-name form used by the fuzzy linkage key.

    Uppercases, folds diacritics (NFKD, combining marks dropped), removes
    honorific tokens, and collapses internal whitespace. Idempotent.
    """
    if not raw or not raw.strip():
        raise EmptyName()

    def fold(s: str) -> str:
        decomposed = unicodedata.normalize("NFKD", s)
        return "".join(ch for ch in decomposed if not unicodedata.combining(ch))

    # Folding runs on both sides of the case map: NFKD can surface lowercase
    # compatibility forms, and uppercasing can surface decomposables.
    folded = fold(fold(raw).upper())
    tokens = [t.strip(".,") for t in folded.split()]
    tokens = [t for t in tokens if t]
    if not tokens:
        raise EmptyName()
    kept = [t for t in tokens if t not in HONORIFICS]
    # A name made entirely of honorific-looking tokens is kept verbatim
    # rather than emptied; idempotence holds either way.
    return " ".join(kept if kept else tokens)


DEFAULT_AGE_BAND_EDGES = (6, 18, 31, 46, 60)

AGE_UNKNOWN = "unknown"


def age_band_labels(edges: tuple[int, ...] = DEFAULT_AGE_BAND_EDGES) -> list[str]:
    """Band labels derived from the configured lower edges of each band."""
    labels = []
    lo = 0
    for edge in edges:
        labels.append(f"{lo}-{edge - 1}")
        lo = edge
    labels.append(f"{lo}+")
    return labels


def completed_years(date_of_birth: date, as_of: date) -> int:
    years = as_of.year - date_of_birth.year
    if (as_of.month, as_of.day) < (date_of_birth.month, date_of_birth.day):
        years -= 1
    return years


def age_group(
    date_of_birth: date,
    as_of: date,
    edges: tuple[int, ...] = DEFAULT_AGE_BAND_EDGES,
) -> str:
    """Age-band label for a person, by completed years at ``as_of``."""
    if date_of_birth > as_of:
        raise FutureBirthDate(f"{date_of_birth.isoformat()} after {as_of.isoformat()}")
    years = completed_years(date_of_birth, as_of)
    labels = age_band_labels(edges)
    for i, edge in enumerate(edges):
        if years < edge:
            return labels[i]
    return labels[-1]


UNKNOWN_REGION = "UNKNOWN"


@dataclass(frozen=True, slots=True)
class RegionCode:
    """Administrative city / district / optional sub-district.

    ``UNKNOWN`` is an explicit sentinel for both levels, never absent data.
    """

    city: str
    district: str
    subdistrict: str | None = None

    @classmethod
    def unknown(cls) -> "RegionCode":
        return cls(UNKNOWN_REGION, UNKNOWN_REGION)

    @property
    def is_unknown(self) -> bool:
        return self.city == UNKNOWN_REGION


@dataclass(frozen=True, slots=True)
class PersonRecord:
    """One deduplicated individual. ``person_key`` is unique in the store;
    at most one record exists per civil id."""

    person_key: str
    civil_id: str | None
    name_normalized: str
    date_of_birth: date | None
    sex: Sex
    region: RegionCode
    first_seen: date
    last_updated: datetime
