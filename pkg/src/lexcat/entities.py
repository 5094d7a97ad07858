"""Rule-based extraction of the seven judicial features from raw judgement text.

Detectors operate on NFC-normalised text, match case-insensitively and are
pure functions of (text, lexica). Section markers: the heading ends at the
first pleas-of-fact marker, the decision section starts after the last
ruling marker.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

from .lexica import EntityLexica

UNKNOWN = "unknown"
MULTIPLE_DECISION = "multiple decision"

JURISDICTIONS = ("civil", "contentious-administrative", "penal", "social")
RESOLUTION_TYPES = ("sentencia", "orden", "decreto")

_HEADING_END = re.compile(r"ANTECEDENTES\s+DE\s+HECHO", re.IGNORECASE)
_DECISION_START = re.compile(r"\b(?:FALLAMOS|FALLO|PARTE\s+DISPOSITIVA)\b", re.IGNORECASE)

# Spanish display forms used by the explanation template.
SPANISH_DISPLAY = {
    "substantive": "sustantivo",
    "procedural": "procesal",
    "first": "primera",
    "second": "segunda",
    "third": "tercera",
    "higher": "superior",
    "contentious-administrative": "contencioso-administrativo",
}


class GinParseError(ValueError):
    pass


@dataclass(frozen=True)
class GinFields:
    province: str
    court_code: str
    jurisdiction_digit: str
    year: str
    sequence: str

    def concat(self) -> str:
        return (
            self.province
            + self.court_code
            + self.jurisdiction_digit
            + self.year
            + self.sequence
        )


def parse_gin(gin: str) -> GinFields:
    """Slice a 19-digit General Identification Number into its fixed fields."""
    if not isinstance(gin, str) or not re.fullmatch(r"[0-9]{19}", gin):
        raise GinParseError(f"gin must be exactly 19 decimal digits: {gin!r}")
    return GinFields(gin[0:5], gin[5:7], gin[7:8], gin[8:12], gin[12:19])


@dataclass(frozen=True)
class EntityRecord:
    case_type: str
    court: str
    decision: str
    decision_type: str
    instance_type: str
    jurisdiction: str
    resolution_type: str

    def __post_init__(self) -> None:
        if self.resolution_type == "sentencia" and self.decision_type != "substantive":
            raise ValueError("sentencia resolutions must be substantive decisions")
        if self.resolution_type in ("orden", "decreto") and self.decision_type != "procedural":
            raise ValueError("orden/decreto resolutions must be procedural decisions")

    def values(self) -> tuple[str, ...]:
        return (
            self.case_type,
            self.court,
            self.decision,
            self.decision_type,
            self.instance_type,
            self.jurisdiction,
            self.resolution_type,
        )

    def display_values(self) -> tuple[str, ...]:
        return tuple(SPANISH_DISPLAY.get(v, v) for v in self.values())


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def _phrase_pattern(phrase: str) -> re.Pattern:
    words = [re.escape(w) for w in phrase.split()]
    return re.compile(r"\b" + r"\s+".join(words) + r"\b", re.IGNORECASE)


def _first_match(text: str, phrases: list[str]) -> str | None:
    """Earliest occurrence wins; at equal position the longest phrase wins;
    remaining ties go to lexicon order."""
    best: tuple[int, int, int] | None = None
    best_phrase = None
    for order, phrase in enumerate(phrases):
        m = _phrase_pattern(phrase).search(text)
        if m is None:
            continue
        rank = (m.start(), -(m.end() - m.start()), order)
        if best is None or rank < best:
            best = rank
            best_phrase = phrase
    return best_phrase


def detect_case_type(text: str, lexicon) -> str:
    """First case-type lexicon hit in the given (heading) text.

    The case number pattern that usually trails the type name (digits and a
    /year suffix) is irrelevant to the match and simply ignored.
    """
    names = [e.name for e in lexicon]
    hit = _first_match(_nfc(text), names)
    return hit if hit is not None else UNKNOWN


def detect_court(text: str, court_lexicon) -> str:
    hit = _first_match(_nfc(text), list(court_lexicon))
    return hit if hit is not None else UNKNOWN


def detect_decision(decision_section: str, decision_lexicon) -> str:
    """Exactly one keyword in the ruling section names the decision; two or
    more distinct keywords make it a multiple decision."""
    text = _nfc(decision_section)
    found = [kw for kw in decision_lexicon if _phrase_pattern(kw).search(text)]
    if not found:
        return UNKNOWN
    if len(set(found)) > 1:
        return MULTIPLE_DECISION
    return found[0]


def derive_instance_type(case_type: str) -> str:
    """Instance level from the case-type string; checks run from the most
    specific keyword down so 'recurso de casación' lands on third."""
    s = _nfc(case_type or "").casefold()
    if "casación" in s or "unificación" in s:
        return "third"
    if "apelación" in s or "suplicación" in s:
        return "second"
    if "recurso" in s:
        return "first"
    return "higher"


def detect_jurisdiction(text: str, gin: str | None, lexica: EntityLexica) -> str:
    """Three detection routes in decreasing reliability: judicial-division
    phrase, GIN jurisdiction digit, case-type lexicon mapping."""
    nfc_text = _nfc(text)
    hit = _first_match(nfc_text, list(lexica.divisions))
    if hit is not None:
        return lexica.divisions[hit]
    if gin is not None:
        try:
            digit = parse_gin(gin).jurisdiction_digit
        except GinParseError:
            digit = None
        if digit is not None and digit in lexica.gin_jurisdiction:
            return lexica.gin_jurisdiction[digit]
    case_type = detect_case_type(nfc_text, lexica.case_types)
    if case_type != UNKNOWN:
        for entry in lexica.case_types:
            if entry.name == case_type and entry.jurisdiction:
                return entry.jurisdiction
    return UNKNOWN


def detect_resolution_type(heading_tail: str) -> str:
    """Resolution keyword closest to the end of the heading.

    A second pass on the whitespace-collapsed tail catches the letter-spaced
    style used in judgement headings (S E N T E N C I A).
    """
    text = _nfc(heading_tail)
    best_end = -1
    best = None
    for kw in RESOLUTION_TYPES:
        matches = list(re.finditer(r"\b" + kw + r"\b", text, re.IGNORECASE))
        if matches and matches[-1].end() > best_end:
            best_end = matches[-1].end()
            best = kw
    if best is not None:
        return best
    compact = re.sub(r"\s+", "", text).casefold()
    for kw in RESOLUTION_TYPES:
        pos = compact.rfind(kw)
        if pos >= 0 and pos + len(kw) > best_end:
            best_end = pos + len(kw)
            best = kw
    return best if best is not None else UNKNOWN


def split_sections(text: str) -> tuple[str, str]:
    """(heading, decision_section) of a judgement text.

    Heading: everything before the first pleas-of-fact marker (whole text if
    absent). Decision section: everything after the last ruling marker
    (empty if absent).
    """
    nfc_text = _nfc(text)
    m = _HEADING_END.search(nfc_text)
    heading = nfc_text[: m.start()] if m else nfc_text
    starts = [m.end() for m in _DECISION_START.finditer(nfc_text)]
    decision = nfc_text[starts[-1] :] if starts else ""
    return heading, decision


def extract_entities(judgement, lexica: EntityLexica) -> EntityRecord:
    """Compose the six detectors plus the decision-type derivation."""
    heading, decision_section = split_sections(judgement.raw_text)
    case_type = detect_case_type(heading, lexica.case_types)
    court = detect_court(heading, lexica.courts)
    decision = detect_decision(decision_section, lexica.decisions)
    resolution = detect_resolution_type(heading)
    if resolution == "sentencia":
        decision_type = "substantive"
    elif resolution in ("orden", "decreto"):
        decision_type = "procedural"
    else:
        decision_type = UNKNOWN
    instance = UNKNOWN if case_type == UNKNOWN else derive_instance_type(case_type)
    jurisdiction = detect_jurisdiction(heading, judgement.gin, lexica)
    return EntityRecord(
        case_type=case_type,
        court=court,
        decision=decision,
        decision_type=decision_type,
        instance_type=instance,
        jurisdiction=jurisdiction,
        resolution_type=resolution,
    )
