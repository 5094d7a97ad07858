"""Loading of the lexica and lookup tables the detectors run on.

All files are plain UTF-8, one entry per line. Two-column files are
tab-separated. A bundled default set lives in the package's data/
directory; any directory with the same file names can replace it.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path


class ConfigurationError(RuntimeError):
    """A required lexicon or resource file is missing or malformed."""


def default_data_dir() -> Path:
    return Path(str(resources.files("lexcat").joinpath("data")))


def _lines(path: Path) -> list[str]:
    if not path.is_file():
        raise ConfigurationError(f"missing lexicon file: {path}")
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = unicodedata.normalize("NFC", line.strip())
        if line:
            out.append(line)
    return out


def _wordlist(path: Path) -> list[str]:
    return _lines(path)


def _pairs(path: Path) -> list[tuple[str, str]]:
    entries = []
    for line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ConfigurationError(f"{path}: expected 'key<TAB>value', got {line!r}")
        entries.append((parts[0], parts[1]))
    return entries


def _optional_pairs(path: Path) -> list[tuple[str, str | None]]:
    entries = []
    for line in _lines(path):
        parts = line.split("\t")
        name = parts[0].strip()
        value = parts[1].strip() if len(parts) > 1 and parts[1].strip() else None
        if not name:
            raise ConfigurationError(f"{path}: empty entry name in {line!r}")
        entries.append((name, value))
    return entries


@dataclass(frozen=True)
class TextResources:
    stopwords: frozenset[str]
    lemmas: dict[str, str]


@dataclass(frozen=True)
class CaseTypeEntry:
    name: str
    jurisdiction: str | None = None


@dataclass(frozen=True)
class EntityLexica:
    case_types: tuple[CaseTypeEntry, ...]
    courts: tuple[str, ...]
    decisions: tuple[str, ...]
    divisions: dict[str, str]
    gin_jurisdiction: dict[str, str]


@dataclass(frozen=True)
class AnonymiserLexica:
    titles: dict[str, str]
    implicit_refs: dict[str, str]
    corporate_forms: tuple[str, ...]
    first_names: frozenset[str]
    surnames: frozenset[str]
    role_registry: dict[str, str]


@dataclass(frozen=True)
class Lexica:
    text: TextResources
    entities: EntityLexica
    anonymiser: AnonymiserLexica


def load_text_resources(data_dir: Path | None = None) -> TextResources:
    d = Path(data_dir) if data_dir else default_data_dir()
    stop = frozenset(_wordlist(d / "stopwords.txt"))
    lemmas = {}
    for form, lemma in _pairs(d / "lemmas.tsv"):
        if any(ch.isspace() for ch in form + lemma):
            raise ConfigurationError(f"lemma entries must be single tokens: {form!r}")
        lemmas[form] = lemma
    return TextResources(stop, lemmas)


def load_entity_lexica(data_dir: Path | None = None) -> EntityLexica:
    d = Path(data_dir) if data_dir else default_data_dir()
    case_types = tuple(
        CaseTypeEntry(name, juris) for name, juris in _optional_pairs(d / "case_types.tsv")
    )
    courts = tuple(_wordlist(d / "courts.txt"))
    decisions = tuple(_wordlist(d / "decisions.txt"))
    divisions = dict(_pairs(d / "divisions.tsv"))
    gin_map = dict(_pairs(d / "gin_jurisdiction.tsv"))
    return EntityLexica(case_types, courts, decisions, divisions, gin_map)


def load_anonymiser_lexica(data_dir: Path | None = None) -> AnonymiserLexica:
    d = Path(data_dir) if data_dir else default_data_dir()
    titles = {k.casefold(): v for k, v in _pairs(d / "titles.tsv")}
    implicit = {k.casefold(): v for k, v in _pairs(d / "implicit_refs.tsv")}
    forms = tuple(_wordlist(d / "corporate_forms.txt"))
    first = frozenset(n.casefold() for n in _wordlist(d / "first_names.txt"))
    last = frozenset(n.casefold() for n in _wordlist(d / "surnames.txt"))
    registry_path = d / "roles.tsv"
    registry = (
        {k.casefold(): v for k, v in _pairs(registry_path)}
        if registry_path.is_file()
        else {}
    )
    return AnonymiserLexica(titles, implicit, forms, first, last, registry)


def load_lexica(data_dir: Path | None = None) -> Lexica:
    return Lexica(
        text=load_text_resources(data_dir),
        entities=load_entity_lexica(data_dir),
        anonymiser=load_anonymiser_lexica(data_dir),
    )
