"""Detection of references to people and companies, tag replacement and
name unification.

Trigger logic:
  * role nouns from the titles lexicon (magistrado, letrado, procurador...)
    are context only, they stay in the text;
  * honorifics (the @Person-tagged titles entries: D., Dña., don...) open a
    replaceable span and inherit the role of a role noun up to two tokens
    back;
  * implicit references (demandante, recurrente...) are replaced as tagged;
  * a corporate legal form swallows the capitalised run before it;
  * capitalised tokens from the name lexicon are swallowed by adjacent
    spans, or become standalone @Person spans.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field

from .lexica import AnonymiserLexica

TAGS = ("@Judge", "@Attorney", "@Lawyer", "@Corporate", "@Person")
_PRECEDENCE = {tag: i for i, tag in enumerate(TAGS)}

_TOKEN = re.compile(r"\S+")
_LEAD = "(«¡¿[\"'"
_TRAIL = ",;:)»]\"'"

_MAX_PHRASE = 5
_CONTEXT_WINDOW = 2


@dataclass
class ReferenceSpan:
    start: int
    end: int
    tag: str
    surface: str
    names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span offsets [{self.start}, {self.end})")
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag: {self.tag}")


@dataclass
class AnonymisationReport:
    counts: dict[str, int]
    replaced_names: list[tuple[str, str]]


@dataclass(frozen=True)
class _Token:
    start: int
    end: int
    text: str
    core: str
    core_start: int
    core_end: int


def _tokens(text: str) -> list[_Token]:
    out = []
    for m in _TOKEN.finditer(text):
        tok = m.group(0)
        lead = len(tok) - len(tok.lstrip(_LEAD))
        stripped = tok.lstrip(_LEAD).rstrip(_TRAIL)
        out.append(
            _Token(
                start=m.start(),
                end=m.end(),
                text=tok,
                core=stripped,
                core_start=m.start() + lead,
                core_end=m.start() + lead + len(stripped),
            )
        )
    return out


def _is_name(tok: _Token, lexica: AnonymiserLexica) -> tuple[bool, int]:
    """Whether the token is a capitalised lexicon name; returns the core end
    offset of the matched form (a trailing period is not part of a name)."""
    core = tok.core
    if not core or not core[0].isupper():
        return False, tok.core_end
    names = lexica.first_names | lexica.surnames
    if core.casefold() in names:
        return True, tok.core_end
    trimmed = core.rstrip(".")
    if trimmed and trimmed.casefold() in names:
        return True, tok.core_start + len(trimmed)
    return False, tok.core_end


def _name_core(tok: _Token, lexica: AnonymiserLexica) -> str:
    core = tok.core
    if core.casefold() in (lexica.first_names | lexica.surnames):
        return core
    return core.rstrip(".")


def _scan_triggers(
    text: str, lexica: AnonymiserLexica
) -> tuple[list[_Token], dict[int, str], list[ReferenceSpan], list[bool]]:
    toks = _tokens(text)
    n = len(toks)
    claimed = [False] * n
    context: dict[int, str] = {}
    spans: list[ReferenceSpan] = []
    form_set = set(lexica.corporate_forms)
    lex_words = set(lexica.titles) | set(lexica.implicit_refs)

    i = 0
    while i < n:
        if claimed[i]:
            i += 1
            continue
        matched = False
        # titles / implicit references, longest phrase first
        for width in range(min(_MAX_PHRASE, n - i), 0, -1):
            if any(claimed[i + k] for k in range(width)):
                continue
            phrase = " ".join(toks[i + k].core.casefold() for k in range(width))
            if phrase in lexica.titles:
                tag = lexica.titles[phrase]
                last = i + width - 1
                if tag == "@Person":
                    # honorific: replaceable, role comes from nearby context
                    for back in range(1, _CONTEXT_WINDOW + 1):
                        if i - back in context:
                            tag = context[i - back]
                            break
                    spans.append(
                        ReferenceSpan(
                            toks[i].core_start,
                            toks[last].core_end,
                            tag,
                            text[toks[i].core_start : toks[last].core_end],
                        )
                    )
                    for k in range(width):
                        claimed[i + k] = True
                else:
                    context[last] = tag
                i += width
                matched = True
                break
            if phrase in lexica.implicit_refs:
                last = i + width - 1
                spans.append(
                    ReferenceSpan(
                        toks[i].core_start,
                        toks[last].core_end,
                        lexica.implicit_refs[phrase],
                        text[toks[i].core_start : toks[last].core_end],
                    )
                )
                for k in range(width):
                    claimed[i + k] = True
                i += width
                matched = True
                break
        if matched:
            continue
        # corporate legal form: swallow the capitalised run before it
        if toks[i].core in form_set:
            first = i
            j = i - 1
            taken = 0
            while j >= 0 and taken < 4 and not claimed[j]:
                core = toks[j].core
                if not core or not core[0].isupper():
                    break
                if core.casefold() in lex_words:
                    break
                first = j
                taken += 1
                j -= 1
            spans.append(
                ReferenceSpan(
                    toks[first].core_start,
                    toks[i].core_end,
                    "@Corporate",
                    text[toks[first].core_start : toks[i].core_end],
                )
            )
            for k in range(first, i + 1):
                claimed[k] = True
        i += 1
    return toks, context, spans, claimed


def detect_references(text: str, lexica: AnonymiserLexica) -> list[ReferenceSpan]:
    """Left-to-right, longest-match trigger detection; spans never overlap."""
    _, _, spans, _ = _scan_triggers(text, lexica)
    return sorted(spans, key=lambda s: s.start)


def expand_names(
    text: str, spans: list[ReferenceSpan], lexica: AnonymiserLexica
) -> list[ReferenceSpan]:
    """Grow each span over adjacent capitalised lexicon names (rightward then
    leftward); leftover lexicon names become standalone @Person spans."""
    toks = _tokens(text)
    n = len(toks)
    claimed = [False] * n
    for span in spans:
        for k, tok in enumerate(toks):
            if tok.start < span.end and tok.end > span.start:
                claimed[k] = True

    out = [ReferenceSpan(s.start, s.end, s.tag, s.surface, list(s.names)) for s in spans]
    out.sort(key=lambda s: s.start)
    for span in out:
        right = next((k for k, t in enumerate(toks) if t.start >= span.end), n)
        while right < n and not claimed[right]:
            ok, core_end = _is_name(toks[right], lexica)
            if not ok:
                break
            span.end = core_end
            span.names.append(_name_core(toks[right], lexica))
            claimed[right] = True
            right += 1
        left = next((k for k in range(n - 1, -1, -1) if toks[k].end <= span.start), -1)
        while left >= 0 and not claimed[left]:
            ok, _ = _is_name(toks[left], lexica)
            if not ok:
                break
            span.start = toks[left].core_start
            span.names.insert(0, _name_core(toks[left], lexica))
            claimed[left] = True
            left -= 1
        span.surface = text[span.start : span.end]

    for k in range(n):
        if claimed[k]:
            continue
        ok, end = _is_name(toks[k], lexica)
        if not ok:
            continue
        names = [_name_core(toks[k], lexica)]
        start = toks[k].core_start
        claimed[k] = True
        j = k + 1
        while j < n and not claimed[j]:
            ok, core_end = _is_name(toks[j], lexica)
            if not ok:
                break
            names.append(_name_core(toks[j], lexica))
            end = core_end
            claimed[j] = True
            j += 1
        out.append(ReferenceSpan(start, end, "@Person", text[start:end], names))
    out.sort(key=lambda s: s.start)
    return out


def jaro(a: str, b: str) -> float:
    """Standard Jaro similarity in [0, 1]: window-limited character matches
    plus a transposition term."""
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    window = max(la, lb) // 2 - 1
    if window < 0:
        window = 0
    match_a = [False] * la
    match_b = [False] * lb
    m = 0
    for i, ch in enumerate(a):
        lo = max(0, i - window)
        hi = min(lb, i + window + 1)
        for j in range(lo, hi):
            if not match_b[j] and b[j] == ch:
                match_a[i] = True
                match_b[j] = True
                m += 1
                break
    if m == 0:
        return 0.0
    seq_b = [b[j] for j in range(lb) if match_b[j]]
    mismatches = 0
    k = 0
    for i in range(la):
        if match_a[i]:
            if a[i] != seq_b[k]:
                mismatches += 1
            k += 1
    t = mismatches // 2
    return (m / la + m / lb + (m - t) / m) / 3.0


def unify_names(names: list[str], threshold: float) -> dict[str, str]:
    """Single-link grouping of names with pairwise Jaro >= threshold.

    Similarity is computed on NFD-decomposed strings so that accent variants
    of the same name land in one group. Canonical member: most frequent,
    ties broken lexicographically.
    """
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must be in (0, 1]: {threshold}")
    freq = Counter(names)
    distinct = sorted(freq)
    k = len(distinct)
    keys = [unicodedata.normalize("NFD", s) for s in distinct]
    parent = list(range(k))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(k):
        for j in range(i + 1, k):
            if jaro(keys[i], keys[j]) >= threshold:
                parent[find(i)] = find(j)

    groups: dict[int, list[str]] = {}
    for i, name in enumerate(distinct):
        groups.setdefault(find(i), []).append(name)
    mapping = {}
    for members in groups.values():
        canonical = min(members, key=lambda s: (-freq[s], s))
        for name in members:
            mapping[name] = canonical
    return mapping


def anonymize(
    text: str, lexica: AnonymiserLexica, threshold: float = 0.9
) -> tuple[str, AnonymisationReport]:
    """Replace every detected reference span with its role tag.

    Standalone @Person spans preceded by a role noun are upgraded to its
    role; the local role registry overrides tags per verified name.
    """
    toks, context, _, _ = _scan_triggers(text, lexica)
    spans = detect_references(text, lexica)
    spans = expand_names(text, spans, lexica)

    tok_before: dict[int, int] = {}
    for span in spans:
        idx = -1
        for k, t in enumerate(toks):
            if t.end <= span.start:
                idx = k
            else:
                break
        tok_before[id(span)] = idx

    for span in spans:
        base = tok_before[id(span)]
        if span.tag == "@Person":
            for back in range(_CONTEXT_WINDOW):
                k = base - back
                if k in context:
                    if _PRECEDENCE[context[k]] < _PRECEDENCE[span.tag]:
                        span.tag = context[k]
                    break
        full_name = " ".join(span.names).casefold()
        if full_name and full_name in lexica.role_registry:
            span.tag = lexica.role_registry[full_name]

    counts: Counter = Counter()
    replaced: set[tuple[str, str]] = set()
    all_names = [" ".join(s.names) for s in spans if s.names]
    mapping = unify_names(all_names, threshold)
    result = text
    for span in sorted(spans, key=lambda s: s.start, reverse=True):
        result = result[: span.start] + span.tag + result[span.end :]
        counts[span.tag] += 1
        if span.names:
            original = " ".join(span.names)
            replaced.add((original, mapping[original]))
    report = AnonymisationReport(dict(counts), sorted(replaced))
    return result, report
