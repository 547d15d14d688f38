"""Static lint rules over extracted prompts.

Rules:
    PS001  leading whitespace              (warning)
    PS002  trailing whitespace             (warning)
    PS101  format argument mismatch        (error)
    PS102  mixed auto/manual slot numbering (error)
    PS103  format spec incompatible with a literal argument (error)
    PS201  possible typo in an English prompt (info)

PS101/PS103 only act on statically visible ``.format`` calls, and PS103 never
fires unless the argument value is a literal: the rules stay silent rather
than guess.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .extractors import PromptOccurrence
from .template import FormatCall, _render_value, is_unknown, match_arguments

RULES = ("PS001", "PS002", "PS101", "PS102", "PS103", "PS201")

DEFAULT_LEVELS = {
    "PS001": "warning",
    "PS002": "warning",
    "PS101": "error",
    "PS102": "error",
    "PS103": "error",
    "PS201": "info",
}

SEVERITY_ORDER = {"off": 0, "info": 1, "warning": 2, "error": 3}

# Core function words; kept inline so language detection still has a floor
# when callers swap in a custom dictionary.
STOPWORDS = frozenset(
    """a an and are as at be but by for from has have i if in into is it its me my
    no not of on or our so that the their them then there these they this to was
    we what when where which who will with you your""".split()
)

_LANG_TOKEN_RE = re.compile(r"[A-Za-z]+(?:'[A-Za-z]+)*")
_TYPO_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_CAMEL_PART_RE = re.compile(r"[a-z]+|[A-Z][a-z]*")
_CODE_SPAN_RES = (re.compile(r"```.*?```", re.S), re.compile(r"`[^`\n]+`"))


@dataclass(frozen=True)
class LintFinding:
    """One rule violation within a prompt's template text."""

    rule: str
    severity: str
    prompt_id: str
    path: str
    offsets: tuple[int, int]  # character range within the template text
    message: str
    suggestion: str | None = None
    line: int = 0  # occurrence start position in the source file
    col: int = 0


@dataclass
class LintConfig:
    """Rule levels, extra dictionary words, and the failure threshold."""

    levels: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_LEVELS))
    extra_words: frozenset[str] = frozenset()
    fail_level: str = "error"
    min_length_for_typos: int = 10

    def __post_init__(self) -> None:
        if self.fail_level not in ("warning", "error"):
            raise ValueError(f"fail_level must be 'warning' or 'error', got {self.fail_level!r}")
        for rule, level in self.levels.items():
            if rule not in RULES:
                raise ValueError(f"unknown lint rule {rule!r}")
            if level not in SEVERITY_ORDER:
                raise ValueError(f"unknown level {level!r} for rule {rule}")

    def level(self, rule: str) -> str:
        return self.levels.get(rule, DEFAULT_LEVELS[rule])

    def enabled(self, rule: str) -> bool:
        return self.level(rule) != "off"


@dataclass
class LintResult:
    findings: list[LintFinding]
    verdict: str  # pass | fail


def load_wordlist(path: str | Path) -> frozenset[str]:
    """Word-per-line UTF-8 list; blank lines and ``#`` comments ignored."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            words.add(word.lower())
    return frozenset(words)


@lru_cache(maxsize=1)
def load_dictionary() -> frozenset[str]:
    """The bundled English word list."""
    text = resources.files("promptset").joinpath("data/words_en.txt").read_text("utf-8")
    return frozenset(
        word.strip().lower()
        for word in text.splitlines()
        if word.strip() and not word.startswith("#")
    )


def _finding(
    occurrence: PromptOccurrence,
    rule: str,
    offsets: tuple[int, int],
    message: str,
    suggestion: str | None = None,
    severity: str | None = None,
) -> LintFinding:
    return LintFinding(
        rule=rule,
        severity=severity or DEFAULT_LEVELS[rule],
        prompt_id=occurrence.id,
        path=occurrence.path,
        offsets=offsets,
        message=message,
        suggestion=suggestion,
        line=occurrence.span.start_line,
        col=occurrence.span.start_col,
    )


def has_leading_whitespace(text: str) -> bool:
    return text != text.lstrip()


def has_trailing_whitespace(text: str) -> bool:
    return text != text.rstrip()


def lint_whitespace(occurrence: PromptOccurrence) -> list[LintFinding]:
    """PS001/PS002: the prompt differs from its stripped form."""
    assert occurrence.template is not None
    text = occurrence.template.text
    findings = []
    if has_leading_whitespace(text):
        run = len(text) - len(text.lstrip())
        findings.append(
            _finding(occurrence, "PS001", (0, run), "prompt has leading whitespace", text.strip())
        )
    if has_trailing_whitespace(text):
        run = len(text) - len(text.rstrip())
        findings.append(
            _finding(
                occurrence,
                "PS002",
                (len(text) - run, len(text)),
                "prompt has trailing whitespace",
                text.strip(),
            )
        )
    return findings


def _mixed_numbering_slot(template) -> int | None:
    """Index of the first slot that conflicts with the established numbering style."""
    first_kind = None
    for i, slot in enumerate(template.slots):
        if slot.kind not in ("auto", "manual_index"):
            continue
        if first_kind is None:
            first_kind = slot.kind
        elif slot.kind != first_kind:
            return i
    return None


def lint_slots(
    occurrence: PromptOccurrence, observed_format_calls: list[FormatCall] | tuple[FormatCall, ...]
) -> list[LintFinding]:
    """PS101/PS102: argument/slot mismatches that would raise at runtime."""
    assert occurrence.template is not None
    template = occurrence.template
    findings = []
    mixed_at = _mixed_numbering_slot(template)
    if mixed_at is not None:
        findings.append(
            _finding(
                occurrence,
                "PS102",
                template.slots[mixed_at].span,
                "template mixes automatic '{}' and manual '{0}' numbering",
            )
        )
        return findings
    for call in observed_format_calls:
        if not call.complete:
            continue  # *args/**kwargs may supply anything: no safe conclusion
        _, problems = match_arguments(template, call.positional, call.named_dict())
        for problem in problems:
            if problem.kind in ("missing", "out_of_range", "extra_positional", "extra_named"):
                if problem.slot_index is not None:
                    offsets = template.slots[problem.slot_index].span
                else:
                    offsets = (0, 0)
                findings.append(_finding(occurrence, "PS101", offsets, problem.message()))
    return findings


def lint_format_types(
    occurrence: PromptOccurrence, observed_format_calls: list[FormatCall] | tuple[FormatCall, ...]
) -> list[LintFinding]:
    """PS103: a literal argument that the slot's format spec rejects."""
    assert occurrence.template is not None
    template = occurrence.template
    findings = []
    seen: set[tuple[tuple[int, int], str]] = set()
    for call in observed_format_calls:
        assignments, problems = match_arguments(template, call.positional, call.named_dict())
        if any(p.kind == "mixed_numbering" for p in problems):
            continue
        for slot_index, value in sorted(assignments.items()):
            if is_unknown(value):
                continue
            slot = template.slots[slot_index]
            if not slot.format_spec:
                continue
            try:
                _render_value(value, slot.conversion, slot.format_spec)
            except (ValueError, TypeError):
                message = (
                    f"format spec '{slot.format_spec}' is incompatible with "
                    f"{type(value).__name__} argument {value!r}"
                )
                key = (slot.span, message)
                if key not in seen:
                    seen.add(key)
                    findings.append(_finding(occurrence, "PS103", slot.span, message))
    return findings


def detect_language(text: str, min_length: int = 10, lookup: frozenset[str] | None = None) -> str:
    """``en`` / ``other`` split via dictionary-hit ratio; short texts are ``unknown``.

    The length gate is measured over the UTF-8 encoding, so short texts in
    multibyte scripts still classify.
    """
    if len(text.encode("utf-8")) <= min_length:
        return "unknown"
    words = _LANG_TOKEN_RE.findall(text)
    if not words:
        return "other"
    if lookup is None:
        lookup = load_dictionary() | STOPWORDS
    hits = sum(1 for word in words if word.lower() in lookup)
    return "en" if hits / len(words) >= 0.6 else "other"


def _masked_text(template) -> str:
    """Template text with slots and backtick code spans blanked out."""
    chars = list(template.text)
    for slot in template.slots:
        for i in range(*slot.span):
            chars[i] = " "
    text = "".join(chars)
    for pattern in _CODE_SPAN_RES:
        text = pattern.sub(lambda m: " " * len(m.group(0)), text)
    return text


def lint_typos(
    occurrence: PromptOccurrence,
    dictionary: frozenset[str] | None = None,
    config: LintConfig | None = None,
) -> list[LintFinding]:
    """PS201: dictionary misses, after the noise filters.

    Skipped words: capitalized, containing underscores or digits, inside slot
    or backtick spans, or present in the configured extra dictionary.
    camelCase words are split and checked per lowercase part.
    """
    assert occurrence.template is not None
    dictionary = dictionary if dictionary is not None else load_dictionary()
    extra = config.extra_words if config else frozenset()
    findings = []
    for match in _TYPO_TOKEN_RE.finditer(_masked_text(occurrence.template)):
        word = match.group(0).rstrip("'")
        if len(word) < 2:
            continue
        if "_" in word or any(ch.isdigit() for ch in word):
            continue
        if word[0].isupper():
            continue
        if word.lower() in extra:
            continue
        if word.islower():
            if word not in dictionary:
                findings.append(
                    _finding(
                        occurrence,
                        "PS201",
                        (match.start(), match.start() + len(word)),
                        f"possible typo: '{word}'",
                    )
                )
            continue
        # camelCase: check each lowercase part; capitalized parts are skipped
        # just like capitalized words.
        for part in _CAMEL_PART_RE.finditer(word):
            text = part.group(0)
            if text[0].isupper() or len(text) < 2 or text in dictionary or text in extra:
                continue
            findings.append(
                _finding(
                    occurrence,
                    "PS201",
                    (match.start() + part.start(), match.start() + part.end()),
                    f"possible typo: '{text}'",
                )
            )
    return findings


def run_lints(
    occurrences: list[PromptOccurrence], config: LintConfig | None = None
) -> LintResult:
    """Apply enabled rules to each resolvable prompt; deterministic output order."""
    config = config or LintConfig()
    dictionary = load_dictionary()
    language_lookup = dictionary | STOPWORDS
    collected: list[tuple[tuple, LintFinding]] = []
    for occurrence in occurrences:
        if occurrence.template is None:
            continue
        produced: list[LintFinding] = []
        if config.enabled("PS001") or config.enabled("PS002"):
            produced.extend(
                f
                for f in lint_whitespace(occurrence)
                if config.enabled(f.rule)
            )
        if config.enabled("PS101") or config.enabled("PS102"):
            produced.extend(
                f
                for f in lint_slots(occurrence, occurrence.format_calls)
                if config.enabled(f.rule)
            )
        if config.enabled("PS103"):
            produced.extend(lint_format_types(occurrence, occurrence.format_calls))
        if config.enabled("PS201"):
            text = occurrence.template.text
            if detect_language(text, config.min_length_for_typos, language_lookup) == "en":
                produced.extend(lint_typos(occurrence, dictionary, config))
        for finding in produced:
            finding = LintFinding(
                rule=finding.rule,
                severity=config.level(finding.rule),
                prompt_id=finding.prompt_id,
                path=finding.path,
                offsets=finding.offsets,
                message=finding.message,
                suggestion=finding.suggestion,
                line=finding.line,
                col=finding.col,
            )
            sort_key = (
                occurrence.path,
                occurrence.span.key,
                finding.rule,
                finding.offsets,
                finding.message,
            )
            collected.append((sort_key, finding))
    collected.sort(key=lambda pair: pair[0])
    findings = [finding for _, finding in collected]
    threshold = SEVERITY_ORDER[config.fail_level]
    failed = any(SEVERITY_ORDER[f.severity] >= threshold for f in findings)
    return LintResult(findings=findings, verdict="fail" if failed else "pass")
