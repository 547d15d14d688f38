"""Corpus-level statistics: dedup accounting, histograms, technique detection, Zipf.

:class:`CorpusStats` is a mergeable carrier of raw tallies (merge is
associative and commutative with empty stats as identity); every table is
derived from the merged tallies, so partitioning a corpus and merging partial
stats reproduces the whole-corpus numbers exactly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import groupby
from pathlib import Path
from typing import Callable, Iterable

from .extractors import SOURCE_PRIORITY, PromptOccurrence
from .lint import STOPWORDS, detect_language, has_leading_whitespace, has_trailing_whitespace, load_dictionary

TECHNIQUES = (
    "concise",
    "few_shot",
    "doc",
    "cot",
    "code_block",
    "instruction_block",
    "scratchpad",
    "tool_use",
    "special_tokens",
)

#: Trigger phrases, matched case-insensitively. Only the chain-of-thought list
#: is canonical; the rest are declared defaults, overridable via a lexicon file,
#: which makes the technique table lexicon-dependent.
DEFAULT_LEXICON: dict[str, tuple[str, ...]] = {
    "concise": ("concise",),
    "few_shot": ("example:", "examples:", "few-shot", "for example:"),
    "doc": ("document", "documents"),
    "cot": (
        "step-by-step",
        "step by step",
        "let's think",
        "lets think",
        "thought:",
        "thoughts:",
    ),
    "code_block": ("```",),
    "instruction_block": ("### instruction", "[inst]", "instructions:"),
    "scratchpad": ("scratchpad",),
    "tool_use": ("tool:", "tools:", "use the tool"),
    "special_tokens": ("<|", "|>", "</s>", "[inst]"),
}

ARG_PARAMETERS = ("model", "temperature", "top_p", "max_tokens")

LENGTH_BUCKET_WIDTH = 10
LENGTH_OVERFLOW = 1000


def load_lexicon(path: str | Path) -> dict[str, tuple[str, ...]]:
    """Parse ``technique: phrase`` lines into a trigger mapping."""
    triggers: dict[str, list[str]] = {}
    for raw_line in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise ValueError(f"lexicon line must be 'technique: phrase', got {line!r}")
        technique, phrase = line.split(":", 1)
        technique, phrase = technique.strip(), phrase.strip()
        if not technique or not phrase:
            raise ValueError(f"lexicon line must be 'technique: phrase', got {line!r}")
        triggers.setdefault(technique, []).append(phrase)
    if not triggers:
        raise ValueError("lexicon file defines no triggers")
    return {tech: tuple(phrases) for tech, phrases in triggers.items()}


def detect_techniques(text: str, lexicon: dict[str, tuple[str, ...]] | None = None) -> frozenset[str]:
    """Techniques whose any trigger phrase occurs in the text, case-insensitive."""
    lexicon = lexicon if lexicon is not None else DEFAULT_LEXICON
    lowered = text.lower()
    return frozenset(
        technique
        for technique, phrases in lexicon.items()
        if any(phrase.lower() in lowered for phrase in phrases)
    )


def default_tokenizer(text: str) -> list[str]:
    """Maximal runs of letters/digits/apostrophes (lowercased); punctuation runs
    are single tokens; whitespace separates."""

    def klass(ch: str) -> str:
        if ch.isspace():
            return "s"
        if ch.isalnum() or ch == "'":
            return "w"
        return "p"

    tokens = []
    for kind, run in groupby(text, key=klass):
        if kind == "s":
            continue
        token = "".join(run)
        tokens.append(token.lower() if kind == "w" else token)
    return tokens


def zipf_table(
    texts: Iterable[str], tokenizer: Callable[[str], list[str]] | None = None
) -> list[tuple[str, int]]:
    """Rank-frequency table: frequency descending, ties by token ascending."""
    tokenize = tokenizer or default_tokenizer
    counts: Counter = Counter()
    for text in texts:
        counts.update(tokenize(text))
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))


def length_bucket(length: int) -> str:
    if length >= LENGTH_OVERFLOW:
        return f"{LENGTH_OVERFLOW}+"
    start = (length // LENGTH_BUCKET_WIDTH) * LENGTH_BUCKET_WIDTH
    return f"{start}-{start + LENGTH_BUCKET_WIDTH - 1}"


def _percent(count: int, base: int) -> float:
    return round(100.0 * count / base, 1) if base else 0.0


@dataclass
class CorpusStats:
    """Mergeable raw tallies plus the tables derived from them."""

    occurrences: int = 0
    per_source: Counter = field(default_factory=Counter)
    resolved_texts: Counter = field(default_factory=Counter)
    unresolved_raws: Counter = field(default_factory=Counter)
    repos: set[str] = field(default_factory=set)
    arg_values: dict[str, Counter] = field(
        default_factory=lambda: {param: Counter() for param in ARG_PARAMETERS}
    )

    @classmethod
    def from_occurrences(cls, occurrences: Iterable[PromptOccurrence]) -> "CorpusStats":
        stats = cls()
        for occurrence in occurrences:
            stats.occurrences += 1
            stats.per_source[occurrence.source] += 1
            stats.repos.add(occurrence.repo)
            if occurrence.template is not None:
                stats.resolved_texts[occurrence.template.text] += 1
            else:
                stats.unresolved_raws[occurrence.raw] += 1
            if occurrence.args is not None:
                for param in ARG_PARAMETERS:
                    value = getattr(occurrence.args, param)
                    if value is not None:
                        stats.arg_values[param][value] += 1
        return stats

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        merged = CorpusStats(
            occurrences=self.occurrences + other.occurrences,
            per_source=self.per_source + other.per_source,
            resolved_texts=self.resolved_texts + other.resolved_texts,
            unresolved_raws=self.unresolved_raws + other.unresolved_raws,
            repos=self.repos | other.repos,
        )
        for param in ARG_PARAMETERS:
            merged.arg_values[param] = self.arg_values[param] + other.arg_values[param]
        return merged

    # ---- derived tables ----

    def unique_keys(self) -> set[str]:
        return set(self.resolved_texts) | set(self.unresolved_raws)

    def totals(self) -> dict[str, int]:
        unique = self.unique_keys()
        return {
            "total_found": self.occurrences,
            "unique": len(unique),
            "over_10_chars": sum(1 for key in unique if len(key) > 10),
            "repositories": len(self.repos),
        }

    def per_source_table(self) -> dict[str, int]:
        return {source: self.per_source.get(source, 0) for source in SOURCE_PRIORITY}

    def length_histogram(self) -> dict[str, int]:
        buckets: Counter = Counter(length_bucket(len(key)) for key in self.unique_keys())

        def bucket_start(label: str) -> int:
            return LENGTH_OVERFLOW if label.endswith("+") else int(label.split("-")[0])

        return {label: buckets[label] for label in sorted(buckets, key=bucket_start)}

    def language_histogram(self, min_length: int = 10) -> dict[str, int]:
        lookup = load_dictionary() | STOPWORDS
        counts: Counter = Counter()
        for key in self.unique_keys():
            if len(key) > min_length:
                counts[detect_language(key, min_length, lookup)] += 1
        return {tag: counts[tag] for tag in sorted(counts)}

    def technique_counts(
        self, lexicon: dict[str, tuple[str, ...]] | None = None, min_length: int = 10
    ) -> dict[str, object]:
        lexicon = lexicon if lexicon is not None else DEFAULT_LEXICON
        considered = [key for key in self.unique_keys() if len(key) > min_length]
        counts: Counter = Counter()
        for key in considered:
            for technique in detect_techniques(key, lexicon):
                counts[technique] += 1
        base = len(considered)
        ordered = [t for t in TECHNIQUES if t in lexicon] + sorted(set(lexicon) - set(TECHNIQUES))
        return {
            "note": "lexicon-dependent",
            "total": base,
            "counts": {
                technique: {"count": counts[technique], "percent": _percent(counts[technique], base)}
                for technique in ordered
            },
        }

    def whitespace_counts(self) -> dict[str, object]:
        unique = self.unique_keys()
        trailing = sum(1 for key in unique if has_trailing_whitespace(key))
        leading = sum(1 for key in unique if has_leading_whitespace(key))
        either = sum(
            1 for key in unique if has_trailing_whitespace(key) or has_leading_whitespace(key)
        )
        total = len(unique)
        return {
            "total": total,
            "trailing": trailing,
            "trailing_percent": _percent(trailing, total),
            "leading": leading,
            "leading_percent": _percent(leading, total),
            "either": either,
            "either_percent": _percent(either, total),
        }

    def arg_stats(self) -> dict[str, list[tuple[object, int]]]:
        out: dict[str, list[tuple[object, int]]] = {}
        for param in ARG_PARAMETERS:
            ranked = sorted(
                self.arg_values[param].items(),
                key=lambda item: (-item[1], str(item[0]), type(item[0]).__name__),
            )
            out[param] = ranked
        return out

    def zipf(
        self,
        tokenizer: Callable[[str], list[str]] | None = None,
        top: int | None = None,
    ) -> list[tuple[str, int]]:
        table = zipf_table(sorted(self.resolved_texts), tokenizer)
        return table[:top] if top else table


def merge(a: CorpusStats, b: CorpusStats) -> CorpusStats:
    return a.merge(b)


def dedupe(occurrences: Iterable[PromptOccurrence]) -> tuple[set[str], dict[str, int]]:
    """Unique dedup-key set (template text, or raw text when unresolved) + totals."""
    stats = CorpusStats.from_occurrences(occurrences)
    return stats.unique_keys(), stats.totals()
