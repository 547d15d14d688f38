"""Statistics: dedup accounting, technique triggers, Zipf, and the merge law."""

import random
from collections import Counter

from hypothesis import given, settings, strategies as st

from promptset.analysis import (
    DEFAULT_LEXICON,
    CorpusStats,
    dedupe,
    default_tokenizer,
    detect_techniques,
    length_bucket,
    zipf_table,
)
from promptset.extractors import extract_all


def _occurrences(*sources: bytes):
    out = []
    for i, source in enumerate(sources):
        out.extend(extract_all(f"owner/repo/f{i}.py", source))
    return out


class TestDedupe:
    def test_identical_templates_collapse(self):
        occs = _occurrences(b'a_prompt = "same text"\n', b'b_prompt = "same text"\n')
        unique, totals = dedupe(occs)
        assert totals["total_found"] == 2
        assert totals["unique"] == 1
        assert unique == {"same text"}

    def test_empty(self):
        unique, totals = dedupe([])
        assert unique == set()
        assert totals == {"total_found": 0, "unique": 0, "over_10_chars": 0, "repositories": 0}

    def test_unresolved_keyed_by_raw(self):
        occs = _occurrences(b"import cohere\nco.chat(msg)\n")
        unique, totals = dedupe(occs)
        assert unique == {"msg"}
        assert totals["unique"] == 1

    def test_fixture_corpus_against_expected_enumeration(self, corpus_occurrences):
        # Brute-force oracle: dedup keys recomputed from the hand-enumerated
        # (template | raw) values.
        from expected_corpus import EXPECTED

        expected_keys = {e.template if e.template is not None else e.raw for e in EXPECTED}
        unique, totals = dedupe(corpus_occurrences)
        assert unique == expected_keys
        assert totals["total_found"] == len(EXPECTED)
        assert totals["repositories"] == len({e.path.rsplit("/", 2)[0] + "/" + e.path.split("/")[1] for e in EXPECTED})


class TestTechniques:
    def test_canonical_cot_triggers(self):
        for text in (
            "Let's think step-by-step",
            "think step by step",
            "lets think about it",
            "Thought: begin",
            "Thoughts: begin",
        ):
            assert "cot" in detect_techniques(text), text

    def test_empty_text(self):
        assert detect_techniques("") == frozenset()

    def test_few_shot_trigger(self):
        assert "few_shot" in detect_techniques("Use these examples:\nQ: ...\nA: ...")

    def test_case_insensitive(self):
        assert "concise" in detect_techniques("BE CONCISE")

    @given(st.text(max_size=80), st.text(min_size=1, max_size=10))
    def test_monotone_adding_trigger_never_removes(self, text, extra):
        base = detect_techniques(text)
        widened_lexicon = {k: v for k, v in DEFAULT_LEXICON.items()}
        widened_lexicon["cot"] = widened_lexicon["cot"] + (extra,)
        widened = detect_techniques(text, widened_lexicon)
        assert base <= widened


class TestZipf:
    def test_basic(self):
        assert zipf_table(["a b a"]) == [("a", 2), ("b", 1)]

    def test_empty(self):
        assert zipf_table([]) == []

    def test_ties_sorted_by_token(self):
        table = zipf_table(["b a c"])
        assert table == [("a", 1), ("b", 1), ("c", 1)]

    def test_frequencies_nonincreasing_and_mass_preserved(self, corpus_occurrences):
        texts = sorted({o.template.text for o in corpus_occurrences if o.template is not None})
        table = zipf_table(texts)
        freqs = [count for _, count in table]
        assert freqs == sorted(freqs, reverse=True)
        assert sum(freqs) == sum(len(default_tokenizer(t)) for t in texts)

    def test_brute_force_token_count_oracle(self):
        texts = ["Tell me a tale", "a tale, twice told!"]
        # independent tally: split on the same class rules by hand
        expected = Counter(
            ["tell", "me", "a", "tale", "a", "tale", ",", "twice", "told", "!"]
        )
        assert dict(zipf_table(texts)) == dict(expected)

    def test_tokenizer_punctuation_runs(self):
        assert default_tokenizer("Wait... really?!") == ["wait", "...", "really", "?!"]
        assert default_tokenizer("don't stop") == ["don't", "stop"]


class TestHistograms:
    def test_length_buckets(self):
        occs = _occurrences(b'a_prompt = "hi"\n', b'b_prompt = "hello world!"\n')
        stats = CorpusStats.from_occurrences(occs)
        assert stats.length_histogram() == {"0-9": 1, "10-19": 1}

    def test_length_bucket_overflow(self):
        assert length_bucket(999) == "990-999"
        assert length_bucket(1000) == "1000+"
        assert length_bucket(4321) == "1000+"

    def test_whitespace_counts(self):
        occs = _occurrences(
            b'a_prompt = "trailing here "\n',
            b'b_prompt = "clean one"\n',
            b'c_prompt = "another clean"\n',
        )
        stats = CorpusStats.from_occurrences(occs)
        ws = stats.whitespace_counts()
        assert ws["total"] == 3
        assert ws["trailing"] == 1
        assert ws["leading"] == 0
        assert ws["either"] == 1
        assert ws["trailing_percent"] == 33.3

    def test_arg_ranking(self):
        occs = _occurrences(
            b'import openai\nopenai.Completion.create(model="gpt-4", prompt="p1")\n',
            b'import openai\nopenai.Completion.create(model="gpt-4", prompt="p2")\n',
            b'import openai\nopenai.Completion.create(model="gpt-3.5-turbo", prompt="p3")\n',
        )
        stats = CorpusStats.from_occurrences(occs)
        assert stats.arg_stats()["model"] == [("gpt-4", 2), ("gpt-3.5-turbo", 1)]

    def test_language_mass_equals_over_10(self, corpus_occurrences):
        stats = CorpusStats.from_occurrences(corpus_occurrences)
        assert sum(stats.language_histogram().values()) == stats.totals()["over_10_chars"]

    def test_length_mass_equals_unique(self, corpus_occurrences):
        stats = CorpusStats.from_occurrences(corpus_occurrences)
        assert sum(stats.length_histogram().values()) == stats.totals()["unique"]


def _stats_view(stats: CorpusStats) -> dict:
    return {
        "per_source": stats.per_source_table(),
        "totals": stats.totals(),
        "lengths": stats.length_histogram(),
        "languages": stats.language_histogram(),
        "techniques": stats.technique_counts(),
        "whitespace": stats.whitespace_counts(),
        "args": stats.arg_stats(),
        "zipf": stats.zipf(),
    }


class TestMergeLaw:
    def test_identity(self):
        empty = CorpusStats()
        occs = _occurrences(b'a_prompt = "text"\n')
        stats = CorpusStats.from_occurrences(occs)
        assert _stats_view(stats.merge(empty)) == _stats_view(stats)
        assert _stats_view(empty.merge(stats)) == _stats_view(stats)

    def test_commutative(self, corpus_occurrences):
        half = len(corpus_occurrences) // 2
        a = CorpusStats.from_occurrences(corpus_occurrences[:half])
        b = CorpusStats.from_occurrences(corpus_occurrences[half:])
        assert _stats_view(a.merge(b)) == _stats_view(b.merge(a))

    @settings(deadline=None, max_examples=20)
    @given(st.integers(min_value=0, max_value=2**31))
    def test_random_file_bipartitions(self, corpus_occurrences, seed):
        by_path: dict[str, list] = {}
        for occ in corpus_occurrences:
            by_path.setdefault(occ.path, []).append(occ)
        paths = sorted(by_path)
        rng = random.Random(seed)
        left_paths = {p for p in paths if rng.random() < 0.5}
        left = [o for p in paths if p in left_paths for o in by_path[p]]
        right = [o for p in paths if p not in left_paths for o in by_path[p]]
        whole = CorpusStats.from_occurrences(left + right)
        merged = CorpusStats.from_occurrences(left).merge(CorpusStats.from_occurrences(right))
        assert _stats_view(whole) == _stats_view(merged)

    def test_associative(self, corpus_occurrences):
        third = len(corpus_occurrences) // 3
        a = CorpusStats.from_occurrences(corpus_occurrences[:third])
        b = CorpusStats.from_occurrences(corpus_occurrences[third : 2 * third])
        c = CorpusStats.from_occurrences(corpus_occurrences[2 * third :])
        assert _stats_view(a.merge(b).merge(c)) == _stats_view(a.merge(b.merge(c)))
