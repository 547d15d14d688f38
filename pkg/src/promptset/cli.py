"""Command-line entry point: ``promptset extract|lint|stats``.

Outputs are byte-identical across repeated runs and worker counts: files are
processed in sorted-path order and all user-visible output is produced from
the merged, sorted result. ``PROMPTSET_NO_PARALLEL=1`` forces single-threaded
execution for debugging.

Exit codes: 0 success / no failing findings, 1 lint failure, 2 usage or
config error, 3 IO error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .analysis import CorpusStats, load_lexicon
from .corpus import FileRecord, is_candidate, load_jsonl_corpus, walk
from .extractors import PromptOccurrence, extract_all
from .lint import DEFAULT_LEVELS, RULES, SEVERITY_ORDER, LintConfig, load_wordlist, run_lints
from .syntax import GRAMMAR_VERSION

CONFIG_NAME = "promptset.json"
ENV_NO_PARALLEL = "PROMPTSET_NO_PARALLEL"

_CONFIG_KEYS = {
    "rules",
    "dictionary",
    "lexicon_path",
    "min_prompt_length",
    "fail_level",
    "repo_depth",
}

_STAT_SECTIONS = (
    "per_source",
    "totals",
    "length_histogram",
    "language_histogram",
    "techniques",
    "whitespace",
    "args",
    "zipf",
)


class UsageError(Exception):
    """Invalid flags or configuration (exit 2)."""


class InputError(Exception):
    """Unreadable or missing input (exit 3)."""


@dataclass
class ToolConfig:
    """promptset.json contents; unknown keys are rejected by the loader."""

    rules: dict[str, str] = field(default_factory=dict)
    dictionary: list[str] = field(default_factory=list)
    lexicon_path: str | None = None
    min_prompt_length: int = 10
    fail_level: str = "error"
    repo_depth: int = 2


def load_config(path: Path) -> ToolConfig:
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise InputError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise UsageError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(obj, dict):
        raise UsageError(f"config {path} must be a JSON object")
    for key in obj:
        if key not in _CONFIG_KEYS:
            raise UsageError(f"config {path}: unknown key {key!r}")
    config = ToolConfig(**obj)
    if config.fail_level not in ("warning", "error"):
        raise UsageError(f"config {path}: fail_level must be 'warning' or 'error'")
    if not isinstance(config.rules, dict):
        raise UsageError(f"config {path}: 'rules' must be an object")
    for rule, level in config.rules.items():
        if rule not in RULES:
            raise UsageError(f"config {path}: unknown rule {rule!r}")
        if level not in SEVERITY_ORDER:
            raise UsageError(f"config {path}: unknown level {level!r} for {rule}")
    return config


@dataclass
class WorkUnit:
    path: str
    data: bytes
    repo: str | None
    root: str | None
    repo_depth: int = 2


def _extract_unit(unit: WorkUnit) -> list[PromptOccurrence]:
    return extract_all(
        unit.path, unit.data, unit.root, repo=unit.repo, repo_depth=unit.repo_depth
    )


def _collect_units(args, config: ToolConfig) -> tuple[list[WorkUnit], list[FileRecord]]:
    repo_depth = args.repo_depth if args.repo_depth is not None else config.repo_depth
    records: list[tuple[FileRecord, str | None]] = []
    for raw in args.paths:
        path = Path(raw)
        if not path.exists():
            raise InputError(f"path not found: {raw}")
        if args.from_jsonl:
            if not path.is_file():
                raise UsageError(f"--from-jsonl expects a file: {raw}")
            try:
                records.extend((record, None) for record in load_jsonl_corpus(path))
            except OSError as err:
                raise InputError(f"cannot read {raw}: {err}") from err
        elif path.is_dir():
            records.extend(
                (record, str(path)) for record in walk(path, repo_depth=repo_depth)
            )
        elif path.is_file():
            data = path.read_bytes()
            rel = path.name
            records.append(
                (FileRecord(rel, "", data, len(data)), str(path.parent))
            )
        else:
            raise UsageError(f"not a file or directory: {raw}")

    skipped = [record for record, _ in records if record.skipped_reason is not None]
    usable = [(record, root) for record, root in records if record.data is not None]
    if not args.no_filter:
        usable = [(record, root) for record, root in usable if is_candidate(record)]
    units = [
        WorkUnit(
            path=record.path,
            data=record.data or b"",
            repo=record.repo or None,
            root=root,
            repo_depth=repo_depth,
        )
        for record, root in usable
    ]
    units.sort(key=lambda unit: unit.path)
    return units, skipped


def _run_pipeline(units: list[WorkUnit], jobs: int | None) -> list[list[PromptOccurrence]]:
    serial = (
        os.environ.get(ENV_NO_PARALLEL) == "1"
        or jobs == 1
        or len(units) <= 1
    )
    if serial:
        return [_extract_unit(unit) for unit in units]
    workers = jobs or min(os.cpu_count() or 2, 8)
    try:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            chunk = max(1, len(units) // (workers * 4))
            return list(executor.map(_extract_unit, units, chunksize=chunk))
    except OSError:
        return [_extract_unit(unit) for unit in units]


def _report_skipped(skipped: list[FileRecord]) -> None:
    for record in sorted(skipped, key=lambda r: r.path):
        print(f"skipped: {record.path} ({record.skipped_reason})", file=sys.stderr)


def _occurrence_json(occurrence: PromptOccurrence) -> dict:
    template = occurrence.template
    slots = []
    if template is not None:
        for slot in template.slots:
            slots.append(
                {
                    "kind": slot.kind,
                    "name": slot.name,
                    "index": slot.index,
                    "spec": slot.format_spec,
                    "conversion": slot.conversion,
                }
            )
    return {
        "v": 1,
        "id": occurrence.id,
        "repo": occurrence.repo,
        "path": occurrence.path,
        "span": {
            "start_byte": occurrence.span.start_byte,
            "end_byte": occurrence.span.end_byte,
            "start_line": occurrence.span.start_line,
            "end_line": occurrence.span.end_line,
        },
        "source": occurrence.source,
        "raw": occurrence.raw,
        "template": template.text if template is not None else None,
        "resolution": occurrence.resolution,
        "slots": slots,
        "role": occurrence.role,
        "args": occurrence.args.as_dict() if occurrence.args is not None else None,
    }


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _flatten(results: list[list[PromptOccurrence]]) -> list[PromptOccurrence]:
    occurrences: list[PromptOccurrence] = []
    for batch in results:
        occurrences.extend(batch)
    return occurrences


def cmd_extract(args, config: ToolConfig) -> int:
    units, skipped = _collect_units(args, config)
    _report_skipped(skipped)
    occurrences = _flatten(_run_pipeline(units, args.jobs))
    if not args.include_unresolved:
        occurrences = [o for o in occurrences if o.resolution != "unresolved"]
    lines = [json.dumps(_occurrence_json(o), ensure_ascii=False, separators=(",", ":")) for o in occurrences]
    _write_output("".join(line + "\n" for line in lines), args.out)
    return 0


def _lint_config(args, config: ToolConfig) -> LintConfig:
    levels = dict(DEFAULT_LEVELS)
    levels.update(config.rules)
    if args.rules:
        for part in args.rules.split(","):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise UsageError(f"--rules entries must be RULE=level, got {part!r}")
            rule, level = (s.strip() for s in part.split("=", 1))
            if rule not in RULES:
                raise UsageError(f"unknown lint rule {rule!r}")
            if level not in SEVERITY_ORDER:
                raise UsageError(f"unknown level {level!r} for rule {rule}")
            levels[rule] = level
    extra = {word.lower() for word in config.dictionary}
    if args.dict:
        dict_path = Path(args.dict)
        if not dict_path.is_file():
            raise InputError(f"dictionary file not found: {args.dict}")
        extra.update(load_wordlist(dict_path))
    fail_level = args.fail_on or config.fail_level
    try:
        return LintConfig(
            levels=levels,
            extra_words=frozenset(extra),
            fail_level=fail_level,
            min_length_for_typos=config.min_prompt_length,
        )
    except ValueError as err:
        raise UsageError(str(err)) from err


def cmd_lint(args, config: ToolConfig) -> int:
    lint_config = _lint_config(args, config)
    units, skipped = _collect_units(args, config)
    _report_skipped(skipped)
    occurrences = _flatten(_run_pipeline(units, args.jobs))
    result = run_lints(occurrences, lint_config)
    if args.format == "json":
        payload = [
            {
                "rule": f.rule,
                "severity": f.severity,
                "prompt_id": f.prompt_id,
                "path": f.path,
                "offsets": list(f.offsets),
                "message": f.message,
                "suggestion": f.suggestion,
                "line": f.line,
                "col": f.col,
            }
            for f in result.findings
        ]
        _write_output(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", args.out)
    else:
        lines = [
            f"{f.path}:{f.line}:{f.col + 1}: {f.rule} {f.severity}: {f.message}"
            for f in result.findings
        ]
        _write_output("".join(line + "\n" for line in lines), args.out)
    return 1 if result.verdict == "fail" else 0


def cmd_stats(args, config: ToolConfig) -> int:
    lexicon = None
    lexicon_path = args.lexicon or config.lexicon_path
    if lexicon_path:
        path = Path(lexicon_path)
        if not path.is_file():
            raise InputError(f"lexicon file not found: {lexicon_path}")
        try:
            lexicon = load_lexicon(path)
        except ValueError as err:
            raise UsageError(str(err)) from err
    units, skipped = _collect_units(args, config)
    _report_skipped(skipped)
    results = _run_pipeline(units, args.jobs)
    stats = CorpusStats()
    for batch in results:
        stats = stats.merge(CorpusStats.from_occurrences(batch))

    top = args.top
    document = {
        "v": 1,
        "per_source": stats.per_source_table(),
        "totals": stats.totals(),
        "length_histogram": stats.length_histogram(),
        "language_histogram": stats.language_histogram(config.min_prompt_length),
        "techniques": stats.technique_counts(lexicon, config.min_prompt_length),
        "whitespace": stats.whitespace_counts(),
        "args": {
            param: [[value, count] for value, count in ranked[: top or None]]
            for param, ranked in stats.arg_stats().items()
        },
        "zipf": [[token, count] for token, count in stats.zipf(top=top)],
    }
    if args.techniques or args.zipf:
        keep = {"v", "totals"}
        if args.techniques:
            keep.add("techniques")
        if args.zipf:
            keep.add("zipf")
        document = {key: value for key, value in document.items() if key in keep}
    _write_output(json.dumps(document, ensure_ascii=False, indent=2) + "\n", args.out)
    return 0


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("paths", nargs="+", help="directories, files, or JSONL corpora")
    parser.add_argument("--from-jsonl", action="store_true", help="treat paths as JSONL corpus files")
    parser.add_argument("--no-filter", action="store_true", help="process files regardless of imports")
    parser.add_argument("--repo-depth", type=int, default=None, help="path components forming the repo id")
    parser.add_argument("--config", default=None, help="config file (default: promptset.json at corpus root)")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes (default: cpu-bound)")
    parser.add_argument("--out", default=None, help="write output to a file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promptset",
        description="Extract, lint, and analyze LLM prompts in Python source.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"promptset {__version__} (grammar {GRAMMAR_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    extract = sub.add_parser("extract", help="emit one JSON object per extracted prompt")
    _add_common_arguments(extract)
    extract.add_argument(
        "--include-unresolved",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="include prompts whose expression could not be evaluated",
    )
    extract.set_defaults(func=cmd_extract)

    lint = sub.add_parser("lint", help="run lint rules over extracted prompts")
    _add_common_arguments(lint)
    lint.add_argument("--rules", default=None, help="overrides, e.g. PS001=off,PS201=warning")
    lint.add_argument("--dict", default=None, help="extra dictionary words, one per line")
    lint.add_argument("--fail-on", choices=("warning", "error"), default=None)
    lint.add_argument("--format", choices=("text", "json"), default="text")
    lint.set_defaults(func=cmd_lint)

    stats = sub.add_parser("stats", help="corpus statistics as a single JSON document")
    _add_common_arguments(stats)
    stats.add_argument("--techniques", action="store_true", help="select the techniques section")
    stats.add_argument("--zipf", action="store_true", help="select the zipf section")
    stats.add_argument("--top", type=int, default=None, help="limit ranked lists to N entries")
    stats.add_argument("--lexicon", default=None, help="technique trigger file")
    stats.set_defaults(func=cmd_stats)
    return parser


def _find_config(args) -> ToolConfig:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise InputError(f"config file not found: {args.config}")
        return load_config(path)
    for raw in args.paths:
        candidate = Path(raw)
        if candidate.is_dir() and (candidate / CONFIG_NAME).is_file():
            return load_config(candidate / CONFIG_NAME)
    return ToolConfig()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _find_config(args)
        return args.func(args, config)
    except UsageError as err:
        print(f"promptset: error: {err}", file=sys.stderr)
        return 2
    except InputError as err:
        print(f"promptset: error: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"promptset: error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
