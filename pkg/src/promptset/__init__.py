"""promptset: static extraction, linting, and statistics for LLM prompts in Python code."""

__version__ = "0.1.0"

from .analysis import (
    DEFAULT_LEXICON,
    CorpusStats,
    dedupe,
    default_tokenizer,
    detect_techniques,
    load_lexicon,
    merge,
    zipf_table,
)
from .corpus import FileRecord, is_candidate, load_jsonl_corpus, walk
from .extractors import CallArguments, PromptOccurrence, Span, extract_all
from .lint import (
    LintConfig,
    LintFinding,
    LintResult,
    detect_language,
    load_dictionary,
    run_lints,
)
from .syntax import (
    GRAMMAR_VERSION,
    CallSite,
    ImportSet,
    Node,
    SyntaxTree,
    detect_imports,
    find_call_sites,
    parse_python,
)
from .template import (
    BindingEnv,
    EvalResult,
    FormatCall,
    SlotMismatch,
    TemplateSlot,
    TemplateString,
    collect_bindings,
    eval_string_expr,
    parse_template,
    substitute,
)

__all__ = [
    "__version__",
    "GRAMMAR_VERSION",
    "BindingEnv",
    "CallArguments",
    "CallSite",
    "CorpusStats",
    "DEFAULT_LEXICON",
    "EvalResult",
    "FileRecord",
    "FormatCall",
    "ImportSet",
    "LintConfig",
    "LintFinding",
    "LintResult",
    "Node",
    "PromptOccurrence",
    "SlotMismatch",
    "Span",
    "SyntaxTree",
    "TemplateSlot",
    "TemplateString",
    "collect_bindings",
    "dedupe",
    "default_tokenizer",
    "detect_imports",
    "detect_language",
    "detect_techniques",
    "eval_string_expr",
    "extract_all",
    "find_call_sites",
    "is_candidate",
    "load_dictionary",
    "load_jsonl_corpus",
    "load_lexicon",
    "merge",
    "parse_python",
    "parse_template",
    "run_lints",
    "substitute",
    "walk",
    "zipf_table",
]
