"""The seven prompt-extraction heuristics over a parsed file.

Each extractor pattern-matches one way prompts reach an LLM SDK (completion
calls, Cohere calls, prompt/message class constructors, tool docstrings,
template files, prompt-named variables, content dictionaries) and emits
:class:`PromptOccurrence` records. :func:`extract_all` composes them in
priority order with exact-span duplicate suppression.
"""

from __future__ import annotations

import ast
import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path, PurePosixPath

from .syntax import CallSite, ImportSet, Node, SyntaxTree, detect_imports, find_call_sites, parse_python
from .template import (
    BindingEnv,
    FormatCall,
    TemplateString,
    collect_bindings,
    collect_format_call,
    eval_string_expr,
    parse_template,
)

SOURCE_COMPLETION = "completion_call"
SOURCE_COHERE = "cohere_call"
SOURCE_LANGCHAIN_CLASS = "langchain_class"
SOURCE_LANGCHAIN_TOOL = "langchain_tool"
SOURCE_FROM_FILE = "template_from_file"
SOURCE_NAMED_VARIABLE = "named_variable"
SOURCE_CONTENT_DICT = "content_dict"

#: Heuristic priority: when two extractors flag the same span, the earlier wins.
SOURCE_PRIORITY = (
    SOURCE_COMPLETION,
    SOURCE_COHERE,
    SOURCE_LANGCHAIN_CLASS,
    SOURCE_LANGCHAIN_TOOL,
    SOURCE_FROM_FILE,
    SOURCE_NAMED_VARIABLE,
    SOURCE_CONTENT_DICT,
)

_MESSAGE_ROLES = {"HumanMessage": "user", "AIMessage": "assistant", "SystemMessage": "system"}
_LEGACY_COMPLETION_OWNERS = {"completions", "Completion", "ChatCompletion"}
_COHERE_METHODS = {"chat", "summarize", "generate"}
_LANGCHAIN_KWARGS = ("template", "content", "prompt", "prefix", "suffix")


@dataclass(frozen=True)
class Span:
    start_byte: int
    end_byte: int
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    @classmethod
    def of(cls, node: Node) -> "Span":
        return cls(
            start_byte=node.start_byte,
            end_byte=node.end_byte,
            start_line=node.start_point[0],
            start_col=node.start_point[1],
            end_line=node.end_point[0],
            end_col=node.end_point[1],
        )

    @property
    def key(self) -> tuple[int, int]:
        return (self.start_byte, self.end_byte)


@dataclass(frozen=True)
class CallArguments:
    """Statically literal keyword arguments of the flagged LLM call."""

    model: str | None = None
    temperature: float | None = None
    top_p: float | None = None
    max_tokens: int | None = None
    other: tuple[tuple[str, object], ...] = ()

    def as_dict(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for name in ("model", "temperature", "top_p", "max_tokens"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.other:
            out["other"] = dict(self.other)
        return out


@dataclass
class PromptOccurrence:
    """One extracted prompt with provenance and evaluation outcome."""

    id: str
    repo: str
    path: str
    span: Span
    source: str
    raw: str
    template: TemplateString | None
    resolution: str  # full | partial | unresolved
    role: str | None = None
    args: CallArguments | None = None
    format_calls: tuple[FormatCall, ...] = ()
    binding_ref: str | None = field(default=None, repr=False)


def _literal_value(node: Node) -> object:
    a = node.ast_node
    if isinstance(a, ast.Constant) and isinstance(a.value, (str, int, float, bool)):
        return a.value
    if (
        isinstance(a, ast.UnaryOp)
        and isinstance(a.op, ast.USub)
        and isinstance(a.operand, ast.Constant)
        and isinstance(a.operand.value, (int, float))
        and not isinstance(a.operand.value, bool)
    ):
        return -a.operand.value
    return None


def _call_arguments(call: CallSite, excluded: frozenset[str]) -> CallArguments | None:
    model = temperature = top_p = max_tokens = None
    other: list[tuple[str, object]] = []
    found = False
    for name, node in call.keyword_args.items():
        if name in excluded:
            continue
        value = _literal_value(node)
        if value is None:
            continue
        found = True
        if name == "model" and isinstance(value, str):
            model = value
        elif name == "temperature" and isinstance(value, (int, float)) and not isinstance(value, bool):
            temperature = value
        elif name == "top_p" and isinstance(value, (int, float)) and not isinstance(value, bool):
            top_p = value
        elif name == "max_tokens" and isinstance(value, int) and not isinstance(value, bool):
            max_tokens = value
        else:
            other.append((name, value))
    if not found:
        return None
    return CallArguments(
        model=model,
        temperature=temperature,
        top_p=top_p,
        max_tokens=max_tokens,
        other=tuple(sorted(other)),
    )


def _occurrence(
    tree: SyntaxTree,
    node: Node,
    env: BindingEnv,
    source: str,
    role: str | None = None,
    args: CallArguments | None = None,
) -> PromptOccurrence:
    """Evaluate a flagged expression into an occurrence (ids/repo filled later)."""
    result = eval_string_expr(node, env)
    if result.status == "unknown":
        template, resolution, calls = None, "unresolved", ()
    else:
        template = result.value
        resolution = "full" if result.status == "literal" else "partial"
        # Keep only calls applied to this very template; calls on intermediate
        # receivers (whose slots the evaluation already filled) belong to a
        # different template and would misreport against this one.
        calls = tuple(
            call
            for call in result.format_calls
            if call.receiver_text is None or call.receiver_text == template.text
        )
    binding = node.props.get("id") if node.kind == "Name" else None
    return PromptOccurrence(
        id="",
        repo="",
        path="",
        span=Span.of(node),
        source=source,
        raw=tree.node_text(node),
        template=template,
        resolution=resolution,
        role=role,
        args=args,
        format_calls=calls,
        binding_ref=binding if isinstance(binding, str) else None,
    )


def _dict_entries(tree: SyntaxTree, node: Node) -> list[tuple[str | None, Node]]:
    """(literal key, value node) pairs of a dict literal; ``**`` entries skipped."""
    a = node.ast_node
    if not isinstance(a, ast.Dict):
        return []
    entries: list[tuple[str | None, Node]] = []
    for key, value in zip(a.keys, a.values):
        value_node = tree.node_for(value)
        if value_node is None:
            continue
        if key is None:
            continue
        literal = key.value if isinstance(key, ast.Constant) and isinstance(key.value, str) else None
        entries.append((literal, value_node))
    return entries


def _message_entry(tree: SyntaxTree, node: Node) -> tuple[Node, str | None] | None:
    """Content value and role of a ``{"role": ..., "content": ...}`` literal."""
    content = None
    role = None
    for key, value_node in _dict_entries(tree, node):
        if key == "content" and content is None:
            content = value_node
        elif key == "role":
            value = _literal_value(value_node)
            if isinstance(value, str):
                role = value
    if content is None:
        return None
    return content, role


def _is_completion_call(call: CallSite, imports: ImportSet) -> bool:
    path = call.callee_path
    if path[-1] != "create":
        return False
    if len(path) >= 2:
        return path[-2] in _LEGACY_COMPLETION_OWNERS
    # A bare create() is only credible next to an SDK import.
    return "openai" in imports or "anthropic" in imports


def extract_completion_calls(tree: SyntaxTree, env: BindingEnv, imports: ImportSet | None = None) -> list[PromptOccurrence]:
    """Completion-endpoint calls: ``*.completions.create`` plus legacy class forms."""
    imports = imports if imports is not None else detect_imports(tree)
    occurrences: list[PromptOccurrence] = []
    for call in find_call_sites(tree):
        if not _is_completion_call(call, imports):
            continue
        args = _call_arguments(call, frozenset({"prompt", "messages"}))
        if call.positional_args:
            occurrences.append(
                _occurrence(tree, call.positional_args[0], env, SOURCE_COMPLETION, args=args)
            )
        prompt_kwarg = call.keyword_args.get("prompt")
        if prompt_kwarg is not None:
            occurrences.append(_occurrence(tree, prompt_kwarg, env, SOURCE_COMPLETION, args=args))
        messages = call.keyword_args.get("messages")
        if messages is not None:
            if messages.kind == "List":
                for element in messages.children_by_field("elts"):
                    entry = _message_entry(tree, element)
                    if entry is None:
                        continue
                    content, role = entry
                    occurrences.append(
                        _occurrence(tree, content, env, SOURCE_COMPLETION, role=role, args=args)
                    )
            else:
                occurrences.append(_occurrence(tree, messages, env, SOURCE_COMPLETION, args=args))
    return occurrences


def _messages_argument_spans(tree: SyntaxTree, imports: ImportSet | None = None) -> list[tuple[int, int]]:
    imports = imports if imports is not None else detect_imports(tree)
    spans = []
    for call in find_call_sites(tree):
        if _is_completion_call(call, imports):
            messages = call.keyword_args.get("messages")
            if messages is not None:
                spans.append((messages.start_byte, messages.end_byte))
    return spans


def extract_cohere_calls(tree: SyntaxTree, env: BindingEnv, imports: ImportSet | None = None) -> list[PromptOccurrence]:
    """Cohere text entry points (``.chat``/``.summarize``/``.generate``), import-gated."""
    imports = imports if imports is not None else detect_imports(tree)
    if "cohere" not in imports:
        return []
    occurrences: list[PromptOccurrence] = []
    for call in find_call_sites(tree):
        if call.callee_path[-1] not in _COHERE_METHODS:
            continue
        args = _call_arguments(call, frozenset({"message", "text", "prompt"}))
        if call.positional_args:
            occurrences.append(
                _occurrence(tree, call.positional_args[0], env, SOURCE_COHERE, args=args)
            )
        for kwarg in ("message", "text", "prompt"):
            node = call.keyword_args.get(kwarg)
            if node is not None:
                occurrences.append(_occurrence(tree, node, env, SOURCE_COHERE, args=args))
    return occurrences


def _is_prompt_class(name: str) -> bool:
    return bool(name) and name[0].isupper() and (
        name.endswith("Prompt") or name.endswith("PromptTemplate") or name.endswith("Message")
    )


def extract_langchain_classes(tree: SyntaxTree, env: BindingEnv) -> list[PromptOccurrence]:
    """Constructors of ``*Prompt``/``*PromptTemplate``/``*Message`` classes.

    ``*.from_messages([...])`` on those classes is matched as well, pulling
    literal message contents out of tuple or bare-string elements.
    """
    occurrences: list[PromptOccurrence] = []
    for call in find_call_sites(tree):
        final = call.callee_path[-1]
        if _is_prompt_class(final):
            role = _MESSAGE_ROLES.get(final)
            if call.positional_args:
                occurrences.append(
                    _occurrence(tree, call.positional_args[0], env, SOURCE_LANGCHAIN_CLASS, role=role)
                )
            for kwarg in _LANGCHAIN_KWARGS:
                node = call.keyword_args.get(kwarg)
                if node is not None:
                    occurrences.append(
                        _occurrence(tree, node, env, SOURCE_LANGCHAIN_CLASS, role=role)
                    )
        elif (
            final == "from_messages"
            and len(call.callee_path) >= 2
            and _is_prompt_class(call.callee_path[-2])
            and call.positional_args
        ):
            listing = call.positional_args[0]
            if listing.kind not in ("List", "Tuple"):
                continue
            for element in listing.children_by_field("elts"):
                if element.kind in ("Tuple", "List"):
                    elts = element.children_by_field("elts")
                    if len(elts) == 2:
                        role_value = _literal_value(elts[0])
                        occurrences.append(
                            _occurrence(
                                tree,
                                elts[1],
                                env,
                                SOURCE_LANGCHAIN_CLASS,
                                role=role_value if isinstance(role_value, str) else None,
                            )
                        )
                elif element.kind == "Constant" and isinstance(_literal_value(element), str):
                    occurrences.append(
                        _occurrence(tree, element, env, SOURCE_LANGCHAIN_CLASS)
                    )
    return occurrences


def _decorator_is_tool(node: Node) -> bool:
    a = node.ast_node
    if isinstance(a, ast.Call):
        a = a.func
    if isinstance(a, ast.Attribute):
        return a.attr == "tool"
    return isinstance(a, ast.Name) and a.id == "tool"


def _docstring_node(tree: SyntaxTree, body: list[Node]) -> Node | None:
    if not body or body[0].kind != "Expr":
        return None
    value = body[0].child_by_field("value")
    if value is not None and value.kind == "Constant":
        a = value.ast_node
        if isinstance(a, ast.Constant) and isinstance(a.value, str):
            return value
    return None


def extract_tools(tree: SyntaxTree, env: BindingEnv | None = None) -> list[PromptOccurrence]:
    """Tool definitions: ``@tool`` docstrings and ``*BaseTool`` subclasses."""
    env = env or BindingEnv()
    occurrences: list[PromptOccurrence] = []
    for node in tree.walk():
        if node.kind in ("FunctionDef", "AsyncFunctionDef"):
            decorators = node.children_by_field("decorator_list")
            if not any(_decorator_is_tool(d) for d in decorators):
                continue
            doc = _docstring_node(tree, node.children_by_field("body"))
            if doc is not None:
                occurrences.append(_occurrence(tree, doc, env, SOURCE_LANGCHAIN_TOOL))
        elif node.kind == "ClassDef":
            bases = node.children_by_field("bases")
            base_names = []
            for base in bases:
                a = base.ast_node
                if isinstance(a, ast.Attribute):
                    base_names.append(a.attr)
                elif isinstance(a, ast.Name):
                    base_names.append(a.id)
            if not any(name.endswith("BaseTool") or name == "BaseTool" for name in base_names):
                continue
            body = node.children_by_field("body")
            doc = _docstring_node(tree, body)
            if doc is not None:
                occurrences.append(_occurrence(tree, doc, env, SOURCE_LANGCHAIN_TOOL))
            for stmt in body:
                if stmt.kind not in ("Assign", "AnnAssign"):
                    continue
                target = (
                    stmt.children_by_field("targets")[0]
                    if stmt.kind == "Assign" and stmt.children_by_field("targets")
                    else stmt.child_by_field("target")
                )
                value = stmt.child_by_field("value")
                if (
                    target is not None
                    and target.kind == "Name"
                    and target.props.get("id") == "description"
                    and value is not None
                    and isinstance(_literal_value(value), str)
                ):
                    occurrences.append(_occurrence(tree, value, env, SOURCE_LANGCHAIN_TOOL))
    return occurrences


def _literal_inner_span(tree: SyntaxTree, node: Node, value: str) -> Span | None:
    """Span of a string literal's content inside its quotes, if verbatim."""
    source_text = tree.node_text(node)
    pos = source_text.find(value)
    if pos < 0 or not value:
        return None
    start = node.start_byte + len(source_text[:pos].encode("utf-8"))
    end = start + len(value.encode("utf-8"))
    probe = Node(
        kind="Constant",
        start_byte=start,
        end_byte=end,
        start_point=(node.start_point[0], node.start_point[1] + pos),
        end_point=(node.start_point[0], node.start_point[1] + pos + len(value)),
    )
    return Span.of(probe)


def extract_from_file(tree: SyntaxTree, corpus_root: str | Path | None = None, path: str = "") -> list[PromptOccurrence]:
    """``*Template.from_file("...")``: inline the referenced file when present."""
    occurrences: list[PromptOccurrence] = []
    for call in find_call_sites(tree):
        if call.callee_path[-1] != "from_file" or len(call.callee_path) < 2:
            continue
        if not call.callee_path[-2].endswith("Template"):
            continue
        if not call.positional_args:
            continue
        arg = call.positional_args[0]
        value = _literal_value(arg)
        if not isinstance(value, str):
            continue
        inner = _literal_inner_span(tree, arg, value)
        span = inner or Span.of(arg)
        raw = value if inner else tree.node_text(arg)
        template = None
        resolution = "unresolved"
        if corpus_root is not None:
            root = Path(corpus_root).resolve()
            candidate = (root / PurePosixPath(path).parent / value).resolve()
            if candidate.is_relative_to(root) and candidate.is_file():
                text = candidate.read_bytes().decode("utf-8", errors="replace")
                template = parse_template(text)
                resolution = "partial" if template.slots else "full"
        occurrences.append(
            PromptOccurrence(
                id="",
                repo="",
                path="",
                span=span,
                source=SOURCE_FROM_FILE,
                raw=raw,
                template=template,
                resolution=resolution,
            )
        )
    return occurrences


def _name_matches_prompt(name: str) -> bool:
    lowered = name.lower()
    return "prompt" in lowered or "template" in lowered


def extract_named_variables(tree: SyntaxTree, env: BindingEnv) -> list[PromptOccurrence]:
    """Assignments to identifiers containing ``prompt``/``template``."""
    occurrences: list[PromptOccurrence] = []
    for node in tree.walk():
        if node.kind == "Assign":
            targets = node.children_by_field("targets")
            value = node.child_by_field("value")
            if len(targets) != 1 or targets[0].kind != "Name" or value is None:
                continue
            name = targets[0].props["id"]
        elif node.kind == "AnnAssign":
            target = node.child_by_field("target")
            value = node.child_by_field("value")
            if target is None or target.kind != "Name" or value is None:
                continue
            name = target.props["id"]
        else:
            continue
        if not _name_matches_prompt(str(name)):
            continue
        occurrence = _occurrence(tree, value, env, SOURCE_NAMED_VARIABLE)
        occurrence.binding_ref = str(name)
        occurrences.append(occurrence)
    return occurrences


def extract_content_dicts(
    tree: SyntaxTree,
    env: BindingEnv,
    suppressed_spans: list[tuple[int, int]] | None = None,
) -> list[PromptOccurrence]:
    """Dict literals with a ``"content"`` key, outside extracted messages arguments."""
    suppressed = suppressed_spans if suppressed_spans is not None else _messages_argument_spans(tree)
    occurrences: list[PromptOccurrence] = []
    for node in tree.walk():
        if node.kind != "Dict":
            continue
        entry = _message_entry(tree, node)
        if entry is None:
            continue
        content, role = entry
        if any(s <= content.start_byte and content.end_byte <= e for s, e in suppressed):
            continue
        occurrences.append(_occurrence(tree, content, env, SOURCE_CONTENT_DICT, role=role))
    return occurrences


def occurrence_id(path: str, start_byte: int, raw: str) -> str:
    digest = hashlib.sha256(f"{path}:{start_byte}:{raw}".encode("utf-8")).hexdigest()
    return digest[:16]


def derive_repo(path: str, repo_depth: int = 2) -> str:
    parts = PurePosixPath(path).parts
    if len(parts) > repo_depth:
        return "/".join(parts[:repo_depth])
    return "/".join(parts[:-1])


def _attach_format_calls(tree: SyntaxTree, env: BindingEnv, occurrences: list[PromptOccurrence]) -> None:
    """Attach ``name.format(...)`` calls elsewhere in the file to the prompt they target."""
    by_name: dict[str, list[PromptOccurrence]] = {}
    for occurrence in occurrences:
        if occurrence.binding_ref and occurrence.template is not None:
            by_name.setdefault(occurrence.binding_ref, []).append(occurrence)
    if not by_name:
        return
    for call in find_call_sites(tree):
        if call.callee_path[-1] != "format" or len(call.callee_path) != 2:
            continue
        name = call.callee_path[0]
        targets = by_name.get(name)
        bound = env.lookup(name)
        if not targets or bound is None or bound.value is None:
            continue  # unbound receiver: its template is ambiguous
        if not isinstance(call.node.ast_node, ast.Call):
            continue
        fc = collect_format_call(call.node.ast_node, env)
        fc = replace(fc, receiver_text=bound.value.text)
        for occurrence in targets:
            if (
                occurrence.template is not None
                and occurrence.template.text == fc.receiver_text
                and fc not in occurrence.format_calls
            ):
                occurrence.format_calls = occurrence.format_calls + (fc,)


def extract_all(
    path: str,
    data: bytes,
    corpus_root: str | Path | None = None,
    *,
    repo: str | None = None,
    repo_depth: int = 2,
) -> list[PromptOccurrence]:
    """Run every heuristic over one file; deterministic in (path, data, root)."""
    tree = parse_python(data)
    env = collect_bindings(tree)
    imports = detect_imports(tree)

    collected: list[PromptOccurrence] = []
    collected.extend(extract_completion_calls(tree, env, imports))
    collected.extend(extract_cohere_calls(tree, env, imports))
    collected.extend(extract_langchain_classes(tree, env))
    collected.extend(extract_tools(tree, env))
    collected.extend(extract_from_file(tree, corpus_root, path))
    collected.extend(extract_named_variables(tree, env))
    collected.extend(
        extract_content_dicts(tree, env, _messages_argument_spans(tree, imports))
    )

    by_span: dict[tuple[int, int], PromptOccurrence] = {}
    for occurrence in collected:  # insertion order = heuristic priority
        by_span.setdefault(occurrence.span.key, occurrence)
    occurrences = sorted(by_span.values(), key=lambda o: o.span.key)

    _attach_format_calls(tree, env, occurrences)

    repo_id = repo if repo is not None else derive_repo(path, repo_depth)
    for occurrence in occurrences:
        occurrence.path = path
        occurrence.repo = repo_id
        occurrence.id = occurrence_id(path, occurrence.span.start_byte, occurrence.raw)
    return occurrences
