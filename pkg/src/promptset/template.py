"""Format templates and constant evaluation of string expressions.

A prompt is modeled as a :class:`TemplateString`: literal text plus ``{name}``
/ ``{0}`` / ``{}`` interpolation slots. :func:`eval_string_expr` evaluates a
string expression under a single-assignment constant environment, resolving
what it can and retaining unresolved variables as named slots. The evaluator
is deliberately incomplete: unsupported constructs come back as ``unknown``
with a reason rather than a guess, so a ``literal`` result always matches what
the interpreter would produce.
"""

from __future__ import annotations

import ast
import re
from collections import Counter
from dataclasses import dataclass, field

from .syntax import Node, SyntaxTree


class _Unknown:
    """Sentinel for argument values that are not statically known."""

    def __repr__(self) -> str:  # pragma: no cover
        return "<unknown>"

    def __reduce__(self):
        # Keep a single instance across pickling (process-pool workers).
        return (_unknown_instance, ())


def _unknown_instance() -> "_Unknown":
    return UNKNOWN


UNKNOWN = _Unknown()


def is_unknown(value: object) -> bool:
    return isinstance(value, _Unknown)

_SLOT_RE = re.compile(
    r"\{(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<index>\d+))?"
    r"(?:!(?P<conv>[rsa]))?"
    r"(?::(?P<spec>[^{}]*))?\}"
)
_BRACE_RE = re.compile(r"[{}]")


@dataclass(frozen=True)
class TemplateSlot:
    """One interpolation slot; ``span`` covers the braces within the template text."""

    kind: str  # named | manual_index | auto
    name: str | None
    index: int | None
    format_spec: str | None  # None: no ':' present; '' : '{x:}'
    conversion: str | None  # None | 'r' | 's' | 'a'
    span: tuple[int, int]

    def source_text(self) -> str:
        """Re-serialize the slot exactly as it appears in the template."""
        body = self.name if self.kind == "named" else (str(self.index) if self.kind == "manual_index" else "")
        out = "{" + (body or "")
        if self.conversion:
            out += "!" + self.conversion
        if self.format_spec is not None:
            out += ":" + self.format_spec
        return out + "}"


@dataclass(frozen=True)
class TemplateString:
    """Parsed format template: full text, ordered slots, and escape positions."""

    text: str
    slots: tuple[TemplateSlot, ...] = ()
    escapes: tuple[int, ...] = ()  # offsets of each '{{' / '}}' pair
    has_parse_warning: bool = False

    def free_slot_names(self) -> list[str]:
        seen: list[str] = []
        for slot in self.slots:
            if slot.kind == "named" and slot.name not in seen:
                seen.append(slot.name)
        return seen

    def serialize(self) -> str:
        return self.text


@dataclass(frozen=True)
class SlotProblem:
    """One mismatch between a template's slots and supplied arguments."""

    kind: str  # missing | out_of_range | extra_positional | extra_named | mixed_numbering | spec_mismatch
    what: str | int | None = None
    slot_index: int | None = None  # position in TemplateString.slots, when applicable

    def message(self) -> str:
        if self.kind == "missing":
            return f"missing argument '{self.what}'"
        if self.kind == "out_of_range":
            return f"positional index {self.what} out of range"
        if self.kind == "extra_positional":
            return f"extra positional argument at index {self.what}"
        if self.kind == "extra_named":
            return f"extra keyword argument '{self.what}'"
        if self.kind == "mixed_numbering":
            return "template mixes automatic '{}' and manual '{0}' numbering"
        return f"format spec incompatible with value: {self.what}"


@dataclass(frozen=True)
class SlotMismatch:
    """Why a substitution could not produce text."""

    problems: tuple[SlotProblem, ...]

    def message(self) -> str:
        return "; ".join(p.message() for p in self.problems)


@dataclass(frozen=True)
class FormatCall:
    """Arguments of one statically visible ``.format(...)`` application.

    ``complete`` is False when the call has ``*args``/``**kwargs``, in which
    case missing-argument conclusions cannot be drawn. ``receiver_text`` is
    the template text the call was applied to, when the evaluator saw it:
    lint rules must only check a call against that same template.
    """

    positional: tuple[object, ...] = ()
    named: tuple[tuple[str, object], ...] = ()
    complete: bool = True
    receiver_text: str | None = None

    def named_dict(self) -> dict[str, object]:
        return dict(self.named)


def parse_template(text: str) -> TemplateString:
    """Parse format-template text; total, never raises.

    A brace that does not open a well-formed slot or escape degrades to
    literal text and sets the parse-warning flag.
    """
    slots: list[TemplateSlot] = []
    escapes: list[int] = []
    warning = False
    i = 0
    while True:
        m = _BRACE_RE.search(text, i)
        if m is None:
            break
        i = m.start()
        pair = text[i : i + 2]
        if pair in ("{{", "}}"):
            escapes.append(i)
            i += 2
            continue
        if text[i] == "{":
            sm = _SLOT_RE.match(text, i)
            if sm is not None:
                name, index = sm.group("name"), sm.group("index")
                kind = "named" if name else ("manual_index" if index else "auto")
                slots.append(
                    TemplateSlot(
                        kind=kind,
                        name=name,
                        index=int(index) if index else None,
                        format_spec=sm.group("spec") if ":" in sm.group(0) else None,
                        conversion=sm.group("conv"),
                        span=(sm.start(), sm.end()),
                    )
                )
                i = sm.end()
                continue
        warning = True
        i += 1
    return TemplateString(
        text=text, slots=tuple(slots), escapes=tuple(escapes), has_parse_warning=warning
    )


def _render_value(value: object, conversion: str | None, spec: str | None) -> str:
    if conversion == "r":
        value = repr(value)
    elif conversion == "s":
        value = str(value)
    elif conversion == "a":
        value = ascii(value)
    return format(value, spec or "")


def _unescape(segment: str) -> str:
    return segment.replace("{{", "{").replace("}}", "}")


def match_arguments(
    template: TemplateString,
    positional: tuple[object, ...] = (),
    named: dict[str, object] | None = None,
) -> tuple[dict[int, object], list[SlotProblem]]:
    """Pair each slot with its argument; report every mismatch found."""
    named = named or {}
    kinds = {slot.kind for slot in template.slots}
    if "auto" in kinds and "manual_index" in kinds:
        return {}, [SlotProblem("mixed_numbering")]

    assignments: dict[int, object] = {}
    problems: list[SlotProblem] = []
    used_positions: set[int] = set()
    used_names: set[str] = set()
    auto = 0
    for i, slot in enumerate(template.slots):
        if slot.kind == "named":
            assert slot.name is not None
            if slot.name in named:
                assignments[i] = named[slot.name]
                used_names.add(slot.name)
            else:
                problems.append(SlotProblem("missing", slot.name, i))
            continue
        index = auto if slot.kind == "auto" else slot.index
        assert index is not None
        if slot.kind == "auto":
            auto += 1
        if index < len(positional):
            assignments[i] = positional[index]
            used_positions.add(index)
        else:
            problems.append(SlotProblem("out_of_range", index, i))
    for index in sorted(set(range(len(positional))) - used_positions):
        problems.append(SlotProblem("extra_positional", index))
    for name in sorted(set(named) - used_names):
        problems.append(SlotProblem("extra_named", name))
    return assignments, problems


def substitute(
    template: TemplateString,
    positional: tuple[object, ...] = (),
    named: dict[str, object] | None = None,
) -> str | SlotMismatch:
    """Fill every slot, or report the full set of mismatches instead."""
    assignments, problems = match_arguments(template, positional, named)
    if problems:
        return SlotMismatch(tuple(problems))
    out: list[str] = []
    cursor = 0
    for i, slot in enumerate(template.slots):
        out.append(_unescape(template.text[cursor : slot.span[0]]))
        try:
            out.append(_render_value(assignments[i], slot.conversion, slot.format_spec))
        except (ValueError, TypeError) as err:
            return SlotMismatch((SlotProblem("spec_mismatch", str(err)),))
        cursor = slot.span[1]
    out.append(_unescape(template.text[cursor:]))
    return "".join(out)


def apply_format_call(template: TemplateString, call: FormatCall) -> str:
    """Lenient ``.format`` semantics used by the evaluator.

    Slots whose argument is statically known (and renders cleanly) are filled;
    everything else survives as-is, so partially resolvable prompts still
    yield templates instead of failing outright.
    """
    assignments, problems = match_arguments(template, call.positional, call.named_dict())
    if any(p.kind == "mixed_numbering" for p in problems):
        return template.text
    rendered: dict[int, str] = {}
    for i, value in assignments.items():
        if is_unknown(value):
            continue
        slot = template.slots[i]
        try:
            rendered[i] = _render_value(value, slot.conversion, slot.format_spec)
        except (ValueError, TypeError):
            continue
    if len(rendered) == len(template.slots):
        # Full render: collapse brace escapes exactly as str.format would.
        out = []
        cursor = 0
        for i, slot in enumerate(template.slots):
            out.append(_unescape(template.text[cursor : slot.span[0]]))
            out.append(rendered[i])
            cursor = slot.span[1]
        out.append(_unescape(template.text[cursor:]))
        return "".join(out)
    # Partial fill: keep template space intact for the unfilled remainder.
    out = []
    cursor = 0
    for i, slot in enumerate(template.slots):
        out.append(template.text[cursor : slot.span[0]])
        out.append(rendered.get(i, slot.source_text()))
        cursor = slot.span[1]
    out.append(template.text[cursor:])
    return "".join(out)


@dataclass(frozen=True)
class EvalResult:
    """Outcome of evaluating a string expression."""

    status: str  # literal | template | unknown
    value: TemplateString | None = None
    reason: str = ""
    format_calls: tuple[FormatCall, ...] = ()

    @classmethod
    def from_text(cls, text: str, calls: tuple[FormatCall, ...] = ()) -> "EvalResult":
        template = parse_template(text)
        status = "template" if template.slots else "literal"
        return cls(status=status, value=template, format_calls=calls)

    @classmethod
    def unknown(cls, reason: str) -> "EvalResult":
        return cls(status="unknown", value=None, reason=reason)


@dataclass
class BindingEnv:
    """Single-assignment constant environment for one file.

    A name is bound only when it is assigned exactly once in the file, is not
    rebound by any other construct (loops, parameters, imports, ...), and its
    right-hand side evaluates to a string value.
    """

    bindings: dict[str, EvalResult] = field(default_factory=dict)
    assignment_counts: Counter = field(default_factory=Counter)
    reasons: dict[str, str] = field(default_factory=dict)

    def lookup(self, name: str) -> EvalResult | None:
        return self.bindings.get(name)


class _EvalFailure(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


_CONVERSION_CODES = {-1: None, 114: "r", 115: "s", 97: "a"}


def _constant_spec(spec: ast.expr | None) -> str:
    if spec is None:
        return ""
    if isinstance(spec, ast.JoinedStr):
        parts = []
        for part in spec.values:
            if isinstance(part, ast.Constant) and isinstance(part.value, str):
                parts.append(part.value)
            else:
                raise _EvalFailure("dynamic format spec")
        return "".join(parts)
    raise _EvalFailure("dynamic format spec")


def _slot_source(name: str, conversion: str | None, spec: str) -> str:
    out = "{" + name
    if conversion:
        out += "!" + conversion
    if spec:
        out += ":" + spec
    return out + "}"


class _Evaluator:
    def __init__(self, env: BindingEnv):
        self.env = env
        self.calls: list[FormatCall] = []

    def eval(self, expr: ast.expr) -> str:
        if isinstance(expr, ast.Constant):
            if isinstance(expr.value, str):
                return expr.value
            raise _EvalFailure(f"non-string constant {expr.value!r}")
        if isinstance(expr, ast.JoinedStr):
            return self._eval_fstring(expr)
        if isinstance(expr, ast.BinOp):
            if isinstance(expr.op, ast.Add):
                return self.eval(expr.left) + self.eval(expr.right)
            raise _EvalFailure(f"unsupported operator '{type(expr.op).__name__}'")
        if isinstance(expr, ast.Name):
            bound = self.env.lookup(expr.id)
            if bound is not None and bound.value is not None:
                return bound.value.text
            raise _EvalFailure(f"unbound variable '{expr.id}'")
        if isinstance(expr, ast.Call):
            return self._eval_format_call(expr)
        raise _EvalFailure(f"unsupported expression '{type(expr).__name__}'")

    def _eval_fstring(self, node: ast.JoinedStr) -> str:
        parts: list[str] = []
        for part in node.values:
            if isinstance(part, ast.Constant):
                parts.append(str(part.value))
                continue
            assert isinstance(part, ast.FormattedValue)
            spec = _constant_spec(part.format_spec)
            conversion = _CONVERSION_CODES.get(part.conversion)
            inner = part.value
            if isinstance(inner, ast.Name):
                bound = self.env.lookup(inner.id)
                if bound is None or bound.value is None:
                    # Free variable: keep it as a named slot.
                    parts.append(_slot_source(inner.id, conversion, spec))
                    continue
                value: object = bound.value.text
            elif isinstance(inner, ast.Constant) and isinstance(
                inner.value, (str, int, float, bool)
            ):
                value = inner.value
            else:
                raise _EvalFailure(
                    f"unsupported interpolation '{type(inner).__name__}'"
                )
            try:
                parts.append(_render_value(value, conversion, spec))
            except (ValueError, TypeError) as err:
                raise _EvalFailure(f"format spec mismatch: {err}") from err
        return "".join(parts)

    def _eval_format_call(self, call: ast.Call) -> str:
        func = call.func
        if not (isinstance(func, ast.Attribute) and func.attr == "format"):
            raise _EvalFailure("unsupported call")
        receiver_text = self.eval(func.value)
        positional: list[object] = []
        complete = True
        for arg in call.args:
            if isinstance(arg, ast.Starred):
                complete = False
                continue
            positional.append(self._arg_value(arg))
        named: list[tuple[str, object]] = []
        for kw in call.keywords:
            if kw.arg is None:
                complete = False
                continue
            named.append((kw.arg, self._arg_value(kw.value)))
        fc = FormatCall(
            positional=tuple(positional),
            named=tuple(named),
            complete=complete,
            receiver_text=receiver_text,
        )
        self.calls.append(fc)
        return apply_format_call(parse_template(receiver_text), fc)

    def _arg_value(self, expr: ast.expr) -> object:
        if isinstance(expr, ast.Constant) and isinstance(expr.value, (str, int, float, bool)):
            return expr.value
        if (
            isinstance(expr, ast.UnaryOp)
            and isinstance(expr.op, ast.USub)
            and isinstance(expr.operand, ast.Constant)
            and isinstance(expr.operand.value, (int, float))
        ):
            return -expr.operand.value
        if isinstance(expr, ast.Name):
            bound = self.env.lookup(expr.id)
            if bound is not None and bound.value is not None:
                return bound.value.text
        return UNKNOWN


def collect_format_call(call: ast.Call, env: BindingEnv | None = None) -> FormatCall:
    """Record the argument shape of a ``.format(...)`` call without evaluating it."""
    evaluator = _Evaluator(env or BindingEnv())
    positional: list[object] = []
    complete = True
    for arg in call.args:
        if isinstance(arg, ast.Starred):
            complete = False
            continue
        positional.append(evaluator._arg_value(arg))
    named: list[tuple[str, object]] = []
    for kw in call.keywords:
        if kw.arg is None:
            complete = False
            continue
        named.append((kw.arg, evaluator._arg_value(kw.value)))
    return FormatCall(positional=tuple(positional), named=tuple(named), complete=complete)


def eval_string_expr(expr: ast.expr | Node, env: BindingEnv | None = None) -> EvalResult:
    """Evaluate a string expression; ``unknown`` is the only failure channel.

    Free variables survive as ``{name}`` slots in the resulting template;
    the result text of a ``literal`` outcome is exactly the runtime value.
    """
    if isinstance(expr, Node):
        if not isinstance(expr.ast_node, ast.expr):
            return EvalResult.unknown(f"not an expression: {expr.kind}")
        expr = expr.ast_node
    evaluator = _Evaluator(env or BindingEnv())
    try:
        text = evaluator.eval(expr)
    except _EvalFailure as failure:
        return EvalResult.unknown(failure.reason)
    except RecursionError:
        return EvalResult.unknown("expression too deep")
    return EvalResult.from_text(text, tuple(evaluator.calls))


def _simple_target(node: Node) -> tuple[str, Node] | None:
    """(name, value node) for ``name = expr`` / ``name: T = expr``, else None."""
    if node.kind == "Assign":
        targets = node.children_by_field("targets")
        value = node.child_by_field("value")
        if len(targets) == 1 and targets[0].kind == "Name" and value is not None:
            return targets[0].props["id"], value
    elif node.kind == "AnnAssign":
        target = node.child_by_field("target")
        value = node.child_by_field("value")
        if target is not None and target.kind == "Name" and value is not None:
            return target.props["id"], value
    return None


def _rebinding_names(node: Node) -> list[str]:
    """Names bound by constructs other than a simple assignment."""
    names: list[str] = []
    kind = node.kind
    if kind == "Assign":
        targets = node.children_by_field("targets")
        if len(targets) == 1 and targets[0].kind == "Name":
            return []
        for target in targets:
            for sub in target.walk():
                if sub.kind == "Name":
                    names.append(sub.props["id"])
    elif kind == "AugAssign":
        target = node.child_by_field("target")
        if target is not None and target.kind == "Name":
            names.append(target.props["id"])
    elif kind == "NamedExpr":
        target = node.child_by_field("target")
        if target is not None and target.kind == "Name":
            names.append(target.props["id"])
    elif kind in ("For", "AsyncFor", "comprehension"):
        target = node.child_by_field("target")
        if target is not None:
            for sub in target.walk():
                if sub.kind == "Name":
                    names.append(sub.props["id"])
    elif kind == "withitem":
        optional = node.child_by_field("optional_vars")
        if optional is not None:
            for sub in optional.walk():
                if sub.kind == "Name":
                    names.append(sub.props["id"])
    elif kind in ("FunctionDef", "AsyncFunctionDef", "ClassDef"):
        names.append(node.props["name"])
    elif kind == "arg":
        names.append(node.props["arg"])
    elif kind == "alias":
        asname = node.props.get("asname")
        name = node.props.get("name")
        names.append(asname if isinstance(asname, str) else str(name).split(".", 1)[0])
    elif kind == "ExceptHandler":
        handler_name = node.props.get("name")
        if isinstance(handler_name, str):
            names.append(handler_name)
    return names


def collect_bindings(tree: SyntaxTree) -> BindingEnv:
    """Build the file's constant environment.

    Two passes: count every simple single-name assignment (and note names
    rebound by any other construct), then evaluate right-hand sides in source
    order so later assignments see earlier bindings.
    """
    env = BindingEnv()
    disqualified: set[str] = set()
    for node in tree.walk():
        simple = _simple_target(node)
        if simple is not None:
            env.assignment_counts[simple[0]] += 1
        disqualified.update(_rebinding_names(node))

    for node in tree.walk():
        simple = _simple_target(node)
        if simple is None:
            continue
        name, value = simple
        if env.assignment_counts[name] != 1 or name in disqualified:
            continue
        result = eval_string_expr(value, env)
        if result.status == "unknown":
            env.reasons[name] = result.reason
        else:
            env.bindings[name] = result
    return env
