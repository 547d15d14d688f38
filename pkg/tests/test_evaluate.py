"""Constant environment and string-expression evaluation, exec as the oracle."""

import random

from program_gen import generate_program, run_reference

from promptset.syntax import parse_python
from promptset.template import BindingEnv, collect_bindings, eval_string_expr, parse_template, substitute

CHECKIN_SOURCE = b"""import cohere

co = cohere.Client()
pre = "You are an agent working at the check-in desk."
query = pre + " User said: {history}"
co.generate(query)
"""


def _value_expr(tree, index):
    return tree.root.children[index].child_by_field("value")


def test_bindings_from_concatenation_file():
    env = collect_bindings(parse_python(CHECKIN_SOURCE))
    pre = env.lookup("pre")
    assert pre is not None and pre.status == "literal"
    assert pre.value.text == "You are an agent working at the check-in desk."
    query = env.lookup("query")
    assert query is not None and query.status == "template"
    assert query.value.text == (
        "You are an agent working at the check-in desk. User said: {history}"
    )
    assert [s.name for s in query.value.slots] == ["history"]
    assert env.lookup("co") is None  # call result is not a constant


def test_double_assignment_unbinds():
    env = collect_bindings(parse_python(b'x = "a"\nx = "b"\n'))
    assert env.assignment_counts["x"] == 2
    assert env.lookup("x") is None


def test_unsupported_rhs_records_reason():
    env = collect_bindings(parse_python(b"y = f(z)\n"))
    assert env.lookup("y") is None
    assert env.reasons["y"]


def test_loop_and_parameter_targets_disqualify():
    env = collect_bindings(
        parse_python(b'for x in items:\n    pass\nx = "const"\n\ndef f(y):\n    pass\n\ny = "val"\n')
    )
    assert env.lookup("x") is None
    assert env.lookup("y") is None


def test_later_assignments_see_earlier_bindings_only():
    env = collect_bindings(parse_python(b'a = b + "!"\nb = "hi"\n'))
    assert env.lookup("b") is not None
    assert env.lookup("a") is None  # forward reference fails in source order


def test_literal_identity():
    tree = parse_python(b'x = "abc"\n')
    result = eval_string_expr(_value_expr(tree, 0), BindingEnv())
    assert result.status == "literal"
    assert result.value.text == "abc"


def test_fstring_free_name_matches_later_bound_interpreter_run():
    source = 'greeting = f"Hi {name}"\n'
    tree = parse_python(source.encode())
    result = eval_string_expr(_value_expr(tree, 0), BindingEnv())
    assert result.status == "template"
    assert result.value.text == "Hi {name}"
    # oracle: run the fragment with the name bound and compare substitution
    namespace = {"name": "Bob"}
    exec(source, namespace)
    assert substitute(result.value, named={"name": "Bob"}) == namespace["greeting"] == "Hi Bob"


def test_format_full_fill_matches_interpreter():
    source = 'msg = "sum: {a} and {b}".format(a="x", b=3)\n'
    tree = parse_python(source.encode())
    result = eval_string_expr(_value_expr(tree, 0), BindingEnv())
    namespace: dict = {}
    exec(source, namespace)
    assert result.status == "literal"
    assert result.value.text == namespace["msg"]


def test_format_escapes_collapse_on_full_render():
    source = 'msg = "a {{b}} {x}".format(x=1)\n'
    tree = parse_python(source.encode())
    result = eval_string_expr(_value_expr(tree, 0), BindingEnv())
    namespace: dict = {}
    exec(source, namespace)
    # The rendered text matches the interpreter exactly; the collapsed brace
    # re-reads as a slot, so the result classifies as a still-formattable
    # template rather than a literal.
    assert result.value.text == namespace["msg"] == "a {b} 1"
    assert result.status == "template"
    assert [s.name for s in result.value.slots] == ["b"]


def test_format_partial_fill_keeps_free_slots():
    tree = parse_python(b'p = "Hello {a} and {b}".format(a="x")\n')
    result = eval_string_expr(_value_expr(tree, 0), BindingEnv())
    assert result.status == "template"
    assert result.value.text == "Hello x and {b}"
    assert [s.name for s in result.value.slots] == ["b"]
    assert len(result.format_calls) == 1


def test_format_spec_mismatch_stays_partial_with_recorded_call():
    tree = parse_python(b'p = "Num: {:02d}".format("x")\n')
    result = eval_string_expr(_value_expr(tree, 0), BindingEnv())
    assert result.status == "template"
    assert result.value.text == "Num: {:02d}"
    (call,) = result.format_calls
    assert call.positional == ("x",)


def test_unsupported_forms_yield_unknown_with_reason():
    cases = [
        b"x = '%s' % name\n",
        b"x = ','.join(items)\n",
        b"x = 'ab' * 3\n",
        b"x = str(n)\n",
        b"x = unknown_var + 'tail'\n",
    ]
    for source in cases:
        tree = parse_python(source)
        result = eval_string_expr(_value_expr(tree, 0), BindingEnv())
        assert result.status == "unknown", source
        assert result.reason, source


def test_monotonic_env_literal_never_becomes_unknown():
    source = b'msg = "fixed " + tail\n'
    tree = parse_python(source)
    empty = eval_string_expr(_value_expr(tree, 0), BindingEnv())
    assert empty.status == "unknown"
    env = collect_bindings(parse_python(b'tail = "end"\n'))
    richer = eval_string_expr(_value_expr(tree, 0), env)
    assert richer.status == "literal"
    assert richer.value.text == "fixed end"


def test_soundness_oracle_on_generated_programs():
    rng = random.Random(0xC0FFEE)
    literal_checked = 0
    template_checked = 0
    for _ in range(60):
        program = generate_program(rng)
        env = collect_bindings(parse_python(program.source.encode()))
        result = env.lookup(program.final_name)
        assert result is not None, program.source  # all constructs are supported
        reference = run_reference(program)
        if result.status == "literal":
            assert result.value.text == reference, program.source
            literal_checked += 1
        else:
            values = {name: f"VALUE_{name}" for name in result.value.free_slot_names()}
            ours = substitute(result.value, named=values)
            assert isinstance(ours, str), program.source
            assert ours == reference.format(**values), program.source
            template_checked += 1
    assert literal_checked >= 15
    assert template_checked >= 15


def test_monotonic_env_over_generated_programs():
    # Evaluating any generated RHS under the empty env and under the full
    # file env: a literal result never degrades, and never flips to unknown.
    rng = random.Random(0x5EED)
    order = {"unknown": 0, "template": 1, "literal": 2}
    for _ in range(40):
        program = generate_program(rng)
        tree = parse_python(program.source.encode())
        env = collect_bindings(tree)
        for stmt in tree.root.children:
            value = stmt.child_by_field("value")
            if value is None:
                continue
            bare = eval_string_expr(value, BindingEnv())
            rich = eval_string_expr(value, env)
            assert order[rich.status] >= order[bare.status], program.source
            if bare.status == "literal":
                assert rich.status == "literal"
                assert rich.value.text == bare.value.text


def test_slot_accounting_after_format_substitution():
    tree = parse_python(b'p = "{a} {b} {c}".format(a="1", b="2")\n')
    result = eval_string_expr(_value_expr(tree, 0), BindingEnv())
    before = parse_template("{a} {b} {c}")
    matched = 2
    assert len(result.value.slots) == len(before.slots) - matched
