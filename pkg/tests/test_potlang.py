import pytest

from chartpot import potlang
from chartpot.potlang import (
    BinOp, DisallowedConstruct, DivisionByZero, ElementLimitExceeded,
    IndexOutOfBounds, MissingAnswer, NotFound, ProgramSyntaxError,
    StatementLimitExceeded, TypeMismatch, UndefinedVariable, UnknownBuiltin,
    check_program, execute_text, parse_program, render_answer,
)


class TestParse:
    def test_worked_example_targets(self, example_program):
        program = parse_program(example_program)
        assert program.targets == ["Y", "Greater", "Indices", "Y", "Answer"]

    def test_statements_match_source_lines(self, example_program):
        program = parse_program(example_program)
        assert [s.line for s in program.statements] == [2, 4, 6, 8, 10]

    def test_comments_attach_to_following_statement(self):
        program = parse_program("# the first value\nX=1\nAnswer=X")
        assert program.statements[0].comment == "the first value"
        assert program.statements[1].comment is None

    def test_simple_binop(self):
        program = parse_program("Answer=1+1")
        assert len(program.statements) == 1
        expr = program.statements[0].expr
        assert isinstance(expr, BinOp) and expr.op == "+"

    def test_loop_rejected(self):
        with pytest.raises(DisallowedConstruct):
            parse_program("for x in Y: pass")

    def test_branch_rejected(self):
        with pytest.raises(DisallowedConstruct):
            parse_program("if x: y=1")

    def test_import_rejected(self):
        with pytest.raises(DisallowedConstruct):
            parse_program("import os")

    def test_lambda_rejected(self):
        with pytest.raises(DisallowedConstruct):
            parse_program("f=lambda x: x")

    def test_def_rejected(self):
        with pytest.raises(DisallowedConstruct):
            parse_program("def f(): pass")

    def test_multiple_targets_rejected(self):
        with pytest.raises(DisallowedConstruct) as err:
            parse_program("a=b=1")
        assert "multiple" in str(err.value)

    def test_attribute_assignment_rejected(self):
        with pytest.raises(DisallowedConstruct):
            parse_program("np.x=1")

    def test_unknown_builtin(self):
        with pytest.raises(UnknownBuiltin) as err:
            parse_program("Answer=np.exp(1)")
        assert err.value.name == "np.exp"

    def test_unknown_plain_call(self):
        with pytest.raises(UnknownBuiltin):
            parse_program("Answer=eval('1')")

    def test_dotted_name_must_be_called(self):
        with pytest.raises(ProgramSyntaxError):
            parse_program("Answer=np.sum")

    def test_dunder_has_no_special_meaning(self):
        # __class__ is just an undefined variable name, not introspection
        with pytest.raises(UndefinedVariable):
            execute_text("Answer=__class__")

    def test_syntax_error_carries_line(self):
        with pytest.raises(ProgramSyntaxError) as err:
            parse_program("X=1\nAnswer=1+")
        assert err.value.line == 2

    def test_empty_program_rejected(self):
        with pytest.raises(ProgramSyntaxError):
            parse_program("   \n# only a comment\n")

    def test_semicolons_separate_statements(self):
        program = parse_program("A=1; Answer=A")
        assert program.targets == ["A", "Answer"]

    def test_trailing_comment_ignored(self):
        program = parse_program("Answer=1  # one; two")
        assert program.targets == ["Answer"]

    def test_chained_comparison_rejected(self):
        with pytest.raises(ProgramSyntaxError):
            parse_program("Answer=1<2<3")

    def test_strings_may_contain_hash_and_semicolon(self):
        result = execute_text("Answer='a;#b'")
        assert result.answer == "a;#b"


class TestCheckProgram:
    def test_worked_example_ok(self, example_program):
        assert check_program(example_program).ok

    def test_unknown_builtin(self):
        assert check_program("Answer=np.exp(1)").kind == "unknown-builtin"

    def test_disallowed(self):
        assert check_program("if x: y=1").kind == "disallowed"

    def test_syntax(self):
        assert check_program("Answer=((1)").kind == "syntax"

    def test_check_never_executes(self):
        # a division by zero is a runtime matter; the check still says ok
        assert check_program("Answer=np.divide(1,0)").ok


class TestExecute:
    def test_worked_example_answer(self, example_program):
        result = execute_text(example_program)
        assert abs(result.answer - 309.29) / 309.29 < 1e-12
        assert render_answer(result.answer) == "309.29"

    def test_mean(self):
        assert execute_text("Answer=np.mean([2,4])").answer == 3.0

    def test_count_greater(self):
        result = execute_text("A=[1,2,3]\nB=np.greater(A,1)\nAnswer=np.count_nonzero(B)")
        assert result.answer == 2.0

    def test_shadowing_reassignment(self):
        result = execute_text("Y=1\nY=Y+1\nAnswer=Y")
        assert result.answer == 2.0

    def test_shadow_through_fresh_variable(self, example_program):
        base = execute_text(example_program).answer
        wrapped = execute_text(example_program + "\nv999=Answer\nAnswer=v999").answer
        assert wrapped == base

    def test_division_by_zero_builtin(self):
        with pytest.raises(DivisionByZero):
            execute_text("Answer=np.divide(1,0)")

    def test_division_by_zero_operator(self):
        with pytest.raises(DivisionByZero):
            execute_text("Answer=1/0")

    def test_elementwise_division_by_zero(self):
        with pytest.raises(DivisionByZero):
            execute_text("Answer=np.divide([1,2],[1,0])")

    def test_undefined_variable(self):
        with pytest.raises(UndefinedVariable) as err:
            execute_text("Answer=missing+1")
        assert err.value.name == "missing"

    def test_missing_answer(self):
        with pytest.raises(MissingAnswer):
            execute_text("x=1\ny=2")

    def test_index_out_of_bounds(self):
        with pytest.raises(IndexOutOfBounds):
            execute_text("Y=[1,2]\nAnswer=Y[5]")

    def test_negative_index(self):
        assert execute_text("Y=[1,2,3]\nAnswer=Y[-1]").answer == 3.0

    def test_fancy_indexing(self):
        assert execute_text("Y=[10,20,30]\nAnswer=np.sum(Y[[0,2]])").answer == 40.0

    def test_where_returns_tuple(self):
        result = execute_text("G=np.greater([1,5,3],2)\nAnswer=np.where(G)[0]")
        assert result.answer == [1.0, 2.0]

    def test_index_builtin(self):
        assert execute_text("L=['a','b','c']\nAnswer=index(L,'b')").answer == 1.0

    def test_index_not_found(self):
        with pytest.raises(NotFound):
            execute_text("L=['a']\nAnswer=index(L,'z')")

    def test_type_mismatch(self):
        with pytest.raises(TypeMismatch):
            execute_text("Answer='a'+1")

    def test_statement_limit(self):
        text = "\n".join(f"x{i}=1" for i in range(300)) + "\nAnswer=1"
        with pytest.raises(StatementLimitExceeded):
            execute_text(text)
        assert execute_text(text, max_statements=1000).answer == 1.0

    def test_element_limit(self):
        items = ",".join("1" for _ in range(50))
        with pytest.raises(ElementLimitExceeded):
            execute_text(f"Answer=np.sum([{items}])", max_elements=10)

    def test_trace_records_assignments(self, example_program):
        result = execute_text(example_program)
        assert [t for t, _ in result.trace] == ["Y", "Greater", "Indices", "Y", "Answer"]
        assert result.env["Answer"] == result.answer

    def test_determinism(self, example_program):
        a = execute_text(example_program)
        b = execute_text(example_program)
        assert a.answer == b.answer and a.trace == b.trace

    def test_comparisons(self):
        assert execute_text("Answer=3>2").answer is True
        assert execute_text("Answer=3<=2").answer is False
        assert execute_text("Answer=2==2").answer is True

    def test_equality_on_strings(self):
        assert execute_text("Answer='a'=='a'").answer is True

    def test_bool_coercion_in_arithmetic(self):
        assert execute_text("G=np.greater([1,5],3)\nAnswer=np.sum(G)").answer == 1.0

    def test_argmax_first_extremum(self):
        assert execute_text("Answer=np.argmax([3,1,3])").answer == 0.0

    def test_median_even(self):
        assert execute_text("Answer=np.median([4,1,3,2])").answer == 2.5

    def test_diff(self):
        assert execute_text("Answer=np.diff([1,4,2])").answer == [3.0, -2.0]

    def test_sort(self):
        assert execute_text("Answer=np.sort([3,1,2])").answer == [1.0, 2.0, 3.0]

    def test_unary_minus(self):
        assert execute_text("Answer=-np.min([3,1,2])").answer == -1.0

    def test_boolean_mask_indexing(self):
        result = execute_text("Y=[10,20,30]\nG=np.greater(Y,15)\nAnswer=np.sum(np.array(Y)[G])")
        assert result.answer == 50.0


class TestRenderAnswer:
    def test_integers_drop_decimal(self):
        assert render_answer(4.0) == "4"

    def test_floats_shortest_form(self):
        assert render_answer(103.7) == "103.7"

    def test_accumulation_noise_hidden(self):
        assert render_answer((103.7 + 103.13) + 102.46) == "309.29"

    def test_booleans_render_yes_no(self):
        assert render_answer(True) == "Yes"
        assert render_answer(False) == "No"

    def test_arrays(self):
        assert render_answer([1.0, 2.5]) == "[1, 2.5]"

    def test_strings_pass_through(self):
        assert render_answer("Lamb") == "Lamb"


class TestSafety:
    def test_whitelist_table_is_closed(self):
        assert set(potlang._BUILTINS) == set(potlang.BUILTIN_WHITELIST)

    def test_random_identifiers_never_reach_evaluation(self):
        import random
        rng = random.Random(99)
        for _ in range(200):
            name = "".join(rng.choice("abcdefgh_.") for _ in range(rng.randint(1, 10)))
            text = f"Answer={name}(1)"
            result = check_program(text)
            if result.ok:
                # only genuine whitelist members may be callable
                program = parse_program(text)
                call = program.statements[0].expr
                assert call.name in potlang.BUILTIN_WHITELIST

    def test_no_dangerous_surface(self):
        for snippet in (
            "Answer=open('/etc/passwd')",
            "Answer=__import__('os')",
            "Answer=getattr(1,'x')",
            "Answer=exec('1')",
        ):
            result = check_program(snippet)
            assert not result.ok

    def test_hostile_nesting_yields_typed_errors(self):
        # recursion bombs must classify as syntax errors, never crash
        for text in (
            "Answer=" + "(" * 5000 + "1" + ")" * 5000,
            "Answer=" + "-" * 5000 + "1",
            "Answer=" + "[1," * 3000 + "1" + "]" * 3000,
            "Answer=np.sum(" * 900 + "1" + ")" * 900,
        ):
            assert check_program(text).kind == "syntax"

    def test_deep_but_legal_nesting_executes(self):
        text = "Answer=" + "(" * 90 + "1" + ")" * 90
        assert execute_text(text).answer == 1.0

    def test_unterminated_string(self):
        assert check_program('Answer="unterminated').kind == "syntax"
