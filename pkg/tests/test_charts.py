import random

import pytest

from chartpot.charts import (
    ChartTable, DatasetRecord, MalformedTable, RecordDecodeError,
    RecordEncodeError, Row, parse_table, read_records, render_table,
    write_records,
)
from conftest import make_random_table


class TestParseTable:
    def test_worked_example_block(self, example_table):
        assert example_table.title == "Long-term price index in food commodities, 1850-2015, World, 1934"
        assert example_table.chart_type == "Horizontal bar chart"
        assert len(example_table.rows) == 6
        assert example_table.rows[0] == Row(label="Lamb", color="steelblue", values=(103.7,))
        assert example_table.rows[-1].label == "Wheat"

    def test_minimal_table(self):
        table = parse_table("Chart title: t\nChart type: bar\n| X | Y |\n| A | 1 |")
        assert len(table.rows) == 1
        assert table.rows[0].values == (1.0,)
        assert table.rows[0].color is None

    def test_ragged_row_rejected(self):
        text = "Chart title: t\nChart type: bar\n| X | Y |\n| A | 1 | 2 |"
        with pytest.raises(MalformedTable) as err:
            parse_table(text)
        assert err.value.line == 4

    def test_missing_header_rejected(self):
        with pytest.raises(MalformedTable):
            parse_table("Chart title: t\nChart type: bar\n")

    def test_missing_title_rejected(self):
        with pytest.raises(MalformedTable) as err:
            parse_table("| X | Y |\n| A | 1 |")
        assert err.value.line == 1

    def test_non_pipe_row_rejected(self):
        with pytest.raises(MalformedTable):
            parse_table("Chart title: t\nChart type: bar\n| X | Y |\nA, 1")

    def test_separator_line_ignored(self):
        text = "Chart title: t\nChart type: bar\n| X | Y |\n|:---|---:|\n| A | 1 |"
        assert len(parse_table(text).rows) == 1

    def test_chart_table_line_ignored(self):
        text = "Chart title: t\nChart type: bar\nChart table:\n| X | Y |\n| A | 1 |"
        assert len(parse_table(text).rows) == 1

    def test_text_cells_kept_verbatim(self):
        table = parse_table("Chart title: t\nChart type: bar\n| X | Y |\n| A | n/a |")
        assert table.rows[0].values == ("n/a",)

    def test_blank_color_not_extracted(self):
        table = parse_table("Chart title: t\nChart type: bar\n| X | Y |\n| A (color: ) | 1 |")
        assert table.rows[0].label == "A (color: )"
        assert table.rows[0].color is None


class TestRenderTable:
    def test_worked_example_canonical_row(self, example_table):
        lines = render_table(example_table).splitlines()
        assert lines[3] == "| Lamb (color: steelblue) | 103.7 |"

    def test_no_color_rows_render_bare(self):
        table = ChartTable(
            title="t", chart_type="bar", column_headers=("X", "Y"),
            rows=(Row("A", None, (1.0,)),),
        )
        assert render_table(table).splitlines()[3] == "| A | 1 |"

    def test_render_is_deterministic(self, example_table):
        assert render_table(example_table) == render_table(example_table)

    def test_round_trip_50_random_tables(self):
        rng = random.Random(1234)
        for _ in range(50):
            table = make_random_table(rng)
            assert parse_table(render_table(table)) == table

    def test_integer_cells_render_without_decimal(self):
        table = parse_table("Chart title: t\nChart type: bar\n| X | Y |\n| A | 5.0 |")
        assert render_table(table).splitlines()[3] == "| A | 5 |"


class TestInvariants:
    def test_needs_two_headers(self):
        with pytest.raises(ValueError):
            ChartTable(title="t", chart_type="b", column_headers=("X",),
                       rows=(Row("A", None, ()),))

    def test_needs_rows(self):
        with pytest.raises(ValueError):
            ChartTable(title="t", chart_type="b", column_headers=("X", "Y"), rows=())

    def test_blank_color_rejected(self):
        with pytest.raises(ValueError):
            ChartTable(title="t", chart_type="b", column_headers=("X", "Y"),
                       rows=(Row("A", "  ", (1.0,)),))


class TestRecords:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "records.jsonl"
        path.write_text("")
        assert read_records(path) == []

    def test_multiline_program_round_trip(self, tmp_path, example_program):
        path = tmp_path / "records.jsonl"
        record = DatasetRecord("img-1", "q?", example_program, "gpt", "309.29")
        write_records(path, [record])
        assert read_records(path) == [record]
        first_bytes = path.read_bytes()
        write_records(path, [record])
        assert path.read_bytes() == first_bytes

    def test_10k_records_round_trip(self, tmp_path):
        rng = random.Random(7)
        records = [
            DatasetRecord(
                image_id=f"img-{rng.randint(0, 999)}",
                question=f"What is the sum of metric {i}?",
                pot_answer=f"Y=[{i}, {i + 1}]\nAnswer=np.sum(Y)",
                source=rng.choice(["template", "gpt"]),
                gold_answer=str(2 * i + 1) if rng.random() < 0.5 else None,
            )
            for i in range(10_000)
        ]
        path = tmp_path / "big.jsonl"
        write_records(path, records)
        assert read_records(path) == records

    def test_bad_source_rejected(self):
        with pytest.raises(ValueError):
            DatasetRecord("i", "q", "Answer=1", "handwritten")

    def test_unparseable_program_rejected_at_write(self, tmp_path):
        record = DatasetRecord("i", "q", "for x in y: pass", "gpt")
        with pytest.raises(RecordEncodeError):
            write_records(tmp_path / "r.jsonl", [record])
        assert not (tmp_path / "r.jsonl").exists()

    def test_decode_error_carries_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"image_id": "a", "question": "q", "pot_answer": "Answer=1", "source": "gpt"}\nnot json\n')
        with pytest.raises(RecordDecodeError) as err:
            read_records(path)
        assert err.value.line == 2

    def test_write_failure_leaves_no_partial_file(self, tmp_path):
        good = DatasetRecord("i", "q", "Answer=1", "gpt")
        bad = DatasetRecord("i", "q", "Answer=1+", "gpt")
        target = tmp_path / "out.jsonl"
        write_records(target, [good])
        before = target.read_bytes()
        with pytest.raises(RecordEncodeError):
            write_records(target, [good, bad])
        assert target.read_bytes() == before
        assert [p.name for p in tmp_path.iterdir()] == ["out.jsonl"]
