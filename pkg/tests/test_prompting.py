import json
from datetime import date, timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from promptcast.dataset import Instance, NumericalDataset
from promptcast.decoding import parse_output
from promptcast.prompting import (
    CT,
    ECL,
    SG,
    PromptError,
    PromptPair,
    ScenarioTemplate,
    TemplateError,
    build_prompt_pairs,
    format_date,
    load_templates,
    read_lines,
    render_input,
    render_output,
    round_half_away,
    serialize_values,
    write_prompt_files,
)

# Reference prompts for the built-in scenarios, one published instance each.
CT_INPUT = (
    "From August 16, 2019, Friday to August 30, 2019, Friday, the average temperature of region 110 "
    "was 78, 81, 83, 84, 84, 82, 83, 78, 77, 77, 74, 77, 78, 73, 76 degree on each day. "
    "What is the temperature going to be on August 31, 2019, Saturday?"
)
ECL_INPUT = (
    "From May 16, 2014, Friday to May 30, 2014, Friday, client 50 consumed 8975, 9158, 8786, 8205, "
    "7693, 7419, 7595, 7596, 7936, 7646, 7808, 7736, 7913, 8074, 8329 kWh of electricity on each day. "
    "What is the consumption going to be on May 31, 2014, Saturday?"
)
SG_INPUT = (
    "From May 23, 2021, Sunday to June 06, 2021, Sunday, there were 13, 17, 13, 20, 16, 16, 17, 17, "
    "19, 20, 12, 12, 14, 12, 13 people visiting POI 324 on each day. "
    "How many people will visit POI 324 on June 07, 2021, Monday?"
)


def zeller_weekday(d: date) -> str:
    """Day of week via Zeller's congruence, independent of the datetime module's weekday."""
    q, m, y = d.day, d.month, d.year
    if m < 3:
        m += 12
        y -= 1
    k, j = y % 100, y // 100
    h = (q + (13 * (m + 1)) // 5 + k + k // 4 + j // 4 + 5 * j) % 7
    return ["Saturday", "Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday"][h]


class TestFormatDate:
    @pytest.mark.parametrize(
        "d, text",
        [
            (date(2021, 6, 7), "June 07, 2021, Monday"),
            (date(2019, 8, 31), "August 31, 2019, Saturday"),
            (date(2014, 5, 31), "May 31, 2014, Saturday"),
        ],
    )
    def test_reference_dates(self, d, text):
        assert format_date(d) == text

    @given(st.dates(date(1900, 1, 1), date(2100, 12, 31)))
    def test_weekday_matches_zeller(self, d):
        assert format_date(d).rsplit(", ", 1)[1] == zeller_weekday(d)


class TestSerialize:
    def test_reference_prefix(self):
        assert serialize_values([78, 81, 83]) == "78, 81, 83"

    def test_half_away_from_zero(self):
        assert serialize_values([-5.5]) == "-6"
        assert serialize_values([5.5, 2.5, -2.5, 0.49999999999999994]) == "6, 3, -3, 0"

    def test_zero(self):
        assert serialize_values([0]) == "0"

    @given(st.integers(-10**6, 10**6))
    def test_integers_unchanged(self, v):
        assert serialize_values([v]) == str(v)
        assert round_half_away(float(v)) == v


class TestRender:
    def test_ct(self):
        inst = Instance(110, date(2019, 8, 16), (78, 81, 83, 84, 84, 82, 83, 78, 77, 77, 74, 77, 78, 73, 76), 78)
        assert render_input(inst, CT) == CT_INPUT
        assert render_output(inst, CT) == "The temperature will be 78 degree."

    def test_ecl(self):
        vals = (8975, 9158, 8786, 8205, 7693, 7419, 7595, 7596, 7936, 7646, 7808, 7736, 7913, 8074, 8329)
        inst = Instance(50, date(2014, 5, 16), vals, 8337)
        assert render_input(inst, ECL) == ECL_INPUT
        assert render_output(inst, ECL) == "This client will consume 8337 kWh of electricity."

    def test_sg(self):
        vals = (13, 17, 13, 20, 16, 16, 17, 17, 19, 20, 12, 12, 14, 12, 13)
        inst = Instance(324, date(2021, 5, 23), vals, 15)
        assert render_input(inst, SG) == SG_INPUT
        assert render_output(inst, SG) == "There will be 15 visitors."

    def test_custom_template(self):
        tpl = ScenarioTemplate("custom", "V: {values}", "Next on {t_obs+1}?", "It is {x_target}.")
        inst = Instance(1, date(2020, 1, 1), (1, 2), 3)
        assert render_input(inst, tpl) == "V: 1, 2 Next on January 03, 2020, Friday?"

    def test_separator_configurable(self):
        tpl = ScenarioTemplate("c", "A {values}.", "B?", "{x_target}")
        inst = Instance(1, date(2020, 1, 1), (1,), 3)
        assert render_input(inst, tpl, separator=" | ") == "A 1. | B?"

    def test_unknown_placeholder(self):
        with pytest.raises(TemplateError, match=r"\{city\}"):
            ScenarioTemplate("bad", "In {city}", "q", "{x_target}")

    def test_answer_needs_one_value_slot(self):
        with pytest.raises(TemplateError):
            ScenarioTemplate("bad", "c", "q", "no value")
        with pytest.raises(TemplateError):
            ScenarioTemplate("bad", "c", "q", "{x_target} and {x_target}")


class TestPromptFiles:
    def _pairs(self, n, split="val"):
        ds = NumericalDataset(
            "ct", split, [Instance(1, date(2020, 1, 1) + timedelta(days=i), (1.0,) * 15, 2.0) for i in range(n)]
        )
        return build_prompt_pairs(ds, CT)

    def test_two_pairs(self, tmp_path):
        x, y = write_prompt_files(self._pairs(2), "val", tmp_path)
        assert x.name == "val_x_prompt.txt" and y.name == "val_y_prompt.txt"
        assert len(read_lines(x)) == len(read_lines(y)) == 2

    def test_rewrite_identical(self, tmp_path):
        pairs = self._pairs(3)
        x1, y1 = write_prompt_files(pairs, "val", tmp_path / "a")
        x2, y2 = write_prompt_files(pairs, "val", tmp_path / "b")
        assert x1.read_bytes() == x2.read_bytes() and y1.read_bytes() == y2.read_bytes()

    def test_newline_rejected(self):
        with pytest.raises(PromptError):
            PromptPair("ct", "val", 0, "a\nb", "c")

    def test_out_of_order_rejected(self, tmp_path):
        pairs = self._pairs(2)
        with pytest.raises(PromptError):
            write_prompt_files(pairs[::-1], "val", tmp_path)

    def test_wrong_split_rejected(self, tmp_path):
        with pytest.raises(PromptError):
            write_prompt_files(self._pairs(1, "train"), "val", tmp_path)

    def test_empty(self, tmp_path):
        x, y = write_prompt_files([], "test", tmp_path)
        assert read_lines(x) == [] and x.read_bytes() == b""


def test_load_templates(tmp_path):
    p = tmp_path / "t.json"
    p.write_text(json.dumps([{"name": "w", "context": "Wind {values}.", "question": "Tomorrow?", "answer": "Wind {x_target} mph."}]))
    tpl = load_templates(p)["w"]
    assert render_output(Instance(1, date(2020, 1, 1), (1,), 12.4), tpl) == "Wind 12 mph."


@given(st.integers(-10000, 30000))
def test_output_round_trip(v):
    inst = Instance(1, date(2020, 1, 1), (0,), v)
    for tpl in (CT, ECL, SG):
        assert parse_output(render_output(inst, tpl), tpl).value == v
