import json
import logging
import random
from datetime import date, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import daily, make_ledger
from stocklot.ledger import (
    DegeneratePeriodError,
    Direction,
    EmptyLedgerError,
    FormatConfig,
    ItemNotFoundError,
    LedgerParseError,
    Movement,
    MovementLedger,
    Period,
    UnitBasis,
    average_inventory,
    integrated_stock_area,
    ledger_to_csv,
    ledger_to_json,
    order_count,
    parse_ledger,
    serialize_ledger,
    stock_timeline,
    timeline_to_json,
)

Y2011 = Period.year(2011)


class TestParse:
    def test_entry_row(self):
        ledger = parse_ledger("item A;E;10/01/2011;200;22,8")
        (m,) = ledger.movements
        assert m == Movement("item A", Direction.ENTRY, date(2011, 1, 10), 200, 22.8)

    def test_exit_row(self):
        (m,) = parse_ledger("item A;S;24/09/2011;-300;-34,2").movements
        assert m.direction is Direction.EXIT
        assert (m.date, m.qty_units, m.qty_kg) == (date(2011, 9, 24), -300, -34.2)

    @pytest.mark.parametrize("text", ["", "   \n\n"])
    def test_empty(self, text):
        with pytest.raises(EmptyLedgerError):
            parse_ledger(text)

    def test_header_only(self):
        with pytest.raises(EmptyLedgerError):
            parse_ledger("Nome;Movimento;Data;Qtd.;Saldo KG\n")

    def test_sample_ledger(self, ledger_2011):
        assert len(ledger_2011.movements) == 10
        assert ledger_2011.item_ids == ["Item C", "item A", "item B", "item D"]
        assert ledger_2011.period == Period(date(2011, 1, 5), date(2011, 10, 20))
        # per-item date order, regardless of input order
        d_rows = ledger_2011.for_item("item D")
        assert [m.qty_units for m in d_rows] == [-60, 400]

    def test_item_names_match_case_insensitively(self, ledger_2011):
        assert ledger_2011.resolve_item("item c") == "Item C"
        assert len(ledger_2011.for_item("ITEM C")) == 4

    @pytest.mark.parametrize(
        "row, fragment",
        [
            ("x;E;31/02/2011;5;1", "malformed date"),
            ("x;E;2011-01-01;5;1", "malformed date"),
            ("x;E;01/01/2011;abc;1", "non-numeric"),
            ("x;E;01/01/2011;5;zz", "non-numeric kg"),
            ("x;T;01/01/2011;5;1", "unknown movement code"),
            ("x;E;01/01/2011;0;0", "zero quantity"),
            ("x;E;01/01/2011;2,5;1", "not whole"),
        ],
    )
    def test_row_errors_carry_line_number(self, row, fragment):
        text = "Nome;Movimento;Data;Qtd.;Saldo KG\nok;E;01/01/2011;1;1\n" + row
        with pytest.raises(LedgerParseError, match=fragment) as info:
            parse_ledger(text)
        assert info.value.line == 3

    def test_sign_mismatch_repaired(self, caplog):
        with caplog.at_level(logging.WARNING):
            ledger = parse_ledger("x;E;01/01/2011;-5;-1,5\nx;S;02/01/2011;7;2")
        entry, exit_ = ledger.movements
        assert (entry.qty_units, entry.qty_kg) == (5, 1.5)
        assert (exit_.qty_units, exit_.qty_kg) == (-7, -2.0)
        assert len(ledger.warnings) == 2
        assert "line 1" in ledger.warnings[0]

    def test_kg_optional(self):
        (m,) = parse_ledger("x;E;01/01/2011;5").movements
        assert m.qty_kg is None

    def test_custom_format(self):
        cfg = FormatConfig(delimiter=",", date_format="%Y-%m-%d", decimal_separator=".")
        (m,) = parse_ledger("x,E,2011-01-10,200,22.8", cfg).movements
        assert m.qty_kg == 22.8 and m.date == date(2011, 1, 10)

    def test_round_trip(self, ledger_2011):
        again = parse_ledger(serialize_ledger(ledger_2011))
        assert again.movements == ledger_2011.movements

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.sampled_from(["a", "b", "item c"]),
                st.integers(0, 700),
                st.integers(-5000, 5000).filter(bool),
                st.one_of(st.none(), st.floats(0.001, 1e4, allow_nan=False).map(lambda x: round(x, 3))),
            ),
            min_size=1,
            max_size=30,
        )
    )
    def test_round_trip_property(self, rows):
        moves = []
        for item, offset, qty, kg in rows:
            direction = Direction.ENTRY if qty > 0 else Direction.EXIT
            kg = None if kg is None else (kg if qty > 0 else -kg)
            moves.append(Movement(item, direction, date(2010, 1, 1) + timedelta(offset), qty, kg))
        text = serialize_ledger(MovementLedger.from_movements(moves))
        assert parse_ledger(text).movements == tuple(
            sorted(moves, key=lambda m: (m.item_id, m.date))
        )

    def test_exports(self, ledger_2011):
        payload = json.loads(ledger_to_json(ledger_2011))
        assert payload["movements"][0]["date"] == "2011-08-17"
        assert payload["movements"][0]["qty_kg"] == 265.5
        assert ledger_to_csv(ledger_2011).splitlines()[1] == "Item C,entry,2011-08-17,1500,265.5"


class TestTimeline:
    def test_item_d_goes_negative(self, ledger_2011, caplog):
        with caplog.at_level(logging.WARNING):
            tl = stock_timeline(ledger_2011, "item D", Y2011)
        assert tl.level_at(date(2011, 1, 4)) == 0
        assert tl.level_at(date(2011, 1, 5)) == -60
        assert tl.level_at(date(2011, 1, 13)) == -60
        assert tl.level_at(date(2011, 1, 14)) == 340
        assert tl.has_negative_levels and tl.warnings
        assert "negative" in caplog.text

    def test_constant_without_movements(self, ledger_2011):
        tl = stock_timeline(ledger_2011, "item A", Period(date(2012, 1, 1), date(2012, 3, 1)), 100)
        assert tl.points[0][1] == 100 + 200 - 300
        tl = stock_timeline(ledger_2011, "item A", Period(date(2011, 2, 1), date(2011, 3, 1)), 100)
        assert tl.points == ((date(2011, 2, 1), 300.0),)
        assert average_inventory(tl) == 300

    def test_item_c_final_level(self, ledger_2011):
        tl = stock_timeline(ledger_2011, "item C", Y2011)
        assert tl.points[-1][1] == 1500 - 692 - 682 + 300 == 426

    def test_kg_basis(self, ledger_2011):
        tl = stock_timeline(ledger_2011, "item A", Y2011, unit_basis=UnitBasis.KG)
        assert tl.points[-1][1] == pytest.approx(22.8 - 34.2)

    def test_unknown_item(self, ledger_2011):
        with pytest.raises(ItemNotFoundError):
            stock_timeline(ledger_2011, "item Z", Y2011)

    def test_points_strictly_increasing(self, ledger_2011):
        ledger = make_ledger(
            [("x", date(2011, 1, 3), 5), ("x", date(2011, 1, 3), -5), ("x", date(2011, 1, 4), 2)]
        )
        tl = stock_timeline(ledger, "x", Y2011)
        dates = [d for d, _ in tl.points]
        assert dates == sorted(set(dates))
        assert tl.points == ((date(2011, 1, 1), 0.0), (date(2011, 1, 4), 2.0))

    def test_json_export(self, ledger_2011):
        payload = json.loads(timeline_to_json(stock_timeline(ledger_2011, "item B", Y2011)))
        assert payload["points"][-1] == ["2011-03-31", 4086.0]


def brute_force_levels(moves, period, initial=0.0):
    """End-of-day level for every day, recomputed from scratch each day."""
    return [
        initial + sum(q for d, q in moves if d <= day) for day in period.dates()
    ]


class TestAggregates:
    def test_constant_level(self):
        ledger = make_ledger([("x", date(2011, 1, 1), 10)])
        tl = stock_timeline(ledger, "x", Period(date(2011, 1, 1), date(2011, 4, 10)))
        assert tl.period.days == 100
        assert integrated_stock_area(tl) == 1000
        assert average_inventory(tl) == 10

    def test_zero_level(self):
        ledger = make_ledger([("x", date(2011, 1, 1), 10), ("x", date(2011, 1, 1), -10)])
        tl = stock_timeline(ledger, "x", Period(date(2011, 1, 1), date(2011, 2, 1)))
        assert integrated_stock_area(tl) == 0

    def test_two_segments(self):
        ledger = make_ledger([("x", date(2011, 1, 1), 200), ("x", date(2011, 1, 11), -150)])
        tl = stock_timeline(ledger, "x", Period(date(2011, 1, 1), date(2011, 1, 30)))
        assert integrated_stock_area(tl) == 200 * 10 + 50 * 20 == 3000

    def test_half_and_half(self):
        ledger = make_ledger([("x", date(2011, 2, 20), 100)])
        tl = stock_timeline(ledger, "x", Period(date(2011, 1, 1), date(2011, 4, 10)))
        # 50 days at 0, 50 at 100
        assert average_inventory(tl) == 50

    def test_sawtooth_mean(self):
        # 1600 received every 200 days, 8 consumed per day
        rows = []
        for day in daily(date(2011, 1, 1), 400):
            if (day - date(2011, 1, 1)).days % 200 == 0:
                rows.append(("x", day, 1600))
            rows.append(("x", day, -8))
        ledger = make_ledger(rows)
        tl = stock_timeline(ledger, "x", ledger.period)
        assert average_inventory(tl) == pytest.approx(800, rel=0.01)

    def test_degenerate_period(self):
        ledger = make_ledger([("x", date(2011, 1, 1), 10)])
        with pytest.raises(DegeneratePeriodError):
            stock_timeline(ledger, "x", Period(date(2011, 1, 2), date(2011, 1, 1)))

    def test_negative_area_warns(self, ledger_2011, caplog):
        tl = stock_timeline(ledger_2011, "item D", Period(date(2011, 1, 1), date(2011, 1, 13)))
        with caplog.at_level(logging.WARNING):
            assert integrated_stock_area(tl) == -60 * 9
        assert "negative" in caplog.text

    def test_order_count(self, ledger_2011):
        assert order_count(ledger_2011, "item B", Y2011) == 2
        assert order_count(ledger_2011, "item C", Y2011) == 2
        assert order_count(ledger_2011, "item Z", Y2011) == 0
        assert order_count(ledger_2011, "item B", Period.year(2012)) == 0


movement_lists = st.lists(
    st.tuples(st.integers(0, 59), st.integers(-500, 500).filter(bool)), max_size=40
)


class TestProperties:
    @settings(max_examples=100, deadline=None)
    @given(movement_lists, st.integers(-100, 1000))
    def test_area_matches_brute_force(self, rows, initial):
        period = Period(date(2011, 1, 1), date(2011, 3, 1))
        moves = [(period.start + timedelta(o), q) for o, q in rows]
        ledger = make_ledger([("x", d, q) for d, q in moves] + [("x", period.end, 1)])
        tl = stock_timeline(ledger, "x", period, initial)
        expected = brute_force_levels(moves + [(period.end, 1)], period, initial)
        assert tl.daily_levels() == expected
        assert integrated_stock_area(tl) == sum(expected)
        assert tl.points[-1][1] == initial + sum(q for _, q in rows) + 1

    @settings(max_examples=100, deadline=None)
    @given(movement_lists, st.integers(0, 1000))
    def test_average_times_days_is_area(self, rows, initial):
        period = Period(date(2011, 1, 1), date(2011, 3, 1))
        ledger = make_ledger(
            [("x", period.start + timedelta(o), q) for o, q in rows] + [("x", period.end, 1)]
        )
        tl = stock_timeline(ledger, "x", period, initial)
        area = integrated_stock_area(tl)
        assert average_inventory(tl) * period.days == pytest.approx(area, rel=1e-15, abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(movement_lists, st.randoms(use_true_random=False))
    def test_same_day_order_does_not_matter(self, rows, rnd):
        period = Period(date(2011, 1, 1), date(2011, 3, 1))
        moves = [("x", period.start + timedelta(o), q) for o, q in rows] + [("x", period.end, 1)]
        shuffled = list(moves)
        rnd.shuffle(shuffled)
        a = stock_timeline(make_ledger(moves), "x", period)
        b = stock_timeline(make_ledger(shuffled), "x", period)
        assert a.points == b.points

    @settings(max_examples=50, deadline=None)
    @given(movement_lists)
    def test_order_count_ignores_exits(self, rows):
        period = Period(date(2011, 1, 1), date(2011, 3, 1))
        moves = [("x", period.start + timedelta(o), q) for o, q in rows] + [("x", period.end, 1)]
        without_exits = [m for m in moves if m[2] > 0]
        assert order_count(make_ledger(moves), "x", period) == order_count(
            make_ledger(without_exits), "x", period
        )


def test_random_day_shuffle_smoke():
    rng = random.Random(7)
    rows = [("x", date(2011, 1, 1) + timedelta(rng.randrange(30)), rng.choice([-3, 4])) for _ in range(50)]
    tl = stock_timeline(make_ledger(rows), "x", Period(date(2011, 1, 1), date(2011, 1, 30)))
    assert tl.points[-1][1] == sum(q for *_, q in rows)
