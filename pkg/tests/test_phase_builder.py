import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatsim.codec import decode_spat
from spatsim.errors import (
    EmptyStream,
    GapTooLarge,
    NonMonotonicTime,
    PhaseConflict,
    SamplePeriodTooCoarse,
    UnmappedGroup,
)
from spatsim.phase_builder import (
    Approach,
    ApproachMapping,
    Phase,
    PhaseTable,
    approach_color,
    build_phase_table,
    synthesize_stream,
    table_from_csv,
    table_from_json,
    table_to_csv,
    table_to_json,
)
from spatsim.spat_state import GroupSignal, LightColor, SignalSnapshot, snapshot

from conftest import REFERENCE_SCHEDULE, random_phase_table

G, Y, R = LightColor.GREEN, LightColor.YELLOW, LightColor.RED


def make_snapshot(t: float, groups: dict) -> SignalSnapshot:
    return SignalSnapshot(
        label="t",
        time_s=t,
        minute_of_hour=int(t // 60) % 60,
        second_of_minute=t % 60,
        groups={g: GroupSignal(state, 1.0) for g, state in groups.items()},
    )


class TestApproachMapping:
    def test_default_blocs(self, default_mapping):
        assert default_mapping.ns_groups == frozenset({1, 2, 5, 6})
        assert default_mapping.ew_groups == frozenset({3, 4, 7, 8})
        assert default_mapping.approach_of(1) is Approach.NORTH_SOUTH
        assert default_mapping.approach_of(7) is Approach.EAST_WEST

    def test_unmapped_group(self, default_mapping):
        with pytest.raises(UnmappedGroup):
            default_mapping.approach_of(42)

    def test_invalid_mappings(self):
        with pytest.raises(ValueError):
            ApproachMapping(frozenset(), frozenset({1}))
        with pytest.raises(ValueError):
            ApproachMapping(frozenset({1}), frozenset({1, 2}))


class TestApproachColor:
    def test_golden_snapshot(self, golden_payload, default_mapping):
        snap = snapshot(decode_spat(golden_payload), label="Dayton")
        assert approach_color(snap, default_mapping, Approach.NORTH_SOUTH) is G
        assert approach_color(snap, default_mapping, Approach.EAST_WEST) is R

    def test_split_resolves_to_most_restrictive(self, default_mapping):
        snap = make_snapshot(
            0.0,
            {1: "protected-Movement-Allowed", 2: "stop-And-Remain",
             5: "protected-Movement-Allowed", 6: "protected-Movement-Allowed",
             3: "stop-And-Remain", 4: "stop-And-Remain",
             7: "stop-And-Remain", 8: "stop-And-Remain"},
        )
        assert approach_color(snap, default_mapping, Approach.NORTH_SOUTH) is R

    def test_unknown_beats_nothing(self, default_mapping):
        snap = make_snapshot(0.0, {1: "dark", 3: "stop-And-Remain"})
        assert approach_color(snap, default_mapping, Approach.NORTH_SOUTH) is LightColor.UNKNOWN

    def test_unmapped_group_raises(self, default_mapping):
        snap = make_snapshot(0.0, {1: "dark", 99: "dark"})
        with pytest.raises(UnmappedGroup):
            approach_color(snap, default_mapping, Approach.NORTH_SOUTH)


class TestPhaseTypes:
    def test_double_green_rejected(self):
        with pytest.raises(PhaseConflict):
            Phase(5.0, G, G)

    def test_nonpositive_duration_rejected(self):
        with pytest.raises(ValueError):
            Phase(0.0, G, R)

    def test_from_phases_derives_cycles(self, reference_table):
        assert reference_table.cycle_boundaries == [4, 8]
        assert reference_table.cycle_position(0) == 1
        assert reference_table.cycle_position(5) == 2
        assert reference_table.cycle_position(11) == 4

    def test_zero_change_phases_rejected(self):
        with pytest.raises(ValueError):
            PhaseTable.from_phases([Phase(1.0, G, R), Phase(2.0, G, R)])


class TestBuild:
    def test_reference_first_cycle(self, default_mapping):
        cycle1 = PhaseTable.from_phases(
            [Phase(d, ns, ew) for d, ns, ew in REFERENCE_SCHEDULE[:4]]
        )
        stream = synthesize_stream(cycle1, 0.5, default_mapping)
        rebuilt = build_phase_table(stream, default_mapping)
        assert rebuilt == cycle1
        assert [p.duration for p in rebuilt.phases] == [28, 3, 20, 3]
        assert rebuilt.cycle_boundaries == []

    def test_reference_full_schedule(self, reference_table, default_mapping):
        for period in (0.5, 1.0):
            rebuilt = build_phase_table(
                synthesize_stream(reference_table, period, default_mapping),
                default_mapping,
            )
            assert [p.duration for p in rebuilt.phases] == [
                28, 3, 20, 3, 35, 3, 20, 3, 35, 3, 20, 3,
            ]
            assert rebuilt.cycle_boundaries == [4, 8]

    def test_constant_stream_single_phase(self, default_mapping):
        groups = {g: "protected-Movement-Allowed" for g in (1, 2, 5, 6)}
        groups.update({g: "stop-And-Remain" for g in (3, 4, 7, 8)})
        table = build_phase_table(
            [make_snapshot(0.0, groups), make_snapshot(1.0, groups)], default_mapping
        )
        assert len(table.phases) == 1
        assert table.cycle_boundaries == []
        # the final sample covers one sampling interval past itself
        assert table.phases[0].duration == 2.0

    def test_too_few_snapshots(self, default_mapping):
        with pytest.raises(EmptyStream):
            build_phase_table([], default_mapping)
        with pytest.raises(EmptyStream):
            build_phase_table([make_snapshot(0.0, {1: "dark", 3: "dark"})], default_mapping)

    def test_non_monotonic(self, default_mapping):
        snaps = [make_snapshot(t, {1: "dark", 3: "dark"}) for t in (0.0, 1.0, 1.0)]
        with pytest.raises(NonMonotonicTime):
            build_phase_table(snaps, default_mapping)

    def test_gap_too_large(self, default_mapping):
        snaps = [make_snapshot(t, {1: "dark", 3: "dark"}) for t in (0.0, 1.0, 3.5)]
        with pytest.raises(GapTooLarge):
            build_phase_table(snaps, default_mapping)
        build_phase_table(snaps, default_mapping, max_gap=3.0)  # configurable

    def test_fractional_durations_kept(self, default_mapping):
        # durations off the integer grid by more than 0.25 s stay fractional
        table = PhaseTable.from_phases([Phase(2.5, G, R), Phase(1.5, R, G), Phase(2.5, G, R)])
        rebuilt = build_phase_table(
            synthesize_stream(table, 0.5, default_mapping), default_mapping
        )
        assert rebuilt == table

    def test_jitter_snaps_to_integer(self, default_mapping):
        groups_a = {1: "protected-Movement-Allowed", 3: "stop-And-Remain"}
        groups_b = {1: "protected-clearance", 3: "stop-And-Remain"}
        snaps = [
            make_snapshot(0.0, groups_a),
            make_snapshot(0.9, groups_a),
            make_snapshot(1.9, groups_b),   # change measured at 1.9 -> snaps to 2
            make_snapshot(2.9, groups_b),
        ]
        mapping = ApproachMapping(frozenset({1}), frozenset({3}))
        table = build_phase_table(snaps, mapping)
        assert [p.duration for p in table.phases] == [2.0, 2.0]


class TestSynthesize:
    def test_first_cycle_sample_count(self, default_mapping):
        cycle1 = PhaseTable.from_phases(
            [Phase(d, ns, ew) for d, ns, ew in REFERENCE_SCHEDULE[:4]]
        )
        assert len(synthesize_stream(cycle1, 1.0, default_mapping)) == 54

    def test_single_phase_one_sample(self, default_mapping):
        table = PhaseTable.from_phases([Phase(2.0, G, R)])
        stream = synthesize_stream(table, 2.0, default_mapping)
        assert len(stream) == 1
        assert approach_color(stream[0], default_mapping, Approach.NORTH_SOUTH) is G

    def test_too_coarse(self, default_mapping, reference_table):
        with pytest.raises(SamplePeriodTooCoarse):
            synthesize_stream(reference_table, 3.5, default_mapping)
        with pytest.raises(SamplePeriodTooCoarse):
            synthesize_stream(reference_table, 0.0, default_mapping)

    def test_remaining_counts_down_to_next_change(self, reference_table, default_mapping):
        stream = synthesize_stream(reference_table, 1.0, default_mapping)
        # NS green until t=28, EW red until t=31
        assert stream[0].groups[1].remaining == pytest.approx(28.0)
        assert stream[0].groups[3].remaining == pytest.approx(31.0)
        assert stream[5].groups[1].remaining == pytest.approx(23.0)
        # in the last phase, NS stays red through the table end
        assert stream[-1].groups[1].remaining == pytest.approx(1.0)

    def test_remaining_nonnegative(self, default_mapping):
        rng = random.Random(3)
        for _ in range(20):
            table = random_phase_table(rng)
            for snap in synthesize_stream(table, 0.5, default_mapping):
                for sig in snap.groups.values():
                    assert sig.remaining >= 0.0


class TestRoundTrip:
    def test_seeded_battery(self, default_mapping):
        rng = random.Random(0xF00D)
        for _ in range(200):
            table = random_phase_table(rng)
            stream = synthesize_stream(table, 0.5, default_mapping)
            assert build_phase_table(stream, default_mapping) == table

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([0.25, 0.5]))
    def test_round_trip_property(self, seed, period):
        mapping = ApproachMapping.default()
        table = random_phase_table(random.Random(seed))
        stream = synthesize_stream(table, period, mapping)
        assert build_phase_table(stream, mapping) == table

    def test_duration_sum_stable_under_sampling(self, default_mapping):
        table = PhaseTable.from_phases([Phase(5.3, G, R), Phase(4.1, R, G)])
        for period in (0.1, 0.2, 0.5):
            rebuilt = build_phase_table(
                synthesize_stream(table, period, default_mapping), default_mapping
            )
            assert abs(rebuilt.total_duration - table.total_duration) <= period + 1e-9

    def test_one_green_rule_preserved(self, default_mapping):
        rng = random.Random(11)
        for _ in range(50):
            table = random_phase_table(rng)
            rebuilt = build_phase_table(
                synthesize_stream(table, 0.5, default_mapping), default_mapping
            )
            for phase in rebuilt.phases:
                assert not (phase.ns_color is G and phase.ew_color is G)


class TestSerialization:
    def test_csv_round_trip(self, reference_table):
        text = table_to_csv(reference_table)
        assert text.splitlines()[0] == "phase,duration_s,north_south,east_west"
        assert text.splitlines()[1] == "1,28,Green,Red"
        assert table_from_csv(text) == reference_table

    def test_json_round_trip(self, reference_table):
        assert table_from_json(table_to_json(reference_table)) == reference_table

    def test_csv_cycle_positions(self, reference_table):
        rows = table_to_csv(reference_table).splitlines()[1:]
        assert [r.split(",")[0] for r in rows] == ["1", "2", "3", "4"] * 3

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError):
            table_from_csv("nope\n1,2,Green,Red\n")
