"""Generator, difference transform, container IO, and the split protocol."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowop.dataset import desk_ladder, make_split, paper_ladder
from flowop.errors import ConfigError, ContainerError, DataError
from flowop.fields import (
    CaseMeta,
    GridSpec,
    StructuredSeries,
    UnstructuredSeries,
    recover_full,
    series_equal,
    to_difference,
)
from flowop.nosg import load_series, save_series
from flowop.synth import (
    Disc,
    Geometry,
    MeshSpec,
    WakeModel,
    desk_geometry,
    field_values,
    mesh_nodes,
    shedding_frequency,
    synth_structured,
    synth_unstructured,
)


def meta(u=0.4, kind="velocity", nt=50, dt=0.1):
    return CaseMeta(u, kind, nt, dt)


GEOM = desk_geometry()
MODEL = WakeModel()
NODES = mesh_nodes(GEOM, MeshSpec(n_nodes=600, seed=3))
GRID = GridSpec(64, 24, *GEOM.extents)


class TestGenerator:
    def test_static_when_amplitudes_zero(self):
        still = WakeModel(osc_amplitude=0.0, pressure_ripple=0.0)
        for kind in ("velocity", "pressure"):
            s = synth_unstructured(meta(kind=kind), GEOM, still, NODES)
            assert all(np.array_equal(s.values[i], s.values[1]) for i in range(1, 50))

    def test_doubling_velocity_scales_linearly_and_quadratically(self):
        still = WakeModel(osc_amplitude=0.0, pressure_ripple=0.0)
        v1 = synth_unstructured(meta(0.2), GEOM, still, NODES)
        v2 = synth_unstructured(meta(0.4), GEOM, still, NODES)
        assert np.array_equal(v2.values, 2.0 * v1.values)
        p1 = synth_unstructured(meta(0.2, "pressure"), GEOM, still, NODES)
        p2 = synth_unstructured(meta(0.4, "pressure"), GEOM, still, NODES)
        drop1 = p1.values[:, p1.node_xy[:, 0] == GEOM.x_min].mean() - p1.values[
            :, p1.node_xy[:, 0] == GEOM.x_max
        ].mean()
        drop2 = p2.values[:, p2.node_xy[:, 0] == GEOM.x_min].mean() - p2.values[
            :, p2.node_xy[:, 0] == GEOM.x_max
        ].mean()
        assert drop2 == pytest.approx(4.0 * drop1, rel=1e-12)

    def test_probe_fft_peaks_at_shedding_frequency(self):
        m = meta(0.4, nt=200)
        f = shedding_frequency(m, MODEL)
        vals = field_values(m, GEOM, MODEL, np.array([0.05]), np.array([0.01]))
        sig = vals[:, 0] - vals[:, 0].mean()
        spec = np.abs(np.fft.rfft(sig))
        freqs = np.fft.rfftfreq(m.n_timesteps, m.snapshot_interval)
        assert freqs[np.argmax(spec)] == pytest.approx(f, abs=freqs[1] / 2)

    def test_nyquist_guard(self):
        with pytest.raises(ConfigError):
            shedding_frequency(meta(u=1.2), MODEL)  # 6 Hz > 5 Hz Nyquist

    def test_determinism(self):
        a = mesh_nodes(GEOM, MeshSpec(n_nodes=500, seed=9))
        b = mesh_nodes(GEOM, MeshSpec(n_nodes=500, seed=9))
        assert np.array_equal(a, b)
        s1 = synth_unstructured(meta(), GEOM, MODEL, a)
        s2 = synth_unstructured(meta(), GEOM, MODEL, b)
        assert series_equal(s1, s2)

    def test_nodes_exclude_obstacles_and_no_duplicates(self):
        assert not GEOM.inside_obstacle(NODES[:, 0], NODES[:, 1]).any()
        assert np.unique(NODES, axis=0).shape[0] == NODES.shape[0]

    def test_structured_masks_obstacle_cells(self):
        s = synth_structured(meta(), GEOM, MODEL, GRID)
        assert s.solid_mask.any()
        assert np.all(s.values[:, s.solid_mask] == 0.0)

    def test_pressure_drop_scales_as_u_squared_without_ripple(self):
        still = WakeModel(pressure_ripple=0.0)
        for u in (0.2, 0.5):
            s = synth_structured(meta(u, "pressure"), GEOM, still, GRID)
            drop = s.values[:, :, 0].mean() - s.values[:, :, -1].mean()
            expected = still.pressure_coeff * u**2  # closed form over the full span
            assert abs(drop - expected) / expected < 1e-10

    def test_obstacle_outside_domain_rejected(self):
        with pytest.raises(ConfigError):
            Geometry(0, 1, 0, 1, (Disc(0.0, 0.5, 0.1),))


class TestDifference:
    def test_constant_series_zero_diff(self):
        vals = np.ones((5, 4))
        s = UnstructuredSeries(meta(nt=5), NODES[:4], vals)
        d = to_difference(s)
        assert np.all(d.values == 0.0)
        assert d.values.shape[0] == 4

    def test_hand_case(self):
        xy = np.array([[0.0, 0.0], [1.0, 0.0]])
        s = UnstructuredSeries(meta(nt=2), xy, np.array([[1.0, 2.0], [3.0, 5.0]]))
        d = to_difference(s)
        assert d.values.tolist() == [[2.0, 3.0]]
        assert d.baseline.tolist() == [1.0, 2.0]

    @pytest.mark.parametrize("kind", ["velocity", "pressure"])
    def test_round_trip_bitwise_on_generator_series(self, kind):
        s = synth_unstructured(meta(kind=kind), GEOM, MODEL, NODES)
        assert series_equal(recover_full(to_difference(s)), s)
        st2 = synth_structured(meta(kind=kind), GEOM, MODEL, GRID)
        assert series_equal(recover_full(to_difference(st2)), st2)

    def test_zero_diff_recovers_baseline_everywhere(self):
        u0 = np.arange(4.0)
        d = UnstructuredSeries(
            meta(nt=3), NODES[:4], np.zeros((2, 4)), is_difference=True, baseline=u0
        )
        full = recover_full(d)
        assert np.array_equal(full.values, np.tile(u0, (3, 1)))

    def test_negated_baseline_gives_zero_field(self):
        u0 = np.array([1.0, -2.0, 3.0, 4.0])
        d = UnstructuredSeries(
            meta(nt=2), NODES[:4], -u0[None], is_difference=True, baseline=u0
        )
        assert np.all(recover_full(d).values[1] == 0.0)

    def test_random_pair_matches_elementwise_sum(self):
        rng = np.random.default_rng(4)
        diffs = rng.normal(size=(3, 4))
        u0 = rng.normal(size=4)
        d = UnstructuredSeries(
            meta(nt=4), NODES[:4], diffs, is_difference=True, baseline=u0
        )
        full = recover_full(d, u0)
        assert np.array_equal(full.values[1:], diffs + u0)

    def test_double_difference_rejected(self):
        s = synth_unstructured(meta(), GEOM, MODEL, NODES)
        with pytest.raises(DataError):
            to_difference(to_difference(s))


class TestContainer:
    def test_round_trip_unstructured(self, tmp_path):
        s = to_difference(synth_unstructured(meta(), GEOM, MODEL, NODES))
        p = tmp_path / "case.nosg"
        save_series(p, s)
        assert series_equal(load_series(p), s)

    def test_round_trip_structured(self, tmp_path):
        s = synth_structured(meta(0.3, "pressure"), GEOM, MODEL, GRID)
        p = tmp_path / "case.nosg"
        save_series(p, s)
        assert series_equal(load_series(p), s)

    def test_corrupted_magic(self, tmp_path):
        p = tmp_path / "bad.nosg"
        save_series(p, synth_structured(meta(), GEOM, MODEL, GRID))
        blob = bytearray(p.read_bytes())
        blob[:4] = b"XXXX"
        p.write_bytes(bytes(blob))
        with pytest.raises(ContainerError, match="magic"):
            load_series(p)

    def test_truncated_value_block_names_lengths(self, tmp_path):
        p = tmp_path / "trunc.nosg"
        save_series(p, synth_structured(meta(), GEOM, MODEL, GRID))
        blob = p.read_bytes()
        p.write_bytes(blob[: len(blob) - 100])
        with pytest.raises(ContainerError, match="expected .* bytes"):
            load_series(p)

    def test_trailing_garbage_rejected(self, tmp_path):
        p = tmp_path / "extra.nosg"
        save_series(p, synth_structured(meta(), GEOM, MODEL, GRID))
        p.write_bytes(p.read_bytes() + b"\x00" * 8)
        with pytest.raises(ContainerError, match="trailing"):
            load_series(p)


class TestSplit:
    def test_paper_ladder_counts(self):
        split = make_split(
            paper_ladder(), field_kind="velocity", n_timesteps=100, snapshot_interval=0.1
        )
        assert (len(split.train), len(split.val), len(split.test)) == (45, 5, 2)

    def test_test_cases_are_interpolation_and_extrapolation(self):
        split = make_split(
            paper_ladder(), field_kind="velocity", n_timesteps=100, snapshot_interval=0.1
        )
        assert {m.inlet_velocity for m in split.test} == {0.4, 0.7}

    def test_desk_ladder_counts(self):
        split = make_split(
            desk_ladder(),
            field_kind="velocity",
            n_timesteps=50,
            snapshot_interval=0.1,
            val_velocities=(0.1, 0.3, 0.6),
        )
        assert (len(split.train), len(split.val), len(split.test)) == (12, 3, 2)

    @given(
        st.lists(
            st.sampled_from([round(0.1 + 0.05 * i, 2) for i in range(9)]),
            min_size=4,
            max_size=9,
            unique=True,
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_disjointness_holds_for_valid_ladders(self, extra):
        ladder = sorted(set(extra) | {0.1, 0.4, 0.6, 0.7})
        try:
            split = make_split(
                ladder,
                field_kind="velocity",
                n_timesteps=10,
                snapshot_interval=0.1,
                val_velocities=(0.1,),
            )
        except ConfigError:
            return
        vels = [m.inlet_velocity for m in split.all_cases]
        assert len(vels) == len(set(vels)) == len(ladder)

    def test_missing_designated_velocity_rejected(self):
        with pytest.raises(ConfigError):
            make_split(
                [0.1, 0.2, 0.4],
                field_kind="velocity",
                n_timesteps=10,
                snapshot_interval=0.1,
                val_velocities=(0.1,),
            )

    def test_overlapping_val_test_rejected(self):
        with pytest.raises(ConfigError):
            make_split(
                [0.1, 0.2, 0.4, 0.7],
                field_kind="velocity",
                n_timesteps=10,
                snapshot_interval=0.1,
                val_velocities=(0.4,),
            )
