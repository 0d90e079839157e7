import json

import numpy as np
import pytest

from stableplace.clustering import TypeModel, assign_type, mean_shift_orientations
from stableplace.placements import enumerate_stable, generate_dataset
from stableplace.rotations import (
    random_rotation,
    rot_x,
    rot_z,
    rotation_from_axis_angle,
    z_quotient_distance,
    z_quotient_distances,
)


def noisy_cluster(rng, center, n, noise_deg):
    """Draw n rotations near `center`, each with a random z phase."""
    out = []
    for _ in range(n):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        wobble = rotation_from_axis_angle(axis, np.deg2rad(noise_deg) * rng.uniform())
        out.append(rot_z(rng.uniform(0, 2 * np.pi)) @ wobble @ center)
    return out


class TestMeanShift:
    def test_single_repeated_rotation_one_mode(self):
        rng = np.random.default_rng(31)
        r = random_rotation(rng)
        model, labels = mean_shift_orientations([r] * 12)
        assert len(model.modes) == 1
        assert labels == [0] * 12
        assert z_quotient_distance(model.modes[0], r) < 1e-6

    def test_three_well_separated_clusters(self):
        rng = np.random.default_rng(32)
        centers = [np.eye(3), rot_x(np.pi / 2), rot_x(np.pi)]
        rots, truth = [], []
        for k, c in enumerate(centers):
            rots += noisy_cluster(rng, c, 25, noise_deg=5.0)
            truth += [k] * 25
        order = rng.permutation(len(rots))
        rots = [rots[i] for i in order]
        truth = [truth[i] for i in order]
        model, labels = mean_shift_orientations(rots)
        assert len(model.modes) == 3
        # labels must be a relabelling of the ground truth partition
        mapping = {}
        for lab, t in zip(labels, truth):
            mapping.setdefault(t, lab)
            assert mapping[t] == lab
        assert len(set(mapping.values())) == 3
        for c in centers:
            d = z_quotient_distances(c, np.stack(model.modes))
            assert d.min() < np.deg2rad(3.0)

    def test_cube_dataset_recovers_six_types(self, cube):
        res = generate_dataset([("cube", cube)], 200, seed=1)
        rots = [r.placement.rotation for r in res.records]
        model, labels = mean_shift_orientations(rots)
        assert len(model.modes) == 6
        assert set(labels) == set(range(6))
        enum = np.stack([p.rotation for p in enumerate_stable(cube)])
        for mode in model.modes:
            assert z_quotient_distances(mode, enum).min() < np.deg2rad(1.0)

    def test_labels_first_occurrence_order(self):
        rng = np.random.default_rng(33)
        a, b = np.eye(3), rot_x(np.pi)
        rots = [a, b, a, b, a]
        _, labels = mean_shift_orientations(rots)
        assert labels == [0, 1, 0, 1, 0]
        del rng

    def test_z_phase_invariance_of_mode_count(self):
        rng = np.random.default_rng(34)
        base = noisy_cluster(rng, np.eye(3), 20, noise_deg=4.0)
        rephased = [rot_z(rng.uniform(0, 2 * np.pi)) @ r for r in base]
        m0, _ = mean_shift_orientations(base)
        m1, _ = mean_shift_orientations(rephased)
        assert len(m0.modes) == len(m1.modes) == 1
        assert z_quotient_distance(m0.modes[0], m1.modes[0]) < np.deg2rad(2.0)

    def test_modes_are_fixed_points(self):
        rng = np.random.default_rng(35)
        rots = noisy_cluster(rng, rot_x(0.4), 30, noise_deg=6.0)
        model, _ = mean_shift_orientations(rots)
        again, _ = mean_shift_orientations(list(model.modes))
        assert len(again.modes) == len(model.modes)
        for m0, m1 in zip(model.modes, again.modes):
            assert z_quotient_distance(m0, m1) < 1e-6

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            mean_shift_orientations([])


class TestAssignType:
    def test_exact_mode_assignment(self):
        model, _ = mean_shift_orientations([np.eye(3), rot_x(np.pi)])
        assert assign_type(np.eye(3), model) == 0
        assert assign_type(rot_x(np.pi), model) == 1

    def test_z_rotation_invariant(self):
        rng = np.random.default_rng(36)
        model, _ = mean_shift_orientations([np.eye(3), rot_x(np.pi / 2), rot_x(np.pi)])
        for _ in range(50):
            k = int(rng.integers(0, 3))
            r = rot_z(rng.uniform(0, 2 * np.pi)) @ model.modes[k]
            assert assign_type(r, model) == k

    def test_outside_threshold_is_none(self):
        model, _ = mean_shift_orientations([np.eye(3)])
        far = rot_x(np.deg2rad(40.0))
        assert assign_type(far, model) is None
        near = rot_x(np.deg2rad(5.0))
        assert assign_type(near, model) == 0

    def test_threshold_boundary(self):
        model = TypeModel(
            modes=[np.eye(3)],
            bandwidth=np.deg2rad(15.0),
            assign_threshold=np.deg2rad(15.0),
        )
        assert assign_type(rot_x(np.deg2rad(14.9)), model) == 0
        assert assign_type(rot_x(np.deg2rad(15.1)), model) is None


class TestTypeModelSerialization:
    def test_json_round_trip(self):
        rng = np.random.default_rng(37)
        rots = noisy_cluster(rng, np.eye(3), 10, 3.0) + noisy_cluster(
            rng, rot_x(np.pi), 10, 3.0
        )
        model, _ = mean_shift_orientations(rots)
        d = model.to_json_dict()
        back = TypeModel.from_json_dict(json.loads(json.dumps(d)))
        assert back.to_json_dict() == d
        assert len(back.modes) == len(model.modes)
        for m0, m1 in zip(model.modes, back.modes):
            assert np.array_equal(m0, m1)
