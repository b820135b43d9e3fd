import numpy as np
import pytest

from extlab.geometry import build_sphere_grid, cap_union_set
from extlab.systems import (
    DensityOperator,
    SurfaceFunction,
    check_almost_orthonormal,
    gram_matrix,
    make_dft_system,
    make_harmonics,
    make_wavepackets,
    orthonormalize,
    random_bump_system,
)
from extlab.transforms import extension


@pytest.fixture(scope="module")
def s2():
    return build_sphere_grid(3, (16, 32))


CAPS = [
    (np.array([0.0, 0.0, 1.0]), 0.45),
    (np.array([1.0, 0.0, 0.0]), 0.45),
    (np.array([0.0, -1.0, 0.3]), 0.45),
]


class TestWavepackets:
    def test_disjoint_caps_identity_gram(self, s2):
        mods = [np.zeros(3), np.array([1.0, 0.0, 0.0]), np.array([0.0, 2.0, 1.0])]
        sys = make_wavepackets(s2, CAPS, mods)
        assert np.max(np.abs(sys.gram - np.eye(3))) < 1e-14

    def test_unit_norms(self, s2):
        sys = make_wavepackets(s2, CAPS, [np.zeros(3)] * 3)
        for f in sys.functions:
            assert abs(f.norm() - 1.0) < 1e-12

    def test_overlapping_caps_rejected(self, s2):
        caps = [(np.array([0.0, 0.0, 1.0]), 0.8), (np.array([0.3, 0.0, 1.0]), 0.8)]
        with pytest.raises(ValueError):
            make_wavepackets(s2, caps, [np.zeros(3)] * 2)

    def test_delta_cap_intensity_at_origin(self, s2):
        # |E g_j(0)|^2 = sigma(C_j): the p<1 failure mechanism for small caps
        sys = make_wavepackets(s2, CAPS, [np.zeros(3)] * 3)
        for f in sys.functions:
            meas = float(np.sum(s2.qweights[f.support.mask]))
            val = extension(s2, f.values, np.zeros((1, 3)))[0]
            assert abs(np.abs(val) ** 2 - meas) < 1e-10


class TestHarmonics:
    def test_degrees_zero_one(self, s2):
        sys = make_harmonics(s2, [0, 1])
        assert len(sys) == 4
        assert np.max(np.abs(sys.gram - np.eye(4))) < 1e-10

    def test_tilde_parity(self, s2):
        sys = make_harmonics(s2, [0, 1, 2])
        offset = 0
        for ell in (0, 1, 2):
            for _ in range(2 * ell + 1):
                f = sys.functions[offset]
                ft = f.tilde()
                assert np.max(np.abs(ft.values - (-1.0) ** ell * f.values)) < 1e-12
                offset += 1

    def test_addition_theorem(self, s2):
        # sum over a full degree shell of |Y|^2 is constant: (2l+1)/(4 pi)
        sys = make_harmonics(s2, [2])
        total = sum(np.abs(f.values) ** 2 for f in sys.functions)
        assert np.max(np.abs(total - 5.0 / (4 * np.pi))) < 1e-10

    def test_insufficient_degree_rejected(self):
        coarse = build_sphere_grid(3, (4, 8))
        with pytest.raises(ValueError):
            make_harmonics(coarse, [0, 1, 2, 3, 4])


class TestOrthonormalize:
    def test_already_orthonormal_unchanged(self, s2):
        sys = make_harmonics(s2, [0, 1])
        out, dropped = orthonormalize(sys.functions)
        assert dropped == []
        for f, g in zip(sys.functions, out.functions):
            # unchanged up to sign/phase
            assert abs(abs(f.inner(g)) - 1.0) < 1e-10

    def test_duplicate_dropped(self, s2):
        sys = make_harmonics(s2, [1])
        fns = [sys.functions[0], sys.functions[0], sys.functions[1]]
        out, dropped = orthonormalize(fns)
        assert dropped == [1]
        assert len(out) == 2

    def test_random_bumps_gram(self, s2):
        rng = np.random.default_rng(0)
        sys = random_bump_system(s2, rng, 10)
        assert np.max(np.abs(gram_matrix(sys.functions) - np.eye(10))) < 1e-10

    def test_cap_supported_bumps(self, s2):
        K = cap_union_set(s2, np.stack([c for c, _ in CAPS[:2]]), 0.5)
        rng = np.random.default_rng(1)
        sys = random_bump_system(s2, rng, 4, support=K)
        assert np.max(np.abs(sys.gram - np.eye(4))) < 1e-8
        union = sys.support_union()
        assert np.all(K.mask[union.mask])

    def test_callable_matches_nodes(self, s2):
        rng = np.random.default_rng(2)
        sys = random_bump_system(s2, rng, 3)
        f = sys.functions[1]
        assert np.max(np.abs(f.at(s2.nodes) - f.values)) < 1e-10


class TestTorus:
    def test_full_lattice_completeness(self):
        ts = make_dft_system(32, np.arange(32))
        hat = ts.hat()
        total = np.sum(np.abs(hat) ** 2, axis=0)
        assert np.max(np.abs(total - 1.0)) < 1e-12  # |K|/N = 1

    def test_single_character(self):
        ts = make_dft_system(16, np.array([5]))
        assert ts.size == 1
        hat = ts.hat()
        assert np.max(np.abs(np.abs(hat) ** 2 - 1.0 / 16.0)) < 1e-14

    def test_half_lattice_bessel(self):
        rng = np.random.default_rng(3)
        kidx = rng.choice(64, size=32, replace=False)
        ts = make_dft_system(64, kidx)
        gram = ts.matrix @ ts.matrix.conj().T
        assert np.max(np.abs(gram - np.eye(32))) < 1e-12
        hat = ts.hat()
        total = np.sum(np.abs(hat) ** 2, axis=0)
        assert np.max(np.abs(total - 0.5)) < 1e-12
        # Parseval per member over the ambient torus
        norms = np.sum(np.abs(hat) ** 2, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-12


class TestAlmostOrthonormal:
    def test_orthonormal_gives_one(self, s2):
        sys = make_harmonics(s2, [0, 1])
        assert abs(check_almost_orthonormal(sys.functions) - 1.0) < 1e-9

    def test_duplicate_gives_two(self, s2):
        sys = make_harmonics(s2, [1])
        fns = [sys.functions[0], sys.functions[0], sys.functions[2]]
        assert abs(check_almost_orthonormal(fns) - 2.0) < 1e-9

    def test_perturbed_pair(self, s2):
        sys = make_harmonics(s2, [1])
        eps = 1e-3
        a, b = sys.functions[0], sys.functions[1]
        mixed = SurfaceFunction(a.grid, (a.values + eps * b.values) / np.sqrt(1 + eps**2),
                                a.support.union(b.support))
        bound = check_almost_orthonormal([mixed, b])
        assert abs(bound - 1.0) < 3 * eps**2 + 1e-9


class TestDensityOperator:
    def test_length_check(self, s2):
        sys = make_harmonics(s2, [0, 1])
        with pytest.raises(ValueError):
            DensityOperator(sys, np.ones(3))
        d = DensityOperator(sys, np.array([1.0, 0.5, -0.5, 0.1]))
        assert abs(d.l2() - np.linalg.norm([1.0, 0.5, -0.5, 0.1])) < 1e-14
