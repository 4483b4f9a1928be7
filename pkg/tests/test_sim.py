"""Monte Carlo simulator: geometry validation, exact 1d laws, bridge
absorption, determinism, convergence sweeps and theory comparisons.

Statistical assertions run at frozen seeds, so they are deterministic; the
tolerances note the measured values they were calibrated against.
"""

import contextlib
import warnings

import numpy as np
import pytest

from escapetime.collins import CollinsConfig, solve_b0
from escapetime.errors import DomainError
from escapetime.sim import (
    BallWithCap,
    BoxWithEllipticWindow,
    CylinderAxial,
    SimConfig,
    append_csv,
    compare_with_theory,
    convergence_sweep,
    default_dt,
    result_record,
    simulate,
)


@contextlib.contextmanager
def warnings_ignored():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


CYL = CylinderAxial(L=1.0, radius=0.5)


class TestGeometryTypes:
    @pytest.mark.parametrize(
        "make",
        [
            lambda: BallWithCap(R=0.0, eps=0.2),
            lambda: BallWithCap(R=1.0, eps=-0.1),
            lambda: BallWithCap(R=1.0, eps=np.pi),
            lambda: CylinderAxial(L=0.0, radius=0.5),
            lambda: CylinderAxial(L=1.0, radius=-1.0),
            lambda: BoxWithEllipticWindow(Lx=1, Ly=1, Lz=0, a=0.1, b=0.1),
            lambda: BoxWithEllipticWindow(Lx=1, Ly=1, Lz=1, a=0.1, b=0.2),
            lambda: BoxWithEllipticWindow(Lx=1, Ly=1, Lz=1, a=0.6, b=0.1),
        ],
    )
    def test_rejects_bad_geometry(self, make):
        with pytest.raises(DomainError):
            make()

    def test_sealed_ball_warns(self):
        with pytest.warns(UserWarning, match="no absorbing window"):
            BallWithCap(R=1.0, eps=0.0)

    def test_feature_sizes_and_volumes(self):
        g = BallWithCap(R=2.0, eps=0.5)
        assert g.feature_size() == pytest.approx(2.0 * np.sin(0.5))
        assert g.volume() == pytest.approx(32 * np.pi / 3)
        assert CYL.feature_size() == 0.5
        assert CYL.volume() == pytest.approx(np.pi * 0.25)
        b = BoxWithEllipticWindow(Lx=2, Ly=3, Lz=4, a=0.3, b=0.2)
        assert b.feature_size() == 0.2
        assert b.volume() == 24.0


class TestConfig:
    def test_default_dt_is_window_resolving(self):
        g = BallWithCap(R=1.0, eps=0.2)
        cfg = SimConfig(geometry=g)
        assert cfg.dt == pytest.approx((np.sin(0.2) / 10) ** 2 / 2.0)
        assert cfg.dt == default_dt(g, 1.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_paths": 0},
            {"dt": 0.0},
            {"dt": -1e-4},
            {"D": 0.0},
            {"max_steps": 0},
            {"seed": -1},
            {"initial": (0.0, 0.0)},
            {"initial": (0.0, 0.0, 2.0)},  # outside the cylinder
        ],
    )
    def test_rejects_bad_config(self, kwargs):
        with pytest.raises(DomainError):
            SimConfig(geometry=CYL, **kwargs)

    @pytest.mark.parametrize(
        "geom, point",
        [
            (BallWithCap(R=1.0, eps=0.2), (0.8, 0.8, 0.0)),
            (CylinderAxial(L=1.0, radius=0.5), (0.6, 0.0, 0.5)),
            (BoxWithEllipticWindow(Lx=1, Ly=1, Lz=1, a=0.1, b=0.1), (0.0, 0.0, -0.1)),
        ],
    )
    def test_rejects_start_outside_domain(self, geom, point):
        with pytest.raises(DomainError, match="not inside"):
            SimConfig(geometry=geom, initial=point)

    def test_coarse_dt_warns(self):
        with pytest.warns(UserWarning, match="rms step"):
            SimConfig(geometry=CYL, dt=0.01)


class TestDeterminism:
    def test_bit_identical_rerun(self):
        cfg = SimConfig(geometry=CYL, n_paths=3000, seed=21)
        r1 = simulate(cfg)
        r2 = simulate(SimConfig(geometry=CYL, n_paths=3000, seed=21))
        assert r1.mean == r2.mean
        assert r1.stderr == r2.stderr
        assert r1.n_absorbed == r2.n_absorbed

    def test_seed_changes_result(self):
        r1 = simulate(SimConfig(geometry=CYL, n_paths=2000, seed=1))
        r2 = simulate(SimConfig(geometry=CYL, n_paths=2000, seed=2))
        assert r1.mean != r2.mean


class TestCylinderExactLaws:
    # the z marginal is a reflected 1d Brownian motion absorbed at 0, so
    # v(z) = (L z - z^2/2)/D exactly; the bridge-crossing correction keeps
    # the discretization bias well under the statistical noise
    def test_uniform_start(self):
        r = simulate(SimConfig(geometry=CYL, n_paths=20000, seed=7))
        assert r.n_censored == 0
        assert abs(r.mean - 1.0 / 3.0) < 3.0 * r.stderr

    def test_fixed_start_at_far_cap(self):
        r = simulate(
            SimConfig(geometry=CYL, n_paths=20000, seed=7, initial=(0, 0, 1.0))
        )
        assert abs(r.mean - 0.5) < 3.0 * r.stderr

    def test_profile_at_half_height(self):
        r = simulate(
            SimConfig(geometry=CYL, n_paths=8000, seed=5, initial=(0.1, 0.0, 0.5))
        )
        assert abs(r.mean - 0.375) < 3.0 * r.stderr

    def test_mean_independent_of_bore_radius(self):
        # absorption depends only on z; lateral reflections must not leak
        # into the answer beyond noise
        wide = simulate(
            SimConfig(
                geometry=CylinderAxial(L=1.0, radius=5.0), n_paths=8000, seed=12
            )
        )
        assert abs(wide.mean - 1.0 / 3.0) < 3.0 * wide.stderr

    def test_inverse_D_scaling_exact(self):
        # the default dt scales as 1/D, so sigma = sqrt(2 D dt) is unchanged:
        # both runs consume identical variates and times scale exactly
        r1 = simulate(SimConfig(geometry=CYL, n_paths=4000, seed=6, D=1.0))
        r2 = simulate(SimConfig(geometry=CYL, n_paths=4000, seed=6, D=2.0))
        assert r1.mean / r2.mean == pytest.approx(2.0, rel=1e-14)


class TestBall:
    def test_sealed_ball_conserves_paths(self):
        with warnings_ignored():
            g = BallWithCap(R=1.0, eps=0.0)
            r = simulate(
                SimConfig(geometry=g, n_paths=256, seed=1, max_steps=2000, dt=5e-5)
            )
        assert r.n_absorbed == 0
        assert r.n_censored == 256
        assert r.unreliable
        assert np.isnan(r.mean)

    def test_mean_against_fredholm_solver(self):
        # truth for uniform start is b0 + R^2/15; crossing-step detection
        # biases the MC high (+17% measured at the default dt, eps = 0.8)
        truth = solve_b0(CollinsConfig(R=1.0, eps=0.8)).b0 + 1.0 / 15.0
        r = simulate(
            SimConfig(geometry=BallWithCap(R=1.0, eps=0.8), n_paths=5000, seed=3)
        )
        assert r.n_censored == 0
        assert r.mean == pytest.approx(truth, rel=0.25)
        assert r.mean > truth + 3.0 * r.stderr

    def test_start_point_monotonicity(self):
        g = BallWithCap(R=1.0, eps=0.5)
        far = simulate(
            SimConfig(geometry=g, n_paths=2000, seed=4, initial=(0, 0, -0.9))
        )
        near = simulate(
            SimConfig(geometry=g, n_paths=2000, seed=4, initial=(0, 0, 0.9))
        )
        assert far.mean > near.mean + 3.0 * np.hypot(far.stderr, near.stderr)

    def test_absorption_times_are_fractional(self):
        # the crossing fraction refines the absorption time inside the step,
        # so times should not cluster on exact multiples of dt
        g = BallWithCap(R=1.0, eps=0.8)
        cfg = SimConfig(geometry=g, n_paths=500, seed=13)
        r = simulate(cfg)
        assert r.n_absorbed == 500
        assert (r.mean / cfg.dt) % 1.0 != pytest.approx(0.0, abs=1e-9)


class TestBox:
    def test_all_paths_terminate(self):
        g = BoxWithEllipticWindow(Lx=1, Ly=1, Lz=1, a=0.3, b=0.3)
        r = simulate(SimConfig(geometry=g, n_paths=2000, seed=14))
        assert r.n_absorbed == 2000
        assert r.n_censored == 0
        assert r.mean > 0
        assert not r.unreliable

    def test_wider_window_escapes_faster(self):
        wide = simulate(
            SimConfig(
                geometry=BoxWithEllipticWindow(Lx=1, Ly=1, Lz=1, a=0.4, b=0.4),
                n_paths=2000,
                seed=15,
            )
        )
        narrow = simulate(
            SimConfig(
                geometry=BoxWithEllipticWindow(Lx=1, Ly=1, Lz=1, a=0.2, b=0.2),
                n_paths=2000,
                seed=15,
            )
        )
        assert wide.mean < narrow.mean

    def test_censoring_flags_unreliable(self):
        g = BoxWithEllipticWindow(Lx=1, Ly=1, Lz=1, a=0.1, b=0.1)
        with pytest.warns(UserWarning, match="censored"):
            r = simulate(SimConfig(geometry=g, n_paths=500, seed=16, max_steps=200))
        assert r.unreliable
        assert r.n_censored > 5
        assert r.n_absorbed + r.n_censored == 500


class TestConvergenceSweep:
    def test_cylinder_extrapolates_to_exact(self):
        cfg = SimConfig(geometry=CYL, n_paths=6000, seed=8)
        rep = convergence_sweep(cfg, [1.2e-3, 6e-4, 3e-4])
        assert rep.dts[0] > rep.dts[-1]
        assert abs(rep.extrapolated - 1.0 / 3.0) <= rep.extrapolated_stderr

    def test_ball_bias_shrinks_monotonically(self):
        g = BallWithCap(R=1.0, eps=0.8)
        dt0 = default_dt(g, 1.0)
        truth = solve_b0(CollinsConfig(R=1.0, eps=0.8)).b0 + 1.0 / 15.0
        with warnings_ignored():  # the 4*dt0 level trips the rms-step warning
            rep = convergence_sweep(
                SimConfig(geometry=g, n_paths=3000, seed=9),
                [4 * dt0, 2 * dt0, dt0],
            )
        bias = np.abs(rep.means - truth)
        assert np.all(np.diff(bias) < 0)
        assert rep.slope > 0

    def test_rejects_bad_levels(self):
        cfg = SimConfig(geometry=CYL, n_paths=100, seed=0)
        with pytest.raises(DomainError):
            convergence_sweep(cfg, [1e-3, 5e-4])
        with pytest.raises(DomainError):
            convergence_sweep(cfg, [1e-3, 9e-4, 1e-4])
        with pytest.raises(DomainError):
            convergence_sweep(cfg, [1e-3, 0.0, -1e-4])


class TestCompareWithTheory:
    def test_cylinder_uniform(self):
        cmp = compare_with_theory(SimConfig(geometry=CYL, n_paths=4000, seed=17))
        assert cmp.leading == pytest.approx(1.0 / 3.0)
        assert cmp.two_term is None
        assert cmp.gap_two_term is None
        assert cmp.gap_leading < 3.0 * cmp.result.stderr / cmp.leading

    def test_cylinder_fixed_start(self):
        cmp = compare_with_theory(
            SimConfig(geometry=CYL, n_paths=4000, seed=18, initial=(0, 0, 1.0))
        )
        assert cmp.leading == pytest.approx(0.5)

    def test_ball_two_term_closer_than_leading(self):
        # eps = 0.2, frozen seed: measured gaps 11.4% (two-term) vs 17.0%
        # (leading); the MC discretization bias sits between the two curves
        g = BallWithCap(R=1.0, eps=0.2)
        with warnings_ignored():
            cmp = compare_with_theory(
                SimConfig(geometry=g, n_paths=2500, seed=11)
            )
        assert cmp.two_term > cmp.leading
        assert cmp.gap_two_term < cmp.gap_leading

    def test_box_matches_elliptic_formula(self):
        # e = 0.6 window, area 0.1 on a unit face.  Measured gap 9.4%, stable
        # under dt halving: the residual is the formula's own finite-window
        # error, not discretization
        g = BoxWithEllipticWindow(Lx=1, Ly=1, Lz=1, a=0.2, b=0.16)
        with warnings_ignored():
            cmp = compare_with_theory(SimConfig(geometry=g, n_paths=3000, seed=10))
        assert cmp.gap_leading < 0.10

    def test_equal_area_ellipse_lowers_the_formula(self):
        # at fixed window area the elliptic-window MFPT scale goes DOWN with
        # eccentricity, since K(e)(1-e^2)^(1/4) is decreasing; checked here
        # through the comparison table's theory column (resolving the ~1.6%
        # effect by MC alone would need ~1e5 paths per shape)
        a_c = 0.15
        a_e = a_c / (1.0 - 0.64) ** 0.25
        with warnings_ignored():
            circ = compare_with_theory(
                SimConfig(
                    geometry=BoxWithEllipticWindow(Lx=1, Ly=1, Lz=1, a=a_c, b=a_c),
                    n_paths=8,
                    seed=19,
                )
            )
            ell = compare_with_theory(
                SimConfig(
                    geometry=BoxWithEllipticWindow(
                        Lx=1, Ly=1, Lz=1, a=a_e, b=0.6 * a_e
                    ),
                    n_paths=8,
                    seed=19,
                )
            )
        assert ell.leading < circ.leading
        assert ell.leading / circ.leading == pytest.approx(0.9839, abs=2e-3)

    def test_fixed_start_ball_unsupported(self):
        g = BallWithCap(R=1.0, eps=0.5)
        with pytest.raises(DomainError, match="closed-form"):
            compare_with_theory(
                SimConfig(geometry=g, n_paths=10, seed=0, initial=(0, 0, 0))
            )


class TestRecords:
    def test_record_field_set_is_exact(self):
        cfg = SimConfig(geometry=CYL, n_paths=500, seed=20)
        rec = result_record(cfg, simulate(cfg))
        assert list(rec.keys()) == [
            "geometry",
            "params",
            "mean",
            "stderr",
            "n_absorbed",
            "n_censored",
            "dt",
            "seed",
            "elapsed_s",
        ]
        assert rec["geometry"] == "CylinderAxial"
        assert rec["params"]["L"] == 1.0
        assert rec["params"]["n_paths"] == 500
        assert rec["n_absorbed"] + rec["n_censored"] == 500

    def test_record_is_json_clean(self):
        import json

        cfg = SimConfig(geometry=CYL, n_paths=200, seed=20, initial=(0.1, 0.0, 0.5))
        rec = result_record(cfg, simulate(cfg))
        text = json.dumps(rec)
        back = json.loads(text)
        assert back["params"]["initial"] == [0.1, 0.0, 0.5]

    def test_csv_appends_with_single_header(self, tmp_path):
        cfg = SimConfig(geometry=CYL, n_paths=200, seed=20)
        rec = result_record(cfg, simulate(cfg))
        path = tmp_path / "runs.csv"
        append_csv(path, rec)
        append_csv(path, rec)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("geometry,params,mean")
        assert lines[1] == lines[2]
