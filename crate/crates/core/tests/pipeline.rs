//! Cross-module checks through the public API only.

use confsurf::compressed_fluid::make_exact;
use confsurf::dyachenko::{conserved_line, field_distance, simulate, Background, SimConfig, State};
use confsurf::invariants::{track_zeros, zero_pole_factor};
use confsurf::{ComplexField, Cplx, Grid, RationalFn};

#[test]
fn solver_follows_the_compressed_family() {
    let grid = Grid::new(512, 40.0 * std::f64::consts::PI).unwrap();
    let alpha = RationalFn::pole(Cplx::new(0.2, 3.0), 1, Cplx::new(0.5, 0.1)).unwrap();
    let exact = make_exact(&alpha).unwrap();
    let config = SimConfig {
        dt: 1e-3,
        t_end: 1.5,
        stride: 100,
        ..SimConfig::default()
    };
    let traj = simulate(exact.state(&grid, 1.0).unwrap(), &config).unwrap();
    for s in &traj.snapshots {
        let reference = exact.state(&grid, s.t).unwrap();
        assert!(field_distance(s, &reference) < 1e-9, "t = {}", s.t);
    }
}

#[test]
fn zero_of_r_obeys_its_laws_under_gravity() {
    // 1/R has a pole at the zero's height, 0.6; the box integrals need the
    // spectrum resolved to about e^{-0.6 kmax} ~ 1e-17, hence n = 2048
    let grid = Grid::new(2048, 32.0 * std::f64::consts::PI).unwrap();
    let zero = Cplx::new(0.3, 0.6);
    let r = zero_pole_factor(&grid, zero, Cplx::new(0.0, 5.0)).unwrap();
    let v = RationalFn::pole(Cplx::new(-0.5, 4.5), 1, Cplx::new(0.3, -0.2)).unwrap();
    let s0 = State::new(
        r.add_const(Cplx::new(-1.0, 0.0)),
        ComplexField::from_rational(&grid, &v),
        0.0,
        Background::Quiescent,
    )
    .unwrap();
    let g = 1.0;
    let config = SimConfig {
        g,
        dt: 0.005,
        t_end: 0.2,
        stride: 4,
        ..SimConfig::default()
    };
    let traj = simulate(s0, &config).unwrap();
    let tracks = track_zeros(&traj.snapshots, &[zero], 1).unwrap();
    let law = tracks[0].report(g);
    assert!(law.a_drift < 1e-6, "{law:?}");
    assert!(law.b_slope_err_g < 1e-5, "{law:?}");
    assert!(law.mismatch_minus_iu < 1e-5, "{law:?}");

    // the box integrals: I is constant and J falls at rate g I
    let (i0, j0) = conserved_line(&traj.snapshots[0]).unwrap();
    let last = traj.last();
    let (i1, j1) = conserved_line(last).unwrap();
    assert!((i1 - i0).norm() < 1e-9 * (1.0 + i0.norm()));
    assert!((j1 - (j0 - g * i0 * last.t)).norm() < 1e-8);
}
