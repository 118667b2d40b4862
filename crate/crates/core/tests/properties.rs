mod common;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{disc, perturbed, rel_diff, square};
use sdg_core::cli::{parse_config, Mode, RunConfig};
use sdg_core::forms::{
    apply_b_star_to_field, apply_b_to_field, assemble_b, assemble_b_star, assemble_bh, assemble_bh_star,
    assemble_mass, assemble_picard_nonlinearity, assemble_th, assemble_th_star, NonlinearCoefficients,
};
use sdg_core::solver::{run_transient, run_transient_with, PicardConfig, TimeScheme, TimeSchemeConfig};
use sdg_core::spaces::{interpolate_ih, interpolate_jh};
use sdg_core::verify::{error_l2, l2_norm, Forcing, ManufacturedProblem};
use sdg_core::SpaceSet;

#[test]
fn adjoints_hold_on_perturbed_mesh() {
    for seed in [1, 2, 3] {
        let mesh = perturbed(3, 0.2, seed);
        let s = SpaceSet::new(&mesh, 1).unwrap();
        let pairs = [
            (
                assemble_bh(&mesh, &s.gradient, &s.velocity).unwrap(),
                assemble_bh_star(&mesh, &s.velocity, &s.gradient).unwrap(),
            ),
            (
                assemble_b(&mesh, &s.velocity, &s.pressure).unwrap(),
                assemble_b_star(&mesh, &s.pressure, &s.velocity).unwrap(),
            ),
            (
                assemble_th(&mesh, &s.gradient, &s.trace).unwrap(),
                assemble_th_star(&mesh, &s.trace, &s.gradient).unwrap(),
            ),
        ];
        for (a, b) in &pairs {
            let d = a.max_abs_diff(&b.transpose()).unwrap();
            assert!(d <= 1e-12 * a.max_abs(), "seed {seed}: {d:e}");
        }
    }
}

#[test]
fn operators_do_not_depend_on_normal_orientation() {
    let mesh = perturbed(3, 0.15, 7);
    let flipped = mesh.with_flipped_interior_normals();
    let s = SpaceSet::new(&mesh, 1).unwrap();
    let sf = SpaceSet::new(&flipped, 1).unwrap();
    let b = assemble_b(&mesh, &s.velocity, &s.pressure).unwrap();
    let bf = assemble_b(&flipped, &sf.velocity, &sf.pressure).unwrap();
    let v = interpolate_jh(&s.velocity, &mesh, |x| [x[1] * x[1], x[0] - x[1]]).unwrap();
    let vf = interpolate_jh(&sf.velocity, &flipped, |x| [x[1] * x[1], x[0] - x[1]]).unwrap();
    let q = interpolate_ih(&s.pressure, &mesh, |x| x[0] * x[1]).unwrap();
    let qf = interpolate_ih(&sf.pressure, &flipped, |x| x[0] * x[1]).unwrap();
    let a = b.bilinear(&q.values, &v.values);
    let af = bf.bilinear(&qf.values, &vf.values);
    assert!((a - af).abs() <= 1e-12 * a.abs().max(1.0), "{a} {af}");
}

fn smooth_velocity(c: [f64; 4]) -> impl Fn([f64; 2]) -> [f64; 2] {
    move |x| {
        [
            (c[0] * x[0] + c[1] * x[1]).sin() + x[0] * x[1] * x[1],
            (c[2] * x[0] - c[3] * x[1]).cos() * (1.0 + x[0]),
        ]
    }
}

#[test]
fn commuting_with_interpolants() {
    let mut rng = StdRng::seed_from_u64(11);
    for mesh in [square(3), perturbed(3, 0.2, 5)] {
        let s = SpaceSet::new(&mesh, 1).unwrap();
        let b = assemble_b(&mesh, &s.velocity, &s.pressure).unwrap();
        let b_star = assemble_b_star(&mesh, &s.pressure, &s.velocity).unwrap();
        for _ in 0..5 {
            let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
            let v = smooth_velocity(c);
            let exact = apply_b_to_field(&mesh, &s.pressure, &v).unwrap();
            let jv = interpolate_jh(&s.velocity, &mesh, &v).unwrap();
            let d = rel_diff(&exact, &b.matvec(&jv.values));
            assert!(d <= 1e-10, "J_h: {d:e}");

            let q = move |x: [f64; 2]| (c[0] * x[0]).exp() * (c[1] * x[1]).sin() + c[2] * x[0] * x[1];
            let exact = apply_b_star_to_field(&mesh, &s.velocity, q).unwrap();
            let iq = interpolate_ih(&s.pressure, &mesh, q).unwrap();
            let d = rel_diff(&exact, &b_star.matvec(&iq.values));
            assert!(d <= 1e-10, "I_h: {d:e}");
        }
    }
}

#[test]
fn discrete_nonlinearity_is_monotone() {
    let mesh = perturbed(3, 0.2, 9);
    let s = SpaceSet::new(&mesh, 1).unwrap();
    let m = assemble_mass(&mesh, &s.velocity).unwrap();
    let mut rng = StdRng::seed_from_u64(21);
    for trial in 0..100 {
        let alpha = rng.gen_range(0.0..2.0);
        let beta = 10f64.powf(rng.gen_range(-2.0..4.0));
        let coeffs = NonlinearCoefficients::new(alpha, beta, 1.0).unwrap();
        let scale = 10f64.powf(rng.gen_range(-2.0..1.0));
        let u: Vec<f64> = (0..s.velocity.dim).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..s.velocity.dim).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let nu = assemble_picard_nonlinearity(&mesh, &s.velocity, &u, &coeffs).unwrap().matvec(&u);
        let nv = assemble_picard_nonlinearity(&mesh, &s.velocity, &v, &coeffs).unwrap().matvec(&v);
        let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let pairing: f64 = nu.iter().zip(&nv).zip(&d).map(|((a, b), c)| (a - b) * c).sum();
        let lower = alpha * m.bilinear(&d, &d);
        let size: f64 = nu.iter().zip(&nv).zip(&d).map(|((a, b), c)| ((a - b) * c).abs()).sum();
        assert!(pairing >= lower - 1e-12 * size, "trial {trial}: {pairing} < {lower}");
    }
}

fn config(scheme: TimeScheme, steps: usize) -> TimeSchemeConfig {
    TimeSchemeConfig::new(scheme, 0.1, steps).unwrap()
}

#[test]
fn constraints_hold_after_every_step() {
    let d = disc(3);
    for scheme in [TimeScheme::BackwardEuler, TimeScheme::SecondOrder] {
        let problem = ManufacturedProblem::new(NonlinearCoefficients::new(1.0, 10.0, 0.5).unwrap(), Forcing::Manufactured);
        let mut steps = 0;
        run_transient_with(&d, &problem, &config(scheme, 10), &PicardConfig::default(), None, |_, f| {
            steps += 1;
            let u = &f.velocity.values;
            let mut div = d.b.matvec(u);
            for (r, m) in div.iter_mut().zip(&d.mean) {
                *r -= m * f.multiplier;
            }
            let scale = d.b.max_abs() * u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let div = div.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(div <= 1e-10 * scale, "divergence {div:e} vs {scale:e}");
            let l = &f.gradient.values;
            let tr = d.th.matvec(l).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = d.th.max_abs() * l.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(tr <= 1e-10 * scale, "trace {tr:e} vs {scale:e}");
            assert!(f.multiplier.abs() < 1e-10);
        })
        .unwrap();
        assert_eq!(steps, 10);
    }
}

#[test]
fn zero_forcing_gives_zero_trajectory() {
    let d = disc(3);
    let problem = ManufacturedProblem::new(NonlinearCoefficients::new(1.0, 100.0, 1.0).unwrap(), Forcing::Zero);
    for scheme in [TimeScheme::BackwardEuler, TimeScheme::SecondOrder] {
        run_transient_with(&d, &problem, &config(scheme, 5), &PicardConfig::default(), None, |_, f| {
            for v in [&f.velocity, &f.gradient, &f.pressure, &f.trace] {
                assert!(v.values.iter().all(|x| *x == 0.0));
            }
        })
        .unwrap();
    }
}

#[test]
fn energy_is_bounded_by_data() {
    let d = disc(4);
    let (u, w) = (&d.spaces.velocity, &d.spaces.gradient);
    for (alpha, beta) in [(1.0, 1.0), (0.5, 100.0), (2.0, 0.0)] {
        let coeffs = NonlinearCoefficients::new(alpha, beta, 1.0).unwrap();
        let problem = ManufacturedProblem::new(coeffs, Forcing::Manufactured);
        let time = config(TimeScheme::BackwardEuler, 16);
        let dt = time.dt();
        let traj = run_transient(&d, &problem, &time, &PicardConfig::default()).unwrap();
        let u0 = l2_norm(&d.mesh, u, &traj.initial_velocity).unwrap();
        let c = 1.0 / (2.0 * alpha) + 1.0;
        let zero = u.zeros();
        let (mut dissipation, mut data) = (0.0, u0 * u0);
        let mut state = vec![];
        run_transient_with(&d, &problem, &time, &PicardConfig::default(), None, |r, f| {
            state.push((r.time, f.clone()));
        })
        .unwrap();
        for (t, f) in &state {
            let fj = error_l2(&d.mesh, u, &zero, |x| problem.forcing(x, *t)).unwrap();
            data += dt * fj * fj;
            let ln = l2_norm(&d.mesh, w, &f.gradient).unwrap();
            let un = l2_norm(&d.mesh, u, &f.velocity).unwrap();
            dissipation += dt * (ln * ln + 0.5 * alpha * un * un);
            let lhs = dissipation + 0.5 * un * un;
            assert!(lhs <= 2.0 * c * data, "alpha={alpha} beta={beta} t={t}: {lhs:e} > {:e}", 2.0 * c * data);
        }
    }
}

#[test]
fn linear_problem_needs_one_picard_iteration() {
    let d = disc(3);
    let problem = ManufacturedProblem::new(NonlinearCoefficients::new(1.0, 0.0, 1.0).unwrap(), Forcing::Manufactured);
    let traj = run_transient(&d, &problem, &config(TimeScheme::SecondOrder, 6), &PicardConfig::default()).unwrap();
    assert!(traj.reports.iter().all(|r| r.iterations == 1));
}

#[test]
fn dimensions_on_two_by_two_mesh() {
    let s = SpaceSet::new(&square(2), 1).unwrap();
    assert_eq!(
        [s.velocity.dim, s.gradient.dim, s.pressure.dim, s.trace.dim],
        [64, 176, 40, 32]
    );
}

fn list<T: Clone + std::fmt::Debug>(
    item: impl Strategy<Value = T> + Clone,
) -> impl Strategy<Value = Vec<T>> {
    prop::collection::vec(item, 1..4)
}

fn any_config() -> impl Strategy<Value = RunConfig> {
    (
        prop::collection::btree_set(1usize..40, 1..5),
        prop::bool::ANY,
        list(0.0f64..1e6),
        list(0.0f64..1e6),
        list(0.0f64..1e6),
        1e-3f64..10.0,
        1e-14f64..1e-2,
        1usize..200,
        0usize..=4,
        prop::bool::ANY,
    )
        .prop_map(|(mesh, second, epsilon, alpha, beta, final_time, tol, maxit, k, zero)| {
            let mesh: Vec<usize> = mesh.into_iter().collect();
            let scheme = if second { TimeScheme::SecondOrder } else { TimeScheme::BackwardEuler };
            RunConfig {
                mode: Mode::Sweep,
                timesteps: mesh.iter().map(|n| n + 2).collect(),
                mesh,
                scheme,
                k,
                epsilon,
                alpha,
                beta,
                final_time,
                picard_tolerance: tol,
                picard_max_iterations: maxit,
                forcing: if zero { Forcing::Zero } else { Forcing::Manufactured },
                out: None,
                verbosity: 1,
            }
        })
}

proptest! {
    #[test]
    fn config_round_trip(c in any_config()) {
        let parsed = parse_config(&c.render()).unwrap();
        prop_assert_eq!(parsed, c);
    }
}
