//! Randomized invariants of the splitting, the Lagrangian and the checks.

use std::sync::OnceLock;

use parabolic_lyapunov::catalog::{self, Reaction};
use parabolic_lyapunov::energy::{reading, GridFunction};
use parabolic_lyapunov::lagrangian::{LagrangianModel, ModelOptions};
use parabolic_lyapunov::nonlinearity::{split, split_alternative, ProblemSpec, SplitFieldAlt};
use parabolic_lyapunov::pde::rhs;
use parabolic_lyapunov::verify::Check;
use proptest::prelude::*;

fn specs() -> Vec<ProblemSpec> {
    vec![
        catalog::heat(),
        catalog::chafee_infante(15.0),
        catalog::quasilinear_demo(Reaction::Bistable(0.5)),
        catalog::fully_nonlinear_ftilde(),
        catalog::advection_diffusion(1.0),
    ]
}

fn chafee() -> &'static (LagrangianModel, SplitFieldAlt) {
    static CELL: OnceLock<(LagrangianModel, SplitFieldAlt)> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = catalog::chafee_infante(15.0);
        let field = split(&spec).unwrap();
        let options = ModelOptions {
            nx: 9,
            nu: 17,
            np: 17,
            l0_nodes: 401,
            ..ModelOptions::default()
        }
        .with_box(1.5, 4.0);
        (LagrangianModel::build(&field, options).unwrap(), split_alternative(&spec).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn split_recombines(which in 0usize..5, x in 0.0..1.0f64, u in -2.0..2.0f64, p in -3.0..3.0f64, r in -5.0..5.0f64) {
        let spec = &specs()[which];
        let field = split(spec).unwrap();
        let f = spec.diffusion(x, u, p, r).unwrap();
        let recombined = field.f0(x, u, p).unwrap() + field.f1(x, u, p, r).unwrap() * r;
        prop_assert!((f - recombined).abs() <= 1e-9 * (1.0 + f.abs()), "{f} vs {recombined}");
    }

    #[test]
    fn f1_positive_and_alt_sign(which in 0usize..5, x in 0.0..1.0f64, u in -2.0..2.0f64, p in -3.0..3.0f64, r in -5.0..5.0f64) {
        let spec = &specs()[which];
        let field = split(spec).unwrap();
        prop_assert!(field.f1(x, u, p, r).unwrap() > 0.0);
        let alt = split_alternative(spec).unwrap();
        let a = alt.f1_alt(x, u, p, r).unwrap();
        let signed = if r == 0.0 { a == 0.0 } else { a * r > 0.0 };
        prop_assert!(signed);
    }

    #[test]
    fn solves_are_mutually_inverse(x in 0.0..1.0f64, u in -2.0..2.0f64, p in -3.0..3.0f64, r in -5.0..5.0f64) {
        for spec in specs() {
            let q = spec.solve_for_q(x, u, p, r).unwrap();
            prop_assert!(spec.f(x, u, p, q, r).abs() <= 1e-10 * (1.0 + r.abs()));
            let back = spec.solve_for_r(x, u, p, q).unwrap();
            prop_assert!((back - r).abs() <= 1e-8 * (1.0 + r.abs()), "{}: {r} -> {q} -> {back}", spec.name);
        }
    }

    #[test]
    fn decay_rate_nonpositive_and_splittings_agree(coef in proptest::collection::vec(-0.1..0.1f64, 4)) {
        let (model, alt) = chafee();
        // Amplitudes keep the slopes inside the tabulated box |p| <= 4.
        let u = GridFunction::from_fn(32, |x| {
            coef.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x).sin()).sum()
        }).unwrap();
        let ut = rhs(model.field().spec(), u.values(), None).unwrap();
        let rd = reading(model, alt, &u, &ut, false).unwrap();
        prop_assert!(rd.decay_rate <= 0.0);
        prop_assert!((rd.decay_rate - rd.decay_rate_alt).abs() <= 1e-8 + 1e-6 * rd.decay_rate.abs());
    }

    #[test]
    fn looser_tolerance_never_fails_more(value in 0.0..10.0f64, t1 in 0.0..10.0f64, t2 in 0.0..10.0f64) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let strict = Check::new("c", value, String::new(), lo, 1);
        let loose = strict.clone().with_tolerance(hi);
        prop_assert!(!strict.pass || loose.pass);
    }
}
