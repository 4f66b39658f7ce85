use parabolic_lyapunov_demo::{energy_trace, problems, split_curves, weight_map};

#[test]
fn split_curves_recombine() {
    let n = 41;
    let v = split_curves("quasilinear_demo", 0.3, 0.4, -0.7, -2.0, 2.0, n).unwrap();
    assert_eq!(v.len(), 5 * n);
    for i in 0..n {
        let (r, f, f0, f1, f1_alt) = (v[i], v[n + i], v[2 * n + i], v[3 * n + i], v[4 * n + i]);
        assert!((f - f0 - f1 * r).abs() < 1e-9, "r = {r}");
        assert!((f - f0 - f1_alt).abs() < 1e-12);
        assert!(f1 > 0.0);
    }
}

#[test]
fn heat_weight_is_one() {
    let v = weight_map("heat", 0.5, 5, 7).unwrap();
    assert_eq!(v.len(), 2 + 35);
    assert!(v[2..].iter().all(|w| (w - 1.0).abs() < 1e-12));
}

#[test]
fn quasilinear_weight_is_positive_and_varies() {
    let v = weight_map("quasilinear_demo", 0.5, 9, 9).unwrap();
    let w = &v[2..];
    assert!(w.iter().all(|&x| x > 0.0));
    let (lo, hi) = w.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi - lo > 1e-3);
}

#[test]
fn energy_trace_decreases() {
    let v = energy_trace("chafee_infante", 32, 0.1, 7, 0.2).unwrap();
    let m = v.len() / 3;
    assert!(m > 2);
    let (e, rate) = (&v[m..2 * m], &v[2 * m..]);
    assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(rate.iter().all(|&r| r <= 0.0));
}

#[test]
fn bad_input_is_an_error() {
    assert!(split_curves("nope", 0.0, 0.0, 0.0, -1.0, 1.0, 10).is_err());
    assert!(weight_map("heat", 0.5, 1, 5).is_err());
    assert!(problems().split(',').any(|p| p == "fully_nonlinear_ftilde"));
}
