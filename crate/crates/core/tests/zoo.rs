use std::f64::consts::{FRAC_PI_3, PI};

use geowalk_core::zoo::{
    build_metric, euclidean, katok, navigation_root_solve, round_sphere, ConstantField, ConstantWind, FnField,
    MetricField, MetricSpec, Riemannian, RoundSphereField, Zermelo,
};
use geowalk_core::{fundamental_tensor, ChartAtlas, DiffSteps, Error, FinslerMetric, Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(a: &[f64]) -> Vector {
    Vector::from_slice(a)
}

fn random_sphere_sample(rng: &mut ChaCha8Rng) -> (usize, Vector, Vector) {
    let chart = rng.random_range(0..2);
    let x = v(&[rng.random_range(-PI..PI), rng.random_range(-1.4..1.4)]);
    let y = v(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
    (chart, x, y)
}

#[test]
fn euclidean_basics() {
    let e = euclidean(2);
    assert_eq!(e.eval(0, &v(&[5.0, 5.0]), &v(&[1.0, 0.0])), 1.0);
    assert!(
        (e.eval(0, &v(&[0.0, 0.0]), &v(&[3.0, 4.0])) * 2.0 - e.eval(0, &v(&[0.0, 0.0]), &v(&[6.0, 8.0]))).abs() < 1e-15
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..10 {
        let x = v(&[rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]);
        let y = v(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        assert_eq!(fundamental_tensor(&e, 0, &x, &y, DiffSteps::default()).unwrap(), Matrix::identity(2));
    }
}

#[test]
fn round_sphere_lengths() {
    let s = round_sphere();
    assert!((s.eval(0, &v(&[0.0, 0.0]), &v(&[1.0, 0.0])) - 1.0).abs() < 1e-15);
    assert!((s.eval(0, &v(&[0.0, FRAC_PI_3]), &v(&[1.0, 0.0])) - 0.5).abs() < 1e-15);
    let x = v(&[0.4, 0.3]);
    let g0 = fundamental_tensor(&s, 0, &x, &v(&[1.0, 0.0]), DiffSteps::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let y = v(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        assert_eq!(fundamental_tensor(&s, 0, &x, &y, DiffSteps::default()).unwrap(), g0);
    }
}

#[test]
fn riemannian_rejects_indefinite_fields() {
    let atlas = ChartAtlas::flat(2);
    let field = FnField::new(2, |_, _| Matrix::diagonal(&[1.0, -1.0]));
    assert!(matches!(Riemannian::new(field, "bad", &atlas), Err(Error::NotPositiveDefinite { .. })));
}

#[test]
fn zermelo_without_wind_is_riemannian() {
    let atlas = ChartAtlas::flat(2);
    let h = Matrix::from_rows(&[&[2.0, 0.3], &[0.3, 1.0]]);
    let z = Zermelo::new(ConstantField(h), ConstantWind(Vector::zeros(2)), "still", &atlas).unwrap();
    let y = v(&[0.7, -0.2]);
    assert!((z.eval(0, &Vector::zeros(2), &y) - h.bilinear(&y, &y).sqrt()).abs() < 1e-15);
}

#[test]
fn katok_equator_values_and_asymmetry() {
    let r = 0.5;
    let k = katok(r).unwrap();
    let x = v(&[0.0, 0.0]);
    let fwd = k.eval(0, &x, &v(&[1.0, 0.0]));
    let back = k.eval(0, &x, &v(&[-1.0, 0.0]));
    let w = v(&[r, 0.0]);
    let h = Matrix::identity(2);
    assert!((fwd - navigation_root_solve(&h, &w, &v(&[1.0, 0.0]))).abs() < 1e-12);
    assert!((back - navigation_root_solve(&h, &w, &v(&[-1.0, 0.0]))).abs() < 1e-12);
    assert!((fwd - 2.0 / 3.0).abs() < 1e-15 && (back - 2.0).abs() < 1e-15);
    assert!((fwd * back - 1.0 / (1.0 - r * r)).abs() < 1e-14);
    assert!(!k.is_reversible());
}

#[test]
fn indicatrix_is_shifted_unit_circle() {
    let k = katok(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let (chart, x, _) = random_sphere_sample(&mut rng);
        let h = RoundSphereField.tensor(chart, &x);
        let w = k.wind_at(chart, &x);
        for i in 0..32 {
            let a = 2.0 * PI * i as f64 / 32.0;
            let c = v(&[a.cos(), a.sin()]);
            let u = c * (1.0 / h.bilinear(&c, &c).sqrt());
            assert!((h.bilinear(&u, &u) - 1.0).abs() < 1e-12);
            assert!((k.eval(chart, &x, &(u + w)) - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn zermelo_closed_form_matches_root_solve() {
    let k = katok(0.6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let (chart, x, y) = random_sphere_sample(&mut rng);
        let oracle = navigation_root_solve(&RoundSphereField.tensor(chart, &x), &k.wind_at(chart, &x), &y);
        let f = k.eval(chart, &x, &y);
        assert!(((f - oracle) / oracle).abs() < 1e-10, "{f} vs {oracle}");
    }
}

#[test]
fn katok_zero_is_round_sphere() {
    let k = katok(0.0).unwrap();
    let s = round_sphere();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let (chart, x, y) = random_sphere_sample(&mut rng);
        assert!((k.eval(chart, &x, &y) - s.eval(chart, &x, &y)).abs() <= 1e-12);
    }
}

#[test]
fn rotated_chart_carries_the_rotation_field() {
    let k = katok(0.5).unwrap();
    let atlas = ChartAtlas::sphere();
    let p = geowalk_core::Point::new(0, v(&[0.3, 0.9]));
    let w0 = k.wind_at(0, &p.coords);
    let q = atlas.to_chart(&p, 1, None).unwrap();
    let pushed = atlas.push_tangent(&p, &w0, &q);
    assert!((pushed - k.wind_at(1, &q.coords)).max_abs() < 1e-12);
}

#[test]
fn fast_wind_is_rejected() {
    assert!(matches!(katok(1.0), Err(Error::NavigationTooFast { .. })));
    let spec = MetricSpec::new("zermelo").with("w1", 0.8).with("w2", 0.7);
    assert!(matches!(build_metric(&spec), Err(Error::NavigationTooFast { .. })));
}

#[test]
fn zoo_entries_by_name() {
    for (spec, dim) in [
        (MetricSpec::new("euclidean").with("dim", 3.0), 3),
        (MetricSpec::new("sphere"), 2),
        (MetricSpec::new("katok").with("r", 0.25), 2),
        (MetricSpec::new("zermelo").with("w1", 0.1).with("w2", 0.2), 2),
    ] {
        let built = build_metric(&spec).unwrap();
        assert_eq!(built.metric.dim(), dim);
        assert_eq!(built.atlas.dim(), dim);
    }
    assert!(matches!(build_metric(&MetricSpec::new("hyperbolic")), Err(Error::Unknown { .. })));
    assert!(build_metric(&MetricSpec::new("katok")).is_err());
}
