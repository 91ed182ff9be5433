use geowalk_core::geodesic::{geodesic_flow, OdeConfig, ShootingConfig, ShootingDistance};
use geowalk_core::measure::MeasureFamily;
use geowalk_core::walk::{
    exit_time, path_rng, poisson_jump_times, simulate_paths_map, subordinate, PathKind, Walker, STREAM_CLOCK,
};
use geowalk_core::zoo::{euclidean, katok, round_sphere};
use geowalk_core::{ChartAtlas, Point, Vector};

fn v(a: &[f64]) -> Vector {
    Vector::from_slice(a)
}

#[test]
fn point_mass_step_at_unit_scale_is_translation() {
    let e = euclidean(2);
    let atlas = ChartAtlas::flat(2);
    let family = MeasureFamily::point_mass(v(&[0.3, -0.1]));
    let walker = Walker::new(&e, &atlas, &family, OdeConfig::default());
    let p = Point::new(0, v(&[1.0, 1.0]));
    let (q, y) = walker.walk_step(&p, 1.0, &mut path_rng(0, 0, 0)).unwrap();
    assert_eq!(y, v(&[0.3, -0.1]));
    assert!((q.coords - v(&[1.3, 0.9])).max_abs() < 1e-15);
}

#[test]
fn euclidean_steps_are_bounded() {
    let e = euclidean(2);
    let atlas = ChartAtlas::flat(2);
    let family = MeasureFamily::lebesgue_disc();
    let walker = Walker::new(&e, &atlas, &family, OdeConfig::default());
    let n = 25.0;
    let path = walker.discrete_path(&Point::new(0, Vector::zeros(2)), n, 500, 1, 0).unwrap();
    for w in path.records.windows(2) {
        assert!((w[1].point.coords - w[0].point.coords).norm() <= 1.0 / n.sqrt() + 1e-12);
        assert!((w[1].t - w[0].t - 1.0 / n).abs() < 1e-12);
    }
}

#[test]
fn katok_paths_stay_in_the_atlas() {
    let k = katok(0.5).unwrap();
    let atlas = ChartAtlas::sphere();
    let family = MeasureFamily::lebesgue_disc();
    let walker = Walker::new(&k, &atlas, &family, OdeConfig::with_step(0.05));
    let path = walker.discrete_path(&Point::new(0, v(&[0.0, 1.2])), 4.0, 200, 2, 0).unwrap();
    for r in &path.records {
        assert!(r.point.chart <= 1);
        assert!(!atlas.needs_switch(r.point.chart, &r.point.coords));
        let e = atlas.embed(&r.point).unwrap();
        assert!((e[0] * e[0] + e[1] * e[1] + e[2] * e[2] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn zero_steps_give_the_start() {
    let s = round_sphere();
    let atlas = ChartAtlas::sphere();
    let family = MeasureFamily::lebesgue_disc();
    let walker = Walker::new(&s, &atlas, &family, OdeConfig::default());
    let start = Point::new(0, v(&[0.1, 0.2]));
    let path = walker.discrete_path(&start, 100.0, 0, 3, 0).unwrap();
    assert_eq!(path.records.len(), 1);
    assert_eq!(path.records[0].t, 0.0);
    assert_eq!(*path.start(), start);
    assert_eq!(path.kind, PathKind::Discrete);
}

#[test]
fn point_mass_paths_ignore_the_seed() {
    let e = euclidean(2);
    let atlas = ChartAtlas::flat(2);
    let family = MeasureFamily::point_mass(v(&[1.0, 0.0]));
    let walker = Walker::new(&e, &atlas, &family, OdeConfig::default());
    let start = Point::new(0, Vector::zeros(2));
    let a = walker.discrete_path(&start, 10.0, 20, 1, 0).unwrap();
    let b = walker.discrete_path(&start, 10.0, 20, 99, 5).unwrap();
    assert_eq!(a, b);
    assert!((a.end().coords - v(&[2.0, 0.0])).max_abs() < 1e-12);
}

#[test]
fn subordination_over_no_time_is_constant() {
    let e = euclidean(1);
    let atlas = ChartAtlas::flat(1);
    let family = MeasureFamily::lebesgue_disc();
    let walker = Walker::new(&e, &atlas, &family, OdeConfig::default());
    let start = Point::new(0, v(&[0.5]));
    let path = walker.subordinated_path(&start, 50.0, 0.0, 4, 0).unwrap();
    assert_eq!(path.records.len(), 1);
    assert_eq!(*path.value_at(10.0), start);
}

#[test]
fn poisson_clock_moments() {
    let (n, horizon, runs) = (100.0, 1.0, 10_000);
    let counts: Vec<f64> =
        (0..runs).map(|i| poisson_jump_times(n, horizon, &mut path_rng(5, i, STREAM_CLOCK)).len() as f64).collect();
    let mean = counts.iter().sum::<f64>() / runs as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
    assert!((mean - 100.0).abs() < 0.3, "mean {mean}");
    assert!((var - 100.0).abs() < 5.0, "variance {var}");
}

#[test]
fn subordinated_path_follows_the_chain_between_jumps() {
    let e = euclidean(2);
    let atlas = ChartAtlas::flat(2);
    let family = MeasureFamily::lebesgue_disc();
    let walker = Walker::new(&e, &atlas, &family, OdeConfig::default());
    let start = Point::new(0, Vector::zeros(2));
    let sub = walker.subordinated_path(&start, 40.0, 1.0, 6, 3).unwrap();
    let chain = walker.discrete_path(&start, 40.0, sub.records.len() - 1, 6, 3).unwrap();
    for (k, w) in sub.records.windows(2).enumerate() {
        assert!(w[1].t > w[0].t);
        assert_eq!(w[0].point, chain.records[k].point);
        let mid = 0.5 * (w[0].t + w[1].t);
        assert_eq!(*sub.value_at(mid), w[0].point);
        assert_eq!(*sub.value_at(w[1].t), w[1].point);
    }
    assert!(sub.horizon() <= 1.0);
}

#[test]
fn resubordination_needs_enough_steps() {
    let e = euclidean(1);
    let atlas = ChartAtlas::flat(1);
    let family = MeasureFamily::lebesgue_disc();
    let walker = Walker::new(&e, &atlas, &family, OdeConfig::default());
    let chain = walker.discrete_path(&Point::new(0, v(&[0.0])), 100.0, 3, 7, 0).unwrap();
    assert!(subordinate(&chain, 1.0, &mut path_rng(7, 0, STREAM_CLOCK)).is_err());
    let long = walker.discrete_path(&Point::new(0, v(&[0.0])), 100.0, 400, 7, 0).unwrap();
    assert!(subordinate(&long, 1.0, &mut path_rng(7, 0, STREAM_CLOCK)).is_ok());
}

#[test]
fn interpolation_matches_nodes_and_geodesics() {
    let s = round_sphere();
    let atlas = ChartAtlas::sphere();
    let family = MeasureFamily::lebesgue_disc();
    let ode = OdeConfig::with_step(1e-3);
    let walker = Walker::new(&s, &atlas, &family, ode);
    let n = 4.0;
    let chain = walker.discrete_path(&Point::new(0, v(&[0.3, 0.5])), n, 6, 8, 0).unwrap();
    let nodes: Vec<f64> = (0..=6).map(|k| k as f64 / n).collect();
    let at_nodes = walker.interpolate(&chain, &nodes).unwrap();
    for (a, b) in at_nodes.records.iter().zip(&chain.records) {
        assert_eq!(a.point, b.point);
    }
    for k in 0..6 {
        for frac in [0.25, 0.5, 0.9] {
            let t = (k as f64 + frac) / n;
            let got = walker.interpolate(&chain, &[t]).unwrap().records[0].point;
            let traj = geodesic_flow(&s, &atlas, &chain.records[k].point, &chain.increments[k], frac, &ode).unwrap();
            assert!(atlas.chord(&got, &traj.last().point) < 1e-9);
        }
    }
    assert!(walker.interpolate(&chain, &[2.0]).is_err());
}

#[test]
fn euclidean_interpolation_is_linear() {
    let e = euclidean(2);
    let atlas = ChartAtlas::flat(2);
    let family = MeasureFamily::lebesgue_disc();
    let walker = Walker::new(&e, &atlas, &family, OdeConfig::default());
    let n = 10.0;
    let chain = walker.discrete_path(&Point::new(0, Vector::zeros(2)), n, 5, 9, 0).unwrap();
    for i in 0..=50 {
        let t = i as f64 / 100.0;
        let got = walker.interpolate(&chain, &[t]).unwrap().records[0].point.coords;
        let k = ((t * n).floor() as usize).min(4);
        let frac = t * n - k as f64;
        let expected = chain.records[k].point.coords * (1.0 - frac) + chain.records[k + 1].point.coords * frac;
        assert!((got - expected).max_abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn exit_times() {
    let e = euclidean(1);
    let atlas = ChartAtlas::flat(1);
    let routine = ShootingDistance { metric: &e, atlas: &atlas, cfg: ShootingConfig::default() };
    let start = Point::new(0, v(&[0.0]));

    let still = MeasureFamily::point_mass(v(&[0.0]));
    let walker = Walker::new(&e, &atlas, &still, OdeConfig::default());
    let path = walker.discrete_path(&start, 100.0, 100, 0, 0).unwrap();
    assert_eq!(exit_time(&path, &start, 0.1, &routine).unwrap(), f64::INFINITY);

    let drift = MeasureFamily::point_mass(v(&[1.0]));
    let walker = Walker::new(&e, &atlas, &drift, OdeConfig::default());
    let path = walker.discrete_path(&start, 100.0, 100, 0, 0).unwrap();
    let tau = exit_time(&path, &start, 0.205, &routine).unwrap();
    assert!((tau - 0.21).abs() < 1e-12, "{tau}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let k = katok(0.5).unwrap();
    let atlas = ChartAtlas::sphere();
    let family = MeasureFamily::lebesgue_disc();
    let walker = Walker::new(&k, &atlas, &family, OdeConfig::with_step(0.25));
    let start = Point::new(0, v(&[0.2, 0.1]));
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate_paths_map(12, |i| walker.subordinated_path(&start, 20.0, 0.5, 11, i)).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn longer_chains_extend_shorter_ones() {
    let k = katok(0.3).unwrap();
    let atlas = ChartAtlas::sphere();
    let family = MeasureFamily::lebesgue_disc();
    let walker = Walker::new(&k, &atlas, &family, OdeConfig::with_step(0.25));
    let start = Point::new(0, v(&[0.0, 0.0]));
    let short = walker.discrete_path(&start, 9.0, 10, 12, 4).unwrap();
    let long = walker.discrete_path(&start, 9.0, 30, 12, 4).unwrap();
    assert_eq!(short.records[..], long.records[..11]);
    assert_eq!(short.increments[..], long.increments[..10]);
}

/// `E|ζ_N|² = E|ξ_1|² = 1/2` for the flat unit disc walk.
#[test]
fn chain_and_subordinated_second_moments_agree() {
    let e = euclidean(2);
    let atlas = ChartAtlas::flat(2);
    let family = MeasureFamily::lebesgue_disc();
    let walker = Walker::new(&e, &atlas, &family, OdeConfig::default());
    let start = Point::new(0, Vector::zeros(2));
    let n = 16.0;
    let paths = 4000;
    let chain: Vec<f64> = simulate_paths_map(paths, |i| {
        let p = walker.discrete_path(&start, n, 16, 13, i)?;
        Ok(p.end().coords.norm().powi(2))
    })
    .unwrap();
    let sub: Vec<f64> = simulate_paths_map(paths, |i| {
        let p = walker.subordinated_path(&start, n, 1.0, 14, i)?;
        Ok(p.value_at(1.0).coords.norm().powi(2))
    })
    .unwrap();
    for values in [chain, sub] {
        let m = values.iter().sum::<f64>() / paths as f64;
        let var = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (paths as f64 - 1.0);
        let se = (var / paths as f64).sqrt();
        assert!((m - 0.5).abs() < 4.0 * se, "{m} ± {se}");
    }
}
