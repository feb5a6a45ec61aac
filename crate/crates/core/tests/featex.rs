mod common;

use proptest::prelude::*;
use rand::Rng;
use taskpart::featex::{extract_descriptor, load_external_features, FeatureError};
use taskpart::gslsim::{generate_variations, variation_point_cloud, RunConfig};
use taskpart::rng::seeded;
use taskpart::{DescriptorSpec, PointCloud};

fn cube_sample(n: usize, seed: u64) -> PointCloud {
    let mut rng = seeded(seed);
    PointCloud::new("cube", (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect())
}

fn blocks(v: &[f64], spec: &DescriptorSpec) -> Vec<f64> {
    let b = spec.histogram_bins;
    let a = spec.axis_bins;
    let mut sums = vec![v[3..3 + b].iter().sum()];
    for i in 0..3 {
        let start = 3 + b + i * a;
        sums.push(v[start..start + a].iter().sum());
    }
    sums
}

#[test]
fn dimension_follows_spec() {
    let spec = DescriptorSpec::default();
    assert_eq!(spec.dim(), 59);
    let d = extract_descriptor(&cube_sample(50, 1), &spec, 0);
    assert_eq!(d.values.len(), 59);
    let small = DescriptorSpec { pair_samples: 10, histogram_bins: 4, axis_bins: 2 };
    assert_eq!(extract_descriptor(&cube_sample(50, 1), &small, 0).values.len(), 3 + 4 + 6);
}

#[test]
fn repeated_point_is_degenerate() {
    let spec = DescriptorSpec::default();
    for count in [1, 2, 17] {
        let d = extract_descriptor(&PointCloud::new("p", vec![[1.5, -2.0, 3.0]; count]), &spec, 9).values;
        assert_eq!(&d[..3], &[0.0, 0.0, 0.0]);
        assert_eq!(d[3], 1.0);
        assert!(d[4..35].iter().all(|&x| x == 0.0));
        for axis in 0..3 {
            let start = 35 + axis * 8;
            assert_eq!(d[start], 1.0);
            assert!(d[start + 1..start + 8].iter().all(|&x| x == 0.0));
        }
    }
}

#[test]
fn scale_invariance_on_unit_cube() {
    let spec = DescriptorSpec::default();
    let c = cube_sample(500, 3);
    let scaled = PointCloud::new("cube", c.points.iter().map(|p| [2.0 * p[0], 2.0 * p[1], 2.0 * p[2]]).collect());
    let a = extract_descriptor(&c, &spec, 4).values;
    let b = extract_descriptor(&scaled, &spec, 4).values;
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn permutation_invariance() {
    let spec = DescriptorSpec::default();
    let c = cube_sample(200, 5);
    let mut rev = c.clone();
    rev.points.reverse();
    assert_eq!(extract_descriptor(&c, &spec, 8), extract_descriptor(&rev, &spec, 8));
}

#[test]
fn archetypes_are_tighter_than_their_mix() {
    let spec = DescriptorSpec::default();
    let config = RunConfig { n_variations: 32, ..RunConfig::default() };
    let vs = generate_variations(&config).unwrap();
    let desc: Vec<(usize, Vec<f64>)> = vs
        .iter()
        .enumerate()
        .map(|(i, v)| (v.archetype, extract_descriptor(&variation_point_cloud(v, 0.05, i as u64), &spec, i as u64).values))
        .collect();
    for (a, b) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
        let (mut within, mut nw, mut between, mut nb) = (0.0, 0, 0.0, 0);
        for (i, (ai, di)) in desc.iter().enumerate() {
            for (aj, dj) in &desc[i + 1..] {
                if ![a, b].contains(ai) || ![a, b].contains(aj) {
                    continue;
                }
                let d = common::sq_dist(di, dj).sqrt();
                if ai == aj {
                    within += d;
                    nw += 1;
                } else {
                    between += d;
                    nb += 1;
                }
            }
        }
        let (within, between) = (within / nw as f64, between / nb as f64);
        assert!(within < between, "archetypes {a},{b}: within {within} between {between}");
    }
}

#[test]
fn external_features_read_back() {
    let m = load_external_features("id,f0,f1\na,1,2\nb,3,4\n".as_bytes()).unwrap();
    assert_eq!((m.len(), m.dim()), (2, 2));
    assert_eq!(m.rows()[1].values, vec![3.0, 4.0]);
    assert!(matches!(
        load_external_features("id,f0,f1\na,1,2\na,5,6\n".as_bytes()),
        Err(FeatureError::DuplicateId(id)) if id == "a"
    ));
    assert!(matches!(
        load_external_features("id,f0,f1\na,1,2\nb,3\n".as_bytes()),
        Err(FeatureError::DimensionMismatch { line: 3, .. })
    ));
    assert!(matches!(
        load_external_features("id,f0,f1\na,1,zz\n".as_bytes()),
        Err(FeatureError::MalformedNumber { line: 2, column: 3, .. })
    ));
}

#[test]
fn wide_sparse_embedding_loads() {
    let mut text = String::from("id");
    for j in 0..1024 {
        text.push_str(&format!(",f{j}"));
    }
    text.push('\n');
    for i in 0..60 {
        text.push_str(&format!("obj{i:02}"));
        for j in 0..1024 {
            let v = if j % 3 == 0 { 0.0 } else { (i * j) as f64 * 1e-3 };
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    let m = load_external_features(text.as_bytes()).unwrap();
    assert_eq!((m.len(), m.dim()), (60, 1024));
    assert!(m.values().all(|r| r.iter().step_by(3).all(|&v| v == 0.0)));
    let mut out = Vec::new();
    m.write_csv(&mut out).unwrap();
    assert_eq!(load_external_features(out.as_slice()).unwrap(), m);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn histogram_blocks_sum_to_one(
        points in prop::collection::vec([-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64], 2..40),
        seed in any::<u64>(),
        scale in 0.01..100.0f64,
    ) {
        let spec = DescriptorSpec::default();
        let cloud = PointCloud::new("x", points.clone());
        let d = extract_descriptor(&cloud, &spec, seed).values;
        prop_assert!(d.iter().all(|v| v.is_finite() && *v >= 0.0));
        for s in blocks(&d, &spec) {
            prop_assert!((s - 1.0).abs() < 1e-9, "block sum {}", s);
        }
        let eig: f64 = d[..3].iter().sum();
        prop_assert!((eig - 1.0).abs() < 1e-9 || eig == 0.0);
        prop_assert!(d[0] >= d[1] && d[1] >= d[2]);
        let scaled = PointCloud::new("x", points.iter().map(|p| [p[0] * scale, p[1] * scale, p[2] * scale]).collect());
        let ds = extract_descriptor(&scaled, &spec, seed).values;
        for (a, b) in d[..3].iter().zip(&ds[..3]) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
