use proptest::prelude::*;
use taskpart::pcio::{parse_point_cloud, sample_points, CloudFormat, PcioError};
use taskpart::PointCloud;

const PLY: &str = "ply
format ascii 1.0
comment five vertices of a pyramid
element vertex 5
property float x
property float y
property float z
property uchar red
element face 1
property list uchar int vertex_indices
end_header
0 0 0 255
1 0 0 255
1 1 0 255
0 1 0 255
0.5 0.5 1.25 0
4 0 1 2 3
";

#[test]
fn xyz_read_back() {
    let c = parse_point_cloud("0 0 0\n1 2 3".as_bytes(), CloudFormat::Xyz, "a").unwrap();
    assert_eq!(c.points, vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]);
    assert_eq!(c.id, "a");
    let c = parse_point_cloud("# header\n\n1 1 1\n  \n2 2 2\n".as_bytes(), CloudFormat::Xyz, "b").unwrap();
    assert_eq!(c.len(), 2);
}

#[test]
fn xyz_arity_and_number_errors() {
    let err = parse_point_cloud("0 0\n".as_bytes(), CloudFormat::Xyz, "a").unwrap_err();
    assert!(matches!(err, PcioError::MalformedRecord { line: 1, .. }), "{err}");
    let err = parse_point_cloud("1 2 3\n1 x 3\n".as_bytes(), CloudFormat::Xyz, "a").unwrap_err();
    assert!(matches!(err, PcioError::MalformedRecord { line: 2, .. }), "{err}");
    let err = parse_point_cloud("1 2 nan\n".as_bytes(), CloudFormat::Xyz, "a").unwrap_err();
    assert!(matches!(err, PcioError::MalformedRecord { line: 1, .. }), "{err}");
    let err = parse_point_cloud("# nothing\n".as_bytes(), CloudFormat::Xyz, "e").unwrap_err();
    assert!(matches!(err, PcioError::EmptyCloud(_)));
}

#[test]
fn ply_fixture_matches_vertex_list() {
    let c = parse_point_cloud(PLY.as_bytes(), CloudFormat::PlyAscii, "pyr").unwrap();
    assert_eq!(
        c.points,
        vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.5, 0.5, 1.25]
        ]
    );
}

#[test]
fn ply_rejects_bad_headers() {
    let binary = PLY.replace("format ascii 1.0", "format binary_little_endian 1.0");
    assert!(parse_point_cloud(binary.as_bytes(), CloudFormat::PlyAscii, "x").is_err());
    let no_xyz = PLY.replace("property float x\n", "");
    assert!(matches!(
        parse_point_cloud(no_xyz.as_bytes(), CloudFormat::PlyAscii, "x"),
        Err(PcioError::UnsupportedPlyElement(_))
    ));
}

#[test]
fn sampling_examples() {
    let pts: Vec<[f64; 3]> = (0..10_000).map(|i| [i as f64, (i % 7) as f64, 0.5]).collect();
    let cloud = PointCloud::new("big", pts.clone());
    let mut all = sample_points(&cloud, 10_000, 1).unwrap().points;
    all.sort_by(|a, b| a[0].total_cmp(&b[0]));
    assert_eq!(all, pts);

    let small = PointCloud::new("tiny", vec![[0.0; 3]; 3]);
    let err = sample_points(&small, 5, 0).unwrap_err();
    assert!(matches!(err, PcioError::InsufficientPoints { requested: 5, available: 3, .. }));
    assert!(err.to_string().contains("tiny"));

    let hundred = PointCloud::new("h", (0..100).map(|i| [i as f64, 0.0, 0.0]).collect());
    let a = sample_points(&hundred, 10, 7).unwrap();
    assert_eq!(a, sample_points(&hundred, 10, 7).unwrap());
    assert_eq!(a.id, "h");
    assert_eq!(a.len(), 10);
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, -1.0..1.0f64, Just(0.0), Just(1e-300), Just(-123.456789)]
}

proptest! {
    #[test]
    fn xyz_round_trip(points in prop::collection::vec([finite(), finite(), finite()], 1..60)) {
        let cloud = PointCloud::new("p", points);
        let mut text = Vec::new();
        cloud.write_xyz(&mut text).unwrap();
        let back = parse_point_cloud(text.as_slice(), CloudFormat::Xyz, "p").unwrap();
        prop_assert_eq!(back, cloud);
    }

    #[test]
    fn sample_is_a_sub_multiset(
        points in prop::collection::vec([0..5i32, 0..3i32, 0..2i32], 1..80),
        frac in 0.0..=1.0f64,
        seed in any::<u64>(),
    ) {
        let cloud = PointCloud::new("m", points.iter().map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]).collect());
        let n = ((cloud.len() as f64 * frac) as usize).max(1);
        let s = sample_points(&cloud, n, seed).unwrap();
        prop_assert_eq!(s.len(), n);
        prop_assert_eq!(&s, &sample_points(&cloud, n, seed).unwrap());
        let key = |p: &[f64; 3]| (p[0] as i64, p[1] as i64, p[2] as i64);
        let mut pool: std::collections::HashMap<_, i64> = std::collections::HashMap::new();
        for p in &cloud.points { *pool.entry(key(p)).or_default() += 1; }
        for p in &s.points { *pool.get_mut(&key(p)).unwrap() -= 1; }
        prop_assert!(pool.values().all(|&c| c >= 0));
    }
}
