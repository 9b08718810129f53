use guidespec_web::{band_path_json, check_geometry_json, strip_levels_json};
use serde_json::Value;

#[test]
fn free_band_path_hits_the_corner() {
    let out = band_path_json(r#"{"holes": [], "hole_bc": "neumann", "n": 8, "count": 2, "samples_per_leg": 2}"#).unwrap();
    let v: Value = serde_json::from_str(&out).unwrap();
    let b1 = v["bands"][0].as_array().unwrap();
    assert_eq!(b1.len(), 7);
    assert!(b1[0].as_f64().unwrap().abs() < 1e-9);
    let corner = b1[4].as_f64().unwrap();
    let exact = 2.0 * std::f64::consts::PI.powi(2);
    assert!((corner - exact).abs() / exact < 0.03, "{corner}");
}

#[test]
fn band_path_rejects_bad_requests() {
    assert!(band_path_json(r#"{"holes": [], "hole_bc": "neumann", "n": 8, "count": 2, "samples_per_leg": 0}"#).is_err());
    assert!(band_path_json(r#"{"holes": [], "hole_bc": "neumann", "n": 8, "count": 2, "samples_per_leg": 2, "x": 1}"#).is_err());
    assert!(band_path_json("not json").is_err());
}

#[test]
fn filled_row_has_a_guided_level() {
    let req = r#"{
        "holes": [{"kind": "disk", "center": [0.5, 0.5], "radius": 0.3}],
        "hole_bc": "dirichlet",
        "waveguide": {"half_width_h": 1},
        "zeta": 0.0, "truncation_t": 5, "n": 4, "count": 4, "m_line": 5, "band_count": 2
    }"#;
    let v: Value = serde_json::from_str(&strip_levels_json(req).unwrap()).unwrap();
    let lowest = &v["levels"][0];
    assert_eq!(lowest["class"], "in_gap");
    assert!(lowest["beta"].as_f64().unwrap() > 1.0);
}

#[test]
fn geometry_issues_are_listed() {
    let ok = check_geometry_json(r#"{"holes": [{"kind": "disk", "center": [0.5, 0.5], "radius": 0.3}]}"#).unwrap();
    assert_eq!(ok, "[]");
    let bad = check_geometry_json(
        r#"{"holes": [{"kind": "disk", "center": [0.4, 0.5], "radius": 0.2}, {"kind": "disk", "center": [0.6, 0.5], "radius": 0.2}]}"#,
    )
    .unwrap();
    assert!(bad.contains("overlap"), "{bad}");
}
