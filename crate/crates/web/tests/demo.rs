use serde_json::Value;
use suprafix_web::{ciric_heatmap_json, fredholm_json, orbit_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn orbit_of_x_over_three_carries_bounds() {
    let v = parse(orbit_json("x/3", 0.0, 1.0, "poly", 1.0, 1.0, 50, 1, 1.0 / 3.0).unwrap());
    let pts = v["points"].as_array().unwrap();
    assert!((pts[1].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
    let bounds = v["bounds"].as_array().unwrap();
    let disp = v["displacements"].as_array().unwrap();
    let mut checked = 0;
    for (b, d) in bounds.iter().zip(disp) {
        if let Some(b) = b.as_f64() {
            assert!(d.as_f64().unwrap() <= b * (1.0 + 1e-9));
            checked += 1;
        }
    }
    assert!(checked > 10);
    assert!(!v["tail_bounds"].as_array().unwrap().is_empty());
    assert_eq!(v["converged"], true);
}

#[test]
fn orbit_without_rate_has_no_bounds() {
    let v = parse(orbit_json("x/2", 0.0, 1.0, "absolute", 0.0, 1.0, 20, 1, 1.5).unwrap());
    assert!(v["tail_bounds"].as_array().unwrap().is_empty());
    assert!(v["bounds"].as_array().unwrap().iter().all(Value::is_null));
}

#[test]
fn orbit_rejects_bad_input() {
    assert!(orbit_json("x +", 0.0, 1.0, "poly", 1.0, 1.0, 10, 1, 0.5).is_err());
    assert!(orbit_json("x", 0.0, 1.0, "cubic", 1.0, 1.0, 10, 1, 0.5).is_err());
    assert!(orbit_json("x + 2", 0.0, 1.0, "poly", 1.0, 1.0, 10, 1, 0.5).is_err());
}

#[test]
fn fredholm_separable_solution() {
    let v = parse(fredholm_json("x*t/2", "x", 0.0, 1.0, 41, "simpson", 1.0).unwrap());
    assert_eq!(v["refused"], false);
    assert_eq!(v["certificate"]["valid"], true);
    let nodes = v["nodes"].as_array().unwrap();
    let vals = v["values"].as_array().unwrap();
    for (x, f) in nodes.iter().zip(vals) {
        let (x, f) = (x.as_f64().unwrap(), f.as_f64().unwrap());
        assert!((f - 1.2 * x).abs() < 1e-8, "{x} {f}");
    }
}

#[test]
fn fredholm_refuses_large_kernel() {
    let v = parse(fredholm_json("2", "1", 0.0, 1.0, 11, "trapezoid", 1.0).unwrap());
    assert_eq!(v["refused"], true);
    assert_eq!(v["certificate"]["valid"], false);
    assert!(v.get("values").is_none());
    assert!(fredholm_json("1", "", 0.0, 1.0, 11, "midpoint", 1.0).is_err());
}

#[test]
fn heatmap_for_half_map() {
    let v = parse(ciric_heatmap_json("x/2", 0.0, 1.0, "absolute", 0.0, 0.6, 1, 5).unwrap());
    let rows = v["ratios"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.as_array().unwrap().len() == 5));
    let worst = v["worst"].as_f64().unwrap();
    assert!(worst > 0.0 && worst <= 1.0);
    assert_eq!(v["satisfied"], true);
    assert!(ciric_heatmap_json("x/2", 0.0, 1.0, "absolute", 0.0, 1.0, 1, 5).is_err());
    assert!(ciric_heatmap_json("x/2", 0.0, 1.0, "absolute", 0.0, 0.5, 1, 1).is_err());
}
