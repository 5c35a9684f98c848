use jacobnet::datasets::Template;
use jacobnet_core::dataset::{template_value, CONSTANT_COLUMNS};
use jacobnet_core::kinematics::{PUMA560_A, PUMA560_ALPHA, PUMA560_D};

#[test]
fn checked_in_template_matches_the_constants() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/puma560_template.toml");
    let t: Template = toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(t.d, PUMA560_D);
    assert_eq!(t.a, PUMA560_A);
    assert_eq!(t.alpha, PUMA560_ALPHA);
    let flat: Vec<f64> = t.d.iter().chain(&t.a).chain(&t.alpha).copied().collect();
    for col in CONSTANT_COLUMNS {
        assert_eq!(flat[col], template_value(col));
    }
}
