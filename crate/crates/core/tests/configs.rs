use std::path::PathBuf;

use swarmabs::config::{read_json, schema_of, AtlasConfig, ScenarioConfig};

fn bundled() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn bundled_configs_round_trip() {
    let paths = bundled();
    assert!(paths.len() >= 10);
    for p in paths {
        let raw = read_json(&p).unwrap();
        if schema_of(&raw).is_some_and(|s| s.contains("/atlas/")) {
            let a = AtlasConfig::load(&p, &[]).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            let again = AtlasConfig::from_value(serde_json::to_value(&a).unwrap()).unwrap();
            assert_eq!(a, again, "{}", p.display());
        } else {
            let c =
                ScenarioConfig::load(&p, &[]).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            assert_eq!(
                ScenarioConfig::from_value(c.to_value()).unwrap(),
                c,
                "{}",
                p.display()
            );
            c.resolve()
                .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
}

#[test]
fn override_reaches_nested_keys() {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/pd_si_4.json");
    let c = ScenarioConfig::load(&p, &[("integration.duration".into(), "2.5".into())]).unwrap();
    assert_eq!(c.resolve().unwrap().duration, 2.5);
    let bad = ScenarioConfig::load(&p, &[("integration.nope".into(), "1".into())]);
    assert!(bad.is_err());
}
