use gamehedge_web::demo::{hedge, plot, price, sample_instance};
use serde_json::Value;

fn parse(text: String) -> Value {
    serde_json::from_str(&text).unwrap()
}

#[test]
fn prices_the_spread_example() {
    let inst = sample_instance("canon-1", 0).unwrap();
    let v = parse(price(&inst, 3).unwrap());
    assert_eq!(v["ask"]["exact"], "2");
    assert_eq!(v["bid"]["exact"], "7/4");
    assert_eq!(v["bid"]["approx"], "1.750");
    assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
}

#[test]
fn plot_samples_every_layer() {
    let inst = sample_instance("canon-1", 0).unwrap();
    let v = parse(plot(&inst, "seller", "0", -2.0, 2.0, 5).unwrap());
    let curves = v["curves"].as_array().unwrap();
    let names: Vec<&str> = curves.iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["value", "rebalanced", "continuation"]);
    let value = &curves[0]["points"];
    assert_eq!(value[2][0], 0.0);
    assert_eq!(value[2][1], 2.0);

    let leaf = parse(plot(&inst, "buyer", "u", -1.0, 1.0, 3).unwrap());
    let leaf_names: Vec<&str> = leaf["curves"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(!leaf_names.contains(&"continuation"), "{leaf_names:?}");
    assert!(plot(&inst, "seller", "nowhere", -1.0, 1.0, 3).is_err());
    assert!(plot(&inst, "seller", "0", 1.0, -1.0, 3).is_err());
}

#[test]
fn hedges_verify_from_the_price() {
    let inst = sample_instance("canon-1", 0).unwrap();
    let v = parse(hedge(&inst, "seller", "2", "0").unwrap());
    assert_eq!(v["passed"], true);
    let v = parse(hedge(&inst, "buyer", "-7/4", "0").unwrap());
    assert_eq!(v["passed"], true);
    assert!(hedge(&inst, "seller", "3/2", "0").is_err());
}

#[test]
fn random_samples_are_seeded() {
    let a = sample_instance("random-2-3", 9).unwrap();
    assert_eq!(a, sample_instance("random-2-3", 9).unwrap());
    assert_ne!(a, sample_instance("random-2-3", 10).unwrap());
    assert!(price(&a, 2).is_ok());
    assert!(sample_instance("random-9-2", 0).is_err());
    assert!(sample_instance("random-x", 0).is_err());
}
