use hope::envelope::parse_sampled_csv;
use hope::io::output::{csv_bytes, Cell};
use hope::io::{parse_manifest, Config};
use proptest::prelude::*;

proptest! {
    #[test]
    fn config_survives_round_trip(
        k0 in 0.1f64..20.0,
        theta in 0.0f64..1.5,
        h in 0.05f64..2.0,
        p in 0usize..6,
        orders in 1usize..20,
        w in 1.0f64..100.0,
    ) {
        let text = format!(
            "[wave]\nk0 = {k0}\ntheta = {theta}\nh = {h}\n[envelope]\nkind = \"tanh-slab\"\neps_prime = 2.0\nd = {}\nw = {w}\n[grid]\np_max = {p}\n[run]\norders = {orders}\nls = [1]\ngrowth_window = [0, {orders}]\n",
            h / 2.0
        );
        let c = match Config::parse(&text) {
            Ok(c) => c,
            Err(_) => return Ok(()),
        };
        let again = Config::parse(&c.to_toml()).unwrap();
        prop_assert_eq!(c, again);
    }

    #[test]
    fn config_parser_never_panics(text in "\\PC{0,200}") {
        let _ = Config::parse(&text);
    }

    #[test]
    fn sampled_csv_parser_never_panics(text in "[xyzvalue,#0-9.\\-e \n]{0,200}") {
        let _ = parse_sampled_csv(&text);
    }

    #[test]
    fn manifest_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_manifest(&text);
    }

    #[test]
    fn emitted_floats_parse_back(vals in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..20)) {
        let rows: Vec<Vec<Cell>> = vals.iter().map(|v| vec![(*v).into()]).collect();
        let bytes = csv_bytes(&["v"], &rows).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let back: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
        prop_assert_eq!(back, vals);
    }
}

#[test]
fn sampled_grid_interpolates_samples() {
    let mut text = String::from("x,y,z,value\n");
    for x in [0.0, 0.5] {
        for z in [-0.5, 0.5] {
            text.push_str(&format!("{x},0,{z},{}\n", x + z));
        }
    }
    let s = parse_sampled_csv(&text).unwrap();
    assert_eq!(s.xs, vec![0.0, 0.5]);
    assert!((s.value(1.0, 1.0, 0.25, 0.0, 0.0) - 0.25).abs() < 1e-14);
}

#[test]
fn fuzz_corpus_seeds_parse_without_panicking() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let mut seen = 0;
    for (target, parse) in [
        (
            "config_parse",
            (|t: &str| Config::parse(t).is_ok()) as fn(&str) -> bool,
        ),
        ("sampled_csv", |t| parse_sampled_csv(t).is_ok()),
        ("manifest_json", |t| parse_manifest(t).is_ok()),
    ] {
        let mut ok = 0;
        for entry in std::fs::read_dir(root.join(target)).unwrap() {
            let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
            ok += parse(&text) as usize;
            seen += 1;
        }
        assert!(ok > 0, "no valid seed for {target}");
    }
    assert!(seen >= 9);
}
