mod common;

use common::manufactured;

#[test]
fn exact_field_is_recovered() {
    let m = manufactured(64);
    let err = m.relative_error();
    assert!(err < 1e-8, "error {err:.3e}");
}

#[test]
fn error_decays_spectrally() {
    let errs: Vec<f64> = [12, 16, 24, 32]
        .iter()
        .map(|&n| manufactured(n).relative_error())
        .collect();
    eprintln!("{errs:?}");
    assert!(
        errs.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-11),
        "{errs:?}"
    );
    assert!(errs[1] / errs[3] >= 1e4, "{errs:?}");
}
