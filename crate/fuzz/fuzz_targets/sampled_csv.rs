#![no_main]

use hope::envelope::parse_sampled_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = parse_sampled_csv(text) {
            assert_eq!(s.values.len(), s.xs.len() * s.ys.len() * s.zs.len());
            let v = s.value(1.0, 1.0, 0.3, 0.7, 0.0);
            assert!(v.is_finite());
        }
    }
});
