#![no_main]

use hope::io::Config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(c) = Config::parse(text) {
            let again = Config::parse(&c.to_toml()).expect("serialized config must parse");
            assert_eq!(c, again);
        }
    }
});
