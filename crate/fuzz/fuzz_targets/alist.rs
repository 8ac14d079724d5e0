#![no_main]

use libfuzzer_sys::fuzz_target;
use rrs::ldpc::LdpcCode;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(code) = LdpcCode::from_alist(text) {
        let again = LdpcCode::from_alist(&code.to_alist()).expect("round trip");
        assert_eq!(again, code);
    }
});
