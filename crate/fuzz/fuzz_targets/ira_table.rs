#![no_main]

use libfuzzer_sys::fuzz_target;
use rrs::ldpc::expand_ira;

// First two bytes pick the shape; the rest is the address table.
fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let group = 1 + (data[0] % 8) as usize;
    let k = group * (1 + (data[1] % 4) as usize);
    let n = k + group * (1 + (data[1] / 64) as usize);
    if let Ok(table) = std::str::from_utf8(&data[2..]) {
        if let Ok(code) = expand_ira(n, k, group, table) {
            assert_eq!((code.n(), code.m()), (n, n - k));
        }
    }
});
