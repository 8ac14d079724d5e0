#![no_main]

use libfuzzer_sys::fuzz_target;
use rrs::ldpc::{decode, peg};

// Bytes become LAPPRs (including non-finite values) and a target syndrome.
fuzz_target!(|data: &[u8]| {
    let code = peg(24, 12, 3).expect("fixed code");
    if data.len() < 8 * code.n() + code.m() / 8 + 2 {
        return;
    }
    let (llr_bytes, rest) = data.split_at(8 * code.n());
    let lapprs: Vec<f64> = llr_bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let target: Vec<u8> = (0..code.m()).map(|c| (rest[c / 8] >> (c % 8)) & 1).collect();
    let max_iter = rest[rest.len() - 1] as usize % 60;
    if let Ok(r) = decode(&code, &lapprs, &target, max_iter) {
        assert_eq!(r.bits.len(), code.n());
        if r.converged {
            assert_eq!(code.syndrome(&r.bits).unwrap(), target);
        }
    }
});
