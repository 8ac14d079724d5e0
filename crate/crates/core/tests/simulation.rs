use std::path::Path;

use rrs::ldpc::{peg, LdpcCode};
use rrs::sim::{fixture_dir, run_campaign, run_campaign_with_jobs, Scheme, SimConfig, StopRule};
use rrs::{Configuration, Constellation, ThresholdStrategy};

fn fixture(name: &str) -> LdpcCode {
    let text = std::fs::read_to_string(fixture_dir().join(name)).unwrap();
    LdpcCode::from_alist(&text).unwrap()
}

fn config(code: LdpcCode, scheme: Scheme, order: usize, db: f64, blocks: usize) -> SimConfig {
    let c = Constellation::uniform_pam(order).unwrap();
    let configuration = (scheme == Scheme::Rrs).then(|| Configuration::alternating(order));
    SimConfig::new(c, code, scheme, configuration, ThresholdStrategy::Fixed, vec![db])
        .unwrap()
        .with_seed(99)
        .with_stop(StopRule {
            max_blocks: blocks,
            target_frame_errors: usize::MAX,
        })
        .unwrap()
}

#[test]
fn bundled_fixtures_are_reproducible() {
    for (name, n, m) in [("small_n12.alist", 12, 6), ("peg_n2000_r12.alist", 2000, 1000)] {
        let bundled = std::fs::read_to_string(fixture_dir().join(name)).unwrap();
        assert_eq!(peg(n, m, 3).unwrap().to_alist(), bundled, "{name}");
    }
}

/// With binary signalling the soft metric carries |y|, so RRS and DR see
/// the same reliabilities and their error rates agree.
#[test]
fn binary_soft_reconciliation_matches_direct() {
    let code = peg(200, 100, 3).unwrap();
    let dr = run_campaign(&config(code.clone(), Scheme::Dr, 2, -0.5, 1000)).unwrap();
    let rrs = run_campaign(&config(code, Scheme::Rrs, 2, -0.5, 1000)).unwrap();
    let (a, b) = (&dr[0], &rrs[0]);
    let bar = (a.ber_std_error.powi(2) + b.ber_std_error.powi(2)).sqrt();
    assert!(a.ber > 0.0 && b.ber > 0.0);
    assert!((a.ber - b.ber).abs() <= 4.0 * bar, "DR {} RRS {} +- {bar}", a.ber, b.ber);
}

#[test]
fn soft_beats_hard_on_pam4() {
    let code = fixture("small_n12.alist");
    let rrh = run_campaign(&config(code.clone(), Scheme::Rrh, 4, 5.0, 2000)).unwrap();
    let rrs = run_campaign(&config(code, Scheme::Rrs, 4, 5.0, 2000)).unwrap();
    assert!(rrs[0].ber < rrh[0].ber, "RRS {} RRH {}", rrs[0].ber, rrh[0].ber);
    let leak = rrs[0].leakage.as_ref().unwrap();
    assert_eq!(leak.len(), 4);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = config(fixture("small_n12.alist"), Scheme::Rrs, 4, 3.0, 400);
    let one = run_campaign_with_jobs(&cfg, 1).unwrap();
    let three = run_campaign_with_jobs(&cfg, 3).unwrap();
    assert_eq!(rrs::sim::ber_csv(&one), rrs::sim::ber_csv(&three));
}

#[test]
fn fixture_directory_exists() {
    assert!(Path::new(&fixture_dir()).join("small_n12.alist").exists());
}
