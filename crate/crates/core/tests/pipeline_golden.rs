//! Hand-built five-stay fixture pushed through every pipeline stage.

use std::path::PathBuf;

use icuae_core::data::*;
use icuae_core::NUM_FEATURES;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn load() -> (Vec<RawEvent>, Vec<StayMeta>) {
    load_events(&fixture("events.csv"), &fixture("stays.csv")).unwrap()
}

fn ev(stay_id: u64, feature_id: usize, time_offset: f64, value: f64) -> RawEvent {
    RawEvent {
        stay_id,
        feature_id,
        time_offset,
        value,
    }
}

fn stay(
    stay_id: u64,
    age: f64,
    care_unit: CareUnit,
    stay_hours: f64,
    first: bool,
    died: bool,
) -> StayMeta {
    StayMeta {
        stay_id,
        age,
        care_unit,
        stay_hours,
        first_icu_stay: first,
        in_hospital_mortality: died,
    }
}

fn bucketed() -> Vec<PatientMatrix> {
    let (events, stays) = load();
    let (kept, _) = apply_cohort_filters(&stays);
    kept.iter()
        .map(|s| {
            let own: Vec<&RawEvent> = events.iter().filter(|e| e.stay_id == s.stay_id).collect();
            bucket_hourly(s.stay_id, own, s.true_hours()).unwrap()
        })
        .collect()
}

#[test]
fn load_reproduces_the_hand_written_records() {
    let (events, stays) = load();
    let want_stays = vec![
        stay(101, 45.0, CareUnit::MICU, 12.0, true, false),
        stay(102, 15.0, CareUnit::CCU, 30.0, true, false),
        stay(103, 16.0, CareUnit::CSRU, 2000.0, true, true),
        stay(104, 70.0, CareUnit::SICU, 48.5, false, false),
        stay(105, 33.0, CareUnit::TSICU, 20.0, true, true),
    ];
    assert_eq!(stays, want_stays);
    let mut want_events: Vec<RawEvent> = (0..NUM_FEATURES)
        .map(|f| ev(101, f, 0.0, 10.0 + f as f64))
        .collect();
    want_events.extend([
        ev(101, 0, 1.4, 50.0),
        ev(101, 0, 1.6, 60.0),
        ev(101, 0, 1.5, 70.0),
        ev(101, 1, 3.2, 10.0),
        ev(101, 1, 2.8, 20.0),
        ev(102, 0, 1.0, 999.0),
        ev(104, 5, 2.0, 999.0),
        ev(103, 0, 0.2, 100.0),
        ev(103, 0, 1999.7, 0.0),
        ev(105, 2, 4.9, 7.0),
        ev(105, 3, 19.8, 3.0),
    ]);
    assert_eq!(events, want_events);
}

#[test]
fn cohort_filters_on_fixture() {
    let (_, stays) = load();
    let (kept, counts) = apply_cohort_filters(&stays);
    let ids: Vec<u64> = kept.iter().map(|s| s.stay_id).collect();
    assert_eq!(ids, vec![101, 103, 105]);
    assert_eq!(counts.dropped_age, 1);
    assert_eq!(counts.dropped_not_first_stay, 1);
    assert_eq!(counts.dropped_stay_length, 0);
}

#[test]
fn bucketing_on_fixture() {
    let m = bucketed();
    let (s101, s103, s105) = (&m[0], &m[1], &m[2]);
    assert_eq!((s101.hours(), s103.hours(), s105.hours()), (12, 2000, 20));
    // t = 1.4 -> hour 1; t = 1.6 and the tie t = 1.5 -> hour 2, averaged.
    assert_eq!(s101.get(1, 0), 50.0);
    assert_eq!(s101.get(2, 0), 65.0);
    // 10 at t = 3.2 and 20 at t = 2.8 share hour 3.
    assert_eq!(s101.get(3, 1), 15.0);
    assert!(!s101.is_observed(2, 1) && !s101.is_observed(4, 1));
    // Past the last hour -> last hour.
    assert_eq!(s103.get(1999, 0), 0.0);
    assert_eq!(s105.get(19, 3), 3.0);
    assert_eq!(s105.get(5, 2), 7.0);
    assert_eq!(s105.observed_mask().iter().filter(|&&o| o).count(), 2);
}

fn fixture_stats() -> NormalizationStats {
    compute_stats(&bucketed()).unwrap()
}

#[test]
fn statistics_on_fixture() {
    let s = fixture_stats();
    // Channel 0 observed cells: 10, 50, 65 (stay 101), 100, 0 (stay 103).
    assert_eq!(s.mean[0], 45.0);
    assert!((s.low[0] - 0.4).abs() < 1e-12);
    assert!((s.high[0] - 98.6).abs() < 1e-12);
    assert_eq!(s.mean[1], 13.0);
    assert_eq!(s.mean[2], 9.5);
    assert!((s.low[2] - 7.05).abs() < 1e-12 && (s.high[2] - 11.95).abs() < 1e-12);
    assert_eq!(s.mean[3], 8.0);
    // Channels seen once are widened around the single value.
    for f in 4..NUM_FEATURES {
        let v = 10.0 + f as f64;
        assert_eq!((s.mean[f], s.low[f], s.high[f]), (v, v - 0.5, v + 0.5));
    }
}

#[test]
fn imputation_on_fixture() {
    let stats = fixture_stats();
    let s105 = &bucketed()[2];
    let filled = impute(s105, &stats, ImputeMode::Backward);
    for h in 0..=5 {
        assert_eq!(filled.get(h, 2), 7.0, "hour {h}");
    }
    for h in 6..20 {
        assert_eq!(filled.get(h, 2), 9.5, "hour {h}");
    }
    // Never observed for this stay: the population mean everywhere.
    assert!((0..20).all(|h| filled.get(h, 0) == 45.0));
    assert!((0..20).all(|h| filled.get(h, 3) == 3.0));
    assert!(!filled.has_missing());
    assert_eq!(filled.observed_mask(), s105.observed_mask());

    let s101 = &bucketed()[0];
    let filled = impute(s101, &stats, ImputeMode::Backward);
    let col0: Vec<f64> = (0..4).map(|h| filled.get(h, 0)).collect();
    assert_eq!(col0, vec![10.0, 50.0, 65.0, 45.0]);
    let col1: Vec<f64> = (0..5).map(|h| filled.get(h, 1)).collect();
    assert_eq!(col1, vec![11.0, 15.0, 15.0, 15.0, 13.0]);
}

#[test]
fn normalization_on_fixture() {
    let stats = fixture_stats();
    let s105 = normalize(
        &impute(&bucketed()[2], &stats, ImputeMode::Backward),
        &stats,
    );
    // 7 sits below the 1st percentile and clamps to 0; the mean 9.5 is the
    // midpoint of [7.05, 11.95].
    assert_eq!(s105.get(0, 2), 0.0);
    assert!((s105.get(6, 2) - 0.5).abs() < 1e-12);
    assert_eq!(s105.get(0, 5), 0.5);
    let s101 = normalize(
        &impute(&bucketed()[0], &stats, ImputeMode::Backward),
        &stats,
    );
    assert_eq!(
        s101.get(0, 0),
        (10.0 - stats.low[0]) / (stats.high[0] - stats.low[0])
    );
    assert_eq!(normalize_value(100.0, 0, &stats), 1.0);
    assert!(s101.grid().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn windowing_on_fixture() {
    let stats = fixture_stats();
    let s101 = normalize(
        &impute(&bucketed()[0], &stats, ImputeMode::Backward),
        &stats,
    );
    let w = window_and_pad(&s101, 64).unwrap();
    assert_eq!(w.true_len, 12);
    let seq = w.seq();
    assert_eq!(seq.len(), 64);
    assert!(seq[12..].iter().all(|row| row.iter().all(|&v| v == 0.0)));
    assert_eq!(seq[11], s101.row(11));
    assert_eq!(w.flat()[37], seq[1][7]);
    assert_eq!(window_and_pad(&s101, 32).unwrap().flat().len(), 960);
}

#[test]
fn pipeline_is_idempotent() {
    assert_eq!(bucketed(), bucketed());
    assert_eq!(fixture_stats(), fixture_stats());
}
