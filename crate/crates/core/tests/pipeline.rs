use stopgo_core::game::enumerate_outcomes;
use stopgo_core::info::{exact_information, sampled_information, GridSpec, InfoSettings};
use stopgo_core::likelihood::{dataset_likelihood, simulate_dataset};
use stopgo_core::selection::{exclusion_filter, likelihood_odds};
use stopgo_core::*;

fn small_grid() -> GridResolution {
    GridResolution {
        epsilon: 6,
        alpha: 4,
        delta: 3,
        pi_per: 3,
    }
}

fn micro_datasets(design: GameDesign) -> Vec<SessionDataset> {
    let schedule = MatchingSchedule::rotation(2, 1).unwrap();
    let all = enumerate_outcomes();
    let mut out = Vec::new();
    for &x in &all {
        for &y in &all {
            out.push(SessionDataset::from_schedule(design, &schedule, &[x, y]).unwrap());
        }
    }
    out
}

#[test]
fn micro_likelihoods_sum_to_one() {
    for (a, pi) in [(2.0, 0.5), (4.7, 0.15), (6.0, 0.9)] {
        let design = GameDesign::new(a, pi).unwrap();
        let grid = ParamGrid::with_resolution(&design, small_grid()).unwrap();
        for m in ModelId::ALL {
            let total: f64 = micro_datasets(design)
                .iter()
                .map(|d| dataset_likelihood(m, d, &grid).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "{m} at ({a}, {pi}): {total}");
        }
    }
}

#[test]
fn sampled_estimate_tracks_exact_value() {
    let design = GameDesign::new(2.0, 0.5).unwrap();
    let mut settings = InfoSettings::new(ModelId::CLASSIC.to_vec()).unwrap();
    settings.grid = GridSpec::Resolution(small_grid());
    let schedule = MatchingSchedule::rotation(2, 1).unwrap();
    let exact = exact_information(&design, &settings, &schedule, 1_000_000).unwrap();
    let sampled = sampled_information(&design, &settings, &schedule, 50_000, 11).unwrap();
    assert!(!exact.saturated);
    let rel = (sampled.value - exact.value).abs() / exact.value;
    assert!(rel < 0.1, "exact {} sampled {}", exact.value, sampled.value);
}

#[test]
fn selection_recovers_the_generating_model() {
    let design = GameDesign::new(2.0, 0.5).unwrap();
    let schedule = perfect_stranger_schedule(100, 3, 9).unwrap();
    let params = ModelParams::new(0.05, 0.5, 0.1, 0.5);
    for m in ModelId::ALL {
        let data = simulate_dataset(m, &params, &design, &schedule, 21).unwrap();
        let report = likelihood_odds(&[data], &ModelId::ALL, &GridSpec::Resolution(small_grid())).unwrap();
        assert_eq!(report.best(), m);
    }
}

#[test]
fn bot_sessions_survive_a_csv_round_trip_and_are_filtered() {
    let design = GameDesign::classic();
    let csv = "round,pair,p1_id,p2_id,world,p1_action,p2_action,bot_lineage\n\
               1,0,0,2,a,go,left,1\n\
               1,1,1,3,b,stop,right,0\n\
               2,0,0,3,a,go,right,0\n\
               2,1,1,2,b,go,left,0\n";
    let data = SessionDataset::read_csv(design, csv.as_bytes()).unwrap();
    let kept = exclusion_filter(&data);
    // players 0 and 2 are tainted in round 1, then taint 3 and 1 in round 2
    assert_eq!(kept.len(), 1);
    assert_eq!(kept.records()[0].round, 1);
    assert_eq!(kept.records()[0].p1, 1);
}
