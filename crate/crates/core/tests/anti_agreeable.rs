use mgsched::generators::{generate, GenSpec};
use mgsched::{
    classify_variants, offline_optimal, simulate, Instance64, Packet64, PolicyParams64, Variant,
};

fn at(id: u64, release: i64, deadline: i64, value: f64) -> Packet64 {
    Packet64::new(id, release, deadline, value)
}

/// Anti-agreeable in slack and value, yet EDF over the provisional schedule
/// spends slot 3 on the cheap packet 1 and later loses a 3.875 packet.
fn slack_value_instance() -> Instance64 {
    Instance64::new(vec![
        at(0, 1, 3, 5.203125),
        at(1, 1, 5, 1.921875),
        at(2, 2, 5, 3.875),
        at(3, 3, 6, 3.875),
        at(4, 3, 6, 3.875),
        at(5, 4, 4, 9.671875),
        at(6, 4, 5, 6.09375),
        at(7, 4, 5, 6.09375),
    ])
}

#[test]
fn unbounded_mg_is_not_optimal_for_anti_agreeable_slack_value() {
    let inst = slack_value_instance();
    assert!(classify_variants(&inst).satisfies(Variant::AntiAgreeableSlackValue));
    let trace = simulate(&inst, &PolicyParams64::mg_unbounded()).unwrap();
    let opt = offline_optimal(&inst).unwrap();
    assert_eq!(trace.total_value, 30.640625);
    assert_eq!(opt.total_value, 32.59375);
    assert_eq!(
        trace.steps.iter().find(|s| s.t == 3).and_then(|s| s.sent),
        Some(1)
    );
    assert!(!opt.assignments.iter().any(|&(id, _)| id == 1));
}

#[test]
fn unbounded_mg_matches_opt_on_anti_agreeable_value_and_deadline_value() {
    for variant in [
        Variant::AntiAgreeableValue,
        Variant::AntiAgreeableDeadlineValue,
    ] {
        for seed in 0..200 {
            let inst: Instance64 =
                generate(&GenSpec::new(variant, 1 + (seed as usize % 30), seed)).unwrap();
            let alg = simulate(&inst, &PolicyParams64::mg_unbounded())
                .unwrap()
                .total_value;
            let opt = offline_optimal(&inst).unwrap().total_value;
            assert_eq!(alg, opt, "{variant:?} seed {seed}");
        }
    }
}
