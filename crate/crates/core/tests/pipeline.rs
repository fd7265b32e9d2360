use mgsched::analysis::{sweep, SweepConfig};
use mgsched::generators::{generate, generate_lower_bound, GenSpec, LowerBoundSpec, Role};
use mgsched::io::{instance_from_str, instance_to_string};
use mgsched::{
    empirical_ratio, simulate, Instance32, Instance64, PolicyParams32, PolicyParams64, Variant, PHI,
};

#[test]
fn generated_instances_round_trip_through_jsonl() {
    for variant in Variant::ALL {
        let inst: Instance64 = generate(&GenSpec::new(variant, 25, 11)).unwrap();
        let text = instance_to_string(&inst);
        let back: Instance64 = instance_from_str(&text).unwrap();
        assert_eq!(back, inst, "{variant:?}");
        assert_eq!(instance_to_string(&back), text);
    }
}

#[test]
fn single_and_double_precision_agree_on_grid_values() {
    let spec = GenSpec::new(Variant::General, 30, 5);
    let a: Instance64 = generate(&spec).unwrap();
    let b: Instance32 = generate(&spec).unwrap();
    let ta = simulate(&a, &PolicyParams64::mg(PHI, 1.25).unwrap()).unwrap();
    let tb = simulate(&b, &PolicyParams32::mg(PHI as f32, 1.25).unwrap()).unwrap();
    let ids_a: Vec<u64> = ta.sent_ids().collect();
    let ids_b: Vec<u64> = tb.sent_ids().collect();
    assert_eq!(ids_a, ids_b);
}

#[test]
fn lower_bound_trace_only_sends_h_packets() {
    let params = PolicyParams64::mg(PHI, PHI).unwrap();
    for k in 2..=7 {
        let lb = generate_lower_bound::<f64>(&LowerBoundSpec::new(k)).unwrap();
        let trace = simulate(&lb.instance, &params).unwrap();
        assert!(
            trace
                .sent_ids()
                .all(|id| lb.role_of(id).unwrap().role == Role::H),
            "k = {k}"
        );
        let r = empirical_ratio(&lb.instance, &params).unwrap();
        assert!(r.ratio > 1.0, "k = {k}");
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let grid = [
        PolicyParams64::mg(2.0, 1.5).unwrap(),
        PolicyParams64::greedy(),
    ];
    let mut cfg = SweepConfig::grid(&[Variant::General, Variant::AgreeableValue], &grid, 150, 3);
    cfg.jobs = 1;
    let one = sweep(&cfg).unwrap();
    cfg.jobs = 3;
    let three = sweep(&cfg).unwrap();
    assert_eq!(one, three);
    assert_eq!(one.to_csv(), three.to_csv());
    assert!(one
        .rows
        .iter()
        .all(|r| r.max_ratio >= 1.0 && r.max_ratio <= 2.0));
}
