use proptest::prelude::*;

use rds_core::benchmark::{data_profile, BenchRecord, Family, ProblemSpec};
use rds_core::euclidean_pss::Generator;
use rds_core::tangent_pss::Style;

/// Record whose history first reaches the 1e-2 target at `t` evaluations
/// (never when `t` is `None`).
fn record(style: Style, instance: usize, t: Option<usize>) -> BenchRecord {
    let m = 3;
    let mut history = vec![(0, 1.0)];
    match t {
        Some(0) => history[0].1 = 0.0,
        Some(t) => {
            history.push((t / 2, 0.5));
            history.push((t, 0.001));
        }
        None => history.push((50, 0.5)),
    }
    BenchRecord {
        problem: ProblemSpec::derived(Family::BarycenterAmbient, m, 5, 0, instance),
        instance,
        solver_id: style.name().to_string(),
        style,
        generator: Generator::PlusMinus,
        rotate: false,
        budget: 400,
        f0: 1.0,
        final_f: history.last().unwrap().1,
        evals: history.last().unwrap().0,
        history,
        f_star: 0.0,
        error: None,
    }
}

proptest! {
    #[test]
    fn curves_are_monotone_bounded_and_respect_dominance(
        times in prop::collection::vec((prop::option::of(1usize..400), 0usize..400), 1..30)
    ) {
        let mut records = Vec::new();
        for (i, (t, slack)) in times.iter().enumerate() {
            // the intrinsic side is never slower than the projected side
            let faster = t.map(|t| t.saturating_sub(*slack).max(1));
            records.push(record(Style::Intrinsic, i, faster));
            records.push(record(Style::Projected, i, *t));
        }
        let p = data_profile(&records, 1e-2, 100).unwrap();
        for c in p.curves.values() {
            prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(c.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let (a, b) = (&p.curves["intrinsic"], &p.curves["projected"]);
        prop_assert!(a.iter().zip(b).all(|(x, y)| x >= y));
    }
}
