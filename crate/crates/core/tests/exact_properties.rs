use introspection::closed_form::{additive_players, product_measure};
use introspection::exact::{
    build_transition_matrix, solve, stationarity_residual, stationary_distribution,
};
use introspection::model::{GameSpec, PlayerParams, PopulationSpec};
use introspection::SolveMethod;
use proptest::prelude::*;

fn arb_params() -> impl Strategy<Value = PlayerParams<f64>> {
    (0.0f64..10.0, 0.0f64..0.45, 0.0f64..0.45)
        .prop_map(|(b, c, d)| PlayerParams::new(b, c, d).unwrap())
}

/// Random heterogeneous public goods population; `beta_max` bounds the
/// selection intensity so power iteration mixes quickly.
fn arb_pgg_population(
    n: std::ops::RangeInclusive<usize>,
    beta_max: f64,
) -> impl Strategy<Value = PopulationSpec<f64>> {
    n.prop_flat_map(move |n| {
        (
            prop::collection::vec(0.05f64..5.0, n),
            prop::collection::vec(0.05f64..3.0 * n as f64, n),
            prop::collection::vec(
                (0.0f64..beta_max, 0.0f64..0.45, 0.0f64..0.45)
                    .prop_map(|(b, c, d)| PlayerParams::new(b, c, d).unwrap()),
                n,
            ),
        )
            .prop_map(|(a, r, p)| PopulationSpec::new(GameSpec::pgg(a, r).unwrap(), p).unwrap())
    })
}

fn arb_table_population() -> impl Strategy<Value = PopulationSpec<f64>> {
    (2usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(-3.0f64..3.0, (1 << n) * n),
            prop::collection::vec(arb_params(), n),
        )
            .prop_map(move |(t, p)| PopulationSpec::new(GameSpec::table(n, t).unwrap(), p).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn rows_are_stochastic(pop in prop_oneof![arb_pgg_population(1..=8, 10.0), arb_table_population()]) {
        let t = build_transition_matrix(&pop).unwrap();
        let n = pop.n_players();
        for s in 0..t.n_states() {
            prop_assert!((t.row_sum(s) - 1.0).abs() < 1e-12);
            prop_assert_eq!(t.row(s).count(), n);
            for (target, p) in t.row(s) {
                prop_assert_eq!((target ^ s).count_ones(), 1);
                prop_assert!((0.0..=1.0).contains(&p));
            }
            prop_assert!((0.0..=1.0).contains(&t.stay_probability(s)));
        }
    }

    #[test]
    fn methods_agree(pop in prop_oneof![arb_pgg_population(1..=10, 2.0), arb_table_population()]) {
        let t = build_transition_matrix(&pop).unwrap();
        let direct = stationary_distribution(&t, SolveMethod::Direct).unwrap();
        let power = stationary_distribution(&t, SolveMethod::Power).unwrap();
        prop_assert!(direct.max_abs_diff(&power) < 1e-9);
        prop_assert!(stationarity_residual(&t, &direct) < 1e-11);
        prop_assert!(stationarity_residual(&t, &power) < 1e-11);
    }

    #[test]
    fn product_measure_for_additive_games(pop in arb_pgg_population(1..=10, 10.0)) {
        let exact = solve(&pop, SolveMethod::Direct).unwrap();
        let ps: Vec<f64> = additive_players(&pop, 1e-9).unwrap().iter().map(|c| c.p).collect();
        let formula = product_measure(&ps).unwrap();
        prop_assert!(exact.max_abs_diff(&formula) < 1e-10);
        let marginals = exact.marginals();
        for (m, p) in marginals.iter().zip(&ps) {
            prop_assert!((m - p).abs() < 1e-10);
        }
    }
}

#[test]
fn residual_at_twelve_players() {
    let n = 12;
    let alphas: Vec<f64> = (1..=n).map(|i| 0.3 * i as f64).collect();
    let rs: Vec<f64> = (1..=n).map(|i| (i % 5) as f64 * 6.0 + 1.0).collect();
    let players: Vec<_> = (0..n)
        .map(|i| PlayerParams::new(0.4 + 0.1 * i as f64, 0.05, 0.1).unwrap())
        .collect();
    let pop = PopulationSpec::new(GameSpec::pgg(alphas, rs).unwrap(), players).unwrap();
    let t = build_transition_matrix(&pop).unwrap();
    for method in [SolveMethod::Direct, SolveMethod::Power] {
        let pi = stationary_distribution(&t, method).unwrap();
        assert!(stationarity_residual(&t, &pi) < 1e-11, "{method:?}");
    }
}

#[test]
fn stag_hunt_is_not_a_product_measure() {
    let pop = PopulationSpec::uniform(
        GameSpec::stag_hunt(1.0, 0.6, 0.1).unwrap(),
        PlayerParams::new(5.0, 0.05, 0.15).unwrap(),
    );
    let pi = solve(&pop, SolveMethod::Direct).unwrap();
    let own_product = product_measure(&pi.marginals()).unwrap();
    assert!(pi.max_abs_diff(&own_product) > 1e-3);
}

#[test]
fn volunteers_dilemma_is_not_a_product_measure() {
    let pop = PopulationSpec::uniform(
        GameSpec::volunteers_dilemma(4, 1.0, 0.3).unwrap(),
        PlayerParams::new(4.0, 0.05, 0.05).unwrap(),
    );
    let pi = solve(&pop, SolveMethod::Direct).unwrap();
    let own_product = product_measure(&pi.marginals()).unwrap();
    assert!(pi.max_abs_diff(&own_product) > 1e-3);
}

#[test]
fn mutation_free_chain_is_solvable() {
    let pop = PopulationSpec::uniform(
        GameSpec::uniform_pgg(5, 1.0, 3.0).unwrap(),
        PlayerParams::new(3.0, 0.0, 0.0).unwrap(),
    );
    let pi = solve(&pop, SolveMethod::Auto).unwrap();
    let ps: Vec<f64> = additive_players(&pop, 1e-9)
        .unwrap()
        .iter()
        .map(|c| c.p)
        .collect();
    assert!(pi.max_abs_diff(&product_measure(&ps).unwrap()) < 1e-12);
}

#[test]
fn sparse_solve_beyond_dense_cap() {
    let n = 14;
    let alphas: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let pop = PopulationSpec::uniform(
        GameSpec::pgg(alphas, vec![2.0 * n as f64; n]).unwrap(),
        PlayerParams::new(0.5, 0.05, 0.15).unwrap(),
    );
    let pi = solve(&pop, SolveMethod::Auto).unwrap();
    let ps: Vec<f64> = additive_players(&pop, 1e-9)
        .unwrap()
        .iter()
        .map(|c| c.p)
        .collect();
    let expected = ps.iter().sum::<f64>() / n as f64;
    assert!((pi.cooperation_probability() - expected).abs() < 1e-10);
}
