//! Relaxation properties of the profile LP against the exhaustive grid
//! optimum, on seeded random instances.

mod common;

use common::small_random_instance;
use espopt::auction::{GridMode, ReserveGrid};
use espopt::baselines::brute_force_optimum;
use espopt::model::{
    check_lp_feasibility, integral_embedding, solve_profile_lp, LpBuildOptions,
};
use espopt::rounding::{pro_lpr_run, RoundingOptions};
use espopt::simplex::SimplexOptions;

#[test]
fn lp_upper_bounds_grid_optimum() {
    for seed in 0..30 {
        let ds = small_random_instance(seed);
        let grid = ReserveGrid::build(&ds, GridMode::OwnBids).unwrap();
        let best = brute_force_optimum(&ds, &grid, 0).unwrap();
        let (sol, report, _) = solve_profile_lp(
            &ds,
            &grid,
            &LpBuildOptions::default(),
            &SimplexOptions::default(),
        )
        .unwrap();
        assert!(
            sol.objective >= best.value - 1e-9 * (1.0 + best.value.abs()),
            "seed {seed}: lp {} < grid optimum {}",
            sol.objective,
            best.value
        );
        assert!(report.max_residual <= 1e-7);
        let feas = check_lp_feasibility(&ds, &grid, &sol, 1e-7).unwrap();
        assert!(feas.feasible, "seed {seed}: {:?}", feas.violated_rows);
    }
}

#[test]
fn enlarging_grids_never_shrinks_the_optimum() {
    for seed in 0..10 {
        let ds = small_random_instance(seed);
        let own = ReserveGrid::build(&ds, GridMode::OwnBids).unwrap();
        let shared = ReserveGrid::build(&ds, GridMode::SharedBids).unwrap();
        let solve = |grid: &ReserveGrid| {
            solve_profile_lp(&ds, grid, &LpBuildOptions::default(), &SimplexOptions::default())
                .unwrap()
                .0
                .objective
        };
        let own_obj = solve(&own);
        let shared_obj = solve(&shared);
        assert!(
            shared_obj >= own_obj - 1e-9 * (1.0 + own_obj.abs()),
            "seed {seed}: shared {shared_obj} < own {own_obj}"
        );
    }
}

#[test]
fn embedding_the_grid_optimum_rounds_to_itself() {
    let ds = small_random_instance(77);
    let grid = ReserveGrid::build(&ds, GridMode::OwnBids).unwrap();
    let best = brute_force_optimum(&ds, &grid, 0).unwrap();
    let sol = integral_embedding(&ds, &best.reserves, &grid).unwrap();
    assert_eq!(sol.objective, best.value);
    // point-mass rounding can only reproduce the embedded vector
    let outcome = pro_lpr_run(&ds, &sol, &RoundingOptions::new(256, 9)).unwrap();
    assert_eq!(outcome.estimate, best.value.max(outcome.zero_revenue));
    assert_eq!(outcome.best_revenue, best.value.max(outcome.zero_revenue));
}

#[test]
fn solved_instances_round_trip_objective_bits() {
    let ds = small_random_instance(5);
    let grid = ReserveGrid::build(&ds, GridMode::OwnBids).unwrap();
    let run = || {
        solve_profile_lp(&ds, &grid, &LpBuildOptions::default(), &SimplexOptions::default())
            .unwrap()
            .0
    };
    let a = run();
    let b = run();
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a.s.len(), b.s.len());
}
