use espopt::auction::{GridMode, ReserveGrid};
use espopt::instances::{gen_correlated_lognormal, LogNormalParams};
use espopt::model::{build_profile_lp, to_standard_form, LpBuildOptions};
use espopt::rng::{derive_seed, substream};
use espopt::simplex::{solve_simplex, SimplexOptions};
use rand::Rng;

#[test]
fn probe() {
    let i = 1u64;
    let mu: f64 = substream(derive_seed(0x7777, i), 0).random();
    let ds = gen_correlated_lognormal(&LogNormalParams::new(mu, 0.1, 0.0, 100, derive_seed(0x8888, i)).unwrap());
    let grid = ReserveGrid::build(&ds, GridMode::EquallySpaced(30)).unwrap();
    let model = build_profile_lp(&ds, &grid, &LpBuildOptions::default()).unwrap();
    let (lp, _) = to_standard_form(&model).unwrap();
    let mut opts = SimplexOptions::default();
    opts.max_iters = 6000;
    let rep = solve_simplex(&lp, &opts).unwrap();
    eprintln!("done iters={} status={:?}", rep.iterations, rep.status);
}
