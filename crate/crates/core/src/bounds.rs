//! Executable forms of the worst-case rounding-gap mathematics: the
//! nonlinear program bounding the per-auction mass-versus-probability gap,
//! its closed-form case envelopes, and the product inequality used to
//! decouple high and low reserves.

use crate::error::{Error, Result};

/// Objective of the gap program:
/// `e^(theta-1) [ prod (1 - x_i) + sum_i x_i prod_{j != i} (1 - x_j) ]`.
pub fn program_objective(x: &[f64], theta: f64) -> f64 {
    let mut product = 1.0;
    for &v in x {
        product *= 1.0 - v;
    }
    let mut sum = 0.0;
    for i in 0..x.len() {
        let mut rest = 1.0;
        for (j, &v) in x.iter().enumerate() {
            if j != i {
                rest *= 1.0 - v;
            }
        }
        sum += x[i] * rest;
    }
    (theta - 1.0).exp() * (product + sum)
}

/// Envelope of the program over supports of `k` equal coordinates summing
/// to `2 theta`: `e^(theta-1) (1 - 2 theta / k)^(k-1) (1 - 2 theta / k + 2 theta)`.
pub fn equal_support_bound(theta: f64, k: u32) -> f64 {
    let kf = k as f64;
    let base = 1.0 - 2.0 * theta / kf;
    (theta - 1.0).exp() * base.powi(k as i32 - 1) * (base + 2.0 * theta)
}

/// Envelope over supports with one coordinate at `theta` and `k` equal
/// ones: `e^(theta-1) [ (1 - theta/k)^k + theta (1 - theta) (1 - theta/k)^(k-1) ]`.
pub fn peaked_support_bound(theta: f64, k: u32) -> f64 {
    let kf = k as f64;
    let base = 1.0 - theta / kf;
    (theta - 1.0).exp() * (base.powi(k as i32) + theta * (1.0 - theta) * base.powi(k as i32 - 1))
}

/// The maximizing `theta` of [`equal_support_bound`] for fixed `k`:
/// `k (k - sqrt(k^2 + 4k - 4)) / (4 - 4k)`, the root of the stationarity
/// quadratic that lies in `[0, 1]`.
pub fn equal_support_argmax(k: u32) -> f64 {
    let kf = k as f64;
    kf * (kf - (kf * kf + 4.0 * kf - 4.0).sqrt()) / (4.0 - 4.0 * kf)
}

/// Global bound on the gap program: `2 (sqrt 2 - 1) e^(sqrt 2 - 2)`,
/// attained by the equal-support envelope at `k = 2`.
pub fn worst_case_gap_bound() -> f64 {
    let s = std::f64::consts::SQRT_2;
    2.0 * (s - 1.0) * (s - 2.0).exp()
}

/// The end-to-end guarantee: `1 / (1 + worst_case_gap_bound())`, about 0.684.
pub fn approximation_factor() -> f64 {
    1.0 / (1.0 + worst_case_gap_bound())
}

/// Grid maximum of the gap program.
#[derive(Debug, Clone)]
pub struct ProgramMax {
    pub value: f64,
    /// A maximizing point, coordinates non-decreasing.
    pub argmax: Vec<f64>,
}

/// Maximizes [`program_objective`] over `{ x : sum x_i = 2 theta,
/// 0 <= x_i <= theta }` discretized at steps of `theta / resolution`.
///
/// The objective is symmetric in the coordinates, so only non-decreasing
/// integer compositions of `2 * resolution` are enumerated. Where several
/// grid points tie within numerical tolerance (the case envelopes can cross,
/// leaving a whole face optimal), the first point in enumeration order wins,
/// which is the lexicographically smallest composition.
pub fn grid_program_max(n: usize, theta: f64, resolution: u32) -> Result<ProgramMax> {
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two coordinates".into()));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument("resolution must be at least 2".into()));
    }
    let res = resolution as i64;
    let target = 2 * res;
    let step = theta / res as f64;

    let mut best: Option<(f64, Vec<i64>)> = None;
    let mut stack: Vec<i64> = Vec::with_capacity(n);
    enumerate(n, res, target, 0, &mut stack, &mut |steps: &[i64]| {
        let x: Vec<f64> = steps.iter().map(|&i| i as f64 * step).collect();
        let value = program_objective(&x, theta);
        let improved = best
            .as_ref()
            .map_or(true, |(bv, _)| value > bv + 1e-12 * (1.0 + bv.abs()));
        if improved {
            best = Some((value, steps.to_vec()));
        }
    });
    let (value, steps) =
        best.ok_or_else(|| Error::InvalidArgument("empty feasible grid".into()))?;
    Ok(ProgramMax {
        value,
        argmax: steps.iter().map(|&i| i as f64 * step).collect(),
    })
}

/// Non-decreasing compositions of `remaining` into `n - depth` parts, each
/// in `[min_part, res]`.
fn enumerate(
    n: usize,
    res: i64,
    remaining: i64,
    depth: usize,
    stack: &mut Vec<i64>,
    visit: &mut impl FnMut(&[i64]),
) {
    let parts_left = (n - depth) as i64;
    if parts_left == 1 {
        let last = remaining;
        let min_part = stack.last().copied().unwrap_or(0);
        if last >= min_part && last <= res {
            stack.push(last);
            visit(stack);
            stack.pop();
        }
        return;
    }
    let min_part = stack.last().copied().unwrap_or(0);
    // the remaining parts are at least this one and at most res
    let lo = min_part.max((remaining + parts_left - 1) / parts_left - res + 0);
    let lo = lo.max(0);
    let hi = (remaining / parts_left).min(res);
    for i in lo..=hi {
        // the rest must fit: (parts_left - 1) parts in [i, res]
        let rest = remaining - i;
        if rest < (parts_left - 1) * i || rest > (parts_left - 1) * res {
            continue;
        }
        stack.push(i);
        enumerate(n, res, remaining - i, depth + 1, stack, visit);
        stack.pop();
    }
}

/// Both sides of the decoupling inequality for vectors `x1` (mass on high
/// reserves) and `x2` (mass on low reserves with a qualifying bid):
///
/// ```text
/// lhs = prod (1 - x1 - x2) + sum_b x2_b prod_{b' != b} (1 - x1 - x2)
/// rhs = prod (1 - x1) * [ prod (1 - x2) + sum_b x2_b prod_{b' != b} (1 - x2) ]
/// ```
///
/// `lhs <= rhs` whenever `x1, x2 >= 0` and `x1 + x2 <= 1` coordinate-wise.
pub fn split_bound_sides(x1: &[f64], x2: &[f64]) -> Result<(f64, f64)> {
    if x1.len() != x2.len() || x1.len() < 2 {
        return Err(Error::InvalidArgument(
            "need two equal-length vectors of at least two entries".into(),
        ));
    }
    for (a, b) in x1.iter().zip(x2) {
        if *a < 0.0 || *b < 0.0 || a + b > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "entries must be non-negative with x1 + x2 <= 1, got ({a}, {b})"
            )));
        }
    }
    let n = x1.len();
    let joint: Vec<f64> = (0..n).map(|i| 1.0 - x1[i] - x2[i]).collect();
    let low_only: Vec<f64> = (0..n).map(|i| 1.0 - x2[i]).collect();

    let leave_one_out_sum = |survivors: &[f64], weights: &[f64]| -> f64 {
        let n = survivors.len();
        let mut prefix = vec![1.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] * survivors[i];
        }
        let mut suffix = vec![1.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] * survivors[i];
        }
        (0..n).map(|i| weights[i] * prefix[i] * suffix[i + 1]).sum()
    };

    let lhs = joint.iter().product::<f64>() + leave_one_out_sum(&joint, x2);
    let high_product: f64 = x1.iter().map(|v| 1.0 - v).product();
    let rhs = high_product
        * (low_only.iter().product::<f64>() + leave_one_out_sum(&low_only, x2));
    Ok((lhs, rhs))
}

/// Central-difference derivative, for stationarity spot checks.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn objective_examples() {
        let v = program_objective(&[0.3, 0.3], 0.3);
        assert!((v - 0.4518926264501827).abs() < 1e-15, "got {v}");
        // all zeros collapse the bracket to 1
        let z = program_objective(&[0.0, 0.0, 0.0], 0.25);
        assert!((z - (-0.75f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn objective_matches_equal_support_at_pairs() {
        for i in 0..=50 {
            let theta = i as f64 / 50.0;
            let direct = program_objective(&[theta, theta], theta);
            let bound = equal_support_bound(theta, 2);
            assert!((direct - bound).abs() < 1e-14, "theta = {theta}");
        }
    }

    #[test]
    fn equal_support_examples() {
        let peak = equal_support_bound(SQRT2 - 1.0, 2);
        assert!((peak - worst_case_gap_bound()).abs() < 1e-15);
        assert!((peak - 0.4611587920072035).abs() < 1e-14, "got {peak}");
        let at_zero = equal_support_bound(0.0, 7);
        assert!((at_zero - (-1.0f64).exp()).abs() < 1e-15);
        let direct = (-0.5f64).exp() * 0.75f64.powi(3) * 1.75;
        assert!((equal_support_bound(0.5, 4) - direct).abs() < 1e-15);
    }

    #[test]
    fn peaked_support_examples() {
        assert!((peaked_support_bound(0.0, 5) - (-1.0f64).exp()).abs() < 1e-15);
        let direct = (-0.5f64).exp() * (0.75f64 * 0.75 + 0.25 * 0.75);
        assert!((peaked_support_bound(0.5, 2) - direct).abs() < 1e-15);
        // the 5/(4e) cap keeps the whole family below 0.46
        let mut sup = 0.0f64;
        for k in 2..=200u32 {
            for i in 0..=1000 {
                sup = sup.max(peaked_support_bound(i as f64 / 1000.0, k));
            }
        }
        assert!(sup <= 0.46, "sup {sup}");
        assert!(sup <= 5.0 / (4.0 * std::f64::consts::E) + 1e-9);
    }

    #[test]
    fn argmax_theta_is_stationary() {
        assert!((equal_support_argmax(2) - (SQRT2 - 1.0)).abs() < 1e-15);
        for k in 2..=100u32 {
            let t = equal_support_argmax(k);
            assert!((0.0..=1.0).contains(&t), "k = {k}: theta {t}");
            let d = central_difference(|x| equal_support_bound(x, k), t, 1e-5);
            assert!(d.abs() <= 1e-8, "k = {k}: derivative {d}");
        }
    }

    #[test]
    fn factor_composes_from_the_envelope() {
        let f = approximation_factor();
        assert!((f - 0.68438).abs() < 1e-5, "factor {f}");
        let composed = 1.0 / (1.0 + equal_support_bound(equal_support_argmax(2), 2));
        assert!((f - composed).abs() < 1e-15);
    }

    #[test]
    fn grid_program_pair_is_forced() {
        for theta in [0.1, 0.35, 0.7] {
            let result = grid_program_max(2, theta, 100).unwrap();
            assert!((result.value - equal_support_bound(theta, 2)).abs() < 1e-12);
            assert!((result.argmax[0] - theta).abs() < 1e-12);
            assert!((result.argmax[1] - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_program_respects_envelope() {
        // the case analysis caps the program by the best envelope value
        for &(n, theta, res) in &[(3usize, 0.4f64, 400u32), (4, 0.55, 100)] {
            let result = grid_program_max(n, theta, res).unwrap();
            let envelope = (2..=n as u32)
                .map(|k| equal_support_bound(theta, k).max(peaked_support_bound(theta, k)))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(
                result.value <= envelope + 1e-3,
                "n = {n}, theta = {theta}: {} vs envelope {envelope}",
                result.value
            );
        }
    }

    #[test]
    fn grid_program_interior_coordinates_cluster() {
        for &(n, theta, res) in &[(3usize, 0.4f64, 400u32), (4, 0.3, 200), (5, 0.6, 100)] {
            let result = grid_program_max(n, theta, res).unwrap();
            let step = theta / res as f64;
            let interior: Vec<f64> = result
                .argmax
                .iter()
                .copied()
                .filter(|&v| v > step / 2.0 && v < theta - step / 2.0)
                .collect();
            if interior.len() >= 2 {
                let lo = interior.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = interior.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(
                    hi - lo <= step + 1e-12,
                    "n = {n}, theta = {theta}: interior spread {} vs step {step}",
                    hi - lo
                );
            }
        }
    }

    #[test]
    fn split_bound_example_and_equality_case() {
        let (lhs, rhs) = split_bound_sides(&[0.2, 0.1], &[0.3, 0.4]).unwrap();
        assert!((lhs - 0.60).abs() < 1e-12, "lhs {lhs}");
        assert!((rhs - 0.6336).abs() < 1e-12, "rhs {rhs}");
        // the inequality is tight when no mass sits on high reserves
        let (l0, r0) = split_bound_sides(&[0.0, 0.0, 0.0], &[0.3, 0.5, 0.2]).unwrap();
        assert!((l0 - r0).abs() < 1e-15);
        assert!(split_bound_sides(&[0.9], &[0.3]).is_err());
        assert!(split_bound_sides(&[0.9, 0.0], &[0.3, 0.0]).is_err());
    }

    #[test]
    fn split_bound_holds_on_random_inputs() {
        let mut rng = crate::rng::substream(17, 0);
        for _ in 0..10_000 {
            let n = rng.random_range(2..=6usize);
            let mut x1 = Vec::with_capacity(n);
            let mut x2 = Vec::with_capacity(n);
            for _ in 0..n {
                let a: f64 = rng.random_range(0.0..1.0);
                let b: f64 = rng.random_range(0.0..(1.0 - a));
                x1.push(a);
                x2.push(b);
            }
            let (lhs, rhs) = split_bound_sides(&x1, &x2).unwrap();
            assert!(
                lhs <= rhs + 1e-12,
                "violated: lhs {lhs} rhs {rhs} x1 {x1:?} x2 {x2:?}"
            );
        }
    }
}
