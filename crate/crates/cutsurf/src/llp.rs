//! Lower-level program: global maximization of g(x, .) over the compact
//! uncertainty interval, yielding the worst-case violation and the cut point.
//!
//! Dense uniform grid over the interval followed by golden-section refinement
//! around the best local brackets. Certified when a Lipschitz bound in y is
//! supplied; heuristic-global otherwise, flagged through `certified_gap`.

use crate::problem::RobustConstraint;

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Result of a lower-level maximization.
#[derive(Clone, Debug)]
pub struct LlpResult {
    /// Maximum constraint value found, re-evaluated at `y_max`.
    pub g_max: f64,
    /// Maximizer within the uncertainty interval; smallest among ties.
    pub y_max: f64,
    /// Upper bound on how far below the true global maximum `g_max` can be:
    /// L * step / 2 when a Lipschitz bound L is known, -1.0 when the result
    /// is heuristic-global.
    pub certified_gap: f64,
}

/// Feasibility verdict for a candidate point.
#[derive(Clone, Debug, PartialEq)]
pub enum FeasibilityVerdict {
    LocallyFeasible,
    /// Carries the uncertainty value to populate into the finite cut set.
    Violated(f64),
}

/// Golden-section maximization of f on [lo, hi] down to an interval of width
/// `tol`. Returns (argmax, max).
fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut a = hi - INV_GOLDEN * (hi - lo);
    let mut b = lo + INV_GOLDEN * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_GOLDEN * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_GOLDEN * (hi - lo);
            fb = f(b);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// Solves max_{y in [y_lo, y_hi]} g(x, y) by a `grid_n`-point uniform grid
/// (endpoints included) plus golden-section refinement around every local
/// grid maximum, keeping the top five brackets. Ties prefer the smallest y.
pub fn solve_llp(
    g: &RobustConstraint,
    x: &[f64],
    grid_n: usize,
    refine_tol: f64,
    lipschitz_y: Option<f64>,
) -> LlpResult {
    assert!(grid_n >= 3, "need at least three grid points");
    let (y_lo, y_hi) = (g.y_lo, g.y_hi);
    let span = y_hi - y_lo;
    if span == 0.0 {
        let v = g.eval(x, y_lo);
        return LlpResult {
            g_max: v,
            y_max: y_lo,
            certified_gap: 0.0,
        };
    }

    let step = span / (grid_n - 1) as f64;
    let ys: Vec<f64> = (0..grid_n)
        .map(|i| {
            if i + 1 == grid_n {
                y_hi
            } else {
                y_lo + step * i as f64
            }
        })
        .collect();
    let vals: Vec<f64> = ys.iter().map(|&y| g.eval(x, y)).collect();

    // Local grid maxima (including the endpoints), best five by value.
    let mut brackets: Vec<usize> = (0..grid_n)
        .filter(|&i| {
            let left_ok = i == 0 || vals[i] >= vals[i - 1];
            let right_ok = i + 1 == grid_n || vals[i] >= vals[i + 1];
            left_ok && right_ok
        })
        .collect();
    brackets.sort_by(|&a, &b| {
        vals[b]
            .partial_cmp(&vals[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    brackets.truncate(5);
    brackets.sort_unstable();

    // Grid winner with smallest-y tie-break: ascending scan, strict improvement.
    let mut best_y = ys[0];
    let mut best_v = vals[0];
    for i in 1..grid_n {
        if vals[i] > best_v {
            best_v = vals[i];
            best_y = ys[i];
        }
    }

    for &i in &brackets {
        let lo = if i == 0 { ys[0] } else { ys[i - 1] };
        let hi = if i + 1 == grid_n { ys[grid_n - 1] } else { ys[i + 1] };
        if hi <= lo {
            continue;
        }
        let (y, v) = golden_section_max(|y| g.eval(x, y), lo, hi, refine_tol);
        if v > best_v || (v == best_v && y < best_y) {
            best_v = v;
            best_y = y;
        }
    }

    // Parabolic vertex polish for interior maxima: golden section alone
    // stalls inside the f64-flat region around a smooth peak, where values
    // within ~sqrt(eps) of the maximizer compare equal.
    let h = (1e-5 * span)
        .min(0.5 * (best_y - y_lo))
        .min(0.5 * (y_hi - best_y));
    if h > 0.0 {
        let fm = g.eval(x, best_y - h);
        let f0 = g.eval(x, best_y);
        let fp = g.eval(x, best_y + h);
        let denom = fp - 2.0 * f0 + fm;
        // Only trust the fit when the curvature clearly beats value noise;
        // the vertex of a resolved concave fit needs no value comparison
        // (comparisons are meaningless inside the flat region anyway).
        let noise = 1e-12 * (fm.abs() + f0.abs() + fp.abs() + 1.0);
        if denom < -noise {
            let cand = best_y - h * (fp - fm) / (2.0 * denom);
            if (cand - best_y).abs() <= h && cand > y_lo && cand < y_hi {
                best_y = cand;
            }
        }
    }

    let g_max = g.eval(x, best_y);
    LlpResult {
        g_max,
        y_max: best_y,
        certified_gap: match lipschitz_y {
            Some(l) => l * step / 2.0,
            None => -1.0,
        },
    }
}

/// Step-5 branch of the outer algorithm: the candidate is locally feasible
/// iff the worst-case constraint value is nonpositive (boundary included).
pub fn feasibility_verdict(res: &LlpResult) -> FeasibilityVerdict {
    if res.g_max <= 0.0 {
        FeasibilityVerdict::LocallyFeasible
    } else {
        FeasibilityVerdict::Violated(res.y_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{build_nonconvex_llp_instance, build_section5_instance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn section5_interior_maximum_on_boundary_of_feasibility() {
        let inst = build_section5_instance();
        let x = [0.0, 7f64.sqrt() / 4.0];
        let res = solve_llp(&inst.constraints[0], &x, 2001, 1e-10, None);
        assert!((res.y_max - 7f64.sqrt() / 4.0).abs() < 1e-8);
        assert!(res.g_max.abs() < 1e-12);
        assert_eq!(feasibility_verdict(&res), FeasibilityVerdict::LocallyFeasible);
    }

    #[test]
    fn section5_clipped_maximum() {
        let inst = build_section5_instance();
        let res = solve_llp(&inst.constraints[0], &[0.0, 2.0], 2001, 1e-10, None);
        assert_eq!(res.y_max, 1.0);
        assert!((res.g_max - 2.5625).abs() < 1e-12);
        assert_eq!(feasibility_verdict(&res), FeasibilityVerdict::Violated(1.0));
    }

    #[test]
    fn constant_constraint_breaks_ties_to_the_left() {
        let g = crate::problem::RobustConstraint::new(
            |_, _| 3.5,
            |_, _| vec![0.0, 0.0],
            -1.0,
            1.0,
        );
        let res = solve_llp(&g, &[0.0, 0.0], 101, 1e-10, None);
        assert_eq!(res.y_max, -1.0);
        assert_eq!(res.g_max, 3.5);
    }

    #[test]
    fn matches_analytic_law_on_section5() {
        let inst = build_section5_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)];
            for (i, g) in inst.constraints.iter().enumerate() {
                let res = solve_llp(g, &x, 2001, 1e-10, None);
                let y_star = x[1].clamp(-1.0, 1.0);
                let p = [-0.75, -0.5, -0.25, 0.25, 0.5, 0.75][i];
                let want = (x[0] - p) * (x[0] - p) + 2.0 * y_star * x[1] - y_star * y_star - 1.0;
                assert!(
                    (res.g_max - want).abs() < 1e-8,
                    "agent {i} at {x:?}: got {} want {want}",
                    res.g_max
                );
                assert!((res.y_max - y_star).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn nonconvex_constraint_interior_peak() {
        // max_y of x2 + (x1^2 - 2 x1) e^{(y - x1)^2 - 2 x1^2} sits at y = x1
        // because the coefficient is nonpositive on [0, 2].
        let inst = build_nonconvex_llp_instance();
        let g = &inst.constraints[0];
        let x = [0.8, 0.3];
        let res = solve_llp(g, &x, 2001, 1e-10, None);
        assert!((res.y_max - 0.8).abs() < 1e-7);
        let want = 0.3 + (0.64 - 1.6) * (-2.0 * 0.64f64).exp();
        assert!((res.g_max - want).abs() < 1e-10);
    }

    #[test]
    fn certified_gap_flag() {
        let inst = build_section5_instance();
        let with = solve_llp(&inst.constraints[0], &[0.0, 0.0], 2001, 1e-10, Some(6.0));
        assert!(with.certified_gap > 0.0);
        let without = solve_llp(&inst.constraints[0], &[0.0, 0.0], 2001, 1e-10, None);
        assert_eq!(without.certified_gap, -1.0);
    }

    #[test]
    fn result_invariants_hold_at_random_points() {
        let inst = build_nonconvex_llp_instance();
        let g = &inst.constraints[0];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = [rng.gen_range(0.0..2.0), rng.gen_range(0.0..1.0)];
            let res = solve_llp(g, &x, 501, 1e-10, None);
            assert_eq!(res.g_max, g.eval(&x, res.y_max));
            assert!(res.y_max >= g.y_lo && res.y_max <= g.y_hi);
        }
    }
}
