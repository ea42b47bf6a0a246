//! Problem data model: convex costs, uncertainty-parameterized constraints,
//! box sets, and the two built-in benchmark instances.
//!
//! Functions are represented by evaluation + subgradient callbacks rather than
//! symbolic expressions; the solvers only ever query values and subgradients.

use std::fmt;
use std::sync::Arc;

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type Eval2Fn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
type Grad2Fn = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;

/// A convex function given by an evaluation callback and a subgradient callback.
#[derive(Clone)]
pub struct ConvexFunction {
    eval: Arc<EvalFn>,
    subgrad: Arc<GradFn>,
}

impl ConvexFunction {
    pub fn new(
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        subgrad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            subgrad: Arc::new(subgrad),
        }
    }

    /// Squared Euclidean distance to an anchor point, f(x) = ||x - q||^2.
    pub fn squared_distance(q: Vec<f64>) -> Self {
        let q2 = q.clone();
        Self::new(
            move |x| x.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(),
            move |x| x.iter().zip(&q2).map(|(a, b)| 2.0 * (a - b)).collect(),
        )
    }

    /// Linear function f(x) = <c, x>.
    pub fn linear(c: Vec<f64>) -> Self {
        let c2 = c.clone();
        Self::new(
            move |x| x.iter().zip(&c).map(|(a, b)| a * b).sum(),
            move |_| c2.clone(),
        )
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (self.subgrad)(x)
    }
}

impl fmt::Debug for ConvexFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ConvexFunction")
    }
}

/// A constraint g(x, y) with a scalar uncertainty parameter y ranging over a
/// compact interval. Convex in x for each fixed y; continuity in (x, y) is
/// assumed, no smoothness in y is required.
#[derive(Clone)]
pub struct RobustConstraint {
    eval: Arc<Eval2Fn>,
    subgrad_x: Arc<Grad2Fn>,
    /// Lower endpoint of the uncertainty interval.
    pub y_lo: f64,
    /// Upper endpoint of the uncertainty interval.
    pub y_hi: f64,
}

impl RobustConstraint {
    pub fn new(
        eval: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        subgrad_x: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
        y_lo: f64,
        y_hi: f64,
    ) -> Self {
        assert!(y_lo <= y_hi, "uncertainty interval must be nonempty");
        Self {
            eval: Arc::new(eval),
            subgrad_x: Arc::new(subgrad_x),
            y_lo,
            y_hi,
        }
    }

    pub fn eval(&self, x: &[f64], y: f64) -> f64 {
        (self.eval)(x, y)
    }

    pub fn subgradient_x(&self, x: &[f64], y: f64) -> Vec<f64> {
        (self.subgrad_x)(x, y)
    }

    /// The constraint at a frozen uncertainty value, as a convex function of x.
    pub fn at_y(&self, y: f64) -> ConvexFunction {
        let e = Arc::clone(&self.eval);
        let g = Arc::clone(&self.subgrad_x);
        ConvexFunction::new(move |x| e(x, y), move |x| g(x, y))
    }
}

impl fmt::Debug for RobustConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RobustConstraint {{ y in [{}, {}] }}", self.y_lo, self.y_hi)
    }
}

/// Axis-aligned box { x : lower <= x <= upper }.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert!(
            lower.iter().zip(&upper).all(|(l, u)| l <= u),
            "box must be nonempty"
        );
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| v.max(*l).min(*u))
            .collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    /// Componentwise distance past the box, 0 inside.
    pub fn violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Cartesian product with another box.
    pub fn product(&self, other: &BoxSet) -> BoxSet {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        lower.extend_from_slice(&other.lower);
        upper.extend_from_slice(&other.upper);
        BoxSet::new(lower, upper)
    }
}

/// A robust program over m agents: minimize the sum of local costs over the
/// box, subject to each agent's constraint holding for every uncertainty
/// value in its interval.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    /// Number of agents.
    pub m: usize,
    /// Decision dimension.
    pub n: usize,
    pub costs: Vec<ConvexFunction>,
    pub constraints: Vec<RobustConstraint>,
    pub box_set: BoxSet,
}

impl ProblemInstance {
    pub fn new(
        n: usize,
        costs: Vec<ConvexFunction>,
        constraints: Vec<RobustConstraint>,
        box_set: BoxSet,
    ) -> Self {
        assert_eq!(costs.len(), constraints.len());
        assert_eq!(box_set.dim(), n);
        Self {
            m: costs.len(),
            n,
            costs,
            constraints,
            box_set,
        }
    }
}

/// Sum of the per-agent costs at x. Total on all of R^n.
pub fn evaluate_global_objective(inst: &ProblemInstance, x: &[f64]) -> f64 {
    inst.costs.iter().map(|f| f.eval(x)).sum()
}

/// Subgradient of the global objective at x.
pub fn global_objective_subgradient(inst: &ProblemInstance, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; inst.n];
    for f in &inst.costs {
        for (gi, si) in g.iter_mut().zip(f.subgradient(x)) {
            *gi += si;
        }
    }
    g
}

/// Six-agent benchmark: f_i(x) = ||x - q_i||^2 and
/// g_i(x, y) = (x_1 - p_i)^2 + 2 y x_2 - y^2 - 1 with y in [-1, 1],
/// over the box [-2, 2] x [-1, 1].
pub fn build_section5_instance() -> ProblemInstance {
    let anchors: [[f64; 2]; 6] = [
        [0.0, 6.0],
        [0.0, 0.0],
        [1.0, 1.0],
        [-1.0, -1.0],
        [1.0, -1.0],
        [-1.0, 1.0],
    ];
    let shifts: [f64; 6] = [-0.75, -0.5, -0.25, 0.25, 0.5, 0.75];

    let costs = anchors
        .iter()
        .map(|q| ConvexFunction::squared_distance(q.to_vec()))
        .collect();
    let constraints = shifts
        .iter()
        .map(|&p| {
            RobustConstraint::new(
                move |x, y| (x[0] - p) * (x[0] - p) + 2.0 * y * x[1] - y * y - 1.0,
                move |x, y| vec![2.0 * (x[0] - p), 2.0 * y],
                -1.0,
                1.0,
            )
        })
        .collect();
    ProblemInstance::new(
        2,
        costs,
        constraints,
        BoxSet::new(vec![-2.0, -1.0], vec![2.0, 1.0]),
    )
}

/// Single-agent instance with a constraint that is not concave in y:
/// minimize -x_2 over [0, 2] x [0, 1] subject to
/// g(x, y) = x_2 + (x_1^2 - 2 x_1) e^{-x_1^2 + y^2 - 2 x_1 y} <= 0 for
/// y in [0, 2]. Exercises the global lower-level maximization.
pub fn build_nonconvex_llp_instance() -> ProblemInstance {
    let cost = ConvexFunction::linear(vec![0.0, -1.0]);
    let constraint = RobustConstraint::new(
        |x, y| {
            let e = (-x[0] * x[0] + y * y - 2.0 * x[0] * y).exp();
            x[1] + (x[0] * x[0] - 2.0 * x[0]) * e
        },
        |x, y| {
            let e = (-x[0] * x[0] + y * y - 2.0 * x[0] * y).exp();
            let a = x[0] * x[0] - 2.0 * x[0];
            vec![(2.0 * x[0] - 2.0) * e + a * e * (-2.0 * x[0] - 2.0 * y), 1.0]
        },
        0.0,
        2.0,
    );
    ProblemInstance::new(
        2,
        vec![cost],
        vec![constraint],
        BoxSet::new(vec![0.0, 0.0], vec![2.0, 1.0]),
    )
}

/// Look up a built-in instance by name.
pub fn instance_by_name(name: &str) -> Option<ProblemInstance> {
    match name {
        "section5" => Some(build_section5_instance()),
        "fig9" => Some(build_nonconvex_llp_instance()),
        _ => None,
    }
}

/// Sampling-based validation helpers for user-supplied functions.
pub mod validate {
    use super::*;
    use rand::Rng;

    pub fn sample_box<R: Rng>(rng: &mut R, b: &BoxSet) -> Vec<f64> {
        b.lower
            .iter()
            .zip(&b.upper)
            .map(|(l, u)| rng.gen_range(*l..=*u))
            .collect()
    }

    /// Checks f(b x1 + (1-b) x2) <= b f(x1) + (1-b) f(x2) + 1e-12 on random triples.
    pub fn convexity_holds<R: Rng>(
        rng: &mut R,
        f: &ConvexFunction,
        b: &BoxSet,
        triples: usize,
    ) -> bool {
        for _ in 0..triples {
            let x1 = sample_box(rng, b);
            let x2 = sample_box(rng, b);
            let beta: f64 = rng.gen_range(0.0..1.0);
            let mid: Vec<f64> = x1
                .iter()
                .zip(&x2)
                .map(|(a, c)| beta * a + (1.0 - beta) * c)
                .collect();
            if f.eval(&mid) > beta * f.eval(&x1) + (1.0 - beta) * f.eval(&x2) + 1e-12 {
                return false;
            }
        }
        true
    }

    /// Checks f(x2) >= f(x1) + <subgrad(x1), x2 - x1> - 1e-12 on random pairs.
    pub fn subgradient_inequality_holds<R: Rng>(
        rng: &mut R,
        f: &ConvexFunction,
        b: &BoxSet,
        pairs: usize,
    ) -> bool {
        for _ in 0..pairs {
            let x1 = sample_box(rng, b);
            let x2 = sample_box(rng, b);
            let g = f.subgradient(&x1);
            let inner: f64 = g
                .iter()
                .zip(x1.iter().zip(&x2))
                .map(|(gi, (a, c))| gi * (c - a))
                .sum();
            if f.eval(&x2) < f.eval(&x1) + inner - 1e-12 {
                return false;
            }
        }
        true
    }

    /// Central finite-difference gradient with step h = 1e-6.
    pub fn finite_difference_gradient(f: &ConvexFunction, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (f.eval(&xp) - f.eval(&xm)) / (2.0 * h)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn global_objective_matches_hand_sums() {
        let inst = build_section5_instance();
        assert_eq!(evaluate_global_objective(&inst, &[0.0, 0.0]), 44.0);
        // 44 + 42/16 - 3*sqrt(7) at the constrained optimizer (0, sqrt(7)/4).
        let x = [0.0, 7f64.sqrt() / 4.0];
        let expect = 44.0 + 42.0 / 16.0 - 3.0 * 7f64.sqrt();
        assert!((evaluate_global_objective(&inst, &x) - expect).abs() < 1e-12);
        assert!((expect - 38.68775).abs() < 1e-4);
    }

    #[test]
    fn zero_costs_sum_to_zero() {
        let zero = ConvexFunction::linear(vec![0.0, 0.0]);
        let g = RobustConstraint::new(|_, _| -1.0, |_, _| vec![0.0, 0.0], 0.0, 1.0);
        let inst = ProblemInstance::new(
            2,
            vec![zero.clone(), zero],
            vec![g.clone(), g],
            BoxSet::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
        );
        assert_eq!(evaluate_global_objective(&inst, &[0.3, -0.7]), 0.0);
    }

    #[test]
    fn section5_parameters() {
        let inst = build_section5_instance();
        assert_eq!(inst.m, 6);
        assert_eq!(inst.n, 2);
        // q_1 = (0, 6): cost 0 at the anchor itself.
        assert_eq!(inst.costs[0].eval(&[0.0, 6.0]), 0.0);
        // p_6 = 0.75: g_6((0.75, 0), 0) = -1.
        assert_eq!(inst.constraints[5].eval(&[0.75, 0.0], 0.0), -1.0);
        assert!((inst.constraints[0].eval(&[0.0, 0.0], 1.0) - (-1.4375)).abs() < 1e-15);
        assert_eq!(inst.constraints[3].eval(&[0.25, 0.0], 0.0), -1.0);
        assert_eq!(inst.constraints[0].y_lo, -1.0);
        assert_eq!(inst.constraints[0].y_hi, 1.0);
    }

    #[test]
    fn section5_is_deterministic() {
        let a = build_section5_instance();
        let b = build_section5_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = validate::sample_box(&mut rng, &a.box_set);
            let y = rand::Rng::gen_range(&mut rng, -1.0..1.0);
            for i in 0..6 {
                assert_eq!(a.costs[i].eval(&x), b.costs[i].eval(&x));
                assert_eq!(a.constraints[i].eval(&x, y), b.constraints[i].eval(&x, y));
            }
        }
    }

    #[test]
    fn nonconvex_llp_instance_values() {
        let inst = build_nonconvex_llp_instance();
        assert_eq!(inst.m, 1);
        // x_1 = 0 kills the exponential term.
        assert_eq!(inst.constraints[0].eval(&[0.0, 0.5], 1.0), 0.5);
        let want = -(-1f64).exp();
        assert!((inst.constraints[0].eval(&[1.0, 0.0], 0.0) - want).abs() < 1e-15);
        assert_eq!(inst.costs[0].eval(&[0.0, 1.0]), -1.0);
    }

    #[test]
    fn section5_costs_and_constraints_are_convex_in_x() {
        let inst = build_section5_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for f in &inst.costs {
            assert!(validate::convexity_holds(&mut rng, f, &inst.box_set, 1000));
            assert!(validate::subgradient_inequality_holds(
                &mut rng,
                f,
                &inst.box_set,
                1000
            ));
        }
        for (i, g) in inst.constraints.iter().enumerate() {
            for y in [-1.0, -0.3, 0.0, 0.5, 1.0] {
                let fy = g.at_y(y);
                assert!(
                    validate::convexity_holds(&mut rng, &fy, &inst.box_set, 1000),
                    "constraint {i} at y={y}"
                );
            }
        }
    }

    #[test]
    fn subgradients_match_finite_differences() {
        let inst = build_section5_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let x = validate::sample_box(&mut rng, &inst.box_set);
            for f in &inst.costs {
                let g = f.subgradient(&x);
                let fd = validate::finite_difference_gradient(f, &x);
                for (a, b) in g.iter().zip(&fd) {
                    assert!((a - b).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn constraints_finite_on_grid() {
        for inst in [build_section5_instance(), build_nonconvex_llp_instance()] {
            let b = &inst.box_set;
            for g in &inst.constraints {
                for i in 0..=10 {
                    for j in 0..=10 {
                        let x = [
                            b.lower[0] + (b.upper[0] - b.lower[0]) * i as f64 / 10.0,
                            b.lower[1] + (b.upper[1] - b.lower[1]) * j as f64 / 10.0,
                        ];
                        for k in 0..=10 {
                            let y = g.y_lo + (g.y_hi - g.y_lo) * k as f64 / 10.0;
                            assert!(g.eval(&x, y).is_finite());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn box_helpers() {
        let b = BoxSet::new(vec![-2.0, -1.0], vec![2.0, 1.0]);
        assert_eq!(b.clamp(&[3.0, 0.5]), vec![2.0, 0.5]);
        assert_eq!(b.clamp(&[-5.0, -5.0]), vec![-2.0, -1.0]);
        assert_eq!(b.clamp(&[0.1, 0.2]), vec![0.1, 0.2]);
        assert_eq!(b.center(), vec![0.0, 0.0]);
        assert!(b.contains(&[2.0, 1.0], 0.0));
        assert!(!b.contains(&[2.1, 0.0], 1e-3));
    }
}
