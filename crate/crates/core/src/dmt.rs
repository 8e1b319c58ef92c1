//! Exact diversity-multiplexing tradeoff machinery.
//!
//! All curves are piecewise linear with rational breakpoints and every
//! operation (argument scaling, pointwise minimum, evaluation, threshold
//! extraction) is carried out in exact rational arithmetic, so quantities
//! like the optimality threshold come out as exact fractions rather than
//! grid approximations.

use crate::cyclotomic::{rat_int, Rational};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};

/// Piecewise-linear curve given by breakpoints with strictly increasing
/// rational abscissae; values between breakpoints interpolate linearly.
#[derive(Clone, Debug, PartialEq)]
pub struct PLCurve {
    points: Vec<(Rational, Rational)>,
}

impl PLCurve {
    pub fn new(points: Vec<(Rational, Rational)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter(
                "curve needs at least one breakpoint".into(),
            ));
        }
        for w in points.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidParameter(
                    "breakpoints must strictly increase".into(),
                ));
            }
        }
        Ok(PLCurve { points })
    }

    pub fn breakpoints(&self) -> &[(Rational, Rational)] {
        &self.points
    }

    pub fn domain_start(&self) -> &Rational {
        &self.points[0].0
    }

    pub fn domain_end(&self) -> &Rational {
        &self.points.last().unwrap().0
    }

    /// Exact evaluation inside the domain.
    pub fn eval(&self, r: &Rational) -> Result<Rational> {
        if r < self.domain_start() || r > self.domain_end() {
            return Err(Error::InvalidParameter(format!(
                "{r} outside the curve domain"
            )));
        }
        Ok(self.eval_ext(r))
    }

    /// Evaluation extended by the boundary value on the left and by zero on
    /// the right (diversity past the maximal multiplexing gain is zero).
    pub fn eval_ext(&self, r: &Rational) -> Rational {
        if r <= self.domain_start() {
            return self.points[0].1.clone();
        }
        if r > self.domain_end() {
            return Rational::zero();
        }
        let mut lo = 0usize;
        let mut hi = self.points.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.points[mid].0 <= *r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (ref r1, ref d1) = self.points[lo];
        if r1 == r {
            return d1.clone();
        }
        let (ref r2, ref d2) = self.points[hi];
        d1 + (d2 - d1) * (r - r1) / (r2 - r1)
    }

    /// The curve r -> self(c * r), for rational c > 0.
    pub fn scale_arg(&self, c: &Rational) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::InvalidParameter(
                "scale factor must be positive".into(),
            ));
        }
        PLCurve::new(
            self.points
                .iter()
                .map(|(r, d)| (r / c, d.clone()))
                .collect(),
        )
    }

    /// Pointwise minimum on the intersection of the two domains.
    pub fn pointwise_min(&self, other: &Self) -> Result<Self> {
        let lo = self.domain_start().max(other.domain_start()).clone();
        let hi = self.domain_end().min(other.domain_end()).clone();
        if lo >= hi {
            return Err(Error::EmptyDomain);
        }
        Ok(min_on_interval(&[self.clone(), other.clone()], &lo, &hi))
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[0].1 >= w[1].1)
    }

    /// Convexity of the interpolant: slopes nondecreasing.
    pub fn is_convex(&self) -> bool {
        let slopes: Vec<Rational> = self
            .points
            .windows(2)
            .map(|w| (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0))
            .collect();
        slopes.windows(2).all(|s| s[0] <= s[1])
    }
}

/// Pointwise minimum of zero-extended curves on [lo, hi], with every kink and
/// crossing inserted as an exact breakpoint.
fn min_on_interval(curves: &[PLCurve], lo: &Rational, hi: &Rational) -> PLCurve {
    // grid: all breakpoints in range plus the interval ends
    let mut grid: Vec<Rational> = vec![lo.clone(), hi.clone()];
    for c in curves {
        for (r, _) in &c.points {
            if r > lo && r < hi {
                grid.push(r.clone());
            }
        }
    }
    grid.sort();
    grid.dedup();

    // insert pairwise crossings inside each cell
    let mut xs = Vec::with_capacity(grid.len() * 2);
    for w in grid.windows(2) {
        let (x1, x2) = (&w[0], &w[1]);
        xs.push(x1.clone());
        let mut crossings: Vec<Rational> = Vec::new();
        for i in 0..curves.len() {
            for j in i + 1..curves.len() {
                let a1 = curves[i].eval_ext(x1);
                let a2 = curves[i].eval_ext(x2);
                let b1 = curves[j].eval_ext(x1);
                let b2 = curves[j].eval_ext(x2);
                let d1 = &a1 - &b1;
                let d2 = &a2 - &b2;
                if d1.is_positive() != d2.is_positive() && !d1.is_zero() && !d2.is_zero() {
                    // linear crossing at x1 + (x2 - x1) * d1 / (d1 - d2)
                    let t = &d1 / (&d1 - &d2);
                    crossings.push(x1 + (x2 - x1) * t);
                }
            }
        }
        crossings.sort();
        crossings.dedup();
        xs.extend(crossings);
    }
    xs.push(hi.clone());
    xs.dedup();

    let points = xs
        .into_iter()
        .map(|x| {
            let v = curves.iter().map(|c| c.eval_ext(&x)).min().unwrap();
            (x, v)
        })
        .collect();
    PLCurve::new(points).expect("grid is strictly increasing")
}

/// Optimal point-to-point DMT for an m x n channel: the piecewise-linear
/// curve joining (r, (m - r)(n - r)) for integer r up to min(m, n).
pub fn optimal_p2p(m: u32, n: u32) -> PLCurve {
    assert!(m >= 1 && n >= 1);
    let points = (0..=m.min(n))
        .map(|r| {
            let d = (m as i64 - r as i64) * (n as i64 - r as i64);
            (rat_int(r as i64), rat_int(d))
        })
        .collect();
    let curve = PLCurve::new(points).unwrap();
    debug_assert!(curve.is_convex() && curve.is_nonincreasing());
    curve
}

/// A symmetric multiple-access scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DmtScenario {
    pub users: u32,
    pub nt: u32,
    pub nr: u32,
}

impl DmtScenario {
    pub fn new(users: u32, nt: u32, nr: u32) -> Result<Self> {
        if users == 0 || nt == 0 || nr == 0 {
            return Err(Error::InvalidParameter(
                "users, nt, nr must be positive".into(),
            ));
        }
        Ok(DmtScenario { users, nt, nr })
    }

    /// Largest symmetric multiplexing gain: min(U nt, nr) / U.
    pub fn max_multiplexing(&self) -> Rational {
        Rational::new(
            BigInt::from((self.users * self.nt).min(self.nr)),
            BigInt::from(self.users),
        )
    }

    /// Switch point between the two-user and all-user branches of the lower
    /// bound: min(nt / U, nr / (U (U + 2))).
    pub fn theta(&self) -> Rational {
        let a = Rational::new(BigInt::from(self.nt), BigInt::from(self.users));
        let b = Rational::new(
            BigInt::from(self.nr),
            BigInt::from(self.users * (self.users + 2)),
        );
        a.min(b)
    }
}

/// Achievable symmetric DMT of the constructed codes:
/// min over u = 2..U of d*(u nt, nr)(U u r) together with d*(nt, nr)(r).
pub fn mac_lower_bound(sc: &DmtScenario) -> PLCurve {
    let hi = sc.max_multiplexing();
    let lo = Rational::zero();
    let mut curves = vec![optimal_p2p(sc.nt, sc.nr)];
    for u in 2..=sc.users {
        let arg = rat_int((sc.users * u) as i64);
        curves.push(optimal_p2p(u * sc.nt, sc.nr).scale_arg(&arg).unwrap());
    }
    min_on_interval(&curves, &lo, &hi)
}

/// Optimal symmetric MAC DMT:
/// min over u = 1..U of d*(u nt, nr)(u r).
pub fn mac_optimal(sc: &DmtScenario) -> PLCurve {
    let hi = sc.max_multiplexing();
    let lo = Rational::zero();
    let mut curves = vec![optimal_p2p(sc.nt, sc.nr)];
    for u in 2..=sc.users {
        let arg = rat_int(u as i64);
        curves.push(optimal_p2p(u * sc.nt, sc.nr).scale_arg(&arg).unwrap());
    }
    min_on_interval(&curves, &lo, &hi)
}

fn subset_sums(rates: &[Rational]) -> Vec<(usize, Rational)> {
    let n = rates.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size < 2 {
            continue;
        }
        let mut sum = Rational::zero();
        for (i, r) in rates.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sum += r;
            }
        }
        out.push((size, sum));
    }
    out
}

/// Point evaluation of the general (asymmetric) achievable DMT bound.
pub fn mac_lower_bound_at(sc: &DmtScenario, rates: &[Rational]) -> Result<Rational> {
    if rates.len() != sc.users as usize {
        return Err(Error::InvalidParameter("one rate per user".into()));
    }
    let single = optimal_p2p(sc.nt, sc.nr);
    let u_big = rat_int(sc.users as i64);
    let mut best: Option<Rational> = None;
    for r in rates {
        let v = single.eval_ext(r);
        best = Some(best.map_or(v.clone(), |b: Rational| b.min(v)));
    }
    for (size, sum) in subset_sums(rates) {
        let v = optimal_p2p(size as u32 * sc.nt, sc.nr).eval_ext(&(&u_big * &sum));
        best = Some(best.map_or(v.clone(), |b: Rational| b.min(v)));
    }
    Ok(best.unwrap())
}

/// Point evaluation of the optimal (asymmetric) MAC DMT.
pub fn mac_optimal_at(sc: &DmtScenario, rates: &[Rational]) -> Result<Rational> {
    if rates.len() != sc.users as usize {
        return Err(Error::InvalidParameter("one rate per user".into()));
    }
    let single = optimal_p2p(sc.nt, sc.nr);
    let mut best: Option<Rational> = None;
    for r in rates {
        let v = single.eval_ext(r);
        best = Some(best.map_or(v.clone(), |b: Rational| b.min(v)));
    }
    for (size, sum) in subset_sums(rates) {
        let v = optimal_p2p(size as u32 * sc.nt, sc.nr).eval_ext(&sum);
        best = Some(best.map_or(v.clone(), |b: Rational| b.min(v)));
    }
    Ok(best.unwrap())
}

/// Supremum of the initial region where the achievable bound equals the
/// optimal MAC DMT, read off the merged exact breakpoints (no grid).
pub fn optimality_threshold(sc: &DmtScenario) -> Rational {
    let lower = mac_lower_bound(sc);
    let optimal = mac_optimal(sc);
    let mut xs: Vec<Rational> = lower
        .breakpoints()
        .iter()
        .chain(optimal.breakpoints())
        .map(|(r, _)| r.clone())
        .collect();
    xs.sort();
    xs.dedup();
    let mut threshold = Rational::zero();
    for w in xs.windows(2) {
        let equal_left = lower.eval_ext(&w[0]) == optimal.eval_ext(&w[0]);
        let equal_right = lower.eval_ext(&w[1]) == optimal.eval_ext(&w[1]);
        if equal_left && equal_right {
            threshold = w[1].clone();
        } else {
            break;
        }
    }
    threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::rat;

    #[test]
    fn p2p_breakpoints() {
        let c = optimal_p2p(2, 4);
        let want = [(0, 8), (1, 3), (2, 0)];
        for ((r, d), (wr, wd)) in c.breakpoints().iter().zip(want) {
            assert_eq!(*r, rat_int(wr));
            assert_eq!(*d, rat_int(wd));
        }
        let c = optimal_p2p(1, 1);
        assert_eq!(c.breakpoints().len(), 2);
        assert_eq!(c.breakpoints()[0].1, rat_int(1));
        let c = optimal_p2p(6, 6);
        let want = [36, 25, 16, 9, 4, 1, 0];
        for (i, w) in want.iter().enumerate() {
            assert_eq!(c.breakpoints()[i].1, rat_int(*w));
        }
        assert!(c.is_convex() && c.is_nonincreasing());
    }

    #[test]
    fn eval_and_scale() {
        let c = optimal_p2p(2, 4);
        assert_eq!(c.eval(&rat(1, 2)).unwrap(), rat(11, 2)); // 8 - 5/2
        assert!(c.eval(&rat(5, 2)).is_err());
        // scale by 1 is the identity
        let s = c.scale_arg(&rat_int(1)).unwrap();
        assert_eq!(s, c);
        // min with itself is itself as a function
        let m = c.pointwise_min(&c).unwrap();
        for k in 0..=20 {
            let r = rat(k, 10);
            assert_eq!(m.eval_ext(&r), c.eval_ext(&r));
        }
    }

    #[test]
    fn min_inserts_exact_crossing() {
        // d*(2,4)(r) = 8 - 5r and d*(4,4)(6r) = 14 - 30r on its second
        // segment cross at r = 6/25
        let a = optimal_p2p(2, 4);
        let b = optimal_p2p(4, 4).scale_arg(&rat_int(6)).unwrap();
        let m = a.pointwise_min(&b).unwrap();
        let cross = rat(6, 25);
        assert!(
            m.breakpoints().iter().any(|(r, _)| *r == cross),
            "crossing 6/25 missing from {:?}",
            m.breakpoints()
        );
        assert_eq!(m.eval(&cross).unwrap(), rat(34, 5));
    }

    #[test]
    fn lower_bound_examples() {
        // one user: the bound reduces to the point-to-point curve
        let sc = DmtScenario::new(1, 2, 4).unwrap();
        let lb = mac_lower_bound(&sc);
        let p2p = optimal_p2p(2, 4);
        for k in 0..=20 {
            let r = rat(k, 10);
            assert_eq!(lb.eval_ext(&r), p2p.eval_ext(&r));
        }
        // theta examples
        assert_eq!(DmtScenario::new(3, 2, 4).unwrap().theta(), rat(4, 15));
        // (nt=3, nr=6, U=2) at r = 1/2: min{d*(6,6)(2), 18 - 8/2} = 14
        let sc = DmtScenario::new(2, 3, 6).unwrap();
        let lb = mac_lower_bound(&sc);
        assert_eq!(lb.eval(&rat(1, 2)).unwrap(), rat_int(14));
    }

    #[test]
    fn optimal_examples() {
        let sc = DmtScenario::new(3, 2, 4).unwrap();
        let opt = mac_optimal(&sc);
        // single-user branch 8 - 5r dominates at small r
        assert_eq!(opt.eval(&rat(1, 10)).unwrap(), rat(15, 2));
        // antenna pooling onset at r = min(U nt, nr)/(U + 1) = 1
        assert_eq!(opt.eval(&rat_int(1)).unwrap(), rat_int(3));
        // beyond the onset the pooled branch d*(6,4)(3r) wins
        assert_eq!(opt.eval(&rat(7, 6)).unwrap(), rat(3, 2));
        // zero at maximal multiplexing gain
        assert_eq!(opt.eval(&sc.max_multiplexing()).unwrap(), Rational::zero());
    }

    #[test]
    fn thresholds_match_known_fractions() {
        assert_eq!(
            optimality_threshold(&DmtScenario::new(3, 2, 4).unwrap()),
            rat(6, 25)
        );
        assert_eq!(
            optimality_threshold(&DmtScenario::new(2, 3, 6).unwrap()),
            rat(3, 5)
        );
        assert_eq!(
            optimality_threshold(&DmtScenario::new(3, 2, 8).unwrap()),
            rat(14, 45)
        );
    }

    #[test]
    fn single_user_threshold_is_whole_domain() {
        let sc = DmtScenario::new(1, 2, 4).unwrap();
        assert_eq!(optimality_threshold(&sc), sc.max_multiplexing());
    }

    #[test]
    fn lower_bound_below_optimal_everywhere() {
        for (u, nt, nr) in [
            (3u32, 2u32, 4u32),
            (3, 2, 8),
            (2, 3, 6),
            (2, 1, 2),
            (4, 1, 4),
        ] {
            let sc = DmtScenario::new(u, nt, nr).unwrap();
            let lb = mac_lower_bound(&sc);
            let opt = mac_optimal(&sc);
            assert!(lb.is_nonincreasing());
            assert!(opt.is_nonincreasing());
            let rmax = sc.max_multiplexing();
            for k in 0..=1000 {
                let r = &rmax * rat(k, 1000);
                let l = lb.eval_ext(&r);
                let o = opt.eval_ext(&r);
                assert!(l <= o, "lower bound above optimal at {r}: {l} > {o}");
            }
            // d(0) = nt * nr on the single-user branch
            assert_eq!(opt.eval_ext(&Rational::zero()), rat_int((nt * nr) as i64));
            assert_eq!(opt.eval_ext(&rmax), Rational::zero());
        }
    }

    #[test]
    fn asymmetric_point_evaluation() {
        let sc = DmtScenario::new(2, 3, 6).unwrap();
        // symmetric rates through the asymmetric evaluator agree with curves
        let lb_curve = mac_lower_bound(&sc);
        let opt_curve = mac_optimal(&sc);
        for k in 0..=10 {
            let r = rat(k, 10);
            let rates = vec![r.clone(), r.clone()];
            assert_eq!(
                mac_lower_bound_at(&sc, &rates).unwrap(),
                lb_curve.eval_ext(&r)
            );
            assert_eq!(mac_optimal_at(&sc, &rates).unwrap(), opt_curve.eval_ext(&r));
        }
        // genuinely asymmetric rates
        let rates = vec![rat(1, 4), rat(1, 2)];
        let v = mac_lower_bound_at(&sc, &rates).unwrap();
        // candidates: d*(3,6)(1/4)=16, d*(3,6)(1/2)=14, d*(6,6)(2*(3/4))=d*(6,6)(3/2)
        // segment (1,25)-(2,16): 25-9/2 = 41/2; min = 14
        assert_eq!(v, rat_int(14));
    }

    #[test]
    fn threshold_is_grid_free() {
        // scanning a fine grid finds the same supremum as the breakpoint walk
        let sc = DmtScenario::new(3, 2, 4).unwrap();
        let t = optimality_threshold(&sc);
        let lb = mac_lower_bound(&sc);
        let opt = mac_optimal(&sc);
        let rmax = sc.max_multiplexing();
        let mut sup = Rational::zero();
        for k in 0..=2000 {
            let r = &rmax * rat(k, 2000);
            if lb.eval_ext(&r) == opt.eval_ext(&r) {
                sup = r;
            } else {
                break;
            }
        }
        // the grid supremum cannot exceed the exact threshold and the exact
        // threshold is within one grid step of it
        assert!(sup <= t);
        assert!(&t - &sup <= &rmax * rat(1, 2000));
    }
}
