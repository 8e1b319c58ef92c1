//! Small dense complex matrices and the numeric kernels used by the search
//! and simulation layers. Generic over the floating-point scalar.

use crate::error::{Error, Result};
use crate::scalar::Real;
use num_complex::Complex;
use num_traits::{One, Zero};

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row);
        }
        CMat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex<T>) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn hermitian(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.get(r, c) + a * other.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// self * self^dagger.
    pub fn gram(&self) -> Self {
        let mut out = Self::zeros(self.rows, self.rows);
        for r in 0..self.rows {
            for s in 0..self.rows {
                let mut acc = Complex::zero();
                for c in 0..self.cols {
                    acc = acc + self.get(r, c) * self.get(s, c).conj();
                }
                out.set(r, s, acc);
            }
        }
        out
    }

    pub fn frobenius_sq(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> Complex<T> {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = Complex::one();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].norm_sqr();
            for r in k + 1..n {
                let v = a[r * n + k].norm_sqr();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best.is_zero() {
                return Complex::zero();
            }
            if piv != k {
                for c in 0..n {
                    a.swap(k * n + c, piv * n + c);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det = det * pivot;
            for r in k + 1..n {
                let f = a[r * n + k] / pivot;
                if f.is_zero() {
                    continue;
                }
                for c in k..n {
                    let v = a[r * n + c] - f * a[k * n + c];
                    a[r * n + c] = v;
                }
            }
        }
        det
    }

    /// det(self * self^dagger), always real and nonnegative up to roundoff.
    pub fn det_gram(&self) -> T {
        self.gram().det().re
    }

    /// Flatten to a real vector (re, im interleaved), the coordinates used for
    /// the real inner product <X, Y> = Re Tr(X Y^dagger).
    pub fn flatten_real(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(2 * self.data.len());
        for z in &self.data {
            v.push(z.re);
            v.push(z.im);
        }
        v
    }

    pub fn from_real_vec(rows: usize, cols: usize, v: &[T]) -> Self {
        assert_eq!(v.len(), 2 * rows * cols);
        let data = v.chunks(2).map(|p| Complex::new(p[0], p[1])).collect();
        CMat { rows, cols, data }
    }
}

pub fn rdot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| *x * *y)
        .fold(T::zero(), |s, v| s + v)
}

pub fn rnorm<T: Real>(a: &[T]) -> T {
    rdot(a, a).sqrt()
}

/// Gram-Schmidt orthonormal basis of the span of `vs`. Errors when a pivot
/// falls under `tol` (dependent or nearly dependent input).
pub fn orthonormal_basis<T: Real>(vs: &[Vec<T>], tol: T) -> Result<Vec<Vec<T>>> {
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut w = v.clone();
        for e in &basis {
            let c = rdot(&w, e);
            for (wi, ei) in w.iter_mut().zip(e) {
                *wi = *wi - c * *ei;
            }
        }
        let n = rnorm(&w);
        if n < tol {
            return Err(Error::DegenerateBasis);
        }
        for wi in &mut w {
            *wi = *wi / n;
        }
        basis.push(w);
    }
    Ok(basis)
}

/// Projection of x onto the orthogonal complement of span(onb); onb must be
/// orthonormal.
pub fn project_out<T: Real>(onb: &[Vec<T>], x: &[T]) -> Vec<T> {
    let mut w = x.to_vec();
    for e in onb {
        let c = rdot(&w, e);
        for (wi, ei) in w.iter_mut().zip(e) {
            *wi = *wi - c * *ei;
        }
    }
    w
}

/// Cholesky factor of a Hermitian positive definite matrix; errors if a pivot
/// is not strictly positive.
pub fn cholesky<T: Real>(a: &CMat<T>, tol: T) -> Result<CMat<T>> {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    // Hermitian sanity
    let scale = a.frobenius_sq().sqrt().max(T::one());
    for r in 0..n {
        for c in 0..n {
            let d = (a.get(r, c) - a.get(c, r).conj()).norm();
            if d > T::from_f64c(1e-9) * scale {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut diag = a.get(j, j).re;
        for k in 0..j {
            diag = diag - l.get(j, k).norm_sqr();
        }
        if diag <= tol {
            return Err(Error::NotPositiveDefinite);
        }
        let dj = diag.sqrt();
        l.set(j, j, Complex::new(dj, T::zero()));
        for i in j + 1..n {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc = acc - l.get(i, k) * l.get(j, k).conj();
            }
            l.set(i, j, acc / Complex::new(dj, T::zero()));
        }
    }
    Ok(l)
}

/// Determinant of a Hermitian PD matrix via its Cholesky factor.
pub fn pd_det<T: Real>(a: &CMat<T>, tol: T) -> Result<T> {
    let l = cholesky(a, tol)?;
    let mut det = T::one();
    for j in 0..a.rows() {
        let d = l.get(j, j).re;
        det = det * d * d;
    }
    Ok(det)
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num = 1usize;
    for i in 0..k {
        num = num * (n - i) / (i + 1);
    }
    num
}

/// Index tables for exterior products of vectors in C^k.
#[derive(Clone, Debug)]
pub struct WedgeTables {
    k: usize,
    /// extend[r][t] lists (sub_rank, element, negative) terms producing the
    /// t-th (r+1)-subset coordinate from r-subset coordinates.
    extend: Vec<Vec<Vec<(usize, usize, bool)>>>,
}

fn subsets_lex(k: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binom(k, r));
    let mut cur = Vec::with_capacity(r);
    fn rec(start: usize, k: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for v in start..k {
            cur.push(v);
            rec(v + 1, k, r, cur, out);
            cur.pop();
        }
    }
    rec(0, k, r, &mut cur, &mut out);
    out
}

fn subset_rank(s: &[usize], k: usize) -> usize {
    let r = s.len();
    let mut rank = 0;
    let mut prev = 0;
    for (i, &si) in s.iter().enumerate() {
        for v in prev..si {
            rank += binom(k - 1 - v, r - 1 - i);
        }
        prev = si + 1;
    }
    rank
}

impl WedgeTables {
    pub fn new(k: usize, r_max: usize) -> Self {
        let mut extend = Vec::with_capacity(r_max);
        for r in 0..r_max {
            let tsets = subsets_lex(k, r + 1);
            let mut level = Vec::with_capacity(tsets.len());
            for t in &tsets {
                let mut terms = Vec::with_capacity(t.len());
                for (pos, &j) in t.iter().enumerate() {
                    let mut sub = t.clone();
                    sub.remove(pos);
                    let negative = (t.len() - 1 - pos) % 2 == 1;
                    terms.push((subset_rank(&sub, k), j, negative));
                }
                level.push(terms);
            }
            extend.push(level);
        }
        WedgeTables { k, extend }
    }

    pub fn dim(&self, r: usize) -> usize {
        binom(self.k, r)
    }
}

/// Exterior power coordinates of a sequence of vectors in C^k; the squared
/// norm equals the Gram determinant of the vectors.
#[derive(Clone, Debug)]
pub struct Wedge<T> {
    pub grade: usize,
    pub coords: Vec<Complex<T>>,
}

impl<T: Real> Wedge<T> {
    pub fn unit() -> Self {
        Wedge {
            grade: 0,
            coords: vec![Complex::one()],
        }
    }

    pub fn extend(&self, tables: &WedgeTables, v: &[Complex<T>]) -> Self {
        let mut coords = vec![Complex::zero(); tables.dim(self.grade + 1)];
        extend_into(tables, self.grade, &self.coords, v, &mut coords);
        Wedge {
            grade: self.grade + 1,
            coords,
        }
    }

    pub fn norm_sq(&self) -> T {
        self.coords
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
    }
}

/// Writes the coordinates of (w ^ v) into `out`, where `w` has the given
/// grade; `out` must have length binom(k, grade + 1).
pub fn extend_into<T: Real>(
    tables: &WedgeTables,
    grade: usize,
    coords: &[Complex<T>],
    v: &[Complex<T>],
    out: &mut [Complex<T>],
) {
    let level = &tables.extend[grade];
    debug_assert_eq!(out.len(), level.len());
    for (o, terms) in out.iter_mut().zip(level) {
        let mut acc = Complex::zero();
        for &(sub, j, neg) in terms {
            let t = coords[sub] * v[j];
            acc = if neg { acc - t } else { acc + t };
        }
        *o = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_cmat(rng: &mut Rng, r: usize, c: usize) -> CMat<f64> {
        let mut m = CMat::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                let (a, b) = rng.normal_pair::<f64>();
                m.set(i, j, Complex::new(a, b));
            }
        }
        m
    }

    #[test]
    fn det_of_identity_and_swap() {
        let id = CMat::<f64>::identity(4);
        assert!((id.det() - Complex::new(1.0, 0.0)).norm() < 1e-14);
        let mut sw = CMat::<f64>::identity(2);
        sw.set(0, 0, Complex::new(0.0, 0.0));
        sw.set(1, 1, Complex::new(0.0, 0.0));
        sw.set(0, 1, Complex::new(1.0, 0.0));
        sw.set(1, 0, Complex::new(1.0, 0.0));
        assert!((sw.det() + Complex::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn det_multiplicative() {
        let mut rng = Rng::new(8);
        for _ in 0..50 {
            let a = random_cmat(&mut rng, 3, 3);
            let b = random_cmat(&mut rng, 3, 3);
            let lhs = a.matmul(&b).det();
            let rhs = a.det() * b.det();
            assert!((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn gram_schmidt_and_projection() {
        let mut rng = Rng::new(3);
        let vs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..6).map(|_| rng.normal_pair::<f64>().0).collect())
            .collect();
        let onb = orthonormal_basis(&vs, 1e-10).unwrap();
        for (i, e) in onb.iter().enumerate() {
            assert!((rnorm(e) - 1.0).abs() < 1e-12);
            for f in onb.iter().skip(i + 1) {
                assert!(rdot(e, f).abs() < 1e-12);
            }
        }
        // projection is orthogonal to the span and shrinks norms
        let x: Vec<f64> = (0..6).map(|_| rng.normal_pair::<f64>().0).collect();
        let p = project_out(&onb, &x);
        for e in &onb {
            assert!(rdot(&p, e).abs() < 1e-10);
        }
        assert!(rnorm(&p) <= rnorm(&x) + 1e-12);
        // dependent input errors
        let mut dep = vs.clone();
        dep.push(vs[0].clone());
        assert!(orthonormal_basis(&dep, 1e-10).is_err());
    }

    #[test]
    fn cholesky_det_matches_lu() {
        let mut rng = Rng::new(4);
        for _ in 0..50 {
            let g = random_cmat(&mut rng, 4, 6);
            let a = g.gram();
            let d1 = pd_det(&a, 1e-12).unwrap();
            let d2 = a.det().re;
            assert!((d1 - d2).abs() < 1e-9 * (1.0 + d2.abs()));
        }
        // non-PD input is rejected
        let mut neg = CMat::<f64>::identity(2);
        neg.set(1, 1, Complex::new(-1.0, 0.0));
        assert!(matches!(
            pd_det(&neg, 1e-12),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn wedge_norm_is_gram_det() {
        let mut rng = Rng::new(5);
        let tables = WedgeTables::new(5, 3);
        for _ in 0..50 {
            let m = random_cmat(&mut rng, 3, 5);
            let mut w = Wedge::unit();
            for r in 0..3 {
                w = w.extend(&tables, m.row(r));
            }
            let got = w.norm_sq();
            let want = m.det_gram();
            assert!(
                (got - want).abs() < 1e-9 * (1.0 + want.abs()),
                "{got} vs {want}"
            );
        }
    }

    #[test]
    fn kernels_work_at_f32() {
        let mut m = CMat::<f32>::identity(3);
        m.set(0, 1, Complex::new(0.5f32, -0.25));
        let d = m.det();
        assert!((d.re - 1.0).abs() < 1e-6 && d.im.abs() < 1e-6);
        let vs: Vec<Vec<f32>> = vec![vec![1.0, 0.0, 1.0], vec![0.0, 2.0, 0.0]];
        let onb = orthonormal_basis(&vs, 1e-6f32).unwrap();
        assert!((rnorm(&onb[0]) - 1.0).abs() < 1e-6);
        let tables = WedgeTables::new(3, 2);
        let w = Wedge::<f32>::unit()
            .extend(
                &tables,
                &[Complex::new(1.0, 0.0), Complex::zero(), Complex::zero()],
            )
            .extend(
                &tables,
                &[Complex::zero(), Complex::new(2.0, 0.0), Complex::zero()],
            );
        assert!((w.norm_sq() - 4.0).abs() < 1e-5);
    }

    #[test]
    fn subset_ranks_are_lex_positions() {
        let k = 6;
        for r in 1..=4 {
            for (i, s) in subsets_lex(k, r).iter().enumerate() {
                assert_eq!(subset_rank(s, k), i);
            }
        }
    }
}
