//! Assembly of multi-user space-time codes from a validated tower.
//!
//! A single user's codeword is the left regular representation of an element
//! of the natural order of the cyclic algebra (L/F, tau, p), spread over U
//! blocks by the powers of sigma, with the user's own block scaled by p^-m.
//! Stacking the per-user block rows of a subset of users gives the joint
//! matrix whose determinant the rank certificates act on.

use crate::cyclotomic::{rat_int, CyclotomicElement, Rational};
use crate::error::{Error, Result};
use crate::numeric::CMat;
use crate::scalar::Real;
use crate::tower::{Sub, TowerSpec, Valuation};
use num_traits::Signed;
use std::collections::HashMap;

/// Dense matrix of exact field elements, all at the same conductor.
#[derive(Clone, Debug, PartialEq)]
pub struct CycMat {
    rows: usize,
    cols: usize,
    data: Vec<CyclotomicElement>,
}

impl CycMat {
    pub fn zeros(n: u32, rows: usize, cols: usize) -> Self {
        CycMat {
            rows,
            cols,
            data: vec![CyclotomicElement::zero(n); rows * cols],
        }
    }

    pub fn identity(n: u32, size: usize) -> Self {
        let mut m = Self::zeros(n, size, size);
        for i in 0..size {
            m.set(i, i, CyclotomicElement::one(n));
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &CyclotomicElement {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: CyclotomicElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn map<F: Fn(&CyclotomicElement) -> CyclotomicElement>(&self, f: F) -> Self {
        CycMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, s: &CyclotomicElement) -> Self {
        self.map(|e| e.checked_mul(s).unwrap())
    }

    /// Stack vertically.
    pub fn vstack(blocks: &[CycMat]) -> Self {
        let cols = blocks[0].cols;
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            assert_eq!(b.cols, cols);
            data.extend(b.data.iter().cloned());
        }
        CycMat { rows, cols, data }
    }

    /// Exact A * A^dagger; conjugation is the ambient automorphism.
    pub fn gram(&self) -> Self {
        let n = self.data[0].conductor();
        let mut out = Self::zeros(n, self.rows, self.rows);
        for r in 0..self.rows {
            for s in 0..self.rows {
                let mut acc = CyclotomicElement::zero(n);
                for c in 0..self.cols {
                    acc = acc
                        .checked_add(&self.get(r, c).checked_mul(&self.get(s, c).conj()).unwrap())
                        .unwrap();
                }
                out.set(r, s, acc);
            }
        }
        out
    }

    /// Exact determinant by Laplace expansion with minor caching.
    pub fn det(&self) -> CyclotomicElement {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.data[0].conductor();
        let size = self.rows;
        if size == 0 {
            return CyclotomicElement::one(n);
        }
        let full: u64 = (1 << size) - 1;
        let mut memo: HashMap<u64, CyclotomicElement> = HashMap::new();
        self.minor(size, 0, full, n, &mut memo)
    }

    fn minor(
        &self,
        size: usize,
        row: usize,
        mask: u64,
        n: u32,
        memo: &mut HashMap<u64, CyclotomicElement>,
    ) -> CyclotomicElement {
        if row == size {
            return CyclotomicElement::one(n);
        }
        if let Some(v) = memo.get(&mask) {
            return v.clone();
        }
        let mut acc = CyclotomicElement::zero(n);
        let mut sign_neg = false;
        for c in 0..size {
            if mask & (1 << c) == 0 {
                continue;
            }
            let entry = self.get(row, c);
            if !entry.is_zero() {
                let sub = self.minor(size, row + 1, mask & !(1 << c), n, memo);
                let term = entry.checked_mul(&sub).unwrap();
                acc = if sign_neg {
                    acc.checked_sub(&term).unwrap()
                } else {
                    acc.checked_add(&term).unwrap()
                };
            }
            sign_neg = !sign_neg;
        }
        memo.insert(mask, acc.clone());
        acc
    }

    /// Numeric mirror of the exact matrix.
    pub fn embed<T: Real>(&self) -> CMat<T> {
        let mut out = CMat::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get(r, c).embed());
            }
        }
        out
    }
}

/// The left regular representation of x_1 + u x_2 + ... + u^(nt-1) x_nt:
/// entry (r, c) is `p^[r < c] * tau^c(x_((r - c) mod nt))`, zero-indexed.
pub fn psi_matrix(spec: &TowerSpec, slots: &[CyclotomicElement]) -> CycMat {
    let nt = spec.nt as usize;
    assert_eq!(slots.len(), nt, "one slot per antenna");
    let mut m = CycMat::zeros(spec.n, nt, nt);
    for c in 0..nt {
        for r in 0..nt {
            let idx = (r as i64 - c as i64).rem_euclid(nt as i64) as usize;
            let mut e = spec.tau_unchecked(&slots[idx], c as i64);
            if r < c {
                e = e.checked_mul(&spec.p).unwrap();
            }
            m.set(r, c, e);
        }
    }
    m
}

/// Product of two algebra elements given by their slot coefficients, using
/// the relations x u = u tau(x) and u^nt = p.
pub fn algebra_mul(
    spec: &TowerSpec,
    x: &[CyclotomicElement],
    y: &[CyclotomicElement],
) -> Vec<CyclotomicElement> {
    let nt = spec.nt as usize;
    let mut out = vec![CyclotomicElement::zero(spec.n); nt];
    for (i, xi) in x.iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        for (j, yj) in y.iter().enumerate() {
            if yj.is_zero() {
                continue;
            }
            let k = (i + j) % nt;
            let wraps = ((i + j) / nt) as u64;
            let mut term = spec.tau_unchecked(xi, j as i64).checked_mul(yj).unwrap();
            if wraps > 0 {
                term = term.checked_mul(&spec.p.pow(wraps)).unwrap();
            }
            out[k] = out[k].checked_add(&term).unwrap();
        }
    }
    out
}

/// Block row of user j (1-based): sigma^c(M_j) for c = 0..U-1 with the block
/// c = j-1 scaled by p^-m.
pub fn user_block(
    spec: &TowerSpec,
    user: u32,
    m_j: &CycMat,
    p_inv_m: &CyclotomicElement,
) -> CycMat {
    let users = spec.users as usize;
    let nt = spec.nt as usize;
    let mut out = CycMat::zeros(spec.n, nt, users * nt);
    for c_block in 0..users {
        let img = m_j.map(|e| spec.sigma_unchecked(e, c_block as i64));
        let img = if c_block == (user - 1) as usize {
            img.scale(p_inv_m)
        } else {
            img
        };
        for r in 0..nt {
            for c in 0..nt {
                out.set(r, c_block * nt + c, img.get(r, c).clone());
            }
        }
    }
    out
}

/// One user's codeword coordinates: nt slots, each over the working-order
/// basis of L, so nt * 2 * degree integers.
#[derive(Clone, Debug, PartialEq)]
pub struct UserWord {
    pub user: u32,
    pub coords: Vec<i64>,
    tag: u64,
}

impl UserWord {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn bound(&self) -> i64 {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or(0)
    }
}

/// Stacked joint codeword of a subset of users, exact entries plus a numeric
/// mirror.
#[derive(Clone, Debug)]
pub struct JointMatrix {
    pub subset: Vec<u32>,
    pub exact: CycMat,
    pub numeric: CMat<f64>,
}

/// A U-user code: the tower, the diagonal exponent, and the per-user lattice
/// generators in exact and numeric form.
#[derive(Clone, Debug)]
pub struct MacCode {
    pub spec: TowerSpec,
    order_basis: Vec<CyclotomicElement>,
    p_inv_m: CyclotomicElement,
    numeric_gens: Vec<Vec<CMat<f64>>>,
    tag: u64,
}

impl MacCode {
    /// Assemble the code from a validated tower. Checks that every user's
    /// generator set is linearly independent over R.
    pub fn build(spec: TowerSpec) -> Result<Self> {
        let order_basis = spec.order_basis();
        let p_inv_m = spec.p.inv()?.pow(spec.m as u64);
        let users = spec.users as usize;
        let dim = Self::word_dim_of(&spec);

        let mut tag: u64 = 0xcbf2_9ce4_8422_2325;
        let mix = |t: &mut u64, v: u64| {
            *t ^= v;
            *t = t.wrapping_mul(0x1000_0000_01b3);
        };
        mix(&mut tag, spec.users as u64);
        mix(&mut tag, spec.nt as u64);
        mix(&mut tag, spec.n as u64);
        mix(&mut tag, spec.m as u64);
        mix(&mut tag, spec.ambient_sigma as u64);
        for c in spec.p.coeffs() {
            mix(
                &mut tag,
                c.numer()
                    .magnitude()
                    .to_u64_digits()
                    .first()
                    .copied()
                    .unwrap_or(0),
            );
        }

        let mut numeric_gens = Vec::with_capacity(users);
        for user in 1..=users as u32 {
            let mut gens = Vec::with_capacity(dim);
            for g in 0..dim {
                let mut coords = vec![0i64; dim];
                coords[g] = 1;
                let word = UserWord { user, coords, tag };
                let block = build_block(&spec, &order_basis, &p_inv_m, &word);
                gens.push(block.embed::<f64>());
            }
            // full lattice rank over R
            let flat: Vec<Vec<f64>> = gens.iter().map(|g| g.flatten_real()).collect();
            crate::numeric::orthonormal_basis(&flat, 1e-9).map_err(|_| {
                Error::TowerValidation(format!("user {user} generators are not R-independent"))
            })?;
            numeric_gens.push(gens);
        }

        Ok(MacCode {
            spec,
            order_basis,
            p_inv_m,
            numeric_gens,
            tag,
        })
    }

    fn word_dim_of(spec: &TowerSpec) -> usize {
        spec.nt as usize * 2 * spec.degree() as usize
    }

    /// Length of a user's coordinate vector: nt * 2 * degree.
    pub fn word_dim(&self) -> usize {
        Self::word_dim_of(&self.spec)
    }

    pub fn users(&self) -> u32 {
        self.spec.users
    }

    pub fn nt(&self) -> u32 {
        self.spec.nt
    }

    /// Block length k = U * nt (channel uses).
    pub fn block_len(&self) -> u32 {
        self.spec.users * self.spec.nt
    }

    pub fn word(&self, user: u32, coords: Vec<i64>) -> Result<UserWord> {
        if user == 0 || user > self.spec.users {
            return Err(Error::InvalidParameter(format!("user {user} out of range")));
        }
        if coords.len() != self.word_dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                self.word_dim(),
                coords.len()
            )));
        }
        Ok(UserWord {
            user,
            coords,
            tag: self.tag,
        })
    }

    /// The nt slot elements of a word.
    pub fn slots(&self, word: &UserWord) -> Vec<CyclotomicElement> {
        let per_slot = 2 * self.spec.degree() as usize;
        word.coords
            .chunks(per_slot)
            .map(|chunk| {
                let mut acc = CyclotomicElement::zero(self.spec.n);
                for (c, b) in chunk.iter().zip(&self.order_basis) {
                    if *c != 0 {
                        acc = acc.checked_add(&b.scaled(&rat_int(*c))).unwrap();
                    }
                }
                acc
            })
            .collect()
    }

    /// Exact block row B_j of a word.
    pub fn block(&self, word: &UserWord) -> Result<CycMat> {
        if word.tag != self.tag {
            return Err(Error::MixedCodes);
        }
        Ok(build_block(
            &self.spec,
            &self.order_basis,
            &self.p_inv_m,
            word,
        ))
    }

    pub fn numeric_generators(&self, user: u32) -> &[CMat<f64>] {
        &self.numeric_gens[(user - 1) as usize]
    }

    /// Numeric block row as a linear combination of the generators.
    pub fn numeric_block(&self, user: u32, coords: &[i64]) -> CMat<f64> {
        let gens = self.numeric_generators(user);
        let mut acc = CMat::zeros(self.spec.nt as usize, self.block_len() as usize);
        for (c, g) in coords.iter().zip(gens) {
            if *c != 0 {
                acc = acc.add(&g.scale(num_complex::Complex::new(*c as f64, 0.0)));
            }
        }
        acc
    }

    /// Stack the block rows of the given words (sorted by user index).
    pub fn joint_matrix(&self, words: &[UserWord]) -> Result<JointMatrix> {
        if words.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut sorted: Vec<&UserWord> = words.iter().collect();
        sorted.sort_by_key(|w| w.user);
        for pair in sorted.windows(2) {
            if pair[0].user == pair[1].user {
                return Err(Error::InvalidParameter(format!(
                    "user {} appears twice",
                    pair[0].user
                )));
            }
        }
        let blocks: Vec<CycMat> = sorted
            .iter()
            .map(|w| self.block(w))
            .collect::<Result<_>>()?;
        let exact = CycMat::vstack(&blocks);
        let numeric = exact.embed::<f64>();
        Ok(JointMatrix {
            subset: sorted.iter().map(|w| w.user).collect(),
            exact,
            numeric,
        })
    }

    /// Exact det(A) for square stacks, det(A A^dagger) otherwise. Zero exactly
    /// when the stack is rank deficient. Entries are rescaled by p^m first so
    /// the heavy arithmetic stays integral.
    pub fn exact_gram_determinant(&self, jm: &JointMatrix) -> Result<CyclotomicElement> {
        let rows = jm.exact.rows();
        let p_m = self.spec.p.pow(self.spec.m as u64);
        let scaled = jm.exact.scale(&p_m);
        let det = if rows == jm.exact.cols() {
            let d = scaled.det();
            // det(p^m A) = p^(m rows) det(A)
            d.checked_mul(&p_m.pow(rows as u64).inv()?)?
        } else {
            let d = scaled.gram().det();
            // det((p^m A)(p^m A)^H) = N(p)^(m rows) det(A A^H)
            let np = p_m.checked_mul(&p_m.conj())?;
            d.checked_mul(&np.pow(rows as u64).inv()?)?
        };
        debug_assert_eq!(
            self.spec.tau_unchecked(&det, 1),
            det,
            "determinant left the center"
        );
        Ok(det)
    }

    /// Slot elements divided by the largest common power of p.
    pub fn normalize_word(&self, word: &UserWord) -> Result<Vec<CyclotomicElement>> {
        if word.is_zero() {
            return Err(Error::ZeroWord);
        }
        let slots = self.slots(word);
        let mut min_v = i64::MAX;
        for s in &slots {
            if let Valuation::Finite(v) = self.spec.valuation_element(s)? {
                min_v = min_v.min(v);
            }
        }
        if min_v == 0 {
            return Ok(slots);
        }
        let scale = self.spec.p.pow(min_v as u64).inv()?;
        Ok(slots
            .iter()
            .map(|s| s.checked_mul(&scale).unwrap())
            .collect())
    }

    /// v(det M(x_1..x_nt)) for a normalized nonzero word; always within
    /// [0, nt-1].
    pub fn valuation_certificate(&self, word: &UserWord) -> Result<i64> {
        let slots = self.normalize_word(word)?;
        let m = psi_matrix(&self.spec, &slots);
        let det = m.det();
        match self.spec.valuation_element(&det)? {
            Valuation::Infinite => Err(Error::TowerValidation(
                "single-user representation has zero determinant".into(),
            )),
            Valuation::Finite(v) => {
                if v < 0 || v >= self.spec.nt as i64 {
                    return Err(Error::TowerValidation(format!(
                        "certificate valuation {v} outside [0, nt-1]"
                    )));
                }
                Ok(v)
            }
        }
    }
}

fn build_block(
    spec: &TowerSpec,
    order_basis: &[CyclotomicElement],
    p_inv_m: &CyclotomicElement,
    word: &UserWord,
) -> CycMat {
    let per_slot = 2 * spec.degree() as usize;
    let slots: Vec<CyclotomicElement> = word
        .coords
        .chunks(per_slot)
        .map(|chunk| {
            let mut acc = CyclotomicElement::zero(spec.n);
            for (c, b) in chunk.iter().zip(order_basis) {
                if *c != 0 {
                    acc = acc.checked_add(&b.scaled(&rat_int(*c))).unwrap();
                }
            }
            acc
        })
        .collect();
    let m_j = psi_matrix(spec, &slots);
    user_block(spec, word.user, &m_j, p_inv_m)
}

/// Outcome of the 2-user norm condition test.
#[derive(Clone, Debug)]
pub enum NormTestOutcome {
    /// The norm matrix is singular; a concrete singular codeword pair follows.
    SingularExists {
        witness: (CyclotomicElement, CyclotomicElement),
    },
    /// Every codeword pair with nonzero entries has full rank.
    FullRank { norm_det: CyclotomicElement },
}

/// For a degree-2 tower and row multipliers (a, b; c, d): a singular code
/// matrix [[a x, b s(x)], [c y, d s(y)]] exists iff N(a)N(d) - N(b)N(c) = 0,
/// where N is the norm of L/K. In the singular case the returned witness
/// (x, y) makes the determinant exactly zero.
pub fn two_user_norm_test(
    spec: &TowerSpec,
    a: &CyclotomicElement,
    b: &CyclotomicElement,
    c: &CyclotomicElement,
    d: &CyclotomicElement,
) -> Result<NormTestOutcome> {
    if spec.degree() != 2 {
        return Err(Error::InvalidParameter(
            "norm test needs a degree-2 tower".into(),
        ));
    }
    let n = |x: &CyclotomicElement| spec.relative_norm(x, Sub::LK);
    let det = n(a)?
        .checked_mul(&n(d)?)?
        .checked_sub(&n(b)?.checked_mul(&n(c)?)?)?;
    if !det.is_zero() {
        return Ok(NormTestOutcome::FullRank { norm_det: det });
    }
    if b.is_zero() || c.is_zero() || a.is_zero() || d.is_zero() {
        // one of the diagonal products vanishes identically
        let one = CyclotomicElement::one(spec.n);
        return Ok(NormTestOutcome::SingularExists {
            witness: (one.clone(), one),
        });
    }
    let u = a.checked_mul(d)?.checked_div(&b.checked_mul(c)?)?;
    let z = hilbert90_witness(spec, &u)?;
    Ok(NormTestOutcome::SingularExists {
        witness: (z, CyclotomicElement::one(spec.n)),
    })
}

/// For a degree-2 tower and u with N_LK(u) = 1, returns nonzero integral z
/// with sigma(z)/z = u exactly. Candidates v run over the working-order
/// basis; z = sigma(v) + sigma(u) v, then denominators are cleared.
pub fn hilbert90_witness(spec: &TowerSpec, u: &CyclotomicElement) -> Result<CyclotomicElement> {
    if spec.degree() != 2 {
        return Err(Error::InvalidParameter(
            "Hilbert 90 witness needs a degree-2 tower".into(),
        ));
    }
    if spec.relative_norm(u, Sub::LK)? != CyclotomicElement::one(spec.n) {
        return Err(Error::NormNotOne);
    }
    let su = spec.sigma_apply(u, 1)?;
    for v in spec.order_basis() {
        let z = spec
            .sigma_unchecked(&v, 1)
            .checked_add(&su.checked_mul(&v)?)?;
        if z.is_zero() {
            continue;
        }
        // scale by a rational integer so the power-basis coefficients are integral
        let scale = z.coeff_denominator_lcm();
        let z = z.scaled(&Rational::from_integer(scale));
        debug_assert!(z.has_integer_coeffs());
        // exact check sigma(z) = u z
        let check = spec.sigma_unchecked(&z, 1);
        if check != u.checked_mul(&z)? {
            return Err(Error::TowerValidation(
                "Hilbert-90 construction failed".into(),
            ));
        }
        return Ok(z);
    }
    Err(Error::NoWitness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::tower::{build_tower, catalog_row, KKind, TowerParams};

    fn code31() -> MacCode {
        let spec = build_tower(&TowerParams {
            users: 3,
            nt: 1,
            k_kind: KKind::Gaussian,
            row: None,
            m: None,
            sigma_exp: None,
        })
        .unwrap();
        MacCode::build(spec).unwrap()
    }

    fn code22() -> MacCode {
        let spec = build_tower(&TowerParams::from_catalog(2, 2, KKind::Eisenstein)).unwrap();
        MacCode::build(spec).unwrap()
    }

    fn code21() -> MacCode {
        let spec = build_tower(&TowerParams::from_catalog(2, 1, KKind::Gaussian)).unwrap();
        MacCode::build(spec).unwrap()
    }

    fn random_word(rng: &mut Rng, code: &MacCode, user: u32, bound: i64) -> UserWord {
        loop {
            let coords: Vec<i64> = (0..code.word_dim())
                .map(|_| rng.int_range(-bound, bound))
                .collect();
            if coords.iter().any(|&c| c != 0) {
                return code.word(user, coords).unwrap();
            }
        }
    }

    #[test]
    fn psi_1x1_is_the_element() {
        let code = code31();
        let x = code.spec.theta.clone();
        let m = psi_matrix(&code.spec, &[x.clone()]);
        assert_eq!(m.rows(), 1);
        assert_eq!(*m.get(0, 0), x);
    }

    #[test]
    fn psi_2x2_unit_and_generator() {
        let code = code22();
        let spec = &code.spec;
        let one = CyclotomicElement::one(spec.n);
        let zero = CyclotomicElement::zero(spec.n);
        // x = (1, 0) is the algebra unit
        let m = psi_matrix(spec, &[one.clone(), zero.clone()]);
        assert_eq!(m, CycMat::identity(spec.n, 2));
        // x = (0, 1) is the generator u with u^2 = p
        let mu = psi_matrix(spec, &[zero, one]);
        assert_eq!(*mu.get(0, 0), CyclotomicElement::zero(spec.n));
        assert_eq!(*mu.get(0, 1), spec.p);
        assert_eq!(*mu.get(1, 0), CyclotomicElement::one(spec.n));
        assert_eq!(*mu.get(1, 1), CyclotomicElement::zero(spec.n));
        // u * u = p * unit
        let prod = algebra_mul(
            spec,
            &[
                CyclotomicElement::zero(spec.n),
                CyclotomicElement::one(spec.n),
            ],
            &[
                CyclotomicElement::zero(spec.n),
                CyclotomicElement::one(spec.n),
            ],
        );
        assert_eq!(prod[0], spec.p);
        assert!(prod[1].is_zero());
    }

    #[test]
    fn psi_is_multiplicative() {
        let code = code22();
        let spec = &code.spec;
        let mut rng = Rng::new(77);
        let basis = spec.order_basis();
        let rand_slot = |rng: &mut Rng| {
            let mut acc = CyclotomicElement::zero(spec.n);
            for b in &basis {
                acc = acc
                    .checked_add(&b.scaled(&rat_int(rng.int_range(-2, 2))))
                    .unwrap();
            }
            acc
        };
        for _ in 0..200 {
            let x = [rand_slot(&mut rng), rand_slot(&mut rng)];
            let y = [rand_slot(&mut rng), rand_slot(&mut rng)];
            let lhs = {
                let mx = psi_matrix(spec, &x);
                let my = psi_matrix(spec, &y);
                // exact matrix product
                let mut out = CycMat::zeros(spec.n, 2, 2);
                for r in 0..2 {
                    for c in 0..2 {
                        let mut acc = CyclotomicElement::zero(spec.n);
                        for k in 0..2 {
                            acc = acc
                                .checked_add(&mx.get(r, k).checked_mul(my.get(k, c)).unwrap())
                                .unwrap();
                        }
                        out.set(r, c, acc);
                    }
                }
                out
            };
            let rhs = psi_matrix(spec, &algebra_mul(spec, &x, &y));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn single_user_block_is_scaled_representation() {
        // U = 1: the block is just p^-m M_1
        let spec = build_tower(&TowerParams::from_catalog(1, 1, KKind::Gaussian)).unwrap();
        let code = MacCode::build(spec).unwrap();
        let w = code.word(1, vec![1, 0]).unwrap();
        let b = code.block(&w).unwrap();
        let expect = code.spec.p.inv().unwrap();
        assert_eq!(*b.get(0, 0), expect);
    }

    #[test]
    fn three_user_block_row_pattern() {
        let code = code31();
        let spec = &code.spec;
        let mut coords = vec![0i64; code.word_dim()];
        coords[1] = 1; // x = theta
        let w = code.word(2, coords).unwrap();
        let b = code.block(&w).unwrap();
        let x = spec.theta.clone();
        // (x, p^-1 sigma(x), sigma^2(x))
        assert_eq!(*b.get(0, 0), x);
        assert_eq!(
            *b.get(0, 1),
            spec.sigma_apply(&x, 1)
                .unwrap()
                .checked_div(&spec.p)
                .unwrap()
        );
        assert_eq!(*b.get(0, 2), spec.sigma_apply(&x, 2).unwrap());
    }

    #[test]
    fn two_user_two_antenna_block_matches_display() {
        let code = code22();
        let spec = &code.spec;
        let s = |x: &CyclotomicElement, k: i64| spec.sigma_apply(x, k).unwrap();
        let p = &spec.p;
        let pinv = p.inv().unwrap();
        let pinv2 = pinv.checked_mul(&pinv).unwrap();
        let x1 = spec.theta.clone();
        let x2 = spec
            .theta
            .checked_mul(&spec.theta)
            .unwrap()
            .checked_add(&spec.beta)
            .unwrap();
        let m1 = psi_matrix(spec, &[x1.clone(), x2.clone()]);
        let b1 = user_block(spec, 1, &m1, &pinv2);
        // row 1: p^-2 x1, p^-1 sigma^2(x2), sigma(x1), p sigma^3(x2)
        assert_eq!(*b1.get(0, 0), x1.checked_mul(&pinv2).unwrap());
        assert_eq!(*b1.get(0, 1), s(&x2, 2).checked_mul(&pinv).unwrap());
        assert_eq!(*b1.get(0, 2), s(&x1, 1));
        assert_eq!(*b1.get(0, 3), s(&x2, 3).checked_mul(p).unwrap());
        // row 2: p^-2 x2, p^-2 sigma^2(x1), sigma(x2), sigma^3(x1)
        assert_eq!(*b1.get(1, 0), x2.checked_mul(&pinv2).unwrap());
        assert_eq!(*b1.get(1, 1), s(&x1, 2).checked_mul(&pinv2).unwrap());
        assert_eq!(*b1.get(1, 2), s(&x2, 1));
        assert_eq!(*b1.get(1, 3), s(&x1, 3));
        // user 2 rows: y1, p sigma^2(y2), p^-2 sigma(y1), p^-1 sigma^3(y2)
        let b2 = user_block(spec, 2, &m1, &pinv2);
        assert_eq!(*b2.get(0, 0), x1);
        assert_eq!(*b2.get(0, 1), s(&x2, 2).checked_mul(p).unwrap());
        assert_eq!(*b2.get(0, 2), s(&x1, 1).checked_mul(&pinv2).unwrap());
        assert_eq!(*b2.get(0, 3), s(&x2, 3).checked_mul(&pinv).unwrap());
    }

    #[test]
    fn joint_matrix_unit_is_scaled_identity() {
        let spec = build_tower(&TowerParams::from_catalog(1, 1, KKind::Gaussian)).unwrap();
        let code = MacCode::build(spec).unwrap();
        let w = code.word(1, vec![1, 0]).unwrap();
        let jm = code.joint_matrix(&[w]).unwrap();
        let pinv = code.spec.p.inv().unwrap();
        assert_eq!(*jm.exact.get(0, 0), pinv);
        assert!(matches!(code.joint_matrix(&[]), Err(Error::EmptySubset)));
    }

    #[test]
    fn joint_matrix_c31_all_ones_matches_display() {
        let code = code31();
        let spec = &code.spec;
        let words: Vec<UserWord> = (1..=3)
            .map(|u| {
                let mut coords = vec![0i64; code.word_dim()];
                coords[0] = 1;
                code.word(u, coords).unwrap()
            })
            .collect();
        let jm = code.joint_matrix(&words).unwrap();
        let one = CyclotomicElement::one(spec.n);
        let pinv = spec.p.inv().unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { pinv.clone() } else { one.clone() };
                assert_eq!(*jm.exact.get(r, c), want, "entry ({r},{c})");
            }
        }
        // numeric mirror agreement
        for r in 0..3 {
            for c in 0..3 {
                let d = (jm.numeric.get(r, c) - jm.exact.get(r, c).embed::<f64>()).norm();
                assert!(d < 1e-12);
            }
        }
        // exact determinant is nonzero; numeric oracle agrees it is far from 0
        let det = code.exact_gram_determinant(&jm).unwrap();
        assert!(!det.is_zero());
        assert!(jm.numeric.det().norm() > 1e-6);
        assert!((det.embed::<f64>() - jm.numeric.det()).norm() < 1e-9);
    }

    #[test]
    fn mixed_codes_are_rejected() {
        let a = code31();
        let b = code31();
        // same parameters share a tag; a different tower does not
        let w_a = random_word(&mut Rng::new(1), &a, 1, 1);
        assert!(b.joint_matrix(&[w_a.clone()]).is_ok());
        let other = code22();
        assert!(matches!(other.joint_matrix(&[w_a]), Err(Error::MixedCodes)));
    }

    #[test]
    fn zero_tuple_gives_zero_determinant() {
        let code = code31();
        let words: Vec<UserWord> = (1..=3)
            .map(|u| code.word(u, vec![0; code.word_dim()]).unwrap())
            .collect();
        let jm = code.joint_matrix(&words).unwrap();
        assert!(code.exact_gram_determinant(&jm).unwrap().is_zero());
    }

    #[test]
    fn generalized_rank_on_random_tuples() {
        let code = code31();
        let mut rng = Rng::new(4242);
        for _ in 0..300 {
            let words: Vec<UserWord> = (1..=3)
                .map(|u| random_word(&mut rng, &code, u, 2))
                .collect();
            let jm = code.joint_matrix(&words).unwrap();
            let det = code.exact_gram_determinant(&jm).unwrap();
            assert!(!det.is_zero(), "rank criterion violated for {words:?}");
            // determinant lies in F = K here (nt = 1 means F = L^sigma^U... = full fixed tower)
            assert_eq!(code.spec.tau_unchecked(&det, 1), det);
        }
    }

    #[test]
    fn proper_subset_gram_determinant_nonzero() {
        let code = code31();
        let mut rng = Rng::new(7);
        for _ in 0..50 {
            let words = vec![
                random_word(&mut rng, &code, 1, 2),
                random_word(&mut rng, &code, 3, 2),
            ];
            let jm = code.joint_matrix(&words).unwrap();
            let det = code.exact_gram_determinant(&jm).unwrap();
            assert!(!det.is_zero());
            // exact value tracks the numeric Gram determinant
            let numeric = jm.numeric.det_gram();
            let exact_num = det.embed::<f64>();
            assert!((exact_num.re - numeric).abs() < 1e-9 * (1.0 + numeric.abs()));
            assert!(exact_num.im.abs() < 1e-9);
        }
    }

    #[test]
    fn valuation_certificate_examples() {
        // nt = 1: det = x, normalized valuation 0
        let code = code31();
        let mut coords = vec![0i64; code.word_dim()];
        coords[0] = 1;
        let w = code.word(1, coords).unwrap();
        assert_eq!(code.valuation_certificate(&w).unwrap(), 0);
        // nt = 2: word (1, 0) has det 1
        let code2 = code22();
        let mut coords = vec![0i64; code2.word_dim()];
        coords[0] = 1;
        let w = code2.word(1, coords).unwrap();
        assert_eq!(code2.valuation_certificate(&w).unwrap(), 0);
        // nt = 2: word (p, 1): det = p^2 - p, valuation 1 <= nt - 1
        let spec = &code2.spec;
        let slots = vec![spec.p.clone(), CyclotomicElement::one(spec.n)];
        let m = psi_matrix(spec, &slots);
        let det = m.det();
        assert_eq!(
            spec.valuation_element(&det).unwrap(),
            crate::tower::Valuation::Finite(1)
        );
        // zero word errors
        let z = code.word(1, vec![0; code.word_dim()]).unwrap();
        assert!(matches!(
            code.valuation_certificate(&z),
            Err(Error::ZeroWord)
        ));
    }

    #[test]
    fn valuation_certificates_hold_on_random_words() {
        let code = code22();
        let mut rng = Rng::new(8);
        for _ in 0..40 {
            let w = random_word(&mut rng, &code, 1, 2);
            let v = code.valuation_certificate(&w).unwrap();
            assert!((0..2).contains(&v));
        }
    }

    #[test]
    fn single_user_code_has_nonvanishing_determinants() {
        let code = code31();
        let mut rng = Rng::new(99);
        let mut min_det = f64::INFINITY;
        for _ in 0..1000 {
            let w = random_word(&mut rng, &code, 1, 3);
            let jm = code.joint_matrix(&[w]).unwrap();
            let det = code.exact_gram_determinant(&jm).unwrap();
            assert!(!det.is_zero());
            let nd = jm.numeric.det_gram();
            min_det = min_det.min(nd);
        }
        assert!(min_det > 0.0, "running minimum {min_det}");
    }

    #[test]
    fn joint_determinant_valuation_bookkeeping() {
        // det(A) = p^(-m U nt) prod_l det(sigma^(l-1)(M_l)) + y with
        // v(y) >= -m (U nt - 2); when sum_l v(det M_l) < 2m the first term
        // dominates and v(p^(m U nt) det(A)) = sum_l v(det M_l) exactly.
        let code = code31();
        let spec = &code.spec;
        let m_unt = (spec.m * spec.users * spec.nt) as u64;
        let p_pow = spec.p.pow(m_unt);
        let mut rng = Rng::new(606);
        let mut checked = 0;
        while checked < 30 {
            let words: Vec<UserWord> = (1..=3)
                .map(|u| random_word(&mut rng, &code, u, 2))
                .collect();
            let rhs: i64 = words
                .iter()
                .map(|w| {
                    let slots = code.slots(w);
                    let det = psi_matrix(spec, &slots).det();
                    spec.valuation_element(&det).unwrap().finite().unwrap()
                })
                .sum();
            if rhs >= 2 * spec.m as i64 {
                continue; // dominance not guaranteed
            }
            let jm = code.joint_matrix(&words).unwrap();
            let det = code.exact_gram_determinant(&jm).unwrap();
            let scaled = det.checked_mul(&p_pow).unwrap();
            let lhs = spec.valuation_element(&scaled).unwrap().finite().unwrap();
            assert_eq!(lhs, rhs, "valuation bookkeeping broke for {words:?}");
            checked += 1;
        }
    }

    #[test]
    fn norm_test_trivial_singular() {
        let code = code21();
        let spec = &code.spec;
        let one = CyclotomicElement::one(spec.n);
        match two_user_norm_test(spec, &one, &one, &one, &one).unwrap() {
            NormTestOutcome::SingularExists { witness: (x, y) } => {
                // det [[x, s(x)], [y, s(y)]] = 0
                let det = x
                    .checked_mul(&spec.sigma_apply(&y, 1).unwrap())
                    .unwrap()
                    .checked_sub(&spec.sigma_apply(&x, 1).unwrap().checked_mul(&y).unwrap())
                    .unwrap();
                assert!(det.is_zero());
            }
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn norm_test_full_rank_with_sqrt5() {
        let code = code21();
        let spec = &code.spec;
        // sqrt(5) = 2 theta + 1 for theta = zeta_5 + zeta_5^-1
        let sqrt5 = spec
            .theta
            .scaled(&rat_int(2))
            .checked_add(&CyclotomicElement::one(spec.n))
            .unwrap();
        let n5 = spec.relative_norm(&sqrt5, Sub::LK).unwrap();
        assert_eq!(n5, CyclotomicElement::from_int(spec.n, -5));
        let one = CyclotomicElement::one(spec.n);
        match two_user_norm_test(spec, &one, &one, &one, &sqrt5).unwrap() {
            NormTestOutcome::FullRank { norm_det } => {
                assert_eq!(norm_det, CyclotomicElement::from_int(spec.n, -6));
            }
            other => panic!("expected full rank, got {other:?}"),
        }
    }

    #[test]
    fn norm_test_singular_with_unit_square() {
        let code = code21();
        let spec = &code.spec;
        // eps = (1 + sqrt 5)/2 = theta + 1 has norm -1, so eps^2 has norm 1
        let eps = spec
            .theta
            .checked_add(&CyclotomicElement::one(spec.n))
            .unwrap();
        assert_eq!(
            spec.relative_norm(&eps, Sub::LK).unwrap(),
            CyclotomicElement::from_int(spec.n, -1)
        );
        let eps2 = eps.checked_mul(&eps).unwrap();
        let one = CyclotomicElement::one(spec.n);
        match two_user_norm_test(spec, &one, &one, &one, &eps2).unwrap() {
            NormTestOutcome::SingularExists { witness: (x, y) } => {
                // det [[1*x, 1*s(x)], [1*y, eps^2 s(y)]] = eps^2 x s(y) - s(x) y = 0
                let det = eps2
                    .checked_mul(&x)
                    .unwrap()
                    .checked_mul(&spec.sigma_apply(&y, 1).unwrap())
                    .unwrap()
                    .checked_sub(&spec.sigma_apply(&x, 1).unwrap().checked_mul(&y).unwrap())
                    .unwrap();
                assert!(det.is_zero(), "witness does not kill the determinant");
            }
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn hilbert90_examples() {
        let code = code21();
        let spec = &code.spec;
        let one = CyclotomicElement::one(spec.n);
        // u = 1: any valid z satisfies sigma(z) = z
        let z = hilbert90_witness(spec, &one).unwrap();
        assert!(!z.is_zero());
        assert_eq!(spec.sigma_apply(&z, 1).unwrap(), z);
        // u = -1: sigma(z) = -z, e.g. z ~ sqrt(5)
        let minus_one = CyclotomicElement::from_int(spec.n, -1);
        let z = hilbert90_witness(spec, &minus_one).unwrap();
        assert!(!z.is_zero());
        assert_eq!(spec.sigma_apply(&z, 1).unwrap(), z.neg());
        // u = eps / sigma(eps)
        let eps = spec.theta.checked_add(&one).unwrap();
        let u = eps
            .checked_div(&spec.sigma_apply(&eps, 1).unwrap())
            .unwrap();
        let z = hilbert90_witness(spec, &u).unwrap();
        assert_eq!(spec.sigma_apply(&z, 1).unwrap(), u.checked_mul(&z).unwrap());
        assert!(z.has_integer_coeffs());
        // norm != 1 is rejected
        assert!(matches!(
            hilbert90_witness(spec, &spec.theta),
            Err(Error::NormNotOne)
        ));
    }

    #[test]
    fn degree2_catalog_row_exists() {
        let row = catalog_row(2).unwrap();
        assert_eq!(row.h, 5);
    }
}
