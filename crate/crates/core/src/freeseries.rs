//! Formal power series over the free semigroup on `d` letters (and over
//! commutative multi-indices), truncated Fock spaces, shift and
//! multiplication operators.
//!
//! A word is stored in written order: `Word(vec![i_N, …, i_1])` stands for the
//! monomial `z_{i_N}⋯z_{i_1}`, concatenation is `Vec` concatenation, and
//! operator powers `T^α` multiply factors in the same written order.
//! Letters are 1-based.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::One;

use crate::error::{Error, Result};
use crate::matops::{c64, identity, kron, max_abs, zeros, Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(j: usize) -> Self {
        Word(vec![j])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Word with `j` appended on the right (`v ↦ v·j`).
    pub fn push(&self, j: usize) -> Word {
        let mut v = self.0.clone();
        v.push(j);
        Word(v)
    }

    /// Letter-count vector `n` with `n[j-1]` occurrences of letter `j`.
    pub fn multi_index(&self, d: usize) -> Vec<u32> {
        let mut n = vec![0u32; d];
        for &l in &self.0 {
            n[l - 1] += 1;
        }
        n
    }

    /// Sorted representative of the word's commutative class.
    pub fn canonical(&self) -> Word {
        let mut v = self.0.clone();
        v.sort_unstable();
        Word(v)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l == 0 || l > d) {
            Some(l) => Err(Error::Validation(format!("letter {l} outside 1..={d}"))),
            None => Ok(()),
        }
    }
}

/// Graded lexicographic order: shorter words first, then letters ascending.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn word_transpose(w: &Word) -> Word {
    Word(w.0.iter().rev().cloned().collect())
}

/// Number of words of length at most `n` over `d` letters.
pub fn word_count(d: usize, n: usize) -> usize {
    (0..=n).map(|k| d.pow(k as u32)).sum()
}

/// All words of length ≤ `n`, in graded lexicographic order.
pub fn words_up_to(d: usize, n: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..n {
        let next: Vec<Word> = layer
            .iter()
            .flat_map(|w| (1..=d).map(move |j| w.push(j)))
            .collect();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Position of `w` in [`words_up_to`].
pub fn word_index(d: usize, w: &Word) -> usize {
    let offset = if w.is_empty() {
        0
    } else {
        word_count(d, w.len() - 1)
    };
    let rank = w.0.iter().fold(0usize, |acc, &l| acc * d + (l - 1));
    offset + rank
}

/// Coefficient of `z^α w^{β^⊤}` in the noncommutative Szegő kernel.
pub fn nc_szego_coeff(alpha: &Word, beta: &Word) -> f64 {
    if alpha == beta {
        1.0
    } else {
        0.0
    }
}

/// `Σ s_α z^α` with finitely many matrix coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSeries {
    pub d: usize,
    pub rows: usize,
    pub cols: usize,
    pub commutative: bool,
    pub terms: BTreeMap<Word, Matrix>,
}

impl FormalSeries {
    pub fn zero(d: usize, rows: usize, cols: usize, commutative: bool) -> Self {
        Self {
            d,
            rows,
            cols,
            commutative,
            terms: BTreeMap::new(),
        }
    }

    /// The constant series `I`.
    pub fn one(d: usize, dim: usize, commutative: bool) -> Self {
        let mut s = Self::zero(d, dim, dim, commutative);
        s.terms.insert(Word::empty(), identity(dim));
        s
    }

    /// Build from `(word, coefficient)` pairs. Repeated words (or, in
    /// commutative mode, words in the same commutative class) are summed.
    pub fn from_terms<I>(
        d: usize,
        rows: usize,
        cols: usize,
        commutative: bool,
        terms: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (Word, Matrix)>,
    {
        let mut s = Self::zero(d, rows, cols, commutative);
        for (w, c) in terms {
            s.add_term(w, c)?;
        }
        Ok(s)
    }

    /// Scalar (1×1) series from `(letters, value)` pairs.
    pub fn scalar(d: usize, commutative: bool, terms: &[(&[usize], f64)]) -> Result<Self> {
        Self::from_terms(
            d,
            1,
            1,
            commutative,
            terms
                .iter()
                .map(|(w, v)| (Word(w.to_vec()), Matrix::from_element(1, 1, c64(*v, 0.0)))),
        )
    }

    pub fn add_term(&mut self, w: Word, c: Matrix) -> Result<()> {
        w.validate(self.d)?;
        if c.nrows() != self.rows || c.ncols() != self.cols {
            return Err(Error::Validation(format!(
                "coefficient is {}x{}, series expects {}x{}",
                c.nrows(),
                c.ncols(),
                self.rows,
                self.cols
            )));
        }
        let key = if self.commutative { w.canonical() } else { w };
        match self.terms.get_mut(&key) {
            Some(existing) => *existing += c,
            None => {
                self.terms.insert(key, c);
            }
        }
        Ok(())
    }

    /// Coefficient at `w` (zero if absent).
    pub fn coeff(&self, w: &Word) -> Matrix {
        let key = if self.commutative {
            w.canonical()
        } else {
            w.clone()
        };
        self.terms
            .get(&key)
            .cloned()
            .unwrap_or_else(|| zeros(self.rows, self.cols))
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    /// Terms of length ≤ `n`.
    pub fn truncate(&self, n: usize) -> Self {
        let mut s = self.clone();
        s.terms.retain(|w, _| w.len() <= n);
        s
    }

    /// Max `‖coefficient‖` difference over the union of supports.
    pub fn max_coeff_distance(&self, other: &FormalSeries) -> f64 {
        self.terms
            .keys()
            .chain(other.terms.keys())
            .map(|w| max_abs(&(self.coeff(w) - other.coeff(w))))
            .fold(0.0, f64::max)
    }

    /// Spread each commutative coefficient evenly over the words of its
    /// class, giving a noncommutative series that agrees with `self` on
    /// commuting arguments.
    pub fn symmetrized(&self) -> FormalSeries {
        if !self.commutative {
            return self.clone();
        }
        let mut out = Self::zero(self.d, self.rows, self.cols, false);
        for (w, c) in &self.terms {
            let n = w.multi_index(self.d);
            let words = words_with_multi_index(&n);
            let share = c.scale(1.0 / words.len() as f64);
            for v in words {
                out.terms.insert(v, share.clone());
            }
        }
        out
    }
}

fn words_with_multi_index(n: &[u32]) -> Vec<Word> {
    fn rec(n: &mut Vec<u32>, cur: &mut Vec<usize>, out: &mut Vec<Word>) {
        if n.iter().all(|&c| c == 0) {
            out.push(Word(cur.clone()));
            return;
        }
        for j in 0..n.len() {
            if n[j] > 0 {
                n[j] -= 1;
                cur.push(j + 1);
                rec(n, cur, out);
                cur.pop();
                n[j] += 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut n.to_vec(), &mut Vec::new(), &mut out);
    out
}

/// Convolution product `(S·f)_v = Σ_{α·β = v} s_α f_β`. No truncation.
pub fn series_multiply(s: &FormalSeries, f: &FormalSeries) -> Result<FormalSeries> {
    if s.d != f.d || s.commutative != f.commutative {
        return Err(Error::Validation(
            "series differ in alphabet size or commutativity".into(),
        ));
    }
    if s.cols != f.rows {
        return Err(Error::Validation(format!(
            "cannot multiply {}x{} by {}x{} coefficients",
            s.rows, s.cols, f.rows, f.cols
        )));
    }
    let mut out = FormalSeries::zero(s.d, s.rows, f.cols, s.commutative);
    for (a, sa) in &s.terms {
        for (b, fb) in &f.terms {
            out.add_term(a.concat(b), sa * fb)?;
        }
    }
    Ok(out)
}

/// Element of the Fock space truncated at degree `degree_cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub d: usize,
    pub degree_cap: usize,
    pub block_dim: usize,
    /// Coefficient blocks `f_α` stacked in graded lexicographic order.
    pub coeffs: Vector,
}

impl FockVector {
    pub fn zero(d: usize, degree_cap: usize, block_dim: usize) -> Self {
        Self {
            d,
            degree_cap,
            block_dim,
            coeffs: Vector::zeros(block_dim * word_count(d, degree_cap)),
        }
    }

    /// Coefficients of a vector-valued series (`cols == 1`) up to `degree_cap`.
    pub fn from_series(f: &FormalSeries, degree_cap: usize) -> Result<Self> {
        if f.cols != 1 || f.commutative {
            return Err(Error::Validation(
                "Fock vectors come from noncommutative column series".into(),
            ));
        }
        let mut v = Self::zero(f.d, degree_cap, f.rows);
        for (w, c) in f.terms.iter().filter(|(w, _)| w.len() <= degree_cap) {
            let base = word_index(f.d, w) * f.rows;
            for r in 0..f.rows {
                v.coeffs[base + r] = c[(r, 0)];
            }
        }
        Ok(v)
    }

    pub fn block(&self, w: &Word) -> Vector {
        let base = word_index(self.d, w) * self.block_dim;
        self.coeffs.rows(base, self.block_dim).into_owned()
    }
}

/// `‖f‖² = Σ_α ‖f_α‖²`.
pub fn fock_norm(f: &FockVector) -> f64 {
    f.coeffs.norm()
}

/// Exact weight `n₁!⋯n_d! / |n|!` of the Drury-Arveson norm.
pub fn da_weight(n: &[u32]) -> Ratio<BigUint> {
    fn fact(k: u32) -> BigUint {
        (1..=k).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
    }
    let num = n.iter().fold(BigUint::one(), |acc, &k| acc * fact(k));
    let den = fact(n.iter().sum());
    Ratio::new(num, den)
}

pub fn da_weight_f64(n: &[u32]) -> f64 {
    let w = da_weight(n);
    let to_f = |b: &BigUint| b.to_string().parse::<f64>().unwrap_or(f64::INFINITY);
    to_f(w.numer()) / to_f(w.denom())
}

/// Matrix of the right shift `S_j: z^v ↦ z^{v·j}` on the Fock space
/// truncated at degree `n`; words of length `n` are annihilated.
pub fn shift_matrix(j: usize, n: usize, d: usize, block_dim: usize) -> Result<Matrix> {
    if j == 0 || j > d {
        return Err(Error::Validation(format!("letter {j} outside 1..={d}")));
    }
    let count = word_count(d, n);
    let mut s = zeros(count, count);
    for v in words_up_to(d, n.saturating_sub(1)) {
        if v.len() < n {
            s[(word_index(d, &v.push(j)), word_index(d, &v))] = c64(1.0, 0.0);
        }
    }
    Ok(kron(&s, &identity(block_dim)))
}

/// Matrix of the left creation operator `z^v ↦ z^{j·v}` on the same
/// truncation; this is `mult_operator` of the series `z_j`.
pub fn left_shift_matrix(j: usize, n: usize, d: usize, block_dim: usize) -> Result<Matrix> {
    if j == 0 || j > d {
        return Err(Error::Validation(format!("letter {j} outside 1..={d}")));
    }
    let count = word_count(d, n);
    let mut s = zeros(count, count);
    for v in words_up_to(d, n.saturating_sub(1)) {
        if v.len() < n {
            s[(
                word_index(d, &Word::letter(j).concat(&v)),
                word_index(d, &v),
            )] = c64(1.0, 0.0);
        }
    }
    Ok(kron(&s, &identity(block_dim)))
}

/// Permutation matrix of `z^v ↦ z^{v^⊤}` on the truncated Fock space.
pub fn transpose_permutation(n: usize, d: usize) -> Matrix {
    let count = word_count(d, n);
    let mut p = zeros(count, count);
    for v in words_up_to(d, n) {
        p[(word_index(d, &word_transpose(&v)), word_index(d, &v))] = c64(1.0, 0.0);
    }
    p
}

/// Matrix of `f ↦ truncate_N(S·f)` with block `(v, β) = s_α` when `v = α·β`.
pub fn mult_operator(s: &FormalSeries, n: usize) -> Result<Matrix> {
    if s.commutative {
        return Err(Error::Validation(
            "multiplication operators need a noncommutative series (symmetrize first)".into(),
        ));
    }
    let (q, p, d) = (s.rows, s.cols, s.d);
    let count = word_count(d, n);
    let mut m = zeros(count * q, count * p);
    for beta in words_up_to(d, n) {
        let col = word_index(d, &beta) * p;
        for (alpha, sa) in &s.terms {
            if alpha.len() + beta.len() > n {
                continue;
            }
            let row = word_index(d, &alpha.concat(&beta)) * q;
            m.view_mut((row, col), (q, p)).copy_from(sa);
        }
    }
    Ok(m)
}

/// Block Gram matrix `[K_{α,β}]` over words of length ≤ `n` of the kernel
/// `k_nc − S·k_nc·S*`:
/// `K_{α,β} = δ_{α,β}·I − Σ_{α = α′γ, β = β′γ} s_{α′}·s_{β′}*`.
pub fn nc_debranges_coeffs(s: &FormalSeries, n: usize) -> Result<Matrix> {
    if s.commutative {
        return Err(Error::Validation(
            "noncommutative kernel coefficients need a noncommutative series".into(),
        ));
    }
    let (q, d) = (s.rows, s.d);
    let words = words_up_to(d, n);
    let count = words.len();
    let mut k = zeros(count * q, count * q);
    for (ia, a) in words.iter().enumerate() {
        for (ib, b) in words.iter().enumerate() {
            let mut block = if ia == ib { identity(q) } else { zeros(q, q) };
            let max_suffix = a.len().min(b.len());
            for l in 0..=max_suffix {
                if a.0[a.len() - l..] != b.0[b.len() - l..] {
                    break;
                }
                let ap = Word(a.0[..a.len() - l].to_vec());
                let bp = Word(b.0[..b.len() - l].to_vec());
                if let (Some(sa), Some(sb)) = (s.terms.get(&ap), s.terms.get(&bp)) {
                    block -= sa * sb.adjoint();
                }
            }
            k.view_mut((ia * q, ib * q), (q, q)).copy_from(&block);
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::{op_norm, psd_check, DEFAULT_TOL};

    fn w(letters: &[usize]) -> Word {
        Word(letters.to_vec())
    }

    #[test]
    fn transpose_examples() {
        assert_eq!(word_transpose(&Word::empty()), Word::empty());
        assert_eq!(word_transpose(&w(&[2, 1, 3])), w(&[3, 1, 2]));
    }

    #[test]
    fn word_enumeration() {
        assert_eq!(word_count(2, 2), 7);
        let words = words_up_to(2, 2);
        assert_eq!(words.len(), 7);
        assert_eq!(words[3], w(&[1, 1]));
        assert_eq!(words[6], w(&[2, 2]));
        for (i, v) in words.iter().enumerate() {
            assert_eq!(word_index(2, v), i);
        }
        let mut sorted = words.clone();
        sorted.sort();
        assert_eq!(sorted, words);
    }

    #[test]
    fn multiply_examples() {
        let s = FormalSeries::scalar(2, false, &[(&[], 1.0), (&[1], 1.0)]).unwrap();
        let f = FormalSeries::scalar(2, false, &[(&[2], 1.0)]).unwrap();
        let p = series_multiply(&s, &f).unwrap();
        assert_eq!(p.terms.len(), 2);
        assert_eq!(p.coeff(&w(&[2]))[(0, 0)], c64(1.0, 0.0));
        assert_eq!(p.coeff(&w(&[1, 2]))[(0, 0)], c64(1.0, 0.0));

        let one = FormalSeries::one(2, 1, false);
        assert_eq!(series_multiply(&s, &one).unwrap(), s);
        assert_eq!(series_multiply(&one, &s).unwrap(), s);

        let z1 = FormalSeries::scalar(2, false, &[(&[1], 1.0)]).unwrap();
        let z2 = FormalSeries::scalar(2, false, &[(&[2], 1.0)]).unwrap();
        let a = series_multiply(&z1, &z2).unwrap();
        let b = series_multiply(&z2, &z1).unwrap();
        assert_ne!(a, b);
        assert_eq!(a.coeff(&w(&[2, 1]))[(0, 0)], c64(0.0, 0.0));

        // Commutative mode adds multi-indices.
        let z1c = FormalSeries::scalar(2, true, &[(&[1], 1.0)]).unwrap();
        let z2c = FormalSeries::scalar(2, true, &[(&[2], 1.0)]).unwrap();
        assert_eq!(
            series_multiply(&z1c, &z2c).unwrap(),
            series_multiply(&z2c, &z1c).unwrap()
        );
    }

    #[test]
    fn multiply_rejects_mismatch() {
        let a = FormalSeries::scalar(2, false, &[(&[1], 1.0)]).unwrap();
        let b = FormalSeries::scalar(3, false, &[(&[1], 1.0)]).unwrap();
        assert!(series_multiply(&a, &b).is_err());
        let c = FormalSeries::zero(2, 2, 2, false);
        assert!(series_multiply(&a, &c).is_err());
        assert!(FormalSeries::scalar(2, false, &[(&[3], 1.0)]).is_err());
    }

    #[test]
    fn nc_szego_examples() {
        assert_eq!(nc_szego_coeff(&Word::empty(), &Word::empty()), 1.0);
        assert_eq!(nc_szego_coeff(&w(&[1, 2]), &w(&[1, 2])), 1.0);
        assert_eq!(nc_szego_coeff(&w(&[1]), &w(&[2])), 0.0);
    }

    #[test]
    fn fock_norm_examples() {
        assert_eq!(fock_norm(&FockVector::zero(2, 3, 1)), 0.0);
        let f = FormalSeries::scalar(2, false, &[(&[], 1.0), (&[1], 1.0)]).unwrap();
        let v = FockVector::from_series(&f, 2).unwrap();
        assert!((fock_norm(&v) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn da_weight_examples() {
        assert_eq!(da_weight(&[0, 0, 0]), Ratio::from_integer(BigUint::one()));
        assert_eq!(
            da_weight(&[1, 1]),
            Ratio::new(BigUint::from(1u32), BigUint::from(2u32))
        );
        assert_eq!(
            da_weight(&[2, 1, 0]),
            Ratio::new(BigUint::from(1u32), BigUint::from(3u32))
        );
        assert!((da_weight_f64(&[2, 1, 0]) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn shift_examples() {
        let s = shift_matrix(1, 2, 1, 1).unwrap();
        let expect = Matrix::from_fn(3, 3, |i, j| {
            if i == j + 1 {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        });
        assert_eq!(s, expect);

        // Isometric on words of length < N.
        let (d, n) = (2, 3);
        let s1 = shift_matrix(1, n, d, 1).unwrap();
        let s2 = shift_matrix(2, n, d, 1).unwrap();
        let low = word_count(d, n - 1);
        let gram = s1.adjoint() * &s1;
        assert!(max_abs(&(gram.view((0, 0), (low, low)) - identity(low))) < 1e-15);
        assert!(max_abs(&(s1.adjoint() * &s2)) < 1e-15);

        // Adjoint acts as f_v ↦ f_{v·j}.
        let f = FormalSeries::scalar(2, false, &[(&[2, 1], 3.0), (&[1], 5.0)]).unwrap();
        let fv = FockVector::from_series(&f, n).unwrap();
        let back = s1.adjoint() * &fv.coeffs;
        assert_eq!(back[word_index(d, &w(&[2]))], c64(3.0, 0.0));
        assert_eq!(back[word_index(d, &Word::empty())], c64(5.0, 0.0));
    }

    #[test]
    fn mult_operator_examples() {
        let one = FormalSeries::one(2, 1, false);
        assert_eq!(mult_operator(&one, 3).unwrap(), identity(word_count(2, 3)));
        // Multiplication by z₁ acts on the left; it matches the right shift
        // S₁ after conjugating by the word transpose.
        let z1 = FormalSeries::scalar(2, false, &[(&[1], 1.0)]).unwrap();
        let m = mult_operator(&z1, 3).unwrap();
        assert_eq!(m, left_shift_matrix(1, 3, 2, 1).unwrap());
        let p = transpose_permutation(3, 2);
        assert_eq!(&p * shift_matrix(1, 3, 2, 1).unwrap() * &p, m);
        let d1 = FormalSeries::scalar(1, false, &[(&[1], 1.0)]).unwrap();
        assert_eq!(
            mult_operator(&d1, 4).unwrap(),
            shift_matrix(1, 4, 1, 1).unwrap()
        );
    }

    #[test]
    fn nc_kernel_examples() {
        let c = FormalSeries::scalar(2, false, &[(&[], 0.6)]).unwrap();
        let k = nc_debranges_coeffs(&c, 2).unwrap();
        assert!(max_abs(&(k - identity(7).scale(1.0 - 0.36))) < 1e-15);

        let z1 = FormalSeries::scalar(2, false, &[(&[1], 1.0)]).unwrap();
        let k = nc_debranges_coeffs(&z1, 2).unwrap();
        assert_eq!(k[(0, 0)], c64(1.0, 0.0));
        let i1 = word_index(2, &w(&[1]));
        assert_eq!(k[(i1, i1)], c64(0.0, 0.0));
        for a in 0..7 {
            for b in 0..7 {
                if a != b {
                    assert_eq!(k[(a, b)], c64(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn nc_kernel_matches_operator_gram() {
        let s = FormalSeries::scalar(
            2,
            false,
            &[(&[], 0.3), (&[1], -0.2), (&[2, 1], 0.4), (&[1, 2, 2], 0.1)],
        )
        .unwrap();
        for n in 1..=4 {
            let direct = nc_debranges_coeffs(&s, n).unwrap();
            let m = mult_operator(&s, n).unwrap();
            let oracle = identity(m.nrows()) - &m * m.adjoint();
            assert!(max_abs(&(&direct - &oracle)) < 1e-14);
            let norm = op_norm(&m);
            assert_eq!(
                psd_check(&direct, DEFAULT_TOL).unwrap().is_psd,
                norm <= 1.0 + 1e-9
            );
        }
    }

    #[test]
    fn symmetrization_spreads_coefficients() {
        let p = FormalSeries::scalar(2, true, &[(&[1, 2], 1.0)]).unwrap();
        let s = p.symmetrized();
        assert_eq!(s.coeff(&w(&[1, 2]))[(0, 0)], c64(0.5, 0.0));
        assert_eq!(s.coeff(&w(&[2, 1]))[(0, 0)], c64(0.5, 0.0));
    }
}
