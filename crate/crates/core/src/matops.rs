//! Dense complex linear algebra used by every other module: Hermitian
//! eigendecomposition, PSD certification and factorization, isometry solving
//! between two families of vectors, and unitary/coisometric completion.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Default relative tolerance for PSD and rank decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative bound on `‖M − M*‖_max` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> Matrix {
    Matrix::zeros(r, c)
}

/// Builds a matrix from real row-major data.
pub fn from_real_rows(rows: &[&[f64]]) -> Matrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    Matrix::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value; zero for empty matrices.
pub fn op_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `‖M·M* − I‖_F`.
pub fn coisometry_defect(m: &Matrix) -> f64 {
    frobenius(&(m * m.adjoint() - identity(m.nrows())))
}

/// `‖M*·M − I‖_F`.
pub fn isometry_defect(m: &Matrix) -> f64 {
    frobenius(&(m.adjoint() * m - identity(m.ncols())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub tolerance_used: f64,
}

/// Eigenvalues (ascending) and matching eigenvectors of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

fn check_hermitian(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Validation(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !all_finite(m) {
        return Err(Error::Validation("matrix has non-finite entries".into()));
    }
    let scale = max_abs(m).max(1.0);
    let asym = max_abs(&(m - m.adjoint()));
    if asym > HERMITIAN_TOL * scale {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian: max |M - M*| = {asym:e} exceeds {:e}",
            HERMITIAN_TOL * scale
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted ascending.
/// The input is symmetrized before factoring so the spectrum is exactly real.
pub fn hermitian_eigen(m: &Matrix) -> Result<HermitianEigen> {
    check_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: zeros(0, 0),
        });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// PSD test with the threshold `tol·max(1, λ_max)`.
pub fn psd_check(m: &Matrix, tol: f64) -> Result<PsdReport> {
    let eig = hermitian_eigen(m)?;
    Ok(report_from_spectrum(&eig.values, tol))
}

fn report_from_spectrum(values: &[f64], tol: f64) -> PsdReport {
    let min = values.first().copied().unwrap_or(0.0);
    let max = values.last().copied().unwrap_or(0.0);
    let tolerance_used = tol * max.max(1.0);
    PsdReport {
        is_psd: min >= -tolerance_used,
        min_eigenvalue: min,
        tolerance_used,
    }
}

/// Record of a numerical rank decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankDecision {
    pub rank: usize,
    pub threshold: f64,
    /// Smallest eigenvalue that was kept (`NaN` when nothing was kept).
    pub smallest_kept: f64,
    /// Largest eigenvalue that was discarded (`NaN` when nothing was discarded).
    pub largest_dropped: f64,
}

/// Factor a PSD matrix as `M = H·H*` with `H` of minimal numerical rank.
pub fn psd_factor(m: &Matrix, tol: f64) -> Result<Matrix> {
    psd_factor_with_rank(m, tol).map(|(h, _)| h)
}

/// As [`psd_factor`], also returning the rank decision that was taken.
/// Columns of `H` are ordered by decreasing eigenvalue.
pub fn psd_factor_with_rank(m: &Matrix, tol: f64) -> Result<(Matrix, RankDecision)> {
    let eig = hermitian_eigen(m)?;
    let report = report_from_spectrum(&eig.values, tol);
    if !report.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let n = m.nrows();
    let lmax = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let threshold = tol * lmax;
    let kept: Vec<usize> = (0..n)
        .rev()
        .filter(|&i| eig.values[i] > threshold && eig.values[i] > 0.0)
        .collect();
    let mut h = zeros(n, kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let s = eig.values[i].sqrt();
        for r in 0..n {
            h[(r, col)] = eig.vectors[(r, i)] * s;
        }
    }
    let smallest_kept = kept.last().map_or(f64::NAN, |&i| eig.values[i]);
    let largest_dropped = (0..n)
        .rev()
        .find(|i| !kept.contains(i))
        .map_or(f64::NAN, |i| eig.values[i]);
    Ok((
        h,
        RankDecision {
            rank: kept.len(),
            threshold,
            smallest_kept,
            largest_dropped,
        },
    ))
}

/// A map that is isometric from `span(domain)` onto `span(image)`: the
/// columns of `domain` and `image` are orthonormal and the map sends
/// `domain[:, k]` to `image[:, k]`.
#[derive(Debug, Clone)]
pub struct PartialIsometry {
    pub domain: Matrix,
    pub image: Matrix,
}

impl PartialIsometry {
    /// Checks that both bases are orthonormal within `1e-10`.
    pub fn new(domain: Matrix, image: Matrix) -> Result<Self> {
        if domain.ncols() != image.ncols() {
            return Err(Error::Validation(format!(
                "domain basis has {} vectors, image basis has {}",
                domain.ncols(),
                image.ncols()
            )));
        }
        for (name, basis) in [("domain", &domain), ("image", &image)] {
            let defect = isometry_defect(basis);
            if defect > 1e-10 {
                return Err(Error::Validation(format!(
                    "{name} basis is not orthonormal (defect {defect:e})"
                )));
            }
        }
        Ok(Self { domain, image })
    }

    pub fn n_in(&self) -> usize {
        self.domain.nrows()
    }

    pub fn n_out(&self) -> usize {
        self.image.nrows()
    }

    pub fn rank(&self) -> usize {
        self.domain.ncols()
    }

    /// The partial isometry itself, zero on the orthogonal complement of its
    /// initial space.
    pub fn matrix(&self) -> Matrix {
        &self.image * self.domain.adjoint()
    }
}

/// Orthonormal polar factor `U·V*` of `M = U·Σ·V*` (tall or square `M`).
fn polar_factor(m: &Matrix) -> Matrix {
    if m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V*");
    u * v_t
}

/// Find the map sending each column of `domain_vecs` to the matching column
/// of `range_vecs`, isometric on the span of the domain columns.
///
/// Both spans are orthonormalized through a shared eigenbasis of the (averaged)
/// Gram matrix, so the returned bases correspond column by column. Directions
/// with Gram eigenvalue at or below `tol·λ_max` are discarded.
pub fn solve_isometry(
    domain_vecs: &Matrix,
    range_vecs: &Matrix,
    tol: f64,
) -> Result<(PartialIsometry, f64)> {
    if domain_vecs.ncols() != range_vecs.ncols() {
        return Err(Error::Validation(format!(
            "{} domain vectors but {} range vectors",
            domain_vecs.ncols(),
            range_vecs.ncols()
        )));
    }
    let gram_d = domain_vecs.adjoint() * domain_vecs;
    let gram_r = range_vecs.adjoint() * range_vecs;
    let deviation = max_abs(&(&gram_d - &gram_r));
    let allowed = tol * max_abs(&gram_d).max(max_abs(&gram_r)).max(1.0);
    if deviation > allowed {
        return Err(Error::GramMismatch { deviation, allowed });
    }
    let gram = (&gram_d + &gram_r).scale(0.5);
    let eig = hermitian_eigen(&gram)?;
    let k = gram.nrows();
    let lmax = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let kept: Vec<usize> = (0..k)
        .rev()
        .filter(|&i| eig.values[i] > tol * lmax && eig.values[i] > 0.0)
        .collect();
    let mut w = zeros(k, kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let s = 1.0 / eig.values[i].sqrt();
        for r in 0..k {
            w[(r, col)] = eig.vectors[(r, i)] * s;
        }
    }
    let qd = polar_factor(&(domain_vecs * &w));
    let qr = polar_factor(&(range_vecs * &w));
    let partial = PartialIsometry {
        domain: qd,
        image: qr,
    };
    let mapped = partial.matrix() * domain_vecs;
    let residual = (0..domain_vecs.ncols())
        .map(|c| (mapped.column(c) - range_vecs.column(c)).norm())
        .fold(0.0, f64::max);
    Ok((partial, residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletionMode {
    /// `U·U* = I`; needs `n_out ≤ n_in`.
    Coisometric,
    /// `U·U* = U*·U = I`; needs `n_out = n_in`.
    Unitary,
}

impl CompletionMode {
    fn name(self) -> &'static str {
        match self {
            CompletionMode::Coisometric => "coisometric",
            CompletionMode::Unitary => "unitary",
        }
    }
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q` inside `C^n`.
pub fn orthogonal_complement(q: &Matrix) -> Matrix {
    let n = q.nrows();
    let m = q.ncols();
    if m >= n {
        return zeros(n, 0);
    }
    let proj = identity(n) - q * q.adjoint();
    let eig =
        hermitian_eigen(&((&proj + proj.adjoint()).scale(0.5))).expect("projector is Hermitian");
    // The top n − m eigenvectors span the complement.
    let mut out = zeros(n, n - m);
    for (col, i) in (m..n).enumerate() {
        out.set_column(col, &eig.vectors.column(i));
    }
    polar_factor(&out)
}

/// Extend a partial isometry to a coisometry or unitary on the ambient
/// spaces, agreeing with it on its initial space.
pub fn complete_to_unitary(partial: &PartialIsometry, mode: CompletionMode) -> Result<Matrix> {
    let (n_in, n_out) = (partial.n_in(), partial.n_out());
    let feasible = match mode {
        CompletionMode::Coisometric => n_out <= n_in,
        CompletionMode::Unitary => n_out == n_in,
    };
    if !feasible {
        return Err(Error::DefectPaddingRequired {
            n_in,
            n_out,
            mode: mode.name(),
        });
    }
    let dc = orthogonal_complement(&partial.domain);
    let rc = orthogonal_complement(&partial.image);
    // rc has n_out − m columns, dc has n_in − m ≥ n_out − m columns.
    let used = rc.ncols();
    let dc_used = dc.columns(0, used).into_owned();
    Ok(partial.matrix() + rc * dc_used.adjoint())
}

/// Solve `M·X = RHS` for square `M`, reporting a condition estimate when `M`
/// is numerically singular.
pub fn solve_square(m: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    if m.nrows() == 0 {
        return Ok(zeros(0, rhs.ncols()));
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(condition < 1e14) {
        return Err(Error::SingularResolvent { condition });
    }
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::SingularResolvent { condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::random::{gaussian_matrix, random_isometry};

    #[test]
    fn psd_check_examples() {
        let m = Matrix::from_fn(2, 2, |i, j| match (i, j) {
            (1, 1) => c64(4.0 / 3.0, 0.0),
            _ => c64(1.0, 0.0),
        });
        assert!(psd_check(&m, DEFAULT_TOL).unwrap().is_psd);

        let r = psd_check(&identity(3), DEFAULT_TOL).unwrap();
        assert!(r.is_psd);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-14);

        let r = psd_check(&from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]), DEFAULT_TOL).unwrap();
        assert!(!r.is_psd);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn psd_check_rejects_bad_shapes() {
        assert!(matches!(
            psd_check(&zeros(2, 3), DEFAULT_TOL),
            Err(Error::Validation(_))
        ));
        let m = from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let err = psd_check(&m, DEFAULT_TOL).unwrap_err();
        assert!(err.to_string().contains("not Hermitian"));
    }

    #[test]
    fn psd_factor_examples() {
        let ones = from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let h = psd_factor(&ones, DEFAULT_TOL).unwrap();
        assert_eq!(h.ncols(), 1);
        assert!((h[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(frobenius(&(&h * h.adjoint() - &ones)) < 1e-12);

        let h = psd_factor(&identity(4), DEFAULT_TOL).unwrap();
        assert!(coisometry_defect(&h) < 1e-12);
        assert!(isometry_defect(&h) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = gaussian_matrix(&mut rng, 6, 4);
        let m = &g * g.adjoint();
        let h = psd_factor(&m, DEFAULT_TOL).unwrap();
        assert_eq!(h.ncols(), 4);
        assert!(frobenius(&(&h * h.adjoint() - &m)) <= 1e-10);
    }

    #[test]
    fn psd_factor_rejects_indefinite() {
        let err = psd_factor(&from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]), DEFAULT_TOL);
        match err {
            Err(Error::NotPsd { min_eigenvalue }) => assert!((min_eigenvalue + 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solve_isometry_examples() {
        let (v, res) = solve_isometry(&identity(3), &identity(3), DEFAULT_TOL).unwrap();
        assert!(res < 1e-14);
        assert!(max_abs(&(v.matrix() - identity(3))) < 1e-14);

        let swap = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let (v, res) = solve_isometry(&identity(2), &swap, DEFAULT_TOL).unwrap();
        assert!(res < 1e-14);
        assert!(max_abs(&(v.matrix() - &swap)) < 1e-14);

        let d = from_real_rows(&[&[1.0], &[0.0]]);
        let r = from_real_rows(&[&[2.0], &[0.0]]);
        assert!(matches!(
            solve_isometry(&d, &r, DEFAULT_TOL),
            Err(Error::GramMismatch { .. })
        ));
    }

    #[test]
    fn complete_to_unitary_examples() {
        let p = PartialIsometry::new(identity(3), identity(3)).unwrap();
        let u = complete_to_unitary(&p, CompletionMode::Unitary).unwrap();
        assert!(max_abs(&(u - identity(3))) < 1e-14);

        let e1 = from_real_rows(&[&[1.0], &[0.0]]);
        let p = PartialIsometry::new(e1.clone(), e1.clone()).unwrap();
        let u = complete_to_unitary(&p, CompletionMode::Unitary).unwrap();
        assert!(coisometry_defect(&u) < 1e-10 && isometry_defect(&u) < 1e-10);
        assert!(((&u * &e1)[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-12);

        // A seeded isometry C^3 -> C^5 viewed as a partial map on C^5.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = random_isometry(&mut rng, 5, 3);
        let dom = identity(5).columns(0, 3).into_owned();
        let p = PartialIsometry::new(dom.clone(), v.clone()).unwrap();
        let u = complete_to_unitary(&p, CompletionMode::Unitary).unwrap();
        assert!(coisometry_defect(&u) <= 1e-10);
        assert!(isometry_defect(&u) <= 1e-10);
        assert!(max_abs(&(&u * &dom - &v)) <= 1e-9);
    }

    #[test]
    fn completion_reports_defect_padding() {
        let dom = identity(3).columns(0, 1).into_owned();
        let img = identity(2).columns(0, 1).into_owned();
        let p = PartialIsometry::new(dom, img).unwrap();
        assert!(matches!(
            complete_to_unitary(&p, CompletionMode::Unitary),
            Err(Error::DefectPaddingRequired { .. })
        ));
        let u = complete_to_unitary(&p, CompletionMode::Coisometric).unwrap();
        assert_eq!((u.nrows(), u.ncols()), (2, 3));
        assert!(coisometry_defect(&u) <= 1e-10);

        let p = PartialIsometry::new(
            identity(2).columns(0, 1).into_owned(),
            identity(3).columns(0, 1).into_owned(),
        )
        .unwrap();
        assert!(matches!(
            complete_to_unitary(&p, CompletionMode::Coisometric),
            Err(Error::DefectPaddingRequired { .. })
        ));
    }

    #[test]
    fn solve_square_flags_singular_systems() {
        let m = from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(
            solve_square(&m, &identity(2)),
            Err(Error::SingularResolvent { .. })
        ));
    }
}
