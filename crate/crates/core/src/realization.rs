//! Colligations `U = [A B; C D]` with `d`-fold stacked `A`, `B`, their
//! transfer functions `D + C(I − Z(z)A)^{-1}Z(z)B`, and lurking-isometry
//! synthesis of colligations from kernel data.

use crate::error::{Error, Result};
use crate::freeseries::{nc_debranges_coeffs, words_up_to, FormalSeries, Word};
use crate::kernels::{debranges_kernel, kolmogorov, positivity_check, Setting};
use crate::matops::{
    c64, coisometry_defect, complete_to_unitary, identity, isometry_defect, kron, max_abs, op_norm,
    psd_factor_with_rank, solve_isometry, solve_square, zeros, CompletionMode, Matrix,
    RankDecision, C64,
};

/// Bound on `‖UU* − I‖_F` (and `‖U*U − I‖_F`) accepted for the flavors.
pub const FLAVOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Contractive,
    Coisometric,
    Unitary,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Contractive => "contractive",
            Flavor::Coisometric => "coisometric",
            Flavor::Unitary => "unitary",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "contractive" => Ok(Flavor::Contractive),
            "coisometric" => Ok(Flavor::Coisometric),
            "unitary" => Ok(Flavor::Unitary),
            other => Err(Error::Validation(format!("unknown flavor {other:?}"))),
        }
    }
}

/// `U = [A B; C D]: X ⊕ U → X^d ⊕ Y` with `A = [A_1; …; A_d]`, `B = [B_1; …; B_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Colligation {
    pub d: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub dmat: Matrix,
    pub flavor: Flavor,
}

fn check_shape(name: &str, m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Validation(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

impl Colligation {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d: usize,
        n: usize,
        p: usize,
        q: usize,
        a: Matrix,
        b: Matrix,
        c: Matrix,
        dmat: Matrix,
        flavor: Flavor,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::Validation(
                "shift multiplicity d must be at least 1".into(),
            ));
        }
        check_shape("A", &a, d * n, n)?;
        check_shape("B", &b, d * n, p)?;
        check_shape("C", &c, q, n)?;
        check_shape("D", &dmat, q, p)?;
        let u = Self {
            d,
            n,
            p,
            q,
            a,
            b,
            c,
            dmat,
            flavor,
        };
        u.check_flavor()?;
        Ok(u)
    }

    /// Split a `(d·n + q) × (n + p)` system matrix into its blocks.
    pub fn from_system_matrix(
        d: usize,
        n: usize,
        p: usize,
        q: usize,
        u: &Matrix,
        flavor: Flavor,
    ) -> Result<Self> {
        check_shape("system matrix", u, d * n + q, n + p)?;
        Self::new(
            d,
            n,
            p,
            q,
            u.view((0, 0), (d * n, n)).into_owned(),
            u.view((0, n), (d * n, p)).into_owned(),
            u.view((d * n, 0), (q, n)).into_owned(),
            u.view((d * n, n), (q, p)).into_owned(),
            flavor,
        )
    }

    /// State-free colligation `S ≡ D`.
    pub fn constant(d: usize, dmat: Matrix, flavor: Flavor) -> Result<Self> {
        let (q, p) = (dmat.nrows(), dmat.ncols());
        Self::new(
            d,
            0,
            p,
            q,
            zeros(0, 0),
            zeros(0, p),
            zeros(q, 0),
            dmat,
            flavor,
        )
    }

    /// Unitary colligation of the Blaschke factor `(z − a)/(1 − conj(a)z)`.
    pub fn blaschke(a: C64) -> Result<Self> {
        if !(a.norm() < 1.0) {
            return Err(Error::Domain(format!("Blaschke zero {a} outside the disk")));
        }
        let s = (1.0 - a.norm_sqr()).sqrt();
        let u = Matrix::from_row_slice(2, 2, &[a.conj(), c64(s, 0.0), c64(s, 0.0), -a]);
        Self::from_system_matrix(1, 1, 1, 1, &u, Flavor::Unitary)
    }

    pub fn system_matrix(&self) -> Matrix {
        let (dn, n) = (self.d * self.n, self.n);
        let mut u = zeros(dn + self.q, n + self.p);
        u.view_mut((0, 0), (dn, n)).copy_from(&self.a);
        u.view_mut((0, n), (dn, self.p)).copy_from(&self.b);
        u.view_mut((dn, 0), (self.q, n)).copy_from(&self.c);
        u.view_mut((dn, n), (self.q, self.p)).copy_from(&self.dmat);
        u
    }

    /// `A_j`, 1-based.
    pub fn a_block(&self, j: usize) -> Matrix {
        self.a.rows((j - 1) * self.n, self.n).into_owned()
    }

    /// `B_j`, 1-based.
    pub fn b_block(&self, j: usize) -> Matrix {
        self.b.rows((j - 1) * self.n, self.n).into_owned()
    }

    pub fn coisometry_defect(&self) -> f64 {
        coisometry_defect(&self.system_matrix())
    }

    pub fn isometry_defect(&self) -> f64 {
        isometry_defect(&self.system_matrix())
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.system_matrix())
    }

    /// Strongest flavor the system matrix satisfies, if any.
    pub fn verified_flavor(&self) -> Option<Flavor> {
        let u = self.system_matrix();
        let co = coisometry_defect(&u) <= FLAVOR_TOL;
        if co && isometry_defect(&u) <= FLAVOR_TOL {
            Some(Flavor::Unitary)
        } else if co {
            Some(Flavor::Coisometric)
        } else if op_norm(&u) <= 1.0 + FLAVOR_TOL {
            Some(Flavor::Contractive)
        } else {
            None
        }
    }

    fn check_flavor(&self) -> Result<()> {
        let u = self.system_matrix();
        match self.flavor {
            Flavor::Contractive => {
                let norm = op_norm(&u);
                if norm > 1.0 + FLAVOR_TOL {
                    return Err(Error::NotContraction { norm });
                }
            }
            Flavor::Coisometric | Flavor::Unitary => {
                let co = coisometry_defect(&u);
                if co > FLAVOR_TOL {
                    return Err(Error::Validation(format!(
                        "declared {} but ‖UU* − I‖_F = {co:e}",
                        self.flavor.name()
                    )));
                }
                if self.flavor == Flavor::Unitary {
                    let iso = isometry_defect(&u);
                    if iso > FLAVOR_TOL {
                        return Err(Error::Validation(format!(
                            "declared unitary but ‖U*U − I‖_F = {iso:e}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `Z(z)·A = Σ z_j A_j` (n × n).
    fn za(&self, z: &[C64]) -> Matrix {
        let mut m = zeros(self.n, self.n);
        for (j, zj) in z.iter().enumerate() {
            m += self.a_block(j + 1) * *zj;
        }
        m
    }

    fn zb(&self, z: &[C64]) -> Matrix {
        let mut m = zeros(self.n, self.p);
        for (j, zj) in z.iter().enumerate() {
            m += self.b_block(j + 1) * *zj;
        }
        m
    }

    /// `C(I − Z(z)A)^{-1}` (q × n).
    fn observability(&self, z: &[C64]) -> Result<Matrix> {
        let m = identity(self.n) - self.za(z);
        // Solve X·M = C through M*·X* = C*.
        Ok(solve_square(&m.adjoint(), &self.c.adjoint())?.adjoint())
    }
}

fn check_point(z: &[C64], d: usize) -> Result<()> {
    if z.len() != d {
        return Err(Error::Validation(format!(
            "point has {} coordinates, colligation has d = {d}",
            z.len()
        )));
    }
    let r = z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    if !(r < 1.0) {
        return Err(Error::Domain(format!("point norm {r} >= 1")));
    }
    Ok(())
}

/// `S(z) = D + z·C(I − zA)^{-1}B` by a direct solve.
pub fn eval_disk(u: &Colligation, z: C64) -> Result<Matrix> {
    if u.d != 1 {
        return Err(Error::Validation(format!(
            "disk evaluation needs d = 1, got {}",
            u.d
        )));
    }
    eval_ball(u, &[z])
}

/// `S(z) = D + C(I − Z(z)A)^{-1}Z(z)B` with `Z(z) = [z_1 I … z_d I]`.
pub fn eval_ball(u: &Colligation, z: &[C64]) -> Result<Matrix> {
    check_point(z, u.d)?;
    if u.n == 0 {
        return Ok(u.dmat.clone());
    }
    let m = identity(u.n) - u.za(z);
    let x = solve_square(&m, &u.zb(z))?;
    Ok(&u.dmat + &u.c * x)
}

/// Coefficients `s_∅ = D`, `s_{v·j} = C·A^v·B_j` for `|v·j| ≤ N`, where
/// `A^v = A_{i_1}⋯A_{i_k}` for `v = i_1⋯i_k` in written order.
pub fn free_transfer_coeffs(u: &Colligation, degree: usize) -> FormalSeries {
    let mut s = FormalSeries::zero(u.d, u.q, u.p, false);
    s.terms.insert(Word::empty(), u.dmat.clone());
    // Row blocks C·A^v, built by appending letters on the right.
    let mut layer: Vec<(Word, Matrix)> = vec![(Word::empty(), u.c.clone())];
    for _ in 0..degree {
        let mut next = Vec::with_capacity(layer.len() * u.d);
        for (v, cav) in &layer {
            for j in 1..=u.d {
                s.terms.insert(v.push(j), cav * u.b_block(j));
                next.push((v.push(j), cav * u.a_block(j)));
            }
        }
        layer = next;
    }
    s
}

/// Largest entrywise deviation of
/// `I − S(z)S(w)* = C(I − Z(z)A)^{-1}(1 − ⟨z, w⟩)(I − A*Z(w)*)^{-1}C*`
/// over all pairs of `points`. Reports only; it does not require the
/// colligation to be coisometric.
pub fn kernel_identity_check(u: &Colligation, points: &[Vec<C64>]) -> Result<f64> {
    let mut s = Vec::with_capacity(points.len());
    let mut h = Vec::with_capacity(points.len());
    for z in points {
        s.push(eval_ball(u, z)?);
        h.push(if u.n == 0 {
            zeros(u.q, 0)
        } else {
            u.observability(z)?
        });
    }
    let mut worst: f64 = 0.0;
    for i in 0..points.len() {
        for j in 0..points.len() {
            let ip: C64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| a * b.conj())
                .sum();
            let lhs = identity(u.q) - &s[i] * s[j].adjoint();
            let rhs = (&h[i] * h[j].adjoint()) * (c64(1.0, 0.0) - ip);
            worst = worst.max(max_abs(&(lhs - rhs)));
        }
    }
    Ok(worst)
}

pub fn kernel_identity_check_disk(u: &Colligation, points: &[C64]) -> Result<f64> {
    let pts: Vec<Vec<C64>> = points.iter().map(|z| vec![*z]).collect();
    kernel_identity_check(u, &pts)
}

#[derive(Debug, Clone)]
pub struct RealizationResult {
    pub colligation: Colligation,
    /// Max `‖S − Ŝ‖` on the training data (point values, or coefficients in
    /// the free setting).
    pub fit_residual: f64,
    /// Same on data not used for synthesis, when some was measured.
    pub heldout_residual: Option<f64>,
    /// Rank decision behind the state dimension.
    pub rank: RankDecision,
    /// Largest column error of the partial isometry on its defining vectors.
    pub isometry_residual: f64,
    /// Fewer samples than `rank + 2`.
    pub undersampled: bool,
}

impl RealizationResult {
    /// Record `max ‖S(z) − Ŝ(z)‖` over `points`.
    pub fn measure_heldout<F>(&mut self, points: &[Vec<C64>], truth: F) -> Result<f64>
    where
        F: Fn(&[C64]) -> Result<Matrix>,
    {
        let mut worst: f64 = 0.0;
        for z in points {
            let diff = truth(z)? - eval_ball(&self.colligation, z)?;
            worst = worst.max(op_norm(&diff));
        }
        self.heldout_residual = Some(worst);
        Ok(worst)
    }
}

fn not_schur(e: Error) -> Error {
    match e {
        Error::NotPsd { min_eigenvalue } => Error::NotSchur {
            reason: "de Branges-Rovnyak kernel is not positive".into(),
            deviation: min_eigenvalue,
        },
        Error::GramMismatch { deviation, .. } => Error::NotSchur {
            reason: "lurking isometry Gram identity fails".into(),
            deviation,
        },
        other => other,
    }
}

/// Build the colligation from the pairing `U·f_k = g_k` where the `f_k`
/// (columns of `inputs`, in `X ⊕ U`) and `g_k` (columns of `outputs`, in
/// `X^d ⊕ Y`) have equal Gram matrices. Coisometric when the shape allows,
/// contractive (zero on the orthogonal complement) otherwise.
fn colligation_from_pairing(
    d: usize,
    n: usize,
    p: usize,
    q: usize,
    inputs: &Matrix,
    outputs: &Matrix,
    tol: f64,
) -> Result<(Colligation, f64)> {
    let (partial, residual) = solve_isometry(inputs, outputs, tol).map_err(not_schur)?;
    let (u, flavor) = if d * n + q <= n + p {
        let u = complete_to_unitary(&partial, CompletionMode::Coisometric)?;
        let flavor = if d * n + q == n + p {
            Flavor::Unitary
        } else {
            Flavor::Coisometric
        };
        (u, flavor)
    } else {
        (partial.matrix(), Flavor::Contractive)
    };
    let mut coll = Colligation::from_system_matrix(d, n, p, q, &u, Flavor::Contractive)?;
    coll.flavor = flavor;
    Ok((coll, residual))
}

/// Lurking-isometry synthesis from samples `S(points[i]) = values[i]` in the
/// disk (`d = 1`) or the ball of `C^d`.
pub fn lurking_isometry_ball(
    d: usize,
    points: &[Vec<C64>],
    values: &[Matrix],
    tol: f64,
) -> Result<RealizationResult> {
    if points.is_empty() {
        return Err(Error::Validation("no samples".into()));
    }
    let setting = if d == 1 {
        Setting::Disk
    } else {
        Setting::Ball { d }
    };
    let kernel = debranges_kernel(setting, points, values)?;
    let report = positivity_check(&kernel, tol)?;
    if !report.is_psd {
        return Err(Error::NotSchur {
            reason: "de Branges-Rovnyak kernel is not positive".into(),
            deviation: report.min_eigenvalue,
        });
    }
    let (q, p) = (values[0].nrows(), values[0].ncols());
    let scale = values.iter().map(op_norm).fold(1.0, f64::max);
    if values
        .iter()
        .all(|v| op_norm(&(v - &values[0])) <= tol * scale)
    {
        return constant_result(d, &values[0], points.len());
    }
    let kol = kolmogorov(&kernel, tol).map_err(not_schur)?;
    let r = kol.dim();
    let count = points.len() * q;
    // U·[H(z_i)*y; S(z_i)*y] = [conj(z_i)H(z_i)*y (per letter); y].
    let mut inputs = zeros(r + p, count);
    let mut outputs = zeros(d * r + q, count);
    for (i, z) in points.iter().enumerate() {
        let hs = kol.factors[i].adjoint();
        let ss = values[i].adjoint();
        for y in 0..q {
            let col = i * q + y;
            inputs.view_mut((0, col), (r, 1)).copy_from(&hs.column(y));
            inputs.view_mut((r, col), (p, 1)).copy_from(&ss.column(y));
            for (j, zj) in z.iter().enumerate() {
                outputs
                    .view_mut((j * r, col), (r, 1))
                    .copy_from(&(hs.column(y) * zj.conj()));
            }
            outputs[(d * r + y, col)] = c64(1.0, 0.0);
        }
    }
    let (colligation, isometry_residual) =
        colligation_from_pairing(d, r, p, q, &inputs, &outputs, tol)?;
    let mut fit: f64 = 0.0;
    for (z, s) in points.iter().zip(values) {
        fit = fit.max(op_norm(&(s - eval_ball(&colligation, z)?)));
    }
    Ok(RealizationResult {
        colligation,
        fit_residual: fit,
        heldout_residual: None,
        rank: kol.rank,
        isometry_residual,
        undersampled: points.len() < r + 2,
    })
}

/// Samples that agree are realized without state, `S ≡ D`.
fn constant_result(d: usize, dmat: &Matrix, samples: usize) -> Result<RealizationResult> {
    let mut colligation = Colligation::constant(d, dmat.clone(), Flavor::Contractive)?;
    colligation.flavor = colligation.verified_flavor().unwrap_or(Flavor::Contractive);
    Ok(RealizationResult {
        colligation,
        fit_residual: 0.0,
        heldout_residual: None,
        rank: RankDecision {
            rank: 0,
            threshold: 0.0,
            smallest_kept: f64::NAN,
            largest_dropped: f64::NAN,
        },
        isometry_residual: 0.0,
        undersampled: samples < 2,
    })
}

pub fn lurking_isometry_disk(
    points: &[C64],
    values: &[Matrix],
    tol: f64,
) -> Result<RealizationResult> {
    let pts: Vec<Vec<C64>> = points.iter().map(|z| vec![*z]).collect();
    lurking_isometry_ball(1, &pts, values, tol)
}

/// Coefficient-space lurking isometry for a noncommutative series: factor
/// `[K_{α,β}]_{|α|,|β| ≤ N} = H·H*` and pair `[H_w*y; s_w*y]` with
/// `[e_j ⊗ H_v*y; 0]` for `w = v·j` and with `[0; y]` for `w = ∅`.
pub fn lurking_isometry_free(
    s: &FormalSeries,
    degree: usize,
    tol: f64,
) -> Result<RealizationResult> {
    if s.commutative {
        return Err(Error::Validation(
            "free synthesis needs a noncommutative series".into(),
        ));
    }
    if s.degree() > degree {
        return Err(Error::Validation(format!(
            "series has degree {} above the truncation {degree}",
            s.degree()
        )));
    }
    let (d, q, p) = (s.d, s.rows, s.cols);
    let gram = nc_debranges_coeffs(s, degree)?;
    let (h, rank) = psd_factor_with_rank(&gram, tol).map_err(not_schur)?;
    if s.terms.keys().all(Word::is_empty) {
        return constant_result(d, &s.coeff(&Word::empty()), 1).map(|mut r| {
            r.undersampled = false;
            r
        });
    }
    let r = rank.rank;
    let words = words_up_to(d, degree);
    let count = words.len() * q;
    let hw = |w: &Word| -> Matrix {
        let i = crate::freeseries::word_index(d, w);
        h.rows(i * q, q).into_owned()
    };
    let mut inputs = zeros(r + p, count);
    let mut outputs = zeros(d * r + q, count);
    for (i, w) in words.iter().enumerate() {
        let hs = hw(w).adjoint();
        let ss = s.coeff(w).adjoint();
        for y in 0..q {
            let col = i * q + y;
            inputs.view_mut((0, col), (r, 1)).copy_from(&hs.column(y));
            inputs.view_mut((r, col), (p, 1)).copy_from(&ss.column(y));
            match w.0.split_last() {
                None => outputs[(d * r + y, col)] = c64(1.0, 0.0),
                Some((&j, v)) => {
                    let hv = hw(&Word(v.to_vec())).adjoint();
                    outputs
                        .view_mut(((j - 1) * r, col), (r, 1))
                        .copy_from(&hv.column(y));
                }
            }
        }
    }
    let (colligation, isometry_residual) =
        colligation_from_pairing(d, r, p, q, &inputs, &outputs, tol)?;
    let fit = free_transfer_coeffs(&colligation, degree).max_coeff_distance(s);
    Ok(RealizationResult {
        colligation,
        fit_residual: fit,
        heldout_residual: None,
        rank,
        isometry_residual,
        undersampled: false,
    })
}

/// `U⁰ ⊗ I_m` together with the measured module-map deviation.
#[derive(Debug, Clone)]
pub struct TensoredRealization {
    pub colligation: Colligation,
    pub multiplicity: usize,
    pub intertwining_deviation: f64,
}

impl TensoredRealization {
    /// `π(b) = I ⊗ b` on a space of the given base dimension.
    pub fn pi(&self, base_dim: usize, b: &Matrix) -> Matrix {
        kron(&identity(base_dim), b)
    }
}

pub fn tensored_realization(u0: &Colligation, m: usize) -> Result<TensoredRealization> {
    if m == 0 {
        return Err(Error::Validation(
            "tensor multiplicity must be positive".into(),
        ));
    }
    let i = identity(m);
    let colligation = Colligation::new(
        u0.d,
        u0.n * m,
        u0.p * m,
        u0.q * m,
        kron(&u0.a, &i),
        kron(&u0.b, &i),
        kron(&u0.c, &i),
        kron(&u0.dmat, &i),
        u0.flavor,
    )?;
    let intertwining_deviation = module_map_deviation(&colligation, m)?;
    Ok(TensoredRealization {
        colligation,
        multiplicity: m,
        intertwining_deviation,
    })
}

/// `max_{a,b} ‖U·(I ⊗ E_ab) − (I ⊗ E_ab)·U‖_max` over the matrix units of `M_m`.
pub fn module_map_deviation(u: &Colligation, m: usize) -> Result<f64> {
    let sys = u.system_matrix();
    let (rows, cols) = (sys.nrows(), sys.ncols());
    if m == 0 || rows % m != 0 || cols % m != 0 {
        return Err(Error::Validation(format!(
            "a {rows}x{cols} system matrix has no M_{m} module structure"
        )));
    }
    let mut worst: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            let e = crate::kernels::matrix_unit(m, a, b);
            let left = &sys * kron(&identity(cols / m), &e);
            let right = kron(&identity(rows / m), &e) * &sys;
            worst = worst.max(max_abs(&(left - right)));
        }
    }
    Ok(worst)
}
