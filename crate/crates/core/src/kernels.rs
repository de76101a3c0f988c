//! Positive kernels on finite point sets: Szegő kernels for the disk and the
//! ball, de Branges-Rovnyak kernels `K_S`, Aronszajn positivity, Kolmogorov
//! factorization, and completely positive kernels with values in maps on a
//! full matrix algebra `M_k`.

use crate::error::{Error, Result};
use crate::matops::{
    c64, frobenius, hermitian_eigen, identity, max_abs, psd_check, psd_factor_with_rank, zeros,
    Matrix, PsdReport, RankDecision, C64, HERMITIAN_TOL,
};

/// Which Szegő kernel a sample is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    /// Points are scalars in the unit disk.
    Disk,
    /// Points are `d`-tuples in the unit ball of `C^d`.
    Ball { d: usize },
}

impl Setting {
    pub fn dim(self) -> usize {
        match self {
            Setting::Disk => 1,
            Setting::Ball { d } => d,
        }
    }
}

fn inner(z: &[C64], w: &[C64]) -> C64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

fn norm2(z: &[C64]) -> f64 {
    z.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `1 / (1 − z·conj(w))`.
pub fn szego_disk(z: C64, w: C64) -> Result<C64> {
    for p in [z, w] {
        if !(p.norm() < 1.0) {
            return Err(Error::Domain(format!("|{p}| >= 1")));
        }
    }
    Ok(c64(1.0, 0.0) / (c64(1.0, 0.0) - z * w.conj()))
}

/// `1 / (1 − ⟨z, w⟩)` on the unit ball of `C^d`.
pub fn szego_ball(z: &[C64], w: &[C64]) -> Result<C64> {
    if z.len() != w.len() {
        return Err(Error::Validation(format!(
            "points of different dimension ({} and {})",
            z.len(),
            w.len()
        )));
    }
    for p in [z, w] {
        let n = norm2(p);
        if !(n < 1.0) {
            return Err(Error::Domain(format!("point norm {n} >= 1")));
        }
    }
    Ok(c64(1.0, 0.0) / (c64(1.0, 0.0) - inner(z, w)))
}

pub fn szego(setting: Setting, z: &[C64], w: &[C64]) -> Result<C64> {
    match setting {
        Setting::Disk => {
            if z.len() != 1 || w.len() != 1 {
                return Err(Error::Validation("disk points must be scalars".into()));
            }
            szego_disk(z[0], w[0])
        }
        Setting::Ball { d } => {
            if z.len() != d || w.len() != d {
                return Err(Error::Validation(format!(
                    "ball points must have {d} coordinates"
                )));
            }
            szego_ball(z, w)
        }
    }
}

/// Kernel values `K(ω_i, ω_j)` on a finite set of interior points.
#[derive(Debug, Clone)]
pub struct KernelSample {
    pub setting: Setting,
    pub points: Vec<Vec<C64>>,
    pub block_dim: usize,
    /// `blocks[i][j] = K(ω_i, ω_j)`.
    pub blocks: Vec<Vec<Matrix>>,
}

impl KernelSample {
    pub fn new(
        setting: Setting,
        points: Vec<Vec<C64>>,
        block_dim: usize,
        blocks: Vec<Vec<Matrix>>,
    ) -> Result<Self> {
        let n = points.len();
        for p in &points {
            if p.len() != setting.dim() {
                return Err(Error::Validation(format!(
                    "point has {} coordinates, setting needs {}",
                    p.len(),
                    setting.dim()
                )));
            }
            let r = norm2(p);
            if !(r < 1.0) {
                return Err(Error::Domain(format!("point norm {r} >= 1")));
            }
        }
        if blocks.len() != n || blocks.iter().any(|row| row.len() != n) {
            return Err(Error::Validation(format!("blocks must be a {n}x{n} array")));
        }
        let mut scale: f64 = 1.0;
        for row in &blocks {
            for b in row {
                if b.nrows() != block_dim || b.ncols() != block_dim {
                    return Err(Error::Validation(format!(
                        "kernel block is {}x{}, expected {block_dim}x{block_dim}",
                        b.nrows(),
                        b.ncols()
                    )));
                }
                scale = scale.max(max_abs(b));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let dev = max_abs(&(&blocks[i][j] - blocks[j][i].adjoint()));
                if dev > HERMITIAN_TOL * scale {
                    return Err(Error::Validation(format!(
                        "blocks[{i}][{j}] differs from blocks[{j}][{i}]* by {dev:e}"
                    )));
                }
            }
        }
        Ok(Self {
            setting,
            points,
            block_dim,
            blocks,
        })
    }

    /// Evaluate `kernel` on every pair of points.
    pub fn from_fn<F>(
        setting: Setting,
        points: Vec<Vec<C64>>,
        block_dim: usize,
        kernel: F,
    ) -> Result<Self>
    where
        F: Fn(&[C64], &[C64]) -> Result<Matrix>,
    {
        let mut blocks = Vec::with_capacity(points.len());
        for z in &points {
            let row = points
                .iter()
                .map(|w| kernel(z, w))
                .collect::<Result<Vec<_>>>()?;
            blocks.push(row);
        }
        Self::new(setting, points, block_dim, blocks)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `N·block_dim` square Gram matrix `[K(ω_i, ω_j)]`.
    pub fn gram(&self) -> Matrix {
        let b = self.block_dim;
        let n = self.len();
        let mut g = zeros(n * b, n * b);
        for i in 0..n {
            for j in 0..n {
                g.view_mut((i * b, j * b), (b, b))
                    .copy_from(&self.blocks[i][j]);
            }
        }
        g
    }

    /// Largest `‖K(ω_i,ω_j) − K(ω_j,ω_i)*‖_max` over all pairs.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(max_abs(&(&self.blocks[i][j] - self.blocks[j][i].adjoint())));
            }
        }
        worst
    }
}

/// `K_S(z, w) = (I − S(z)·S(w)*)·k(z, w)` with `k` the Szegő kernel of the
/// setting, from sampled values `S(points[i]) = values[i]`.
pub fn debranges_kernel(
    setting: Setting,
    points: &[Vec<C64>],
    values: &[Matrix],
) -> Result<KernelSample> {
    if points.len() != values.len() {
        return Err(Error::Validation(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    let (q, p) = values.first().map_or((0, 0), |v| (v.nrows(), v.ncols()));
    if values.iter().any(|v| v.nrows() != q || v.ncols() != p) {
        return Err(Error::Validation(
            "S values have inconsistent dimensions".into(),
        ));
    }
    let n = points.len();
    let mut blocks = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let k = szego(setting, &points[i], &points[j])?;
            let b = (identity(q) - &values[i] * values[j].adjoint()) * k;
            row.push(b);
        }
        blocks.push(row);
    }
    // Symmetrize away rounding so the sample satisfies its Hermitian invariant exactly.
    for i in 0..n {
        for j in 0..i {
            blocks[j][i] = blocks[i][j].adjoint();
        }
        blocks[i][i] = (&blocks[i][i] + blocks[i][i].adjoint()).scale(0.5);
    }
    KernelSample::new(setting, points.to_vec(), q, blocks)
}

/// Convenience wrapper sampling `s` at the given points.
pub fn debranges_kernel_fn<F>(setting: Setting, points: &[Vec<C64>], s: F) -> Result<KernelSample>
where
    F: Fn(&[C64]) -> Result<Matrix>,
{
    let values = points.iter().map(|z| s(z)).collect::<Result<Vec<_>>>()?;
    debranges_kernel(setting, points, &values)
}

/// Aronszajn positivity of the sampled Gram matrix.
pub fn positivity_check(k: &KernelSample, tol: f64) -> Result<PsdReport> {
    psd_check(&k.gram(), tol)
}

/// Per-point factors `H(ω_i)` (block_dim × r) with `K(ω_i, ω_j) = H(ω_i)·H(ω_j)*`.
#[derive(Debug, Clone)]
pub struct Kolmogorov {
    pub factors: Vec<Matrix>,
    pub rank: RankDecision,
}

impl Kolmogorov {
    pub fn dim(&self) -> usize {
        self.rank.rank
    }

    /// `‖[K] − [H H*]‖_F / ‖[K]‖_F` (zero for the zero kernel).
    pub fn relative_residual(&self, k: &KernelSample) -> f64 {
        let g = k.gram();
        let h = stack_rows(&self.factors, self.dim());
        let denom = frobenius(&g);
        let num = frobenius(&(&g - &h * h.adjoint()));
        if denom == 0.0 {
            num
        } else {
            num / denom
        }
    }
}

pub(crate) fn stack_rows(blocks: &[Matrix], cols: usize) -> Matrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

pub fn kolmogorov(k: &KernelSample, tol: f64) -> Result<Kolmogorov> {
    let (h, rank) = psd_factor_with_rank(&k.gram(), tol)?;
    let b = k.block_dim;
    let factors = (0..k.len())
        .map(|i| h.rows(i * b, b).into_owned())
        .collect();
    Ok(Kolmogorov { factors, rank })
}

/// Index of the matrix unit `E_{ab}` of `M_k` in row-major order.
pub fn unit_index(k: usize, a: usize, b: usize) -> usize {
    a * k + b
}

pub fn matrix_unit(k: usize, a: usize, b: usize) -> Matrix {
    let mut e = zeros(k, k);
    e[(a, b)] = c64(1.0, 0.0);
    e
}

/// Completely positive kernel candidate: for each ordered pair of points the
/// linear map `a ↦ 𝕂(ω_i, ω_j)[a]` from `M_k` to `M_m`, stored through its
/// values on the matrix units.
#[derive(Debug, Clone)]
pub struct CpKernelSample {
    pub labels: Vec<String>,
    pub alg_dim: usize,
    pub rep_dim: usize,
    /// `unit_values[i][j][unit_index(k, a, b)] = 𝕂(ω_i, ω_j)[E_ab]`.
    pub unit_values: Vec<Vec<Vec<Matrix>>>,
}

impl CpKernelSample {
    pub fn new(
        labels: Vec<String>,
        alg_dim: usize,
        rep_dim: usize,
        unit_values: Vec<Vec<Vec<Matrix>>>,
    ) -> Result<Self> {
        let n = labels.len();
        let (k, m) = (alg_dim, rep_dim);
        if unit_values.len() != n || unit_values.iter().any(|r| r.len() != n) {
            return Err(Error::Validation(format!("unit_values must be {n}x{n}")));
        }
        for (i, row) in unit_values.iter().enumerate() {
            for (j, units) in row.iter().enumerate() {
                if units.len() != k * k {
                    return Err(Error::Validation(format!(
                        "unit_values[{i}][{j}] has {} entries, expected {}",
                        units.len(),
                        k * k
                    )));
                }
                if units.iter().any(|u| u.nrows() != m || u.ncols() != m) {
                    return Err(Error::Validation(format!(
                        "unit_values[{i}][{j}] entries must be {m}x{m}"
                    )));
                }
            }
        }
        let s = Self {
            labels,
            alg_dim,
            rep_dim,
            unit_values,
        };
        let big = s.big_matrix();
        let scale = max_abs(&big).max(1.0);
        let asym = max_abs(&(&big - big.adjoint()));
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::Validation(format!(
                "CP kernel matrix is not Hermitian (defect {asym:e})"
            )));
        }
        Ok(s)
    }

    /// Sample `map(i, j, a)` on the matrix units and re-evaluate it at a few
    /// non-unit arguments to confirm linearity.
    pub fn from_map<F>(labels: Vec<String>, alg_dim: usize, rep_dim: usize, map: F) -> Result<Self>
    where
        F: Fn(usize, usize, &Matrix) -> Matrix,
    {
        let n = labels.len();
        let k = alg_dim;
        let unit_values: Vec<Vec<Vec<Matrix>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..k * k)
                            .map(|u| map(i, j, &matrix_unit(k, u / k, u % k)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let s = Self::new(labels, alg_dim, rep_dim, unit_values)?;
        for probe in 0..3 {
            let a = Matrix::from_fn(k, k, |r, c| {
                let t = (probe * 7 + r * 3 + c * 5) as f64;
                c64((t * 0.37).sin(), (t * 0.11).cos())
            });
            for i in 0..n {
                for j in 0..n {
                    let direct = map(i, j, &a);
                    let dev = max_abs(&(&direct - s.value(i, j, &a)));
                    if dev > 1e-9 * max_abs(&direct).max(1.0) {
                        return Err(Error::Validation(format!(
                            "map is not linear on M_{k} (deviation {dev:e})"
                        )));
                    }
                }
            }
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `𝕂(ω_i, ω_j)[a]` by linearity.
    pub fn value(&self, i: usize, j: usize, a: &Matrix) -> Matrix {
        let k = self.alg_dim;
        let mut out = zeros(self.rep_dim, self.rep_dim);
        for r in 0..k {
            for c in 0..k {
                let coef = a[(r, c)];
                if coef != c64(0.0, 0.0) {
                    out += &self.unit_values[i][j][unit_index(k, r, c)] * coef;
                }
            }
        }
        out
    }

    /// `𝕂(ω_i, ω_j)[E_μ*·E_ν]` for unit indices `μ = (a,b)`, `ν = (c,d)`:
    /// `E_ba·E_cd = δ_ac·E_bd`.
    fn unit_product_value(&self, i: usize, j: usize, mu: usize, nu: usize) -> Option<&Matrix> {
        let k = self.alg_dim;
        let (a, b) = (mu / k, mu % k);
        let (c, d) = (nu / k, nu % k);
        (a == c).then(|| &self.unit_values[i][j][unit_index(k, b, d)])
    }

    /// The `(N·k²·m)`-square matrix with blocks `𝕂(ω_i, ω_j)[E_μ*·E_ν]`,
    /// rows indexed by `(i, μ)`, columns by `(j, ν)`.
    pub fn big_matrix(&self) -> Matrix {
        let (n, k, m) = (self.len(), self.alg_dim, self.rep_dim);
        let kk = k * k;
        let mut big = zeros(n * kk * m, n * kk * m);
        for i in 0..n {
            for j in 0..n {
                for mu in 0..kk {
                    for nu in 0..kk {
                        if let Some(v) = self.unit_product_value(i, j, mu, nu) {
                            let r = (i * kk + mu) * m;
                            let c = (j * kk + nu) * m;
                            big.view_mut((r, c), (m, m)).copy_from(v);
                        }
                    }
                }
            }
        }
        big
    }

    /// The `(N·k·m)`-square block Choi matrix `[𝕂(ω_i, ω_j)[E_ab]]`, rows
    /// indexed by `(i, a)`, columns by `(j, b)`.
    pub fn choi_matrix(&self) -> Matrix {
        let (n, k, m) = (self.len(), self.alg_dim, self.rep_dim);
        let mut choi = zeros(n * k * m, n * k * m);
        for i in 0..n {
            for j in 0..n {
                for a in 0..k {
                    for b in 0..k {
                        let v = &self.unit_values[i][j][unit_index(k, a, b)];
                        choi.view_mut(((i * k + a) * m, (j * k + b) * m), (m, m))
                            .copy_from(v);
                    }
                }
            }
        }
        choi
    }

    /// `K₀(ω_i, ω_j) = 𝕂(ω_i, ω_j)[1]`.
    pub fn unit_kernel(&self) -> Vec<Vec<Matrix>> {
        let one = identity(self.alg_dim);
        (0..self.len())
            .map(|i| (0..self.len()).map(|j| self.value(i, j, &one)).collect())
            .collect()
    }
}

/// PSD test of [`CpKernelSample::big_matrix`]; by bilinearity this is the
/// quantified condition `Σ b_i* 𝕂(ω_i, ω_j)[a_i*·a_j] b_j ≥ 0`.
pub fn cp_positivity_check(k: &CpKernelSample, tol: f64) -> Result<PsdReport> {
    psd_check(&k.big_matrix(), tol)
}

/// Spectrum of the block Choi matrix, ascending.
pub fn choi_spectrum(k: &CpKernelSample) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(&k.choi_matrix())?.values)
}

/// Kolmogorov decomposition `𝕂(ω′, ω)[a] = H(ω′)·π(a)·H(ω)*` of a CP kernel.
#[derive(Debug, Clone)]
pub struct CpDecomposition {
    pub hilbert_dim: usize,
    /// `h_maps[i] = H(ω_i)`, each `m × hilbert_dim`.
    pub h_maps: Vec<Matrix>,
    /// `pi[unit_index(k, a, b)] = π(E_ab)`, each `hilbert_dim` square.
    pub pi: Vec<Matrix>,
    pub alg_dim: usize,
}

impl CpDecomposition {
    pub fn pi_of(&self, a: &Matrix) -> Matrix {
        let k = self.alg_dim;
        let mut out = zeros(self.hilbert_dim, self.hilbert_dim);
        for r in 0..k {
            for c in 0..k {
                if a[(r, c)] != c64(0.0, 0.0) {
                    out += &self.pi[unit_index(k, r, c)] * a[(r, c)];
                }
            }
        }
        out
    }

    /// Max deviation from `π(E_ab)π(E_cd) = δ_bc π(E_ad)` and
    /// `π(E_ab)* = π(E_ba)`.
    pub fn homomorphism_residual(&self) -> f64 {
        representation_residual(&self.pi, self.alg_dim)
    }

    /// Max over point pairs and matrix units of
    /// `‖H(ω_j)·π(E_ab)·H(ω_i)* − 𝕂(ω_j, ω_i)[E_ab]‖_max`.
    pub fn reconstruction_residual(&self, kernel: &CpKernelSample) -> f64 {
        let n = kernel.len();
        let k = self.alg_dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for u in 0..k * k {
                    let lhs = &self.h_maps[j] * &self.pi[u] * self.h_maps[i].adjoint();
                    worst = worst.max(max_abs(&(lhs - &kernel.unit_values[j][i][u])));
                }
            }
        }
        worst
    }
}

/// Max deviation of `pi` (indexed by matrix units of `M_k`) from being a
/// *-homomorphism.
pub fn representation_residual(pi: &[Matrix], k: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in 0..k {
            let pab = &pi[unit_index(k, a, b)];
            worst = worst.max(max_abs(&(pab.adjoint() - &pi[unit_index(k, b, a)])));
            for c in 0..k {
                for d in 0..k {
                    let prod = pab * &pi[unit_index(k, c, d)];
                    let dev = if b == c {
                        max_abs(&(prod - &pi[unit_index(k, a, d)]))
                    } else {
                        max_abs(&prod)
                    };
                    worst = worst.max(dev);
                }
            }
        }
    }
    worst
}

/// Finite-dimensional GNS construction on the symbols `E_μ·k_{ω_i}·e_s`.
pub fn cp_kolmogorov(kernel: &CpKernelSample, tol: f64) -> Result<CpDecomposition> {
    let (n, k, m) = (kernel.len(), kernel.alg_dim, kernel.rep_dim);
    let kk = k * k;
    let big = kernel.big_matrix();
    // Gram of the symbols is the transpose of `big`; with big = F·F*, the
    // symbol x is represented by the vector F[x, :]*.
    let (f, rank) = psd_factor_with_rank(&big, tol)?;
    let r = rank.rank;
    let sym = |i: usize, mu: usize, s: usize| (i * kk + mu) * m + s;
    let vectors = f.adjoint(); // column x = symbol x
    let lambda_inv = Matrix::from_fn(r, r, |a, b| {
        if a == b {
            let l = (f.column(a).norm_squared()).max(f64::MIN_POSITIVE);
            c64(1.0 / l, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    // Pseudo-inverse of the symbol matrix P = F*: P⁺ = F·Λ⁻¹.
    let p_pinv = &f * &lambda_inv;

    let mut pi = Vec::with_capacity(kk);
    for a in 0..k {
        for b in 0..k {
            // E_ab·(E_cd k_ω e) = δ_bc E_ad k_ω e.
            let mut targets = zeros(r, n * kk * m);
            for i in 0..n {
                for d in 0..k {
                    for s in 0..m {
                        let src = sym(i, unit_index(k, b, d), s);
                        let dst = sym(i, unit_index(k, a, d), s);
                        targets.set_column(src, &vectors.column(dst));
                    }
                }
            }
            pi.push(targets * &p_pinv);
        }
    }
    let h_maps = (0..n)
        .map(|i| {
            let mut hs = zeros(r, m);
            for s in 0..m {
                for c in 0..k {
                    let col = vectors.column(sym(i, unit_index(k, c, c), s)).into_owned();
                    let mut target = hs.column_mut(s);
                    target += col;
                }
            }
            hs.adjoint()
        })
        .collect();
    let dec = CpDecomposition {
        hilbert_dim: r,
        h_maps,
        pi,
        alg_dim: k,
    };
    let residual = dec.homomorphism_residual();
    if residual > 1e-9 {
        return Err(Error::Homomorphism { residual });
    }
    Ok(dec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleMapReport {
    /// Whether `𝕂(ω,ω′)[a*·a′] = π_E(a)*·𝕂(ω,ω′)[1]·π_E(a′)` held within `tol`.
    pub holds: bool,
    pub max_deviation: f64,
    /// CP verdict and Aronszajn verdict for `K₀`, computed when the identity holds.
    pub cp_verdict: Option<bool>,
    pub reduced_verdict: Option<bool>,
}

impl ModuleMapReport {
    pub fn verdicts_agree(&self) -> Option<bool> {
        Some(self.cp_verdict? == self.reduced_verdict?)
    }
}

/// Check the module-map identity on all matrix-unit pairs and, when it
/// holds, compare CP positivity with Aronszajn positivity of `K₀ = 𝕂[1]`.
pub fn modulemap_reduction_check(
    kernel: &CpKernelSample,
    pi_e: &[Matrix],
    tol: f64,
) -> Result<ModuleMapReport> {
    let (n, k, m) = (kernel.len(), kernel.alg_dim, kernel.rep_dim);
    if pi_e.len() != k * k || pi_e.iter().any(|p| p.nrows() != m || p.ncols() != m) {
        return Err(Error::Validation(format!(
            "representation must list {} matrices of size {m}x{m}",
            k * k
        )));
    }
    let k0 = kernel.unit_kernel();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for mu in 0..k * k {
                for nu in 0..k * k {
                    let (a, b) = (mu / k, mu % k);
                    let (c, d) = (nu / k, nu % k);
                    let lhs = if a == c {
                        kernel.unit_values[i][j][unit_index(k, b, d)].clone()
                    } else {
                        zeros(m, m)
                    };
                    let rhs = pi_e[mu].adjoint() * &k0[i][j] * &pi_e[nu];
                    dev = dev.max(max_abs(&(lhs - rhs)));
                }
            }
        }
    }
    let holds = dev <= tol;
    let (cp_verdict, reduced_verdict) = if holds {
        let cp = cp_positivity_check(kernel, tol)?.is_psd;
        let reduced = KernelSample {
            setting: Setting::Disk,
            points: vec![vec![c64(0.0, 0.0)]; n],
            block_dim: m,
            blocks: k0,
        };
        let aron = positivity_check(&reduced, tol)?.is_psd;
        (Some(cp), Some(aron))
    } else {
        (None, None)
    };
    Ok(ModuleMapReport {
        holds,
        max_deviation: dev,
        cp_verdict,
        reduced_verdict,
    })
}

/// Identity representation of `M_k` on `C^k`, listed by matrix units.
pub fn identity_representation(k: usize) -> Vec<Matrix> {
    (0..k * k).map(|u| matrix_unit(k, u / k, u % k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::DEFAULT_TOL;

    fn disk_points(zs: &[C64]) -> Vec<Vec<C64>> {
        zs.iter().map(|&z| vec![z]).collect()
    }

    #[test]
    fn szego_examples() {
        assert_eq!(
            szego_disk(c64(0.0, 0.0), c64(0.3, -0.2)).unwrap(),
            c64(1.0, 0.0)
        );
        assert!(
            (szego_disk(c64(0.5, 0.0), c64(0.5, 0.0)).unwrap() - c64(4.0 / 3.0, 0.0)).norm()
                < 1e-15
        );
        assert!(
            (szego_disk(c64(0.0, 0.5), c64(0.0, 0.5)).unwrap() - c64(4.0 / 3.0, 0.0)).norm()
                < 1e-15
        );
        assert!(matches!(
            szego_disk(c64(1.0, 0.0), c64(0.0, 0.0)),
            Err(Error::Domain(_))
        ));

        let z0 = [c64(0.0, 0.0); 2];
        assert_eq!(szego_ball(&z0, &z0).unwrap(), c64(1.0, 0.0));
        let h = [c64(0.5, 0.0), c64(0.5, 0.0)];
        assert!((szego_ball(&h, &h).unwrap() - c64(2.0, 0.0)).norm() < 1e-15);
        let out = [c64(0.8, 0.0), c64(0.8, 0.0)];
        assert!(matches!(szego_ball(&out, &z0), Err(Error::Domain(_))));
    }

    #[test]
    fn debranges_constant_and_identity() {
        let pts = disk_points(&[c64(0.0, 0.0), c64(0.3, 0.1), c64(-0.5, 0.2)]);
        let c = c64(0.6, 0.0);
        let vals = vec![Matrix::from_element(1, 1, c); 3];
        let k = debranges_kernel(Setting::Disk, &pts, &vals).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = (1.0 - c.norm_sqr()) * szego_disk(pts[i][0], pts[j][0]).unwrap();
                assert!((k.blocks[i][j][(0, 0)] - expect).norm() < 1e-14);
            }
        }
        let big = vec![Matrix::from_element(1, 1, c64(2.0, 0.0))];
        let k = debranges_kernel(Setting::Disk, &disk_points(&[c64(0.0, 0.0)]), &big).unwrap();
        assert!((k.blocks[0][0][(0, 0)] - c64(-3.0, 0.0)).norm() < 1e-15);
        let r = positivity_check(&k, DEFAULT_TOL).unwrap();
        assert!(!r.is_psd);

        let vals: Vec<Matrix> = pts
            .iter()
            .map(|p| Matrix::from_element(1, 1, p[0]))
            .collect();
        let k = debranges_kernel(Setting::Disk, &pts, &vals).unwrap();
        for row in &k.blocks {
            for b in row {
                assert!((b[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-14);
            }
        }
        let kol = kolmogorov(&k, DEFAULT_TOL).unwrap();
        assert_eq!(kol.dim(), 1);
        for h in &kol.factors {
            assert!((h[(0, 0)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn debranges_dimension_mismatch() {
        let pts = disk_points(&[c64(0.0, 0.0), c64(0.1, 0.0)]);
        let vals = vec![identity(1), identity(2)];
        assert!(matches!(
            debranges_kernel(Setting::Disk, &pts, &vals),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn szego_gram_two_points() {
        let pts = disk_points(&[c64(0.0, 0.0), c64(0.5, 0.0)]);
        let k = KernelSample::from_fn(Setting::Disk, pts, 1, |z, w| {
            Ok(Matrix::from_element(1, 1, szego_disk(z[0], w[0])?))
        })
        .unwrap();
        let g = k.gram();
        assert!((g[(1, 1)] - c64(4.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!(positivity_check(&k, DEFAULT_TOL).unwrap().is_psd);
        let kol = kolmogorov(&k, DEFAULT_TOL).unwrap();
        assert_eq!(kol.dim(), 2);
        assert!(kol.relative_residual(&k) <= 1e-12);
    }

    #[test]
    fn constant_kernel_factors_to_ones() {
        let pts = disk_points(&[c64(0.1, 0.0), c64(0.0, 0.4), c64(-0.3, -0.3)]);
        let k = KernelSample::from_fn(Setting::Disk, pts, 1, |_, _| Ok(identity(1))).unwrap();
        assert!(positivity_check(&k, DEFAULT_TOL).unwrap().is_psd);
        let kol = kolmogorov(&k, DEFAULT_TOL).unwrap();
        assert_eq!(kol.dim(), 1);
        let phase = kol.factors[0][(0, 0)];
        for h in &kol.factors {
            assert!((h[(0, 0)] - phase).norm() < 1e-12);
            assert!((h[(0, 0)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_sample_rejects_non_hermitian() {
        let pts = disk_points(&[c64(0.0, 0.0), c64(0.1, 0.0)]);
        let blocks = vec![
            vec![identity(1), Matrix::from_element(1, 1, c64(0.5, 0.0))],
            vec![Matrix::from_element(1, 1, c64(0.2, 0.0)), identity(1)],
        ];
        assert!(matches!(
            KernelSample::new(Setting::Disk, pts, 1, blocks),
            Err(Error::Validation(_))
        ));
    }

    fn single_point(k: usize, m: usize, map: impl Fn(&Matrix) -> Matrix) -> CpKernelSample {
        CpKernelSample::from_map(vec!["w".into()], k, m, |_, _, a| map(a)).unwrap()
    }

    #[test]
    fn identity_map_choi() {
        let kernel = single_point(2, 2, |a| a.clone());
        let spec = choi_spectrum(&kernel).unwrap();
        let expect = [0.0, 0.0, 0.0, 2.0];
        for (s, e) in spec.iter().zip(expect) {
            assert!((s - e).abs() < 1e-12, "{spec:?}");
        }
        let r = cp_positivity_check(&kernel, DEFAULT_TOL).unwrap();
        assert!(r.is_psd);
        assert!(r.min_eigenvalue.abs() < 1e-12);

        let dec = cp_kolmogorov(&kernel, DEFAULT_TOL).unwrap();
        assert_eq!(dec.hilbert_dim, 2);
        assert!(dec.reconstruction_residual(&kernel) <= 1e-10);
        assert!(dec.homomorphism_residual() <= 1e-9);
    }

    #[test]
    fn transpose_map_is_rejected() {
        let kernel = single_point(2, 2, |a| a.transpose());
        let r = cp_positivity_check(&kernel, DEFAULT_TOL).unwrap();
        assert!(!r.is_psd);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
        assert!(matches!(
            cp_kolmogorov(&kernel, DEFAULT_TOL),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn trace_map_decomposes() {
        let kernel = single_point(3, 2, |a| identity(2) * a.trace());
        assert!(cp_positivity_check(&kernel, DEFAULT_TOL).unwrap().is_psd);
        let dec = cp_kolmogorov(&kernel, DEFAULT_TOL).unwrap();
        assert!(dec.reconstruction_residual(&kernel) <= 1e-8);
        assert!(dec.homomorphism_residual() <= 1e-9);
    }

    #[test]
    fn scalar_algebra_collapses_to_aronszajn() {
        let pts = disk_points(&[c64(0.0, 0.0), c64(0.5, 0.0), c64(0.1, -0.6)]);
        let k = KernelSample::from_fn(Setting::Disk, pts, 1, |z, w| {
            Ok(Matrix::from_element(1, 1, szego_disk(z[0], w[0])?))
        })
        .unwrap();
        let cp = CpKernelSample::new(
            (0..3).map(|i| i.to_string()).collect(),
            1,
            1,
            k.blocks
                .iter()
                .map(|row| row.iter().map(|b| vec![b.clone()]).collect())
                .collect(),
        )
        .unwrap();
        let a = positivity_check(&k, DEFAULT_TOL).unwrap();
        let b = cp_positivity_check(&cp, DEFAULT_TOL).unwrap();
        assert_eq!(a.is_psd, b.is_psd);
        assert!((a.min_eigenvalue - b.min_eigenvalue).abs() <= 1e-12);

        let kol = kolmogorov(&k, DEFAULT_TOL).unwrap();
        let dec = cp_kolmogorov(&cp, DEFAULT_TOL).unwrap();
        assert_eq!(dec.hilbert_dim, kol.dim());
        for (h1, h2) in kol.factors.iter().zip(&dec.h_maps) {
            assert!(max_abs(&(h1 - h2)) < 1e-12);
        }
    }

    #[test]
    fn module_map_examples() {
        let pi = identity_representation(2);
        let kernel = single_point(2, 2, |a| a.clone());
        let rep = modulemap_reduction_check(&kernel, &pi, 1e-10).unwrap();
        assert!(rep.holds);
        assert!(rep.max_deviation < 1e-15);
        assert_eq!(rep.verdicts_agree(), Some(true));
        assert!(max_abs(&(&kernel.unit_kernel()[0][0] - identity(2))) < 1e-15);

        let kernel = single_point(2, 2, |a| a.transpose());
        let rep = modulemap_reduction_check(&kernel, &pi, 1e-10).unwrap();
        assert!(!rep.holds);
        assert!(rep.max_deviation > 0.5);
        assert_eq!(rep.cp_verdict, None);
    }
}
