//! Time-varying systems on a finite window `[0, L)` of `ℓ²(ℤ)`: subdiagonal
//! expansions of lower-triangular operators, point evaluation at weighted
//! shifts, simulation, aggregate colligations and realization.

use crate::error::{Error, Result};
use crate::matops::{
    c64, coisometry_defect, complete_to_unitary, frobenius, identity, isometry_defect, op_norm,
    psd_factor_with_rank, solve_isometry, zeros, CompletionMode, Matrix, RankDecision, Vector, C64,
};

/// Bound on `‖U(n)U(n)* − I‖_F` and `‖U(n)*U(n) − I‖_F` for conservative systems.
pub const UNITARY_TOL: f64 = 1e-10;
/// Weights must satisfy `|w| ≤ 1 − WEIGHT_MARGIN`.
pub const WEIGHT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriWindow {
    pub t: Matrix,
}

impl LowerTriWindow {
    /// Rejects non-square input and any nonzero strictly upper entry.
    pub fn new(t: Matrix) -> Result<Self> {
        if t.nrows() != t.ncols() {
            return Err(Error::Validation(format!(
                "window must be square, got {}x{}",
                t.nrows(),
                t.ncols()
            )));
        }
        for i in 0..t.nrows() {
            for j in i + 1..t.ncols() {
                if t[(i, j)] != c64(0.0, 0.0) {
                    return Err(Error::Validation(format!(
                        "entry ({i}, {j}) above the diagonal is nonzero"
                    )));
                }
            }
        }
        Ok(Self { t })
    }

    pub fn len(&self) -> usize {
        self.t.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.t.nrows() == 0
    }

    /// `L × L` forward shift (ones on the subdiagonal).
    pub fn shift(l: usize) -> Self {
        Self {
            t: Matrix::from_fn(l, l, |i, j| {
                if i == j + 1 {
                    c64(1.0, 0.0)
                } else {
                    c64(0.0, 0.0)
                }
            }),
        }
    }

    /// Lower-triangular Toeplitz window with first column `col`.
    pub fn toeplitz(col: &[C64]) -> Self {
        let l = col.len();
        Self {
            t: Matrix::from_fn(l, l, |i, j| if i >= j { col[i - j] } else { c64(0.0, 0.0) }),
        }
    }
}

/// `diagonals[n][i] = T[i + n, i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalExpansion {
    pub diagonals: Vec<Vec<C64>>,
}

impl DiagonalExpansion {
    pub fn len(&self) -> usize {
        self.diagonals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonals.is_empty()
    }
}

pub fn diag_expand(w: &LowerTriWindow) -> DiagonalExpansion {
    let l = w.len();
    DiagonalExpansion {
        diagonals: (0..l)
            .map(|n| (0..l - n).map(|i| w.t[(i + n, i)]).collect())
            .collect(),
    }
}

pub fn diag_assemble(e: &DiagonalExpansion) -> Result<LowerTriWindow> {
    let l = e.len();
    let mut t = zeros(l, l);
    for (n, dn) in e.diagonals.iter().enumerate() {
        if dn.len() != l - n {
            return Err(Error::Validation(format!(
                "diagonal {n} has length {}, expected {}",
                dn.len(),
                l - n
            )));
        }
        for (i, v) in dn.iter().enumerate() {
            t[(i + n, i)] = *v;
        }
    }
    Ok(LowerTriWindow { t })
}

/// Weighted shift `η = D_η·U` on the window.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedShiftArg {
    pub weights: Vec<C64>,
}

impl WeightedShiftArg {
    pub fn new(weights: Vec<C64>) -> Result<Self> {
        let top = weights.iter().map(|w| w.norm()).fold(0.0, f64::max);
        if top > 1.0 - WEIGHT_MARGIN {
            return Err(Error::NotStrict { row_norm: top });
        }
        Ok(Self { weights })
    }

    pub fn matrix(&self) -> Matrix {
        let l = self.weights.len();
        let d = Matrix::from_diagonal(&Vector::from_vec(self.weights.clone()));
        d * LowerTriWindow::shift(l).t
    }
}

/// `R^∧(η) = Σ_{n<L} ηⁿ·diag(d_n)` with `d_n` zero-padded at the end.
pub fn tv_point_eval(w: &LowerTriWindow, eta: &WeightedShiftArg) -> Result<Matrix> {
    let l = w.len();
    if eta.weights.len() != l {
        return Err(Error::Validation(format!(
            "{} weights for a window of length {l}",
            eta.weights.len()
        )));
    }
    let e = diag_expand(w);
    let m = eta.matrix();
    let mut power = identity(l);
    let mut out = zeros(l, l);
    for dn in &e.diagonals {
        let mut padded = vec![c64(0.0, 0.0); l];
        padded[..dn.len()].copy_from_slice(dn);
        out += &power * Matrix::from_diagonal(&Vector::from_vec(padded));
        power = &power * &m;
    }
    Ok(out)
}

/// `x(n+1) = A(n)x(n) + B(n)u(n)`, `y(n) = C(n)x(n) + D(n)u(n)` with scalar
/// input and output; `U(n) = [A(n) B(n); C(n) D(n)]` is
/// `(state_dims[n+1] + 1) × (state_dims[n] + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TVSystem {
    pub state_dims: Vec<usize>,
    pub u_seq: Vec<Matrix>,
    pub conservative: bool,
}

impl TVSystem {
    pub fn new(state_dims: Vec<usize>, u_seq: Vec<Matrix>, conservative: bool) -> Result<Self> {
        if state_dims.len() != u_seq.len() + 1 {
            return Err(Error::Validation(format!(
                "{} state dimensions for {} system matrices (need one more)",
                state_dims.len(),
                u_seq.len()
            )));
        }
        for (n, u) in u_seq.iter().enumerate() {
            let (r, c) = (state_dims[n + 1] + 1, state_dims[n] + 1);
            if u.nrows() != r || u.ncols() != c {
                return Err(Error::Validation(format!(
                    "U({n}) is {}x{}, expected {r}x{c}",
                    u.nrows(),
                    u.ncols()
                )));
            }
            if conservative {
                let defect = coisometry_defect(u).max(isometry_defect(u));
                if defect > UNITARY_TOL {
                    return Err(Error::Validation(format!(
                        "U({n}) is not unitary (defect {defect:e})"
                    )));
                }
            }
        }
        Ok(Self {
            state_dims,
            u_seq,
            conservative,
        })
    }

    pub fn len(&self) -> usize {
        self.u_seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_seq.is_empty()
    }

    pub fn a(&self, n: usize) -> Matrix {
        self.u_seq[n]
            .view((0, 0), (self.state_dims[n + 1], self.state_dims[n]))
            .into_owned()
    }

    pub fn b(&self, n: usize) -> Matrix {
        self.u_seq[n]
            .view((0, self.state_dims[n]), (self.state_dims[n + 1], 1))
            .into_owned()
    }

    pub fn c(&self, n: usize) -> Matrix {
        self.u_seq[n]
            .view((self.state_dims[n + 1], 0), (1, self.state_dims[n]))
            .into_owned()
    }

    pub fn d(&self, n: usize) -> C64 {
        self.u_seq[n][(self.state_dims[n + 1], self.state_dims[n])]
    }

    /// Largest unitarity defect over the window.
    pub fn unitarity_defect(&self) -> f64 {
        self.u_seq
            .iter()
            .map(|u| coisometry_defect(u).max(isometry_defect(u)))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `x(0), …, x(L)`.
    pub states: Vec<Vector>,
    pub outputs: Vec<C64>,
}

/// Run the recursion from `x(0) = 0`.
pub fn simulate(sys: &TVSystem, u: &[C64]) -> Result<Trajectory> {
    if u.len() != sys.len() {
        return Err(Error::Validation(format!(
            "input has length {}, window has length {}",
            u.len(),
            sys.len()
        )));
    }
    let mut x = Vector::zeros(sys.state_dims[0]);
    let mut states = vec![x.clone()];
    let mut outputs = Vec::with_capacity(u.len());
    for (n, un) in u.iter().enumerate() {
        let mut xu = Vector::zeros(x.len() + 1);
        xu.rows_mut(0, x.len()).copy_from(&x);
        xu[x.len()] = *un;
        let out = &sys.u_seq[n] * xu;
        let m = sys.state_dims[n + 1];
        x = out.rows(0, m).into_owned();
        outputs.push(out[m]);
        states.push(x.clone());
    }
    Ok(Trajectory { states, outputs })
}

/// Block operators on `⊕_{n<L} X(n)`: `[𝒜]_{i,j} = A(j)δ_{i,j+1}`,
/// `[ℬ]_{i,j} = B(j)δ_{i,j+1}`, `[𝒞]_{i,j} = C(j)δ_{i,j}`, `[𝒟]_{i,j} = D(j)δ_{i,j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
    /// Offset of `X(n)` inside the aggregate state.
    pub offsets: Vec<usize>,
}

pub fn aggregate_colligation(sys: &TVSystem) -> Aggregate {
    let l = sys.len();
    let mut offsets = Vec::with_capacity(l);
    let mut total = 0;
    for n in 0..l {
        offsets.push(total);
        total += sys.state_dims[n];
    }
    let mut a = zeros(total, total);
    let mut b = zeros(total, l);
    let mut c = zeros(l, total);
    let mut d = zeros(l, l);
    for j in 0..l {
        let (nj, oj) = (sys.state_dims[j], offsets[j]);
        if j + 1 < l {
            let (ni, oi) = (sys.state_dims[j + 1], offsets[j + 1]);
            a.view_mut((oi, oj), (ni, nj)).copy_from(&sys.a(j));
            b.view_mut((oi, j), (ni, 1)).copy_from(&sys.b(j));
        }
        c.view_mut((j, oj), (1, nj)).copy_from(&sys.c(j));
        d[(j, j)] = sys.d(j);
    }
    Aggregate {
        a,
        b,
        c,
        d,
        offsets,
    }
}

/// `T_Σ = 𝒟 + 𝒞(I − 𝒜)^{-1}ℬ`, the resolvent being a finite geometric sum
/// because `𝒜` is nilpotent on the window.
pub fn io_map(sys: &TVSystem) -> LowerTriWindow {
    let agg = aggregate_colligation(sys);
    let mut term = agg.b.clone();
    let mut resolvent_b = agg.b.clone();
    for _ in 1..sys.len() {
        term = &agg.a * term;
        resolvent_b += &term;
    }
    let mut t = &agg.d + &agg.c * resolvent_b;
    // Structural zeros above the diagonal.
    for i in 0..t.nrows() {
        for j in i + 1..t.ncols() {
            t[(i, j)] = c64(0.0, 0.0);
        }
    }
    LowerTriWindow { t }
}

#[derive(Debug, Clone)]
pub struct TvRealization {
    pub system: TVSystem,
    /// `‖T − io_map(system)‖_F`.
    pub reconstruction_residual: f64,
    /// Numerical rank of the Hankel block `T[n.., ..n]` at every cut `n = 0..=L`.
    pub hankel_ranks: Vec<usize>,
    /// Rank decisions for `I − T_{<n}*T_{<n}` (conservative) at every cut.
    pub rank_decisions: Vec<RankDecision>,
}

/// Hankel block rank at cut `n` with threshold `tol·σ_max`.
pub fn hankel_rank(w: &LowerTriWindow, n: usize, tol: f64) -> usize {
    let l = w.len();
    if n == 0 || n >= l {
        return 0;
    }
    let h = w.t.view((n, 0), (l - n, n)).into_owned();
    let sv = h.svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol * top && s > 0.0).count()
}

/// Conservative realization of a lower-triangular contraction.
///
/// The state at cut `n` is `x(n) = R_n·u_{<n}` with
/// `R_n*R_n = I − T_{<n}*T_{<n}`, padded to the common dimension
/// `max_n rank(R_n)` so that every `U(n)` can be completed to a unitary.
pub fn tv_realize(w: &LowerTriWindow, tol: f64) -> Result<TvRealization> {
    let l = w.len();
    let norm = op_norm(&w.t);
    if norm > 1.0 + 1e-12 {
        return Err(Error::NotContraction { norm });
    }
    let mut factors = Vec::with_capacity(l + 1);
    let mut rank_decisions = Vec::with_capacity(l + 1);
    for n in 0..=l {
        let tn = w.t.view((0, 0), (n, n)).into_owned();
        let defect = identity(n) - tn.adjoint() * &tn;
        let defect = (&defect + defect.adjoint()).scale(0.5);
        let (h, rank) = psd_factor_with_rank(&defect, tol)?;
        // h·h* = defect, so R_n = h*.
        factors.push(h.adjoint());
        rank_decisions.push(rank);
    }
    let dim = rank_decisions.iter().map(|r| r.rank).max().unwrap_or(0);
    let padded: Vec<Matrix> = factors
        .iter()
        .map(|r| {
            let mut p = zeros(dim, r.ncols());
            p.view_mut((0, 0), (r.nrows(), r.ncols())).copy_from(r);
            p
        })
        .collect();
    let mut u_seq = Vec::with_capacity(l);
    for n in 0..l {
        let mut inputs = zeros(dim + 1, n + 1);
        inputs.view_mut((0, 0), (dim, n)).copy_from(&padded[n]);
        inputs[(dim, n)] = c64(1.0, 0.0);
        let mut outputs = zeros(dim + 1, n + 1);
        outputs
            .view_mut((0, 0), (dim, n + 1))
            .copy_from(&padded[n + 1]);
        for j in 0..=n {
            outputs[(dim, j)] = w.t[(n, j)];
        }
        let (partial, _) = solve_isometry(&inputs, &outputs, tol.max(1e-10))?;
        u_seq.push(complete_to_unitary(&partial, CompletionMode::Unitary)?);
    }
    let system = TVSystem::new(vec![dim; l + 1], u_seq, true)?;
    let reconstruction_residual = frobenius(&(&w.t - io_map(&system).t));
    Ok(TvRealization {
        system,
        reconstruction_residual,
        hankel_ranks: (0..=l).map(|n| hankel_rank(w, n, tol)).collect(),
        rank_decisions,
    })
}

/// Minimal (not conservative) realization with state dimension equal to the
/// Hankel rank at each cut, from `T[n.., ..n] = O_n·R_n` by SVD.
pub fn tv_realize_minimal(w: &LowerTriWindow, tol: f64) -> Result<TvRealization> {
    let l = w.len();
    // reach[n]: r_n × n with orthogonal rows, reach_pinv[n]: its pseudo-inverse.
    let mut reach = Vec::with_capacity(l + 1);
    let mut reach_pinv = Vec::with_capacity(l + 1);
    let mut ranks = Vec::with_capacity(l + 1);
    for n in 0..=l {
        let r = hankel_rank(w, n, tol);
        if r == 0 {
            reach.push(zeros(0, n));
            reach_pinv.push(zeros(n, 0));
        } else {
            let h = w.t.view((n, 0), (l - n, n)).into_owned();
            let svd = h.svd(false, true);
            let v_t = svd.v_t.expect("requested V*");
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            let mut rn = zeros(r, n);
            let mut pinv = zeros(n, r);
            for (row, &k) in order.iter().take(r).enumerate() {
                let s = svd.singular_values[k].sqrt();
                for c in 0..n {
                    rn[(row, c)] = v_t[(k, c)] * s;
                    pinv[(c, row)] = v_t[(k, c)].conj() / s;
                }
            }
            reach.push(rn);
            reach_pinv.push(pinv);
        }
        ranks.push(r);
    }
    let mut u_seq = Vec::with_capacity(l);
    for n in 0..l {
        let (rn, rn1) = (ranks[n], ranks[n + 1]);
        let mut u = zeros(rn1 + 1, rn + 1);
        let next = &reach[n + 1];
        let a = next.columns(0, n).into_owned() * &reach_pinv[n];
        u.view_mut((0, 0), (rn1, rn)).copy_from(&a);
        u.view_mut((0, rn), (rn1, 1)).copy_from(&next.column(n));
        let row = Matrix::from_fn(1, n, |_, j| w.t[(n, j)]);
        u.view_mut((rn1, 0), (1, rn))
            .copy_from(&(row * &reach_pinv[n]));
        u[(rn1, rn)] = w.t[(n, n)];
        u_seq.push(u);
    }
    let system = TVSystem::new(ranks.clone(), u_seq, false)?;
    let reconstruction_residual = frobenius(&(&w.t - io_map(&system).t));
    Ok(TvRealization {
        system,
        reconstruction_residual,
        hankel_ranks: ranks,
        rank_decisions: Vec::new(),
    })
}
