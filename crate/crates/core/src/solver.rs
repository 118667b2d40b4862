//! Time stepping with a Picard loop and a monolithic saddle-point solve.
//!
//! Unknowns of one linear solve are ordered `[L, u, ŵ, p, μ]` with
//! `ŵ = √ε û`. The scaling keeps the system nonsingular at `ε = 0` and keeps
//! it symmetric:
//!
//! ```text
//! | -M_W     √ε B*   T*    .     .  | | L |   |  0  |
//! | √ε B     A       .     b*    .  | | u |   |  F  |
//! | T        .       .     .     .  | | ŵ | = |  0  |
//! | .        b       .     .    -m  | | p |   |  0  |
//! | .        .       .    -mᵀ    .  | | μ |   |  0  |
//! ```
//!
//! with `A = (σ/Δt + α) M_U + β M_{|u_old|}`.
//!
//! Gradient-space functions are supported in single dual regions, so `M_W` is
//! block diagonal and `L = M_W⁻¹(√ε B* u + T* ŵ)` is eliminated exactly. The
//! remaining symmetric system in `(u, ŵ, p, μ)` has a positive definite
//! `(u, ŵ)` block. With small diagonal shifts `-δ` on `p` and `+δ` on `μ`
//! it is quasi-definite and factors by sparse `LDLᵀ`; the exact system is
//! then solved by iterative refinement against that factorization, and the
//! residual of the full five-field system is checked before returning.

use std::io::Write;

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Pair, SparseColMat, SymbolicSparseColMat};
use faer::{Conj, Mat};

use crate::error::{Error, Result};
use crate::forms::{
    assemble_b, assemble_b_star, assemble_bh, assemble_bh_star, assemble_load, assemble_mass,
    assemble_picard_with_shift, assemble_th, assemble_th_star, pressure_mean_vector,
    NonlinearCoefficients,
};
use crate::mesh::StaggeredMesh;
use crate::sparse::{QuasiDefiniteLdlt, SparseOperator, TripletBuilder};
use crate::spaces::{interpolate_jh, FieldCoefficients, SpaceSet};
use crate::verify::ManufacturedProblem;

/// Target relative residual of every linear solve.
pub const LINEAR_TOLERANCE: f64 = 1e-10;
const MAX_REFINEMENT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TimeScheme {
    BackwardEuler,
    /// Two-step backward differencing; the first step is backward Euler.
    SecondOrder,
}

impl TimeScheme {
    pub fn name(self) -> &'static str {
        match self {
            TimeScheme::BackwardEuler => "backward-euler",
            TimeScheme::SecondOrder => "second-order",
        }
    }
}

impl std::str::FromStr for TimeScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "backward-euler" | "be" => Ok(TimeScheme::BackwardEuler),
            "second-order" | "bdf2" => Ok(TimeScheme::SecondOrder),
            _ => Err(Error::InvalidArgument(format!("unknown time scheme `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSchemeConfig {
    pub scheme: TimeScheme,
    pub final_time: f64,
    pub steps: usize,
}

impl TimeSchemeConfig {
    pub fn new(scheme: TimeScheme, final_time: f64, steps: usize) -> Result<Self> {
        let c = Self { scheme, final_time, steps };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive, got {}",
                self.final_time
            )));
        }
        let min = match self.scheme {
            TimeScheme::BackwardEuler => 1,
            TimeScheme::SecondOrder => 2,
        };
        if self.steps < min {
            return Err(Error::InvalidArgument(format!(
                "{} needs at least {min} time steps, got {}",
                self.scheme.name(),
                self.steps
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.steps as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialGuess {
    PreviousStep,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_guess: InitialGuess,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 50,
            initial_guess: InitialGuess::PreviousStep,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidArgument(format!(
                "Picard tolerance must be positive and max_iterations at least 1, got {} and {}",
                self.tolerance, self.max_iterations
            )));
        }
        Ok(())
    }
}

/// Velocity history carried between steps.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub u_prev: FieldCoefficients,
    pub u_prev2: Option<FieldCoefficients>,
    pub t: f64,
    pub step: usize,
}

/// The four discrete fields at one time level.
#[derive(Clone, Debug)]
pub struct StepFields {
    pub velocity: FieldCoefficients,
    pub gradient: FieldCoefficients,
    pub pressure: FieldCoefficients,
    pub trace: FieldCoefficients,
    pub multiplier: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub iterations: usize,
    /// Relative increment after each iteration.
    pub increments: Vec<f64>,
    pub increment: f64,
    /// Largest relative residual over the linear solves of this step.
    pub linear_residual: f64,
    pub energy_l: f64,
    pub energy_u: f64,
    /// `max_q |b_h(u_h, q)|`, relative to the sum of absolute contributions.
    pub divergence_residual: f64,
    /// `max_v̂ |T_h(L_h, v̂)|`, relative.
    pub trace_residual: f64,
    /// Residual of the gradient equation, relative.
    pub gradient_residual: f64,
}

impl StepReport {
    pub const CSV_HEADER: &'static str =
        "step,time,iterations,increment,linear_residual,energy_L,energy_u,div_residual,trace_residual";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.10e},{},{:.3e},{:.3e},{:.10e},{:.10e},{:.3e},{:.3e}",
            self.step,
            self.time,
            self.iterations,
            self.increment,
            self.linear_residual,
            self.energy_l,
            self.energy_u,
            self.divergence_residual,
            self.trace_residual
        )
    }
}

/// Mesh, spaces and every coefficient-independent operator.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: StaggeredMesh,
    pub spaces: SpaceSet,
    pub mass_u: SparseOperator,
    pub mass_w: SparseOperator,
    pub bh_star: SparseOperator,
    pub bh: SparseOperator,
    pub b: SparseOperator,
    pub b_star: SparseOperator,
    pub th: SparseOperator,
    pub th_star: SparseOperator,
    pub mean: Vec<f64>,
    /// `M_W⁻¹`, block diagonal over dual regions.
    pub mass_w_inv: SparseOperator,
    /// `B M_W⁻¹ B*`, `B M_W⁻¹ T*` and `T M_W⁻¹ T*`.
    pub schur_uu: SparseOperator,
    pub schur_ut: SparseOperator,
    pub schur_tt: SparseOperator,
}

/// Offsets of the unknown blocks in the monolithic vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub l: usize,
    pub u: usize,
    pub w: usize,
    pub p: usize,
    pub mu: usize,
    pub size: usize,
}

impl Discretization {
    pub fn new(mesh: StaggeredMesh, k: usize) -> Result<Self> {
        let spaces = SpaceSet::new(&mesh, k)?;
        let (u, w, p, t) = (&spaces.velocity, &spaces.gradient, &spaces.pressure, &spaces.trace);
        let mass_w = assemble_mass(&mesh, w)?;
        let mass_w_inv = mass_w.block_diagonal_inverse()?;
        let bh_star = assemble_bh_star(&mesh, u, w)?;
        let bh = assemble_bh(&mesh, w, u)?;
        let th = assemble_th(&mesh, w, t)?;
        let th_star = assemble_th_star(&mesh, t, w)?;
        let g_u = mass_w_inv.matmul(&bh_star)?;
        let g_t = mass_w_inv.matmul(&th_star)?;
        Ok(Self {
            mass_u: assemble_mass(&mesh, u)?,
            schur_uu: bh.matmul(&g_u)?,
            schur_ut: bh.matmul(&g_t)?,
            schur_tt: th.matmul(&g_t)?,
            mass_w,
            mass_w_inv,
            bh_star,
            bh,
            b: assemble_b(&mesh, u, p)?,
            b_star: assemble_b_star(&mesh, p, u)?,
            th,
            th_star,
            mean: pressure_mean_vector(&mesh, p)?,
            mesh,
            spaces,
        })
    }

    pub fn layout(&self) -> BlockLayout {
        let nw = self.spaces.gradient.dim;
        let nu = self.spaces.velocity.dim;
        let nt = self.spaces.trace.dim;
        let np = self.spaces.pressure.dim;
        BlockLayout {
            l: 0,
            u: nw,
            w: nw + nu,
            p: nw + nu + nt,
            mu: nw + nu + nt + np,
            size: nw + nu + nt + np + 1,
        }
    }

    /// Constant blocks for a given `ε`; the velocity block is added per iterate.
    fn static_blocks(&self, epsilon: f64) -> TripletBuilder {
        let lay = self.layout();
        let r = epsilon.sqrt();
        let mut b = TripletBuilder::new(lay.size, lay.size);
        b.push_block(lay.l, lay.l, &self.mass_w, -1.0);
        b.push_block(lay.l, lay.u, &self.bh_star, r);
        b.push_block(lay.l, lay.w, &self.th_star, 1.0);
        b.push_block(lay.u, lay.l, &self.bh, r);
        b.push_block(lay.u, lay.p, &self.b_star, 1.0);
        b.push_block(lay.w, lay.l, &self.th, 1.0);
        b.push_block(lay.p, lay.u, &self.b, 1.0);
        for (i, &m) in self.mean.iter().enumerate() {
            b.push(lay.p + i, lay.mu, -m);
            b.push(lay.mu, lay.p + i, -m);
        }
        b
    }

    /// `(σ/Δt)(u,v) + (αu,v) + (β|u_old|u,v)` as one operator.
    pub fn velocity_block(
        &self,
        coeffs: &NonlinearCoefficients,
        sigma_over_dt: f64,
        u_frozen: &[f64],
    ) -> Result<SparseOperator> {
        assemble_picard_with_shift(&self.mesh, &self.spaces.velocity, u_frozen, coeffs, sigma_over_dt)
    }

    /// `L = M_W⁻¹(√ε B* u + T* ŵ)`.
    pub fn recover_gradient(&self, u: &[f64], w: &[f64], epsilon: f64) -> Vec<f64> {
        let r = epsilon.sqrt();
        let bu = self.bh_star.matvec(u);
        let tw = self.th_star.matvec(w);
        let g: Vec<f64> = bu.iter().zip(&tw).map(|(a, b)| r * a + b).collect();
        self.mass_w_inv.matvec(&g)
    }

    /// Splits a monolithic solution vector into fields.
    pub fn split(&self, x: &[f64], epsilon: f64) -> Result<StepFields> {
        check_len(x, self.layout().size, "monolithic solution")?;
        let lay = self.layout();
        let s = &self.spaces;
        let w = &x[lay.w..lay.p];
        let trace = if epsilon > 0.0 {
            let r = epsilon.sqrt();
            w.iter().map(|v| v / r).collect()
        } else {
            vec![0.0; w.len()]
        };
        Ok(StepFields {
            gradient: FieldCoefficients::new(&s.gradient, x[lay.l..lay.u].to_vec())?,
            velocity: FieldCoefficients::new(&s.velocity, x[lay.u..lay.w].to_vec())?,
            trace: FieldCoefficients::new(&s.trace, trace)?,
            pressure: FieldCoefficients::new(&s.pressure, x[lay.p..lay.mu].to_vec())?,
            multiplier: x[lay.mu],
        })
    }

    /// Relative residuals of the three homogeneous equations.
    pub fn constraint_residuals(&self, fields: &StepFields, epsilon: f64) -> (f64, f64, f64) {
        let u = &fields.velocity.values;
        let l = &fields.gradient.values;
        let div = relative_max(&self.b, u);
        let tr = relative_max(&self.th, l);
        // -(L,G) + √ε B*(u,G) + √ε T*(û,G)
        let r = epsilon.sqrt();
        let ml = self.mass_w.matvec(l);
        let bu = self.bh_star.matvec(u);
        let tu = self.th_star.matvec(&fields.trace.values);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..ml.len() {
            let terms = [-ml[i], r * bu[i], r * tu[i]];
            worst = worst.max(terms.iter().sum::<f64>().abs());
            scale = scale.max(terms.iter().map(|t| t.abs()).sum());
        }
        let grad = if scale > 0.0 { worst / scale } else { worst };
        (div, tr, grad)
    }
}

/// `max_i |(A x)_i| / max_i Σ_j |A_ij x_j|`; an absolute value when `x = 0`.
fn relative_max(a: &SparseOperator, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for r in 0..a.nrows {
        let mut s = 0.0;
        let mut abs = 0.0;
        for (c, v) in a.row(r) {
            s += v * x[c];
            abs += (v * x[c]).abs();
        }
        worst = worst.max(s.abs());
        scale = scale.max(abs);
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// One assembled linear system.
#[derive(Clone, Debug)]
pub struct StepSystem {
    pub matrix: SparseOperator,
    pub rhs: Vec<f64>,
    pub layout: BlockLayout,
}

/// Right-hand side history for the velocity equation.
#[derive(Clone, Debug)]
pub enum History<'a> {
    BackwardEuler { u_prev: &'a [f64] },
    SecondOrder { u_prev: &'a [f64], u_prev2: &'a [f64] },
}

impl History<'_> {
    fn sigma(&self) -> f64 {
        match self {
            History::BackwardEuler { .. } => 1.0,
            History::SecondOrder { .. } => 1.5,
        }
    }

    /// The combination `h` with history term `M h / Δt`.
    fn combination(&self) -> Vec<f64> {
        match self {
            History::BackwardEuler { u_prev } => u_prev.to_vec(),
            History::SecondOrder { u_prev, u_prev2 } => u_prev
                .iter()
                .zip(u_prev2.iter())
                .map(|(a, b)| 0.5 * (4.0 * a - b))
                .collect(),
        }
    }
}

fn check_len(v: &[f64], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
            context: what.into(),
        });
    }
    Ok(())
}

/// Assembles the linear system of one Picard iterate. `load` is `(f^n, v_i)`.
pub fn build_step_system(
    disc: &Discretization,
    coeffs: &NonlinearCoefficients,
    dt: f64,
    u_frozen: &[f64],
    history: &History<'_>,
    load: &[f64],
) -> Result<StepSystem> {
    let nu = disc.spaces.velocity.dim;
    check_len(u_frozen, nu, "frozen velocity")?;
    check_len(load, nu, "load vector")?;
    let hist = history.combination();
    check_len(&hist, nu, "velocity history")?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let lay = disc.layout();
    let mut b = disc.static_blocks(coeffs.epsilon);
    let a = disc.velocity_block(coeffs, history.sigma() / dt, u_frozen)?;
    b.push_block(lay.u, lay.u, &a, 1.0);
    let mh = disc.mass_u.matvec(&hist);
    let mut rhs = vec![0.0; lay.size];
    for i in 0..nu {
        rhs[lay.u + i] = load[i] + mh[i] / dt;
    }
    Ok(StepSystem {
        matrix: b.build(),
        rhs,
        layout: lay,
    })
}

/// Sparse LU that keeps the symbolic analysis while the pattern is unchanged.
#[derive(Default)]
pub struct LinearSolver {
    cached: Option<Cached>,
    /// Number of numeric factorizations performed.
    pub factorizations: usize,
}

struct Cached {
    pattern: Vec<(usize, usize)>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: faer::sparse::Argsort<usize>,
    lu: SymbolicLu<usize>,
}

fn lu_error(e: impl std::fmt::Debug) -> Error {
    Error::LinearSolve {
        residual: f64::INFINITY,
        message: format!("factorization failed: {e:?}"),
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn matrix(&mut self, a: &SparseOperator) -> Result<SparseColMat<usize, f64>> {
        let pattern: Vec<(usize, usize)> = a.iter().map(|(r, c, _)| (r, c)).collect();
        let values: Vec<f64> = a.iter().map(|(_, _, v)| v).collect();
        let reuse = matches!(&self.cached, Some(c) if c.pattern == pattern);
        if !reuse {
            let pairs: Vec<Pair<usize, usize>> =
                pattern.iter().map(|&(row, col)| Pair { row, col }).collect();
            let (symbolic, argsort) =
                SymbolicSparseColMat::try_new_from_indices(a.nrows, a.ncols, &pairs).map_err(lu_error)?;
            let lu = SymbolicLu::try_new(symbolic.as_ref()).map_err(lu_error)?;
            self.cached = Some(Cached { pattern, symbolic, argsort, lu });
        }
        let c = self.cached.as_ref().expect("cached pattern");
        SparseColMat::new_from_argsort(c.symbolic.clone(), &c.argsort, &values).map_err(lu_error)
    }

    /// Solves `A x = b` to relative residual [`LINEAR_TOLERANCE`] using LU
    /// followed by iterative refinement. Returns `x` and the residual.
    pub fn solve(&mut self, a: &SparseOperator, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch {
                expected: a.nrows,
                got: a.ncols,
                context: "square system".into(),
            });
        }
        check_len(rhs, a.nrows, "right-hand side")?;
        let n = a.nrows;
        let bnorm = norm2(rhs);
        if bnorm == 0.0 {
            return Ok((vec![0.0; n], 0.0));
        }
        let mat = self.matrix(a)?;
        let symbolic = self.cached.as_ref().expect("cached pattern").lu.clone();
        let lu = Lu::try_new_with_symbolic(symbolic, mat.as_ref()).map_err(lu_error)?;
        self.factorizations += 1;
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut res = 1.0;
        for _ in 0..MAX_REFINEMENT {
            let mut d = Mat::from_fn(n, 1, |i, _| r[i]);
            lu.solve_in_place_with_conj(Conj::No, d.as_mut());
            for i in 0..n {
                x[i] += d[(i, 0)];
            }
            let ax = a.matvec(&x);
            for i in 0..n {
                r[i] = rhs[i] - ax[i];
            }
            res = norm2(&r) / bnorm;
            if !res.is_finite() {
                break;
            }
            if res <= LINEAR_TOLERANCE {
                return Ok((x, res));
            }
        }
        Err(Error::LinearSolve {
            residual: res,
            message: format!("relative residual {res:.3e} above {LINEAR_TOLERANCE:.0e} after refinement"),
        })
    }
}

/// Solver for the condensed system of one Picard iterate.
#[derive(Default)]
pub struct SaddleSolver {
    ldlt: QuasiDefiniteLdlt,
    positive: Vec<bool>,
}

struct Reduced {
    matrix: SparseOperator,
    nu: usize,
    nt: usize,
    np: usize,
    delta: f64,
}

impl Reduced {
    /// The unregularized operator applied to `x`.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.matrix.matvec(x);
        let p0 = self.nu + self.nt;
        for i in p0..p0 + self.np {
            y[i] += self.delta * x[i];
        }
        let mu = p0 + self.np;
        y[mu] -= self.delta * x[mu];
        y
    }
}

impl SaddleSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factorizations(&self) -> usize {
        self.ldlt.factorizations
    }

    fn assemble(disc: &Discretization, epsilon: f64, a: &SparseOperator) -> Reduced {
        let (nu, nt, np) = (
            disc.spaces.velocity.dim,
            disc.spaces.trace.dim,
            disc.spaces.pressure.dim,
        );
        let (u0, t0, p0, mu) = (0, nu, nu + nt, nu + nt + np);
        let n = mu + 1;
        let r = epsilon.sqrt();
        let mut b = TripletBuilder::new(n, n);
        b.push_block(u0, u0, a, 1.0);
        b.push_block(u0, u0, &disc.schur_uu, epsilon);
        b.push_block(u0, t0, &disc.schur_ut, r);
        b.push_block_transposed(t0, u0, &disc.schur_ut, r);
        b.push_block(t0, t0, &disc.schur_tt, 1.0);
        b.push_block(u0, p0, &disc.b_star, 1.0);
        b.push_block(p0, u0, &disc.b, 1.0);
        // pressure Schur complement scale, for the regularization size
        let mut diag = vec![0.0; nu];
        for (i, d) in diag.iter_mut().enumerate() {
            *d = a.get(i, i) + epsilon * disc.schur_uu.get(i, i);
        }
        let mut s: f64 = 0.0;
        for i in 0..np {
            let v: f64 = disc.b.row(i).map(|(c, v)| v * v / diag[c].max(f64::MIN_POSITIVE)).sum();
            s = s.max(v);
        }
        let delta = 1e-8 * s.max(f64::MIN_POSITIVE);
        for i in 0..np {
            b.push(p0 + i, p0 + i, -delta);
            b.push(p0 + i, mu, -disc.mean[i]);
            b.push(mu, p0 + i, -disc.mean[i]);
        }
        b.push(mu, mu, delta);
        Reduced {
            matrix: b.build(),
            nu,
            nt,
            np,
            delta,
        }
    }

    /// Solves one iterate: `a` is the velocity block, `rhs_u` the velocity
    /// right-hand side. Returns the fields and the relative residual of the
    /// full monolithic system.
    pub fn solve(
        &mut self,
        disc: &Discretization,
        epsilon: f64,
        a: &SparseOperator,
        rhs_u: &[f64],
    ) -> Result<(StepFields, f64)> {
        let nu = disc.spaces.velocity.dim;
        check_len(rhs_u, nu, "velocity right-hand side")?;
        let red = Self::assemble(disc, epsilon, a);
        let n = red.matrix.nrows;
        let mut rhs = vec![0.0; n];
        rhs[..nu].copy_from_slice(rhs_u);
        let bnorm = norm2(&rhs);
        let lay = disc.layout();
        let mut x = vec![0.0; n];
        let mut res = 0.0;
        if bnorm > 0.0 {
            if self.positive.len() != n {
                self.positive = (0..n).map(|i| i < red.nu + red.nt || i == n - 1).collect();
            }
            self.ldlt.factor(&red.matrix, &self.positive)?;
            let mut r = rhs.clone();
            res = 1.0;
            for _ in 0..MAX_REFINEMENT * 4 {
                self.ldlt.solve_in_place(&mut r)?;
                for i in 0..n {
                    x[i] += r[i];
                }
                let ax = red.apply(&x);
                for i in 0..n {
                    r[i] = rhs[i] - ax[i];
                }
                let new = norm2(&r) / bnorm;
                if !new.is_finite() {
                    res = new;
                    break;
                }
                let stalled = new > 0.5 * res;
                res = new;
                if res <= 1e-3 * LINEAR_TOLERANCE || (stalled && res <= LINEAR_TOLERANCE) {
                    break;
                }
            }
        }
        let u = &x[..nu];
        let w = &x[nu..nu + red.nt];
        let l = disc.recover_gradient(u, w, epsilon);
        let mut full = vec![0.0; lay.size];
        full[lay.l..lay.u].copy_from_slice(&l);
        full[lay.u..lay.w].copy_from_slice(u);
        full[lay.w..lay.p].copy_from_slice(w);
        full[lay.p..lay.size].copy_from_slice(&x[nu + red.nt..]);
        let fields = disc.split(&full, epsilon)?;
        let full_res = if bnorm > 0.0 {
            disc.monolithic_residual(&full, epsilon, a, rhs_u) / bnorm
        } else {
            0.0
        };
        if !(full_res <= LINEAR_TOLERANCE) {
            return Err(Error::LinearSolve {
                residual: full_res,
                message: format!(
                    "relative residual {full_res:.3e} above {LINEAR_TOLERANCE:.0e} (condensed residual {res:.3e})"
                ),
            });
        }
        Ok((fields, full_res))
    }
}

impl Discretization {
    /// `‖b - K x‖₂` of the five-field system, computed block by block.
    pub fn monolithic_residual(&self, x: &[f64], epsilon: f64, a: &SparseOperator, rhs_u: &[f64]) -> f64 {
        let lay = self.layout();
        let (l, u, w, p, mu) = (
            &x[lay.l..lay.u],
            &x[lay.u..lay.w],
            &x[lay.w..lay.p],
            &x[lay.p..lay.mu],
            x[lay.mu],
        );
        let r = epsilon.sqrt();
        let mut sq = 0.0;
        let (ml, bu, tw) = (self.mass_w.matvec(l), self.bh_star.matvec(u), self.th_star.matvec(w));
        for i in 0..ml.len() {
            sq += (-ml[i] + r * bu[i] + tw[i]).powi(2);
        }
        let (bl, au, bp) = (self.bh.matvec(l), a.matvec(u), self.b_star.matvec(p));
        for i in 0..au.len() {
            sq += (rhs_u[i] - r * bl[i] - au[i] - bp[i]).powi(2);
        }
        sq += self.th.matvec(l).iter().map(|v| v * v).sum::<f64>();
        let bu = self.b.matvec(u);
        for i in 0..bu.len() {
            sq += (bu[i] - self.mean[i] * mu).powi(2);
        }
        sq += self.mean.iter().zip(p).map(|(m, q)| m * q).sum::<f64>().powi(2);
        sq.sqrt()
    }
}

/// Convenience wrapper for a one-off solve.
pub fn solve_linear(a: &SparseOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    LinearSolver::new().solve(a, rhs).map(|(x, _)| x)
}

/// Solves one time step by Picard iteration, freezing `|u|` at the previous
/// iterate.
#[allow(clippy::too_many_arguments)]
pub fn picard_step(
    disc: &Discretization,
    solver: &mut SaddleSolver,
    coeffs: &NonlinearCoefficients,
    dt: f64,
    history: &History<'_>,
    load: &[f64],
    guess: &[f64],
    config: &PicardConfig,
) -> Result<(StepFields, StepReport)> {
    config.validate()?;
    let nu = disc.spaces.velocity.dim;
    check_len(guess, nu, "initial guess")?;
    check_len(load, nu, "load vector")?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let hist = history.combination();
    check_len(&hist, nu, "velocity history")?;
    let mh = disc.mass_u.matvec(&hist);
    let rhs_u: Vec<f64> = load.iter().zip(&mh).map(|(f, m)| f + m / dt).collect();
    let mut frozen = guess.to_vec();
    let mut report = StepReport::default();
    let mut last: Option<StepFields> = None;
    for m in 1..=config.max_iterations {
        let a = disc.velocity_block(coeffs, history.sigma() / dt, &frozen)?;
        let (fields, res) = solver.solve(disc, coeffs.epsilon, &a, &rhs_u)?;
        report.linear_residual = report.linear_residual.max(res);
        let u = &fields.velocity.values;
        let diff: Vec<f64> = u.iter().zip(&frozen).map(|(a, b)| a - b).collect();
        let dn = disc.mass_u.bilinear(&diff, &diff).max(0.0).sqrt();
        let un = disc.mass_u.bilinear(u, u).max(0.0).sqrt();
        let inc = if un > 0.0 { dn / un } else { dn };
        report.iterations = m;
        report.increments.push(inc);
        report.increment = inc;
        let done = coeffs.beta == 0.0 || inc <= config.tolerance;
        frozen.clone_from(u);
        last = Some(fields);
        if done {
            break;
        }
    }
    let fields = last.expect("at least one iteration");
    if coeffs.beta != 0.0 && report.increment > config.tolerance {
        return Err(Error::PicardNonConvergence {
            iterations: report.iterations,
            increment: report.increment,
        });
    }
    let (div, tr, grad) = disc.constraint_residuals(&fields, coeffs.epsilon);
    report.divergence_residual = div;
    report.trace_residual = tr;
    report.gradient_residual = grad;
    let (l, u) = (&fields.gradient.values, &fields.velocity.values);
    report.energy_l = disc.mass_w.bilinear(l, l);
    report.energy_u = disc.mass_u.bilinear(u, u);
    Ok((fields, report))
}

/// Result of a full run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub reports: Vec<StepReport>,
    pub fields: StepFields,
    pub initial_velocity: FieldCoefficients,
}

/// Initial velocity: the interpolant of the problem's velocity at `t = 0`.
pub fn initial_state(disc: &Discretization, problem: &ManufacturedProblem) -> Result<SolverState> {
    let u0 = interpolate_jh(&disc.spaces.velocity, &disc.mesh, |x| problem.velocity(x, 0.0))?;
    Ok(SolverState {
        u_prev: u0.with_time(0.0),
        u_prev2: None,
        t: 0.0,
        step: 0,
    })
}

/// Advances `state` by one step of the configured scheme.
pub fn advance(
    disc: &Discretization,
    solver: &mut SaddleSolver,
    problem: &ManufacturedProblem,
    state: &mut SolverState,
    time: &TimeSchemeConfig,
    picard: &PicardConfig,
) -> Result<(StepFields, StepReport)> {
    let dt = time.dt();
    let n = state.step + 1;
    let t = n as f64 * dt;
    let coeffs = &problem.coeffs;
    let load = assemble_load(&disc.mesh, &disc.spaces.velocity, |x, t| problem.forcing(x, t), t)?;
    let history = match (&time.scheme, &state.u_prev2) {
        (TimeScheme::SecondOrder, Some(u2)) => History::SecondOrder {
            u_prev: &state.u_prev.values,
            u_prev2: &u2.values,
        },
        _ => History::BackwardEuler { u_prev: &state.u_prev.values },
    };
    let guess = match picard.initial_guess {
        InitialGuess::PreviousStep => state.u_prev.values.clone(),
        InitialGuess::Zero => vec![0.0; disc.spaces.velocity.dim],
    };
    let (mut fields, mut report) = picard_step(disc, solver, coeffs, dt, &history, &load, &guess, picard)
        .map_err(|e| Error::Step { step: n, source: Box::new(e) })?;
    report.step = n;
    report.time = t;
    fields.velocity.time = Some(t);
    fields.gradient.time = Some(t);
    fields.pressure.time = Some(t);
    fields.trace.time = Some(t);
    let prev = std::mem::replace(&mut state.u_prev, fields.velocity.clone());
    state.u_prev2 = Some(prev);
    state.t = t;
    state.step = n;
    Ok((fields, report))
}

/// Runs all steps, calling `observe` after each one and writing a CSV log
/// line per step to `log` when given.
pub fn run_transient_with(
    disc: &Discretization,
    problem: &ManufacturedProblem,
    time: &TimeSchemeConfig,
    picard: &PicardConfig,
    mut log: Option<&mut dyn Write>,
    mut observe: impl FnMut(&StepReport, &StepFields),
) -> Result<Trajectory> {
    time.validate()?;
    picard.validate()?;
    let mut state = initial_state(disc, problem)?;
    let initial_velocity = state.u_prev.clone();
    let mut solver = SaddleSolver::new();
    let mut reports = Vec::with_capacity(time.steps);
    if let Some(w) = log.as_deref_mut() {
        writeln!(w, "{}", StepReport::CSV_HEADER)?;
    }
    let mut last = None;
    for _ in 0..time.steps {
        let (fields, report) = advance(disc, &mut solver, problem, &mut state, time, picard)?;
        if let Some(w) = log.as_deref_mut() {
            writeln!(w, "{}", report.csv_line())?;
        }
        observe(&report, &fields);
        reports.push(report);
        last = Some(fields);
    }
    Ok(Trajectory {
        reports,
        fields: last.expect("at least one step"),
        initial_velocity,
    })
}

pub fn run_transient(
    disc: &Discretization,
    problem: &ManufacturedProblem,
    time: &TimeSchemeConfig,
    picard: &PicardConfig,
) -> Result<Trajectory> {
    run_transient_with(disc, problem, time, picard, None, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rectangle_mesh, build_staggered, InteriorPointRule, Rectangle};
    use crate::verify::Forcing;

    fn disc(n: usize) -> Discretization {
        let primal = build_rectangle_mesh(n, n, Rectangle::unit_square()).unwrap();
        Discretization::new(build_staggered(primal, &InteriorPointRule::Centroid).unwrap(), 1).unwrap()
    }

    fn coeffs(eps: f64, beta: f64) -> NonlinearCoefficients {
        NonlinearCoefficients::new(1.0, beta, eps).unwrap()
    }

    #[test]
    fn identity_system_returns_rhs() {
        let a = SparseOperator::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0];
        assert_eq!(solve_linear(&a, &b).unwrap(), b);
    }

    #[test]
    fn random_spd_system() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let n = 40;
        let mut tb = TripletBuilder::new(n, n);
        for i in 0..n {
            tb.push(i, i, 4.0 + rng.gen::<f64>());
            if i + 1 < n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                tb.push(i, i + 1, v);
                tb.push(i + 1, i, v);
            }
        }
        let a = tb.build();
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = a.matvec(&xs);
        let x = solve_linear(&a, &b).unwrap();
        let err: f64 = x.iter().zip(&xs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err / norm2(&xs) < 1e-9);
    }

    #[test]
    fn system_is_symmetric() {
        let d = disc(2);
        let u0 = vec![0.1; d.spaces.velocity.dim];
        let load = vec![1.0; d.spaces.velocity.dim];
        let sys = build_step_system(&d, &coeffs(0.5, 1.0), 0.01, &u0, &History::BackwardEuler { u_prev: &u0 }, &load).unwrap();
        let diff = sys.matrix.max_abs_diff(&sys.matrix.transpose()).unwrap();
        assert!(diff < 1e-12 * sys.matrix.max_abs(), "{diff}");
    }

    #[test]
    fn mass_scaling_follows_dt() {
        let d = disc(2);
        let z = vec![0.0; d.spaces.velocity.dim];
        let c = NonlinearCoefficients::new(0.0, 0.0, 1.0).unwrap();
        let h = History::BackwardEuler { u_prev: &z };
        let a1 = build_step_system(&d, &c, 0.1, &z, &h, &z).unwrap();
        let a2 = build_step_system(&d, &c, 0.2, &z, &h, &z).unwrap();
        let lay = a1.layout;
        for i in lay.u..lay.w {
            for (j, v) in a1.matrix.row(i) {
                if (lay.u..lay.w).contains(&j) {
                    assert!((a2.matrix.get(i, j) - 0.5 * v).abs() < 1e-14 * v.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn zero_data_gives_zero_fields() {
        let d = disc(2);
        let p = ManufacturedProblem::new(coeffs(1.0, 1.0), Forcing::Zero);
        let time = TimeSchemeConfig::new(TimeScheme::BackwardEuler, 0.1, 3).unwrap();
        let tr = run_transient(&d, &p, &time, &PicardConfig::default()).unwrap();
        assert!(tr.fields.velocity.values.iter().all(|&v| v == 0.0));
        assert!(tr.reports.iter().all(|r| r.energy_u == 0.0 && r.energy_l == 0.0));
    }

    #[test]
    fn epsilon_zero_gives_zero_gradient() {
        let d = disc(2);
        let p = ManufacturedProblem::new(coeffs(0.0, 1.0), Forcing::Manufactured);
        let time = TimeSchemeConfig::new(TimeScheme::BackwardEuler, 0.1, 2).unwrap();
        let tr = run_transient(&d, &p, &time, &PicardConfig::default()).unwrap();
        assert!(tr.fields.gradient.values.iter().all(|v| v.abs() < 1e-12));
        assert!(tr.fields.velocity.values.iter().any(|v| v.abs() > 1e-6));
    }

    #[test]
    fn step_residuals_and_mean() {
        let d = disc(3);
        let p = ManufacturedProblem::new(coeffs(1.0, 1.0), Forcing::Manufactured);
        let time = TimeSchemeConfig::new(TimeScheme::SecondOrder, 0.1, 4).unwrap();
        let tr = run_transient(&d, &p, &time, &PicardConfig::default()).unwrap();
        for r in &tr.reports {
            assert!(r.divergence_residual < 1e-10, "{r:?}");
            assert!(r.trace_residual < 1e-10);
            assert!(r.gradient_residual < 1e-10);
            assert!(r.iterations > 1);
        }
        let mean: f64 = d.mean.iter().zip(&tr.fields.pressure.values).map(|(a, b)| a * b).sum();
        assert!(mean.abs() < 1e-11);
    }

    #[test]
    fn condensed_solve_matches_monolithic_lu() {
        let d = disc(3);
        let c = coeffs(0.3, 2.0);
        let nu = d.spaces.velocity.dim;
        let frozen: Vec<f64> = (0..nu).map(|i| ((i * 7) % 11) as f64 * 0.01).collect();
        let load: Vec<f64> = (0..nu).map(|i| ((i * 5) % 13) as f64 - 6.0).collect();
        let z = vec![0.0; nu];
        let h = History::BackwardEuler { u_prev: &z };
        let sys = build_step_system(&d, &c, 0.01, &frozen, &h, &load).unwrap();
        let x = solve_linear(&sys.matrix, &sys.rhs).unwrap();
        let a = d.velocity_block(&c, 100.0, &frozen).unwrap();
        let (f, res) = SaddleSolver::new().solve(&d, c.epsilon, &a, &load).unwrap();
        assert!(res <= LINEAR_TOLERANCE);
        let lay = d.layout();
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let parts: [(&[f64], &[f64]); 3] = [
            (&x[lay.l..lay.u], &f.gradient.values),
            (&x[lay.u..lay.w], &f.velocity.values),
            (&x[lay.p..lay.mu], &f.pressure.values),
        ];
        for (mono, cond) in parts {
            for (p, q) in mono.iter().zip(cond) {
                assert!((p - q).abs() < 1e-9 * scale, "{p} {q}");
            }
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(TimeSchemeConfig::new(TimeScheme::SecondOrder, 0.1, 1).is_err());
        assert!(TimeSchemeConfig::new(TimeScheme::BackwardEuler, 0.0, 4).is_err());
        let bad = PicardConfig { tolerance: 0.0, ..PicardConfig::default() };
        assert!(bad.validate().is_err());
        assert!("crank".parse::<TimeScheme>().is_err());
    }
}
