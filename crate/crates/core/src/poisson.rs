//! Finite-difference Poisson energy on the unit interval / square with zero
//! Dirichlet data.
//!
//! With `K` the 3-point (1D) or 5-point (2D) negative Laplacian on `n^dim`
//! interior nodes and quadrature weight `w = h^dim`, the discrete energy is
//!
//! ```text
//! f(u) = w/2 * u^T K u - w * g^T u,      grad f(u) = w (K u - g)
//! ```
//!
//! whose unique critical point solves `K u = g`.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::objectives::{ConditionC, CriticalKind, CriticalPoint, Objective};
use crate::sequence_space::{dot, Exponent, VecP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    dim: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(
                "dim",
                format!("grid dimension {dim} not in {{1, 2}}"),
            ));
        }
        if n < 1 {
            return Err(Error::invalid("n", "need at least one interior point"));
        }
        Ok(GridSpec { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Interior points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n + 1) as f64
    }

    /// Quadrature weight `h^dim`.
    pub fn weight(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn unknowns(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Coordinates of unknown `k`, row-major with the first axis slowest.
    pub fn coords(&self, k: usize) -> [f64; 2] {
        let h = self.h();
        match self.dim {
            1 => [(k + 1) as f64 * h, 0.0],
            _ => [(k / self.n + 1) as f64 * h, (k % self.n + 1) as f64 * h],
        }
    }

    /// `out = K u` with zero boundary values.
    pub fn apply_laplacian(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        let inv_h2 = 1.0 / (self.h() * self.h());
        match self.dim {
            1 => {
                for i in 0..n {
                    let left = if i > 0 { u[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { u[i + 1] } else { 0.0 };
                    out[i] = (2.0 * u[i] - left - right) * inv_h2;
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        let k = i * n + j;
                        let mut s = 4.0 * u[k];
                        if i > 0 {
                            s -= u[k - n];
                        }
                        if i + 1 < n {
                            s -= u[k + n];
                        }
                        if j > 0 {
                            s -= u[k - 1];
                        }
                        if j + 1 < n {
                            s -= u[k + 1];
                        }
                        out[k] = s * inv_h2;
                    }
                }
            }
        }
    }

    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_laplacian(u, &mut out);
        out
    }

    /// Analytic bound `|K|_2 <= 4 dim / h^2`.
    pub fn laplacian_norm_bound(&self) -> f64 {
        4.0 * self.dim as f64 / (self.h() * self.h())
    }
}

/// Named source terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Source {
    /// `dim * pi^2 * prod sin(pi x_i)`, exact solution `prod sin(pi x_i)`.
    Sine,
    /// `g = 1`; in 1D the exact solution `x (1 - x) / 2` is reproduced by the
    /// stencil up to rounding.
    Constant,
    /// Gaussian bump centred in the domain, no closed-form solution.
    Bump,
}

impl Source {
    pub fn parse(name: &str) -> Option<Source> {
        match name {
            "sine" => Some(Source::Sine),
            "constant" => Some(Source::Constant),
            "bump" => Some(Source::Bump),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Source::Sine => "sine",
            Source::Constant => "constant",
            Source::Bump => "bump",
        }
    }

    fn eval(self, dim: usize, c: [f64; 2]) -> f64 {
        let pts = &c[..dim];
        match self {
            Source::Sine => {
                dim as f64 * PI * PI * pts.iter().map(|x| (PI * x).sin()).product::<f64>()
            }
            Source::Constant => 1.0,
            Source::Bump => {
                let r2: f64 = pts.iter().map(|x| (x - 0.5) * (x - 0.5)).sum();
                10.0 * (-50.0 * r2).exp()
            }
        }
    }

    /// Exact continuous solution, when known.
    pub fn exact(self, dim: usize) -> Option<fn(&[f64]) -> f64> {
        match (self, dim) {
            (Source::Sine, _) => Some(|x: &[f64]| x.iter().map(|t| (PI * t).sin()).product()),
            (Source::Constant, 1) => Some(|x: &[f64]| 0.5 * x[0] * (1.0 - x[0])),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PoissonProblem {
    pub grid: GridSpec,
    g: Vec<f64>,
}

impl PoissonProblem {
    pub fn new(grid: GridSpec, g: Vec<f64>) -> Result<Self> {
        if g.len() != grid.unknowns() {
            return Err(Error::DimensionMismatch {
                left: grid.unknowns(),
                right: g.len(),
            });
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoefficient(i));
        }
        Ok(PoissonProblem { grid, g })
    }

    /// Samples `source` at the interior nodes.
    pub fn sampled(grid: GridSpec, source: Source) -> Self {
        let g = (0..grid.unknowns())
            .map(|k| source.eval(grid.dim, grid.coords(k)))
            .collect();
        PoissonProblem { grid, g }
    }

    pub fn source(&self) -> &[f64] {
        &self.g
    }
}

/// The discrete energy as an [`Objective`] in Euclidean coefficient geometry.
#[derive(Clone, Debug)]
pub struct PoissonEnergy {
    problem: PoissonProblem,
    lipschitz: f64,
    critical: Vec<CriticalPoint>,
}

pub fn energy_objective(problem: &PoissonProblem) -> PoissonEnergy {
    let grid = problem.grid;
    let lipschitz = grid.weight() * grid.laplacian_norm_bound();
    let critical = direct_solve(problem)
        .map(|u| {
            vec![CriticalPoint {
                point: VecP::from_raw(u, Exponent::EUCLIDEAN),
                kind: CriticalKind::Minimum,
            }]
        })
        .unwrap_or_default();
    PoissonEnergy {
        problem: problem.clone(),
        lipschitz,
        critical,
    }
}

impl PoissonEnergy {
    pub fn problem(&self) -> &PoissonProblem {
        &self.problem
    }

    /// Discrete `H^1_0` seminorm `sqrt(h^dim u^T K u)`.
    pub fn h1_seminorm(&self, u: &[f64]) -> f64 {
        let grid = &self.problem.grid;
        (grid.weight() * dot(&grid.laplacian(u), u)).max(0.0).sqrt()
    }
}

impl Objective for PoissonEnergy {
    fn name(&self) -> &str {
        "poisson"
    }

    fn dim(&self) -> usize {
        self.problem.grid.unknowns()
    }

    fn value(&self, u: &VecP) -> f64 {
        let grid = &self.problem.grid;
        let ku = grid.laplacian(u.coeffs());
        grid.weight() * (0.5 * dot(&ku, u.coeffs()) - dot(&self.problem.g, u.coeffs()))
    }

    fn gradient(&self, u: &VecP) -> VecP {
        let grid = &self.problem.grid;
        let w = grid.weight();
        let mut g = grid.laplacian(u.coeffs());
        for (gi, si) in g.iter_mut().zip(&self.problem.g) {
            *gi = w * (*gi - si);
        }
        VecP::from_raw(g, u.exponent().conjugate())
    }

    fn local_lipschitz(&self, _u: &VecP) -> f64 {
        self.lipschitz
    }

    fn hessian_action(&self, u: &VecP, v: &VecP) -> Option<VecP> {
        let grid = &self.problem.grid;
        let w = grid.weight();
        let kv = grid
            .laplacian(v.coeffs())
            .into_iter()
            .map(|x| w * x)
            .collect();
        Some(VecP::from_raw(kv, u.exponent().conjugate()))
    }

    /// Quadratic with a positive-definite stiffness matrix.
    fn condition_c_class(&self) -> ConditionC {
        ConditionC::Quadratic
    }

    fn known_critical_points(&self) -> &[CriticalPoint] {
        &self.critical
    }
}

/// Solves `K u = g`: tridiagonal elimination in 1D, matrix-free conjugate
/// gradient to relative residual `1e-12` in 2D.
pub fn direct_solve(problem: &PoissonProblem) -> Result<Vec<f64>> {
    match problem.grid.dim {
        1 => Ok(solve_tridiagonal(&problem.grid, &problem.g)),
        _ => conjugate_gradient(&problem.grid, &problem.g, 1e-12),
    }
}

/// Thomas algorithm for `(2 u_i - u_{i-1} - u_{i+1}) / h^2 = g_i`.
fn solve_tridiagonal(grid: &GridSpec, g: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let h2 = grid.h() * grid.h();
    let mut diag = vec![2.0; n];
    let mut rhs: Vec<f64> = g.iter().map(|v| v * h2).collect();
    for i in 1..n {
        let m = -1.0 / diag[i - 1];
        diag[i] += m;
        rhs[i] -= m * rhs[i - 1];
    }
    let mut u = vec![0.0; n];
    u[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = (rhs[i] + u[i + 1]) / diag[i];
    }
    u
}

pub(crate) fn conjugate_gradient(grid: &GridSpec, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let max_iters = 10 * n;
    for _ in 0..max_iters {
        if rr.sqrt() <= rel_tol * b_norm {
            return Ok(x);
        }
        grid.apply_laplacian(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= rel_tol * b_norm {
        return Ok(x);
    }
    Err(Error::CgNotConverged {
        iters: max_iters,
        residual: rr.sqrt() / b_norm,
    })
}

/// `(max_j |u_j - exact(x_j)|, sqrt(h^dim sum_j (u_j - exact(x_j))^2))`.
pub fn solution_errors(
    u: &[f64],
    problem: &PoissonProblem,
    exact: impl Fn(&[f64]) -> f64,
) -> Result<(f64, f64)> {
    let grid = &problem.grid;
    if u.len() != grid.unknowns() {
        return Err(Error::DimensionMismatch {
            left: grid.unknowns(),
            right: u.len(),
        });
    }
    let mut max_err = 0.0_f64;
    let mut sq = 0.0;
    for (k, uk) in u.iter().enumerate() {
        let c = grid.coords(k);
        let e = uk - exact(&c[..grid.dim]);
        max_err = max_err.max(e.abs());
        sq += e * e;
    }
    Ok((max_err, (grid.weight() * sq).sqrt()))
}

/// Node values as CSV: coordinate columns then the value, row-major.
pub fn write_nodes_csv<W: Write>(grid: &GridSpec, u: &[f64], mut w: W) -> std::io::Result<()> {
    match grid.dim {
        1 => writeln!(w, "x,u")?,
        _ => writeln!(w, "x,y,u")?,
    }
    for (k, v) in u.iter().enumerate() {
        let c = grid.coords(k);
        match grid.dim {
            1 => writeln!(w, "{:.16e},{:.16e}", c[0], v)?,
            _ => writeln!(w, "{:.16e},{:.16e},{:.16e}", c[0], c[1], v)?,
        }
    }
    Ok(())
}

/// Parses node-value CSV written by [`write_nodes_csv`], checking that the
/// coordinates match `grid`.
pub fn read_nodes_csv(grid: &GridSpec, text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().trim();
    let expect = if grid.dim == 1 { "x,u" } else { "x,y,u" };
    if header != expect {
        return Err(Error::invalid(
            "csv header",
            format!("expected `{expect}`, got `{header}`"),
        ));
    }
    let mut u = Vec::with_capacity(grid.unknowns());
    for (k, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let fields: Result<Vec<f64>> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid("csv value", format!("row {}: {e}", k + 1)))
            })
            .collect();
        let fields = fields?;
        if fields.len() != grid.dim + 1 {
            return Err(Error::invalid(
                "csv row",
                format!("row {} has {} fields", k + 1, fields.len()),
            ));
        }
        if k >= grid.unknowns() {
            return Err(Error::invalid("csv rows", "more rows than grid nodes"));
        }
        let c = grid.coords(k);
        if fields[..grid.dim]
            .iter()
            .zip(&c)
            .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::invalid(
                "csv coordinates",
                format!("row {} is off-grid", k + 1),
            ));
        }
        u.push(fields[grid.dim]);
    }
    if u.len() != grid.unknowns() {
        return Err(Error::DimensionMismatch {
            left: grid.unknowns(),
            right: u.len(),
        });
    }
    Ok(u)
}
