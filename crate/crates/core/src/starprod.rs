//! Short star-products from nondegenerate twisted traces.
//!
//! The engine works with any truncated filtered algebra given by a basis with
//! filtration degrees, a multiplication table and the pairing `(a, b) = T(ab)`.
//! Orthogonal complements of the filtration pieces give a quantization map `φ`,
//! and `a * b = φ^{-1}(φ(a) φ(b))` is the star-product. Builders cover `A_c` with
//! a trace given by a weight and the 2×2 Morita context `[[A_c, M], [N, A_{c'}]]`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{Coefficient, Element};
use crate::bimodule::Bimodule;
use crate::conjugation::Conjugation;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::positivity::judge_gram;
use crate::trace::{eval_trace, Weight};
use crate::C64;

/// Relative rank tolerance of the level solves.
pub const RANK_TOL: f64 = 1e-9;
pub const DEFAULT_TRUNCATION: usize = 12;
/// Block-trace compatibility tolerance of [`matrix_context`].
pub const COMPATIBILITY_TOL: f64 = 1e-8;
/// Cap on the triples checked for associativity and multiplicativity.
const MAX_TRIPLES: usize = 4000;

type Mat = DMatrix<C64>;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.norm()))
}

/// A filtered algebra cut off at degree `N`.
#[derive(Clone, Debug)]
pub struct TruncatedAlgebra {
    labels: Vec<String>,
    degrees: Vec<usize>,
    weights: Vec<i64>,
    truncation: usize,
    /// `e_a e_b` in coordinates when `deg a + deg b ≤ N`.
    products: Vec<Vec<Option<Vec<C64>>>>,
    /// `T(e_a e_b)` for all pairs.
    pairing: Mat,
    /// `T(e_a ρ(e_b))`, when a conjugation is attached.
    rho_pairing: Option<Mat>,
}

impl TruncatedAlgebra {
    /// Tabulates the multiplication and the pairing.
    ///
    /// `multiply(a, b)` is called only for `deg a + deg b ≤ N` and must return
    /// coordinates in the same basis; `pair(a, b)` is called for all pairs.
    pub fn build(
        labels: Vec<String>,
        degrees: Vec<usize>,
        weights: Vec<i64>,
        truncation: usize,
        mut multiply: impl FnMut(usize, usize) -> Result<Vec<C64>>,
        mut pair: impl FnMut(usize, usize) -> Result<C64>,
    ) -> Result<Self> {
        let dim = degrees.len();
        if labels.len() != dim || weights.len() != dim {
            return Err(Error::InvalidInput("labels, degrees and weights must have equal lengths".into()));
        }
        if degrees.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("basis degrees must be nondecreasing".into()));
        }
        if dim == 0 || degrees[0] != 0 {
            return Err(Error::InvalidInput("the basis must start in degree 0".into()));
        }
        if degrees[dim - 1] > truncation {
            return Err(Error::TruncationOverflow { max_degree: truncation });
        }
        let mut products = vec![vec![None; dim]; dim];
        for a in 0..dim {
            for b in 0..dim {
                let total = degrees[a] + degrees[b];
                if total > truncation {
                    continue;
                }
                let v = multiply(a, b)?;
                if v.len() != dim {
                    return Err(Error::InvalidInput(format!("product of {a} and {b} has {} coordinates", v.len())));
                }
                let scale = max_norm(&v);
                if let Some(l) = (0..dim).find(|&l| degrees[l] > total && v[l].norm() > 1e-12 * scale) {
                    return Err(Error::InvalidInput(format!(
                        "product {} · {} has a component in degree {} > {total}",
                        labels[a], labels[b], degrees[l]
                    )));
                }
                products[a][b] = Some(v);
            }
        }
        let mut pairing = Mat::zeros(dim, dim);
        for a in 0..dim {
            for b in 0..dim {
                pairing[(a, b)] = pair(a, b)?;
            }
        }
        Ok(TruncatedAlgebra { labels, degrees, weights, truncation, products, pairing, rho_pairing: None })
    }

    /// Attaches `T(e_a ρ(e_b))` for the Hermitian check.
    pub fn with_rho_pairing(mut self, rho_pairing: Vec<Vec<C64>>) -> Result<Self> {
        let dim = self.dim();
        if rho_pairing.len() != dim || rho_pairing.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("ρ-pairing has the wrong shape".into()));
        }
        self.rho_pairing = Some(Mat::from_fn(dim, dim, |a, b| rho_pairing[a][b]));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Grading by `x`-weight (zero when the algebra has none).
    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    /// The involution `s = (-1)^degree` on basis vectors.
    pub fn parity(&self, a: usize) -> i8 {
        if self.degrees[a] % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn product(&self, a: usize, b: usize) -> Result<&[C64]> {
        self.products[a][b].as_deref().ok_or(Error::TruncationOverflow { max_degree: self.truncation })
    }

    pub fn pairing(&self, a: usize, b: usize) -> C64 {
        self.pairing[(a, b)]
    }

    /// `T(e_a)`, read off the pairing with the unit `Σ` of degree-0 idempotents.
    pub fn trace_of_basis(&self, a: usize) -> C64 {
        (0..self.dim()).take_while(|&u| self.degrees[u] == 0).map(|u| self.pairing[(a, u)]).sum()
    }

    /// Number of basis vectors of degree `≤ k`.
    pub fn upto_degree(&self, k: usize) -> usize {
        self.upto(k)
    }

    fn upto(&self, k: usize) -> usize {
        self.degrees.partition_point(|&d| d <= k)
    }
}

/// One graded piece `A_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub degree: usize,
    /// Basis indices whose leading terms span `A_k`.
    pub indices: Vec<usize>,
    pub rank: usize,
    /// Ratio of the extreme pivots of the equilibrated level form.
    pub condition: f64,
    /// `max |T(e_m φ(e_a))|` over lower `m`, relative: the left complement agrees
    /// with the right one.
    pub left_orthogonality: f64,
}

/// The decomposition `𝒜_k = 𝒜_{≤k-1}^⊥ ∩ 𝒜_{≤k}` and the quantization map.
#[derive(Clone, Debug)]
pub struct LevelDecomposition {
    pub levels: Vec<Level>,
    /// Column `a` holds the coordinates of `φ(e_a)`; unit upper triangular.
    pub quantization: Mat,
}

/// Symmetric scaling `1/sqrt(max row entry)` of a square block.
fn equilibrate(m: &Mat) -> Vec<f64> {
    (0..m.nrows())
        .map(|a| {
            let r = (0..m.ncols()).fold(0.0f64, |acc, b| acc.max(m[(a, b)].norm()).max(m[(b, a)].norm()));
            if r > 0.0 {
                1.0 / r.sqrt()
            } else {
                1.0
            }
        })
        .collect()
}

/// Solves `a x = rhs` for square `a`, one independent piece at a time.
///
/// Pieces are the connected components of the bipartite graph linking row `r`
/// to column `c` when `a[r, c] != 0`. Pieces whose right-hand side vanishes
/// get an exact zero, so structural zeros are not filled with round-off.
fn solve_by_sectors(a: &Mat, rhs: &Mat) -> Option<Mat> {
    let size = a.nrows();
    // nodes 0..size are columns, size..2size rows
    let mut parent: Vec<usize> = (0..2 * size).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for r in 0..size {
        for c in 0..size {
            if a[(r, c)] != zero() {
                let (x, y) = (root(&mut parent, c), root(&mut parent, size + r));
                if x != y {
                    parent[x] = y;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
    for node in 0..2 * size {
        let r = root(&mut parent, node);
        let entry = groups.entry(r).or_default();
        if node < size {
            entry.0.push(node);
        } else {
            entry.1.push(node - size);
        }
    }
    let d = equilibrate(a);
    let mut out = Mat::zeros(size, rhs.ncols());
    for (cols, rows) in groups.into_values() {
        let live: Vec<usize> = (0..rhs.ncols()).filter(|&j| rows.iter().any(|&r| rhs[(r, j)] != zero())).collect();
        if live.is_empty() {
            continue;
        }
        if cols.len() != rows.len() {
            return None;
        }
        let k = cols.len();
        let scaled = Mat::from_fn(k, k, |i, j| a[(rows[i], cols[j])] * d[rows[i]] * d[cols[j]]);
        let b = Mat::from_fn(k, live.len(), |i, j| rhs[(rows[i], live[j])] * d[rows[i]]);
        let sol = scaled.col_piv_qr().solve(&b)?;
        for (i, &c) in cols.iter().enumerate() {
            for (j, &col) in live.iter().enumerate() {
                out[(c, col)] = sol[(i, j)] * d[c];
            }
        }
    }
    Some(out)
}

/// Numerical rank and pivot ratio of a square block after equilibration.
fn rank_of(m: &Mat) -> (usize, f64) {
    let k = m.nrows();
    if k == 0 {
        return (0, 1.0);
    }
    let d = equilibrate(m);
    let scaled = Mat::from_fn(k, k, |a, b| m[(a, b)] * d[a] * d[b]);
    let r = scaled.col_piv_qr().r();
    let pivots: Vec<f64> = (0..k).map(|i| r[(i, i)].norm()).collect();
    let top = pivots.iter().cloned().fold(0.0, f64::max);
    let rank = pivots.iter().filter(|&&p| p > RANK_TOL * top).count();
    let low = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    (rank, if low > 0.0 { top / low } else { f64::INFINITY })
}

/// Orthogonal complements of the filtration pieces.
pub fn orthogonal_levels(alg: &TruncatedAlgebra) -> Result<LevelDecomposition> {
    let dim = alg.dim();
    let mut phi = Mat::identity(dim, dim);
    let mut levels = Vec::new();
    let mut start = 0;
    while start < dim {
        let degree = alg.degrees[start];
        let end = alg.upto(degree);
        if start > 0 {
            // T(φ(e_i) e_m) = 0 for every lower m: B_old^T c = B[i, old]
            let old = Mat::from_fn(start, start, |m, l| alg.pairing[(l, m)]);
            let rhs = Mat::from_fn(start, end - start, |m, i| alg.pairing[(start + i, m)]);
            let sol = solve_by_sectors(&old, &rhs).ok_or(Error::DegenerateTrace { level: degree })?;
            phi.view_mut((0, start), (start, end - start)).copy_from(&(-sol));
        }
        let cols = phi.columns(start, end - start).into_owned();
        let block = cols.transpose() * &alg.pairing * &cols;
        let (rank, condition) = rank_of(&block);
        if rank < end - start {
            return Err(Error::DegenerateTrace { level: degree });
        }
        let left = alg.pairing.rows(0, start).into_owned() * &cols;
        let size = block.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(f64::MIN_POSITIVE);
        let left_orthogonality = left.iter().fold(0.0f64, |m, v| m.max(v.norm())) / size;
        levels.push(Level { degree, indices: (start..end).collect(), rank, condition, left_orthogonality });
        start = end;
    }
    Ok(LevelDecomposition { levels, quantization: phi })
}

/// Star-product structure constants with their checks.
#[derive(Clone, Debug)]
pub struct StarProductTable {
    pub levels: Vec<Level>,
    pub quantization: Mat,
    /// `e_a * e_b` for `deg a + deg b ≤ N`.
    structure: Vec<Vec<Option<Vec<C64>>>>,
    /// Size of the terms summed into each structure constant; residuals are
    /// measured against it so that vanishing products are not compared with noise.
    magnitude: Vec<Vec<f64>>,
    degrees: Vec<usize>,
    truncation: usize,
    /// Largest relative `C_k(e_a, e_b)` with `k > min(deg a, deg b)`.
    pub shortness_residual: f64,
    /// Largest relative component of the wrong parity.
    pub parity_residual: f64,
    /// Largest relative `‖C_0(e_a, e_b) - gr(e_a e_b)‖`.
    pub graded_residual: f64,
    pub associativity_residual: f64,
    pub twist: TwistReport,
    /// Hermitian residual and verdict of `(a, b) ↦ T(φ(a) ρ(φ(b)))`, when `ρ` is known.
    pub hermitian: Option<HermitianCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistReport {
    /// `g` in the graded basis; block diagonal over the levels.
    pub matrix: Vec<Vec<C64>>,
    pub multiplicativity_residual: f64,
    /// `max |g - 1|` on level 0.
    pub identity_residual: f64,
    /// `max |g s - s g|`, relative.
    pub parity_commutator: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianCheck {
    pub phase: C64,
    pub hermitian_residual: f64,
    pub min_eigenvalue: f64,
    pub positive_definite: bool,
}

/// One `C_k(a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarTerm {
    pub k: usize,
    pub coefficients: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarExpansion {
    pub product: Vec<C64>,
    pub terms: Vec<StarTerm>,
}

/// Serializable digest of a table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarSummary {
    pub truncation: usize,
    pub dimension: usize,
    pub level_dimensions: Vec<(usize, usize)>,
    pub worst_condition: f64,
    pub shortness_residual: f64,
    pub parity_residual: f64,
    pub graded_residual: f64,
    pub associativity_residual: f64,
    pub twist_multiplicativity_residual: f64,
    pub twist_identity_residual: f64,
    pub hermitian_residual: Option<f64>,
    pub short: bool,
}

impl StarProductTable {
    pub fn build(alg: &TruncatedAlgebra) -> Result<Self> {
        let dec = orthogonal_levels(alg)?;
        let dim = alg.dim();
        let n = alg.truncation;
        let phi = &dec.quantization;
        let phi_inv = phi.clone().solve_upper_triangular(&Mat::identity(dim, dim)).ok_or(Error::DegenerateTrace { level: 0 })?;
        let support: Vec<Vec<(usize, C64)>> = (0..dim)
            .map(|a| (0..=a).filter(|&l| phi[(l, a)] != zero()).map(|l| (l, phi[(l, a)])).collect())
            .collect();
        // φ(e_a) e_m for deg a + deg m ≤ N, with the same sums in absolute value
        // as the round-off scale
        let mut half = vec![vec![None; dim]; dim];
        for a in 0..dim {
            for m in 0..alg.upto(n.saturating_sub(alg.degrees[a])) {
                let mut v = vec![zero(); dim];
                let mut w = vec![0.0; dim];
                for &(l, c) in &support[a] {
                    for ((x, y), p) in v.iter_mut().zip(w.iter_mut()).zip(alg.product(l, m)?) {
                        *x += c * p;
                        *y += c.norm() * p.norm();
                    }
                }
                half[a][m] = Some((v, w));
            }
        }
        let abs_inv = phi_inv.map(|c| C64::new(c.norm(), 0.0));
        let mut structure = vec![vec![None; dim]; dim];
        let mut magnitude = vec![vec![0.0; dim]; dim];
        for a in 0..dim {
            for b in 0..alg.upto(n.saturating_sub(alg.degrees[a])) {
                let mut v = Mat::zeros(dim, 1);
                let mut w = Mat::zeros(dim, 1);
                for &(m, c) in &support[b] {
                    let (hv, hw) = half[a][m].as_ref().expect("within truncation");
                    for l in 0..dim {
                        v[(l, 0)] += c * hv[l];
                        w[(l, 0)] += c.norm() * hw[l];
                    }
                }
                let s: Vec<C64> = (&phi_inv * v).iter().copied().collect();
                let bound: Vec<C64> = (&abs_inv * w).iter().copied().collect();
                magnitude[a][b] = max_norm(&bound).max(f64::MIN_POSITIVE);
                structure[a][b] = Some(s);
            }
        }
        let mut table = StarProductTable {
            levels: dec.levels,
            quantization: dec.quantization,
            structure,
            magnitude,
            degrees: alg.degrees.clone(),
            truncation: n,
            shortness_residual: 0.0,
            parity_residual: 0.0,
            graded_residual: 0.0,
            associativity_residual: 0.0,
            twist: TwistReport {
                matrix: Vec::new(),
                multiplicativity_residual: 0.0,
                identity_residual: 0.0,
                parity_commutator: 0.0,
            },
            hermitian: None,
        };
        table.check_degrees(alg)?;
        table.associativity_residual = table.associativity()?;
        table.twist = recover_twist(alg, &table)?;
        table.hermitian = table.hermitian_check(alg);
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `e_a * e_b`.
    pub fn basis_product(&self, a: usize, b: usize) -> Result<&[C64]> {
        self.structure[a][b].as_deref().ok_or(Error::TruncationOverflow { max_degree: self.truncation })
    }

    /// `C_k(e_a, e_b)`: the degree `deg a + deg b - 2k` part of `e_a * e_b`.
    pub fn coefficient(&self, k: usize, a: usize, b: usize) -> Result<Vec<C64>> {
        let s = self.basis_product(a, b)?;
        let total = self.degrees[a] + self.degrees[b];
        Ok(s.iter()
            .enumerate()
            .map(|(l, &x)| if 2 * k <= total && self.degrees[l] == total - 2 * k { x } else { zero() })
            .collect())
    }

    fn check_degrees(&mut self, alg: &TruncatedAlgebra) -> Result<()> {
        let dim = self.dim();
        for a in 0..dim {
            for b in 0..dim {
                let Some(s) = self.structure[a][b].as_ref() else { continue };
                let scale = self.magnitude[a][b];
                let (da, db) = (self.degrees[a], self.degrees[b]);
                let total = da + db;
                let floor = da.abs_diff(db);
                let raw = alg.product(a, b)?;
                for (l, x) in s.iter().enumerate() {
                    let d = self.degrees[l];
                    let rel = x.norm() / scale;
                    if (total - d.min(total)) % 2 == 1 || d > total {
                        self.parity_residual = self.parity_residual.max(rel);
                    } else if d < floor {
                        self.shortness_residual = self.shortness_residual.max(rel);
                    }
                    if d == total {
                        let g = (raw[l] - x).norm() / scale;
                        self.graded_residual = self.graded_residual.max(g);
                    }
                }
            }
        }
        Ok(())
    }

    /// Triples `(a, b, c)` with total degree `≤ N`, thinned to at most [`MAX_TRIPLES`].
    fn triples(&self) -> Vec<(usize, usize, usize)> {
        let dim = self.dim();
        let mut all = Vec::new();
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    if self.degrees[a] + self.degrees[b] + self.degrees[c] <= self.truncation {
                        all.push((a, b, c));
                    }
                }
            }
        }
        let stride = all.len().div_ceil(MAX_TRIPLES).max(1);
        all.into_iter().step_by(stride).collect()
    }

    /// `x * e_c` and the size of its terms.
    fn mul_vec_basis(&self, x: &[C64], c: usize) -> Result<(Vec<C64>, f64)> {
        let mut out = vec![zero(); self.dim()];
        let mut scale = 0.0;
        for (l, &xl) in x.iter().enumerate() {
            if xl == zero() {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.basis_product(l, c)?) {
                *o += xl * p;
            }
            scale += xl.norm() * self.magnitude[l][c];
        }
        Ok((out, scale))
    }

    fn mul_basis_vec(&self, a: usize, y: &[C64]) -> Result<(Vec<C64>, f64)> {
        let mut out = vec![zero(); self.dim()];
        let mut scale = 0.0;
        for (l, &yl) in y.iter().enumerate() {
            if yl == zero() {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.basis_product(a, l)?) {
                *o += yl * p;
            }
            scale += yl.norm() * self.magnitude[a][l];
        }
        Ok((out, scale))
    }

    fn associativity(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (a, b, c) in self.triples() {
            let (left, sl) = self.mul_vec_basis(self.basis_product(a, b)?, c)?;
            let (right, sr) = self.mul_basis_vec(a, self.basis_product(b, c)?)?;
            let scale = sl.max(sr).max(self.magnitude[a][b] * self.magnitude[b][c]).max(f64::MIN_POSITIVE);
            let diff = left.iter().zip(&right).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
            worst = worst.max(diff / scale);
        }
        Ok(worst)
    }

    /// `x * y` with its `C_k` decomposition; both inputs in graded coordinates.
    pub fn star_multiply(&self, x: &[C64], y: &[C64]) -> Result<StarExpansion> {
        let dim = self.dim();
        if x.len() != dim || y.len() != dim {
            return Err(Error::InvalidInput(format!("expected {dim} coordinates")));
        }
        let mut product = vec![zero(); dim];
        let mut by_k: Vec<Vec<C64>> = vec![vec![zero(); dim]; self.truncation / 2 + 1];
        for (a, &xa) in x.iter().enumerate() {
            if xa == zero() {
                continue;
            }
            for (b, &yb) in y.iter().enumerate() {
                if yb == zero() {
                    continue;
                }
                let total = self.degrees[a] + self.degrees[b];
                if total > self.truncation {
                    return Err(Error::TruncationOverflow { max_degree: self.truncation });
                }
                for (l, p) in self.basis_product(a, b)?.iter().enumerate() {
                    let v = xa * yb * p;
                    product[l] += v;
                    let d = self.degrees[l];
                    if d <= total && (total - d) % 2 == 0 {
                        by_k[(total - d) / 2][l] += v;
                    }
                }
            }
        }
        let terms = by_k
            .into_iter()
            .enumerate()
            .filter(|(_, v)| v.iter().any(|c| *c != zero()))
            .map(|(k, coefficients)| StarTerm { k, coefficients })
            .collect();
        Ok(StarExpansion { product, terms })
    }

    fn hermitian_check(&self, alg: &TruncatedAlgebra) -> Option<HermitianCheck> {
        let r = alg.rho_pairing.as_ref()?;
        let phi = &self.quantization;
        let h = phi.transpose() * r * phi.map(|c| c.conj());
        let matrix: Vec<Vec<C64>> = (0..h.nrows()).map(|a| (0..h.ncols()).map(|b| h[(a, b)]).collect()).collect();
        let h00 = h[(0, 0)];
        let phase = if h00.norm() > 0.0 { h00.conj() / h00.norm() } else { C64::new(1.0, 0.0) };
        let report = judge_gram(0, self.truncation, matrix, phase, RANK_TOL);
        Some(HermitianCheck {
            phase,
            hermitian_residual: report.hermitian_residual,
            min_eigenvalue: report.min_eigenvalue,
            positive_definite: report.is_pd(),
        })
    }

    pub fn summary(&self) -> StarSummary {
        StarSummary {
            truncation: self.truncation,
            dimension: self.dim(),
            level_dimensions: self.levels.iter().map(|l| (l.degree, l.indices.len())).collect(),
            worst_condition: self.levels.iter().fold(1.0, |m, l| m.max(l.condition)),
            shortness_residual: self.shortness_residual,
            parity_residual: self.parity_residual,
            graded_residual: self.graded_residual,
            associativity_residual: self.associativity_residual,
            twist_multiplicativity_residual: self.twist.multiplicativity_residual,
            twist_identity_residual: self.twist.identity_residual,
            hermitian_residual: self.hermitian.as_ref().map(|h| h.hermitian_residual),
            short: self.shortness_residual <= 1e-6 && self.parity_residual <= 1e-6,
        }
    }
}

/// The twist `g` with `T(ab) = T(b g(a))`, solved level by level as `L^{-1} L^T`
/// for the level form `L_{ab} = T(φ(e_a) φ(e_b))`.
pub fn recover_twist(alg: &TruncatedAlgebra, table: &StarProductTable) -> Result<TwistReport> {
    let dim = alg.dim();
    let phi = &table.quantization;
    let form = phi.transpose() * &alg.pairing * phi;
    let mut g = Mat::zeros(dim, dim);
    for level in &table.levels {
        let (s, k) = (level.indices[0], level.indices.len());
        let l = form.view((s, s), (k, k)).into_owned();
        let lt = l.transpose();
        let block = solve_by_sectors(&l, &lt).ok_or(Error::DegenerateTrace { level: level.degree })?;
        g.view_mut((s, s), (k, k)).copy_from(&block);
    }
    let identity_residual = table.levels.first().map_or(0.0, |lv| {
        let k = lv.indices.len();
        (g.view((0, 0), (k, k)) - Mat::identity(k, k)).iter().fold(0.0f64, |m, v| m.max(v.norm()))
    });
    let column = |a: usize| -> Vec<C64> { g.column(a).iter().copied().collect() };
    let apply = |v: &[C64]| -> Vec<C64> {
        let m = &g * Mat::from_column_slice(dim, 1, v);
        m.iter().copied().collect()
    };
    let gscale = g.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(f64::MIN_POSITIVE);
    let mut multiplicativity_residual = 0.0f64;
    for (a, b, _) in pairs_of(&table.triples()) {
        let lhs = apply(table.basis_product(a, b)?);
        let ga = column(a);
        let gb = column(b);
        let mut rhs = vec![zero(); dim];
        let mut scale = gscale * table.magnitude[a][b];
        let mut rhs_scale = 0.0;
        for (l, &x) in ga.iter().enumerate() {
            if x == zero() {
                continue;
            }
            for (m, &y) in gb.iter().enumerate() {
                if y == zero() {
                    continue;
                }
                for (r, p) in rhs.iter_mut().zip(table.basis_product(l, m)?) {
                    *r += x * y * p;
                }
                rhs_scale += x.norm() * y.norm() * table.magnitude[l][m];
            }
        }
        scale = scale.max(rhs_scale).max(f64::MIN_POSITIVE);
        let diff = lhs.iter().zip(&rhs).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        multiplicativity_residual = multiplicativity_residual.max(diff / scale);
    }
    let mut parity_commutator = 0.0f64;
    for a in 0..dim {
        for b in 0..dim {
            if alg.parity(a) != alg.parity(b) {
                parity_commutator = parity_commutator.max(2.0 * g[(a, b)].norm() / gscale);
            }
        }
    }
    Ok(TwistReport {
        matrix: (0..dim).map(|a| (0..dim).map(|b| g[(a, b)]).collect()).collect(),
        multiplicativity_residual,
        identity_residual,
        parity_commutator,
    })
}

/// Distinct leading pairs of a triple list.
fn pairs_of(triples: &[(usize, usize, usize)]) -> Vec<(usize, usize, usize)> {
    let mut seen = std::collections::HashSet::new();
    triples.iter().copied().filter(|&(a, b, _)| seen.insert((a, b))).collect()
}

/// The basis `x^j R_j z^k` of a filtered bimodule up to degree `N`, with degree
/// `n j + 2 deg(R_j z^k)`.
#[derive(Clone, Debug)]
struct GradedBasis {
    module: Bimodule<Poly<f64>>,
    entries: Vec<(i64, usize, usize)>,
    index: HashMap<(i64, usize), usize>,
}

impl GradedBasis {
    fn new(module: Bimodule<Poly<f64>>, truncation: usize) -> Result<Self> {
        let n = module.n() as i64;
        let top = truncation as i64;
        let mut entries = Vec::new();
        for j in -top..=top {
            let base = n * j + 2 * module.rj_roots(j).len() as i64;
            if base < 0 {
                return Err(Error::InvalidInput(format!("weight {j} of the bimodule has negative degree {base}")));
            }
            let mut k = 0;
            while base + 2 * k as i64 <= top {
                entries.push((j, k, (base + 2 * k as i64) as usize));
                k += 1;
            }
        }
        entries.sort_by_key(|&(j, k, d)| (d, j.abs(), -j.signum(), k));
        let index = entries.iter().enumerate().map(|(i, &(j, k, _))| ((j, k), i)).collect();
        Ok(GradedBasis { module, entries, index })
    }

    fn element(&self, i: usize) -> Element<Poly<f64>> {
        let (j, k, _) = self.entries[i];
        Element::term(self.module.ctx(), j, self.module.rj(j).times(&Poly::monomial(k, C64::new(1.0, 0.0))))
    }

    fn label(&self, i: usize) -> String {
        let (j, k, _) = self.entries[i];
        match (j, k) {
            (0, 0) => "1".into(),
            (0, k) => format!("z^{k}"),
            (j, 0) => format!("x^{j}R"),
            (j, k) => format!("x^{j}R z^{k}"),
        }
    }

    fn coordinates(&self, e: &Element<Poly<f64>>, out: &mut [C64], offset: usize, max_degree: usize) -> Result<()> {
        for (j, q) in self.module.reduced_coefficients(e)? {
            for (k, &c) in q.coeffs().iter().enumerate() {
                match self.index.get(&(j, k)) {
                    Some(&i) => out[offset + i] += c,
                    None if c.norm() <= 1e-12 * q.norm_max() => {}
                    None => return Err(Error::TruncationOverflow { max_degree }),
                }
            }
        }
        Ok(())
    }
}

/// The trace of a weight on `A_c`, normalized to `T(1) = 1`.
pub fn truncated_from_weight(weight: &Weight, truncation: usize) -> Result<TruncatedAlgebra> {
    let basis = GradedBasis::new(Bimodule::regular(weight.algebra()), truncation)?;
    let unit = eval_trace(weight, &Poly::one())?;
    if unit.norm() == 0.0 {
        return Err(Error::DegenerateTrace { level: 0 });
    }
    let dim = basis.entries.len();
    let elems: Vec<_> = (0..dim).map(|i| basis.element(i)).collect();
    let labels = (0..dim).map(|i| basis.label(i)).collect();
    let degrees = basis.entries.iter().map(|e| e.2).collect();
    let weights = basis.entries.iter().map(|e| e.0).collect();
    TruncatedAlgebra::build(
        labels,
        degrees,
        weights,
        truncation,
        |a, b| {
            let mut v = vec![zero(); dim];
            basis.coordinates(&(&elems[a] * &elems[b]), &mut v, 0, truncation)?;
            Ok(v)
        },
        |a, b| {
            if basis.entries[a].0 + basis.entries[b].0 != 0 {
                return Ok(zero());
            }
            Ok(eval_trace(weight, &(&elems[a] * &elems[b]).coefficient(0))? / unit)
        },
    )
}

/// [`truncated_from_weight`] with `T(e_a ρ(e_b))` attached for the Hermitian check.
pub fn truncated_with_conjugation(
    weight: &Weight,
    conj: &Conjugation<Poly<f64>>,
    truncation: usize,
) -> Result<TruncatedAlgebra> {
    if !conj.module().is_regular() {
        return Err(Error::InvalidInput("the conjugation must act on the regular bimodule".into()));
    }
    let alg = truncated_from_weight(weight, truncation)?;
    let basis = GradedBasis::new(Bimodule::regular(weight.algebra()), truncation)?;
    let unit = eval_trace(weight, &Poly::one())?;
    let dim = alg.dim();
    let elems: Vec<_> = (0..dim).map(|i| basis.element(i)).collect();
    let rhos: Vec<_> = elems.iter().map(|e| conj.rho(e)).collect::<Result<_>>()?;
    let mut r = vec![vec![zero(); dim]; dim];
    for a in 0..dim {
        for b in 0..dim {
            let p = &elems[a] * &rhos[b];
            if p.terms().contains_key(&0) {
                r[a][b] = eval_trace(weight, &p.coefficient(0))? / unit;
            }
        }
    }
    alg.with_rho_pairing(r)
}

/// Which corner of `[[A_c, M], [N, A_{c'}]]` a basis vector lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    A11,
    A12,
    A21,
    A22,
}

impl Block {
    fn rows_cols(self) -> (usize, usize) {
        match self {
            Block::A11 => (0, 0),
            Block::A12 => (0, 1),
            Block::A21 => (1, 0),
            Block::A22 => (1, 1),
        }
    }

    fn from_rows_cols(r: usize, c: usize) -> Self {
        match (r, c) {
            (0, 0) => Block::A11,
            (0, 1) => Block::A12,
            (1, 0) => Block::A21,
            _ => Block::A22,
        }
    }
}

/// The block algebra with its trace and compatibility record.
#[derive(Clone, Debug)]
pub struct MatrixContext {
    pub algebra: TruncatedAlgebra,
    pub blocks: Vec<Block>,
    /// Unnormalized `T_1(1)`, `T_2(1)`.
    pub unit_traces: (C64, C64),
    /// `max |T_1(mn) - T_2(n ψφ(m))|`, relative.
    pub forward_residual: f64,
    /// `max |T_2(nm) - T_1(m φψ(n))|`, relative.
    pub backward_residual: f64,
    /// `max |T(a)|` over off-diagonal basis vectors.
    pub off_diagonal_trace: f64,
}

/// Assembles `[[A_c, M], [N, A_{c'}]]` for `M = M_{c,c'}` and a trace on `A_c`
/// whose form `(m, m') = T_1(m φ(m'))` is invariant.
///
/// `T_2` is the trace on `A_{c'}` with the same weight data; both are normalized to
/// `T_i(1) = 1`, so `T(e_1) = T(e_2) = 1`.
pub fn matrix_context(conj: &Conjugation<Poly<f64>>, weight: &Weight, truncation: usize) -> Result<MatrixContext> {
    let module = conj.module().clone();
    if module.left().params() != weight.algebra().params() {
        return Err(Error::InvalidInput("the weight must live on the left algebra of the bimodule".into()));
    }
    let right_weight = Weight::new(module.right(), weight.tau(), weight.g().clone())?;
    let traces = [weight, &right_weight];
    let units = [eval_trace(weight, &Poly::one())?, eval_trace(&right_weight, &Poly::one())?];
    if units.iter().any(|u| u.norm() == 0.0) {
        return Err(Error::DegenerateTrace { level: 0 });
    }
    let reverse = conj.reverse()?;

    // compatibility on low-degree basis pairs, with the raw traces
    let check_span = (truncation / 2).max(2);
    let m_basis = GradedBasis::new(module.clone(), check_span)?;
    let n_basis = GradedBasis::new(module.swapped(), check_span)?;
    let mut forward = 0.0f64;
    let mut backward = 0.0f64;
    for a in 0..m_basis.entries.len() {
        let m = m_basis.element(a);
        let twisted_m = reverse.apply_phi(&conj.apply_phi(&m)?)?;
        for b in 0..n_basis.entries.len() {
            if m_basis.entries[a].0 + n_basis.entries[b].0 != 0 {
                continue;
            }
            let n = n_basis.element(b);
            let twisted_n = conj.apply_phi(&reverse.apply_phi(&n)?)?;
            let t1 = eval_trace(weight, &module.morita_mul(&m, &n)?.coefficient(0))?;
            let t2 = eval_trace(&right_weight, &module.swapped().morita_mul(&n, &twisted_m)?.coefficient(0))?;
            forward = forward.max((t1 - t2).norm() / t1.norm().max(t2.norm()).max(1.0));
            let s2 = eval_trace(&right_weight, &module.swapped().morita_mul(&n, &m)?.coefficient(0))?;
            let s1 = eval_trace(weight, &module.morita_mul(&m, &twisted_n)?.coefficient(0))?;
            backward = backward.max((s2 - s1).norm() / s1.norm().max(s2.norm()).max(1.0));
        }
    }
    let residual = forward.max(backward);
    if residual > COMPATIBILITY_TOL {
        return Err(Error::CompatibilityViolation { residual });
    }

    let corners = [
        GradedBasis::new(Bimodule::regular(module.left()), truncation)?,
        GradedBasis::new(module.clone(), truncation)?,
        GradedBasis::new(module.swapped(), truncation)?,
        GradedBasis::new(Bimodule::regular(module.right()), truncation)?,
    ];
    let kinds = [Block::A11, Block::A12, Block::A21, Block::A22];
    let mut offsets = [0; 4];
    for i in 1..4 {
        offsets[i] = offsets[i - 1] + corners[i - 1].entries.len();
    }
    // merge the four bases by degree
    let mut order: Vec<(usize, usize)> =
        (0..4).flat_map(|c| (0..corners[c].entries.len()).map(move |i| (c, i))).collect();
    order.sort_by_key(|&(c, i)| (corners[c].entries[i].2, c, i));
    let dim = order.len();
    let mut position = vec![0; dim];
    for (p, &(c, i)) in order.iter().enumerate() {
        position[offsets[c] + i] = p;
    }
    let elems: Vec<_> = order.iter().map(|&(c, i)| corners[c].element(i)).collect();
    let blocks: Vec<Block> = order.iter().map(|&(c, _)| kinds[c]).collect();
    let labels = order.iter().map(|&(c, i)| format!("{:?}:{}", kinds[c], corners[c].label(i))).collect();
    let degrees = order.iter().map(|&(c, i)| corners[c].entries[i].2).collect();
    let weights = order.iter().map(|&(c, i)| corners[c].entries[i].0).collect();

    let algebra = TruncatedAlgebra::build(
        labels,
        degrees,
        weights,
        truncation,
        |a, b| {
            let mut v = vec![zero(); dim];
            let (r, s) = blocks[a].rows_cols();
            let (s2, t) = blocks[b].rows_cols();
            if s != s2 {
                return Ok(v);
            }
            let corner = kinds.iter().position(|&k| k == Block::from_rows_cols(r, t)).expect("four corners");
            let mut local = vec![zero(); corners[corner].entries.len()];
            corners[corner].coordinates(&(&elems[a] * &elems[b]), &mut local, 0, truncation)?;
            for (i, x) in local.into_iter().enumerate() {
                v[position[offsets[corner] + i]] += x;
            }
            Ok(v)
        },
        |a, b| {
            let (r, s) = blocks[a].rows_cols();
            let (s2, t) = blocks[b].rows_cols();
            if s != s2 || r != t {
                return Ok(zero());
            }
            let p = &elems[a] * &elems[b];
            if !p.terms().contains_key(&0) {
                return Ok(zero());
            }
            Ok(eval_trace(traces[r], &p.coefficient(0))? / units[r])
        },
    )?;
    let off_diagonal_trace = (0..dim)
        .filter(|&a| matches!(blocks[a], Block::A12 | Block::A21))
        .fold(0.0f64, |m, a| m.max(algebra.trace_of_basis(a).norm()));
    Ok(MatrixContext {
        algebra,
        blocks,
        unit_traces: (units[0], units[1]),
        forward_residual: forward,
        backward_residual: backward,
        off_diagonal_trace,
    })
}
