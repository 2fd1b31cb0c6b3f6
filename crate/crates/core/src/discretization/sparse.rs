//! Compressed-row storage and the direct sparse solve.

use faer::sparse::{SparseColMat, Triplet};
use faer::linalg::solvers::Solve;
use faer::Mat;

use super::{DiscreteField, DiscretizationError, LinearSystem};
use crate::C64;

/// Required relative residual `‖Ax − b‖ / ‖b‖`.
pub const RESIDUAL_TOL: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;

/// Accumulates `(row, col, value)` entries; duplicates are summed in
/// insertion order.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self { n, entries: Vec::with_capacity(cap) }
    }

    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i, j, v));
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut last = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n: self.n, row_ptr, col_idx, values }
    }
}

/// Square complex matrix in compressed row form with sorted columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(p) => self.values[lo + p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let mut s = C64::new(0.0, 0.0);
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.values[p] * x[self.col_idx[p]];
                }
                s
            })
            .collect()
    }

    /// Largest `|a_ij − a_ji|`, or infinity if the pattern is not symmetric.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                let (lo, hi) = (self.row_ptr[j], self.row_ptr[j + 1]);
                match self.col_idx[lo..hi].binary_search(&i) {
                    Ok(q) => worst = worst.max((self.values[p] - self.values[lo + q]).norm()),
                    Err(_) => return f64::INFINITY,
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub unknowns: usize,
    pub nnz: usize,
    pub residual: f64,
    pub refinement_steps: usize,
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn residual(a: &CsrMatrix, x: &[C64], b: &[C64]) -> Vec<C64> {
    a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

/// Solve `a x = b` by sparse LU with fill-reducing ordering and partial
/// pivoting, followed by iterative refinement.
pub fn solve_csr(a: &CsrMatrix, b: &[C64]) -> Result<(Vec<C64>, SolveStats), DiscretizationError> {
    let n = a.n;
    if b.len() != n {
        return Err(DiscretizationError::Dimension(format!("matrix {n}, rhs {}", b.len())));
    }
    let mut stats = SolveStats { unknowns: n, nnz: a.nnz(), residual: 0.0, refinement_steps: 0 };
    let bn = norm2(b);
    if bn == 0.0 {
        return Ok((vec![C64::new(0.0, 0.0); n], stats));
    }
    let mut trip = Vec::with_capacity(a.nnz());
    for i in 0..n {
        for p in a.row_ptr[i]..a.row_ptr[i + 1] {
            trip.push(Triplet::new(i, a.col_idx[p], a.values[p]));
        }
    }
    let mat = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| DiscretizationError::Dimension(format!("{e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| match e {
        faer::sparse::linalg::LuError::SymbolicSingular { index } => DiscretizationError::Singular { pivot: index },
        other => DiscretizationError::Dimension(format!("{other:?}")),
    })?;
    let apply = |rhs: &[C64]| -> Result<Vec<C64>, DiscretizationError> {
        let mut m = Mat::<C64>::from_fn(n, 1, |i, _| rhs[i]);
        lu.solve_in_place(m.as_mut());
        let x: Vec<C64> = (0..n).map(|i| m[(i, 0)]).collect();
        if let Some(p) = x.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(DiscretizationError::Singular { pivot: p });
        }
        Ok(x)
    };
    let mut x = apply(b)?;
    let mut r = residual(a, &x, b);
    let mut rel = norm2(&r) / bn;
    while rel > 0.1 * RESIDUAL_TOL && stats.refinement_steps < REFINEMENT_STEPS {
        let dx = apply(&r)?;
        let trial: Vec<C64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let tr = residual(a, &trial, b);
        let trel = norm2(&tr) / bn;
        stats.refinement_steps += 1;
        if !(trel < rel) {
            break;
        }
        x = trial;
        r = tr;
        rel = trel;
    }
    stats.residual = rel;
    if !(rel <= RESIDUAL_TOL) {
        return Err(DiscretizationError::Residual { residual: rel });
    }
    Ok((x, stats))
}

/// Solve an assembled system and return the nodal field (the gauge
/// multiplier, if any, is dropped).
pub fn solve_system(sys: &LinearSystem) -> Result<(DiscreteField, SolveStats), DiscretizationError> {
    let (x, stats) = solve_csr(&sys.matrix, &sys.rhs)?;
    let nodes = sys.mesh.num_nodes();
    Ok((DiscreteField::new(sys.mesh.clone(), x[..nodes].to_vec())?, stats))
}
