//! Sparse square solves by block-triangular decomposition.
//!
//! The technosphere graph of a product system is almost always a DAG with a
//! handful of small loops. Permuting the matrix to block upper-triangular
//! form (one block per strongly connected component) reduces the solve to
//! scalar divisions plus a dense LU per loop. Each unknown is computed from
//! the same operands in the same order whatever happens elsewhere in the
//! graph, so editing an unrelated part of the system leaves it bit-identical.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

/// Relative pivot size below which a block is treated as singular.
const PIVOT_TOLERANCE: f64 = 1e-13;
/// Residual (relative to max(1, ‖rhs‖∞)) that triggers iterative refinement.
pub const REFINE_THRESHOLD: f64 = 1e-9;
/// Residual (relative to ‖rhs‖∞) still present after refinement that marks the
/// system as numerically singular.
pub const REJECT_THRESHOLD: f64 = 1e-6;
const MAX_REFINEMENT_STEPS: usize = 3;

/// Compressed sparse matrix keeping both column and row access.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    // column-major
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    // row-major
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            *cells.entry((c, r)).or_insert(0.0) += v;
        }

        let mut col_ptr = vec![0; ncols + 1];
        let mut col_rows = Vec::with_capacity(cells.len());
        let mut col_vals = Vec::with_capacity(cells.len());
        for (&(c, r), &v) in &cells {
            col_ptr[c + 1] += 1;
            col_rows.push(r);
            col_vals.push(v);
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }

        let mut by_row: Vec<((usize, usize), f64)> = cells.into_iter().map(|((c, r), v)| ((r, c), v)).collect();
        by_row.sort_by_key(|&(k, _)| k);
        let mut row_ptr = vec![0; nrows + 1];
        let mut row_cols = Vec::with_capacity(by_row.len());
        let mut row_vals = Vec::with_capacity(by_row.len());
        for ((r, c), v) in by_row {
            row_ptr[r + 1] += 1;
            row_cols.push(c);
            row_vals.push(v);
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }

        SparseMatrix {
            nrows,
            ncols,
            col_ptr,
            col_rows,
            col_vals,
            row_ptr,
            row_cols,
            row_vals,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_vals.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.column(col).find(|&(r, _)| r == row).map_or(0.0, |(_, v)| v)
    }

    /// Stored `(row, value)` pairs of a column, ascending by row.
    pub fn column(&self, col: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.col_ptr[col]..self.col_ptr[col + 1];
        self.col_rows[span.clone()].iter().copied().zip(self.col_vals[span].iter().copied())
    }

    /// Stored `(col, value)` pairs of a row, ascending by column.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        self.row_cols[span.clone()].iter().copied().zip(self.row_vals[span].iter().copied())
    }

    /// `y = A·x`, each row summed left to right over stored entries.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).fold(0.0, |acc, (c, v)| acc + v * x[c]))
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for c in 0..self.ncols {
            for (r, v) in self.column(c) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Square sub-matrix on the given indices (used for both rows and columns),
    /// in the order given.
    pub fn principal_submatrix(&self, indices: &[usize]) -> SparseMatrix {
        let position: BTreeMap<usize, usize> = indices.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let triplets = indices.iter().enumerate().flat_map(|(new_c, &c)| {
            let position = &position;
            self.column(c)
                .filter_map(move |(r, v)| position.get(&r).map(|&new_r| (new_r, new_c, v)))
        });
        SparseMatrix::from_triplets(indices.len(), indices.len(), triplets.collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearSolveError {
    NotSquare { nrows: usize, ncols: usize },
    /// Indices of the block whose pivots vanished, or of the whole system when
    /// the residual check failed.
    Singular { indices: Vec<usize>, residual: f64 },
}

#[derive(Debug, Clone)]
enum Block {
    Scalar { index: usize, diagonal: f64 },
    Dense { indices: Vec<usize>, lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> },
}

impl Block {
    fn indices(&self) -> &[usize] {
        match self {
            Block::Scalar { index, .. } => std::slice::from_ref(index),
            Block::Dense { indices, .. } => indices,
        }
    }
}

/// Factorization of a square sparse matrix into its strongly connected
/// blocks, ordered so that every block only depends on earlier ones.
#[derive(Debug, Clone)]
pub struct BlockFactorization {
    matrix: SparseMatrix,
    blocks: Vec<Block>,
}

impl BlockFactorization {
    pub fn new(matrix: &SparseMatrix) -> Result<Self, LinearSolveError> {
        if matrix.nrows != matrix.ncols {
            return Err(LinearSolveError::NotSquare {
                nrows: matrix.nrows,
                ncols: matrix.ncols,
            });
        }
        let n = matrix.nrows;

        // Edge j -> i when x_i's equation involves x_j, i.e. x_j must be known first.
        let mut graph = DiGraph::<usize, ()>::with_capacity(n, matrix.nnz());
        let nodes: Vec<_> = (0..n).map(|i| graph.add_node(i)).collect();
        for j in 0..n {
            for (i, v) in matrix.column(j) {
                if i != j && v != 0.0 {
                    graph.add_edge(nodes[j], nodes[i], ());
                }
            }
        }
        let mut components = tarjan_scc(&graph);
        components.reverse();

        let mut blocks = Vec::with_capacity(components.len());
        for component in components {
            let mut indices: Vec<usize> = component.into_iter().map(|node| graph[node]).collect();
            indices.sort_unstable();
            if let [index] = indices[..] {
                let diagonal = matrix.get(index, index);
                let scale = matrix.column(index).fold(0.0_f64, |m, (_, v)| m.max(v.abs()));
                if !(diagonal.abs() > PIVOT_TOLERANCE * scale) || !diagonal.is_finite() {
                    return Err(LinearSolveError::Singular {
                        indices,
                        residual: f64::INFINITY,
                    });
                }
                blocks.push(Block::Scalar { index, diagonal });
            } else {
                let dense = matrix.principal_submatrix(&indices).to_dense();
                let lu = dense.lu();
                let pivots = lu.u().diagonal();
                let largest = pivots.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let smallest = pivots.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
                if !(smallest > PIVOT_TOLERANCE * largest) || !largest.is_finite() {
                    return Err(LinearSolveError::Singular {
                        indices,
                        residual: f64::INFINITY,
                    });
                }
                blocks.push(Block::Dense { indices, lu });
            }
        }

        Ok(BlockFactorization {
            matrix: matrix.clone(),
            blocks,
        })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows
    }

    /// Number of strongly connected blocks with more than one unknown.
    pub fn loop_count(&self) -> usize {
        self.blocks.iter().filter(|b| matches!(b, Block::Dense { .. })).count()
    }

    fn substitute(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.matrix.nrows;
        let mut x = vec![0.0; n];
        let mut in_block = vec![false; n];

        for block in &self.blocks {
            let indices = block.indices();
            for &i in indices {
                in_block[i] = true;
            }
            let local_rhs: Vec<f64> = indices
                .iter()
                .map(|&i| {
                    self.matrix
                        .row(i)
                        .filter(|&(j, _)| !in_block[j])
                        .fold(rhs[i], |acc, (j, v)| acc - v * x[j])
                })
                .collect();
            match block {
                Block::Scalar { index, diagonal } => x[*index] = local_rhs[0] / diagonal,
                Block::Dense { indices, lu } => {
                    let solved = lu
                        .solve(&DVector::from_vec(local_rhs))
                        .unwrap_or_else(|| DVector::from_element(indices.len(), f64::NAN));
                    for (k, &i) in indices.iter().enumerate() {
                        x[i] = solved[k];
                    }
                }
            }
            for &i in indices {
                in_block[i] = false;
            }
        }
        x
    }

    fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        self.matrix
            .mul_vec(x)
            .into_iter()
            .zip(rhs)
            .map(|(ax, b)| b - ax)
            .collect()
    }

    /// Solves `A·x = rhs` with residual-driven iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
        assert_eq!(rhs.len(), self.matrix.nrows);
        let rhs_norm = inf_norm(rhs);
        let mut x = self.substitute(rhs);
        let mut r = self.residual(&x, rhs);
        let mut r_norm = inf_norm(&r);

        let mut steps = 0;
        while !(r_norm <= REFINE_THRESHOLD * rhs_norm.max(1.0)) && steps < MAX_REFINEMENT_STEPS {
            let dx = self.substitute(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            r = self.residual(&x, rhs);
            r_norm = inf_norm(&r);
            steps += 1;
        }

        if !(r_norm <= REJECT_THRESHOLD * rhs_norm) || x.iter().any(|v| !v.is_finite()) {
            return Err(LinearSolveError::Singular {
                indices: (0..self.matrix.nrows).collect(),
                residual: r_norm,
            });
        }
        Ok(x)
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| if x.abs() > m || x.is_nan() { x.abs() } else { m })
}
