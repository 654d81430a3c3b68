//! Plaintext ground truth. Deliberately naive loops over `u128`, sharing no
//! code with the packed schemes.
//!
//! Sums are reduced once per output when `p < 2^32`: every product is then
//! below `2^64`, so a `u128` accumulator cannot overflow.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::dim_err;
use crate::Result;

/// Row-major `rows x cols` matrix over `Z_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
    modulus: u64,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<u64>, modulus: u64) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(dim_err!(
                "{} entries for a {rows} x {cols} matrix",
                entries.len()
            ));
        }
        if entries.iter().any(|&e| e >= modulus) {
            return Err(dim_err!("matrix entry not reduced mod {modulus}"));
        }
        Ok(Self { rows, cols, entries, modulus })
    }

    pub fn from_fn(rows: usize, cols: usize, modulus: u64, mut f: impl FnMut(usize, usize) -> u64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j) % modulus);
            }
        }
        Self { rows, cols, entries, modulus }
    }

    pub fn zeros(rows: usize, cols: usize, modulus: u64) -> Self {
        Self::from_fn(rows, cols, modulus, |_, _| 0)
    }

    pub fn identity(size: usize, modulus: u64) -> Self {
        Self::from_fn(size, size, modulus, |i, j| u64::from(i == j))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Entry `(i, j)`; zero outside the stored bounds, which lets callers
    /// treat the matrix as implicitly zero-padded.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        if i < self.rows && j < self.cols {
            self.entries[i * self.cols + j]
        } else {
            0
        }
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }
}

/// `out[i] = sum_j w[i][j] * x[j] mod p`.
pub fn dot_mod_p(w: &DenseMatrix, x: &[u64]) -> Result<Vec<u64>> {
    if x.len() != w.cols {
        return Err(dim_err!("vector of length {} against {} columns", x.len(), w.cols));
    }
    let p = w.modulus as u128;
    let wide = w.modulus > u32::MAX as u64;
    let mut out = vec![0u64; w.rows];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc: u128 = 0;
        for (j, &xj) in x.iter().enumerate() {
            acc += w.entries[i * w.cols + j] as u128 * (xj % w.modulus) as u128;
            if wide {
                acc %= p;
            }
        }
        *o = (acc % p) as u64;
    }
    Ok(out)
}

/// Kernel bank and image geometry for [`conv2d_mod_p`].
///
/// `kernels` is laid out `[c_o][c_i][k_h][k_w]`; inputs are `c_i` row-major
/// `u_h x u_w` grids.
#[derive(Clone, Copy, Debug)]
pub struct ConvGeometry<'a> {
    pub u_w: usize,
    pub u_h: usize,
    pub c_i: usize,
    pub c_o: usize,
    pub k_w: usize,
    pub k_h: usize,
    pub kernels: &'a [u64],
    pub modulus: u64,
}

/// Same-padded, stride-1, multi-channel cross-correlation mod `p`:
/// `out[o][y][x] = sum_{i,dy,dx} K[o][i][dy][dx] * in[i][y+dy-ch][x+dx-cw]`
/// with out-of-image pixels read as zero.
pub fn conv2d_mod_p(g: &ConvGeometry<'_>, inputs: &[Vec<u64>]) -> Result<Vec<Vec<u64>>> {
    if g.k_w.is_multiple_of(2) || g.k_h.is_multiple_of(2) {
        return Err(dim_err!("kernel {}x{} must be odd", g.k_w, g.k_h));
    }
    if inputs.len() != g.c_i || inputs.iter().any(|c| c.len() != g.u_w * g.u_h) {
        return Err(dim_err!("expected {} input grids of {} pixels", g.c_i, g.u_w * g.u_h));
    }
    if g.kernels.len() != g.c_o * g.c_i * g.k_h * g.k_w {
        return Err(dim_err!("kernel bank has {} coefficients", g.kernels.len()));
    }
    let p = g.modulus as u128;
    let wide = g.modulus > u32::MAX as u64;
    let (cw, ch) = ((g.k_w / 2) as isize, (g.k_h / 2) as isize);
    let mut out = vec![vec![0u64; g.u_w * g.u_h]; g.c_o];
    for (o, grid) in out.iter_mut().enumerate() {
        for y in 0..g.u_h as isize {
            for x in 0..g.u_w as isize {
                let mut acc: u128 = 0;
                for (i, input) in inputs.iter().enumerate().take(g.c_i) {
                    for dy in 0..g.k_h as isize {
                        for dx in 0..g.k_w as isize {
                            let sy = y + dy - ch;
                            let sx = x + dx - cw;
                            if sy < 0 || sx < 0 || sy >= g.u_h as isize || sx >= g.u_w as isize {
                                continue;
                            }
                            let k = g.kernels[((o * g.c_i + i) * g.k_h + dy as usize) * g.k_w + dx as usize];
                            let v = input[sy as usize * g.u_w + sx as usize];
                            acc += (k % g.modulus) as u128 * (v % g.modulus) as u128;
                            if wide {
                                acc %= p;
                            }
                        }
                    }
                }
                grid[y as usize * g.u_w + x as usize] = (acc % p) as u64;
            }
        }
    }
    Ok(out)
}
