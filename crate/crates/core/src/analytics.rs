//! Closed-form operation counts, noise predictions and time estimates.
//!
//! These are the analytic mirror of what the schemes in [`crate::mv`] and
//! [`crate::conv`] record on a [`crate::CostMeter`]; the test-suites require
//! the two to agree exactly.

use core::iter::Sum;
use core::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err};
use crate::he::{CostModel, HeParams};
use crate::Result;

/// How rotations are reported.
///
/// `Table2` keeps standalone rotations (`perm`) apart from hoisted ones
/// (`dec_perm` / `hst_perm`). `Table7` additionally books every standalone
/// rotation as one decomposition plus one hoisted step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountView {
    #[default]
    Table2,
    Table7,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpCounts {
    pub perm: u64,
    pub dec_perm: u64,
    pub hst_perm: u64,
    pub sc_mult: u64,
    pub add: u64,
    pub view: CountView,
}

impl OpCounts {
    pub fn to_table7(self) -> Self {
        match self.view {
            CountView::Table7 => self,
            CountView::Table2 => Self {
                dec_perm: self.dec_perm + self.perm,
                hst_perm: self.hst_perm + self.perm,
                view: CountView::Table7,
                ..self
            },
        }
    }

    pub fn to_table2(self) -> Self {
        match self.view {
            CountView::Table2 => self,
            CountView::Table7 => Self {
                dec_perm: self.dec_perm - self.perm,
                hst_perm: self.hst_perm - self.perm,
                view: CountView::Table2,
                ..self
            },
        }
    }

    /// Difference of two table-2 snapshots of the same meter.
    pub fn delta_since(self, earlier: OpCounts) -> OpCounts {
        let (a, b) = (self.to_table2(), earlier.to_table2());
        OpCounts {
            perm: a.perm - b.perm,
            dec_perm: a.dec_perm - b.dec_perm,
            hst_perm: a.hst_perm - b.hst_perm,
            sc_mult: a.sc_mult - b.sc_mult,
            add: a.add - b.add,
            view: CountView::Table2,
        }
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, rhs: OpCounts) -> OpCounts {
        let (a, b) = if self.view == rhs.view {
            (self, rhs)
        } else {
            (self.to_table2(), rhs.to_table2())
        };
        OpCounts {
            perm: a.perm + b.perm,
            dec_perm: a.dec_perm + b.dec_perm,
            hst_perm: a.hst_perm + b.hst_perm,
            sc_mult: a.sc_mult + b.sc_mult,
            add: a.add + b.add,
            view: a.view,
        }
    }
}

impl Mul<u64> for OpCounts {
    type Output = OpCounts;

    fn mul(self, k: u64) -> OpCounts {
        OpCounts {
            perm: self.perm * k,
            dec_perm: self.dec_perm * k,
            hst_perm: self.hst_perm * k,
            sc_mult: self.sc_mult * k,
            add: self.add * k,
            view: self.view,
        }
    }
}

impl Sum for OpCounts {
    fn sum<I: Iterator<Item = OpCounts>>(iter: I) -> OpCounts {
        iter.fold(OpCounts::default(), |a, b| a + b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MvScheme {
    /// One row per plaintext, full rotate-and-sum per row.
    Naive,
    /// Generalized diagonals of the whole matrix, all hoisted input rotations.
    Diagonal,
    /// Packed diagonals followed by a ciphertext rotate-and-sum.
    Gazelle,
    /// Pre-rotated row diagonals, rotate-and-sum deferred to the shares.
    Gala,
}

impl MvScheme {
    pub const ALL: [MvScheme; 4] = [
        MvScheme::Naive,
        MvScheme::Diagonal,
        MvScheme::Gazelle,
        MvScheme::Gala,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MvScheme::Naive => "naive",
            MvScheme::Diagonal => "diagonal",
            MvScheme::Gazelle => "gazelle",
            MvScheme::Gala => "gala",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvScheme {
    /// Output rotation: every kernel sub-block is rotated into place.
    Gazelle,
    /// Kernel grouping: add across input blocks, then rotate per output block.
    Gala,
}

impl ConvScheme {
    pub const ALL: [ConvScheme; 2] = [ConvScheme::Gazelle, ConvScheme::Gala];

    pub fn name(self) -> &'static str {
        match self {
            ConvScheme::Gazelle => "gazelle",
            ConvScheme::Gala => "gala",
        }
    }
}

fn log2(v: usize) -> u64 {
    v.trailing_zeros() as u64
}

/// Validated matrix-vector dimensions for a single ciphertext block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MvShape {
    pub n_i: usize,
    pub n_o: usize,
    pub n: usize,
}

impl MvShape {
    pub fn new(n_i: usize, n_o: usize, n: usize) -> Result<Self> {
        if !n_i.is_power_of_two() || !n_o.is_power_of_two() || !n.is_power_of_two() {
            return Err(dim_err!("n_i = {n_i}, n_o = {n_o}, n = {n} must be powers of two"));
        }
        if n_o > n_i || n_i > n {
            return Err(dim_err!(
                "need n_o <= n_i <= n, got n_o = {n_o}, n_i = {n_i}, n = {n}"
            ));
        }
        Ok(Self { n_i, n_o, n })
    }

    /// Input copies packed into one ciphertext.
    pub fn copies(&self) -> usize {
        self.n / self.n_i
    }

    /// Output rows after zero-padding so that one product fills all slots.
    pub fn padded_n_o(&self) -> usize {
        self.n_o.max(self.copies())
    }

    /// Number of packed diagonal groups, `max(1, n_i * n_o / n)`.
    pub fn groups(&self) -> usize {
        self.n_i * self.padded_n_o() / self.n
    }
}

/// Table-2 view operation count of one matrix-vector block.
pub fn count_mv(scheme: MvScheme, n_i: usize, n_o: usize, n: usize) -> Result<OpCounts> {
    let s = MvShape::new(n_i, n_o, n)?;
    let t = s.groups() as u64;
    let c = match scheme {
        MvScheme::Naive => {
            let r = n_o as u64 * log2(n_i);
            OpCounts { perm: r, sc_mult: n_o as u64, add: r, ..OpCounts::default() }
        }
        MvScheme::Diagonal => {
            let ni = n_i as u64;
            OpCounts {
                dec_perm: u64::from(ni > 1),
                hst_perm: ni - 1,
                sc_mult: ni,
                add: ni - 1,
                ..OpCounts::default()
            }
        }
        MvScheme::Gazelle => {
            let ras = log2(n / s.padded_n_o());
            OpCounts {
                perm: ras,
                dec_perm: u64::from(t > 1),
                hst_perm: t - 1,
                sc_mult: t,
                add: ras + t - 1,
                ..OpCounts::default()
            }
        }
        MvScheme::Gala => OpCounts {
            perm: t - 1,
            sc_mult: t,
            add: t - 1,
            ..OpCounts::default()
        },
    };
    Ok(c)
}

/// How an arbitrary `n_o x n_i` product is padded and cut into blocks that
/// each fit one ciphertext.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MvBlockPlan {
    pub n_i: usize,
    pub n_o: usize,
    pub n: usize,
    /// Columns per block (a power of two `<= n`).
    pub block_cols: usize,
    /// Rows per block (a power of two `<= block_cols`).
    pub block_rows: usize,
    pub col_blocks: usize,
    pub row_blocks: usize,
}

impl MvBlockPlan {
    pub fn new(n_i: usize, n_o: usize, n: usize) -> Result<Self> {
        if n_i == 0 || n_o == 0 {
            return Err(dim_err!("empty matrix {n_o} x {n_i}"));
        }
        if !n.is_power_of_two() {
            return Err(param_err!("slot count {n} is not a power of two"));
        }
        let mut cols = n_i.next_power_of_two();
        let rows = n_o.next_power_of_two();
        if rows > cols && cols < n {
            cols = rows.min(n);
        }
        let block_cols = cols.min(n);
        let block_rows = rows.min(block_cols);
        Ok(Self {
            n_i,
            n_o,
            n,
            block_cols,
            block_rows,
            col_blocks: cols / block_cols,
            row_blocks: rows / block_rows,
        })
    }

    pub fn blocks(&self) -> usize {
        self.col_blocks * self.row_blocks
    }
}

/// Operation count of an arbitrary-size product under [`MvBlockPlan`].
pub fn count_mv_blocked(scheme: MvScheme, n_i: usize, n_o: usize, n: usize) -> Result<OpCounts> {
    let plan = MvBlockPlan::new(n_i, n_o, n)?;
    Ok(count_mv(scheme, plan.block_cols, plan.block_rows, n)? * plan.blocks() as u64)
}

/// Dimensions of a stride-1, same-padded multi-channel convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConvShape {
    pub u_w: usize,
    pub u_h: usize,
    pub c_i: usize,
    pub c_o: usize,
    pub k_w: usize,
    pub k_h: usize,
    pub n: usize,
}

impl ConvShape {
    /// Checks everything except channel alignment.
    pub fn validate(&self) -> Result<()> {
        let Self { u_w, u_h, c_i, c_o, k_w, k_h, n } = *self;
        if u_w == 0 || u_h == 0 || c_i == 0 || c_o == 0 {
            return Err(dim_err!("convolution dimensions must be non-zero"));
        }
        if k_w % 2 == 0 || k_h % 2 == 0 {
            return Err(dim_err!("kernel {k_w}x{k_h} must have odd dimensions"));
        }
        if k_w > 2 * u_w - 1 || k_h > 2 * u_h - 1 {
            return Err(dim_err!("kernel {k_w}x{k_h} too large for a {u_w}x{u_h} image"));
        }
        if !n.is_power_of_two() {
            return Err(param_err!("slot count {n} is not a power of two"));
        }
        if u_w * u_h > n {
            return Err(dim_err!("image {u_w}x{u_h} does not fit in {n} slots"));
        }
        let cn = n / (u_w * u_h);
        if !cn.is_power_of_two() {
            return Err(dim_err!("channels per ciphertext {cn} is not a power of two"));
        }
        if cn > 1 && cn * u_w * u_h != n {
            return Err(dim_err!(
                "{cn} channel bands of {u_w}x{u_h} do not tile {n} slots exactly"
            ));
        }
        Ok(())
    }

    /// Channels packed per ciphertext.
    pub fn c_n(&self) -> usize {
        self.n / (self.u_w * self.u_h)
    }

    pub fn kernel_area(&self) -> usize {
        self.k_w * self.k_h
    }

    /// Same shape with `c_i` and `c_o` rounded up to multiples of `c_n`.
    pub fn padded(&self) -> Self {
        let cn = self.c_n().max(1);
        Self {
            c_i: self.c_i.div_ceil(cn) * cn,
            c_o: self.c_o.div_ceil(cn) * cn,
            ..*self
        }
    }

    pub fn is_aligned(&self) -> bool {
        let cn = self.c_n();
        cn > 0 && self.c_i.is_multiple_of(cn) && self.c_o.is_multiple_of(cn)
    }
}

/// Table-2 view count of a MIMO convolution (channels padded to `c_n`).
pub fn count_conv(scheme: ConvScheme, shape: &ConvShape) -> Result<OpCounts> {
    shape.validate()?;
    let s = shape.padded();
    let cn = s.c_n() as u64;
    let k2 = s.kernel_area() as u64;
    let bi = s.c_i as u64 / cn;
    let bo = s.c_o as u64 / cn;
    let perm = match scheme {
        ConvScheme::Gazelle => bi * bo * (cn - 1),
        ConvScheme::Gala => bo * (cn - 1),
    };
    Ok(OpCounts {
        perm,
        dec_perm: if k2 > 1 { bi } else { 0 },
        hst_perm: bi * (k2 - 1),
        sc_mult: k2 * bi * s.c_o as u64,
        add: bo * (s.c_i as u64 * k2 - 1),
        view: CountView::Table2,
    })
}

/// Count of a single-channel raster-scan convolution.
pub fn count_siso(k_w: usize, k_h: usize) -> OpCounts {
    let k2 = (k_w * k_h) as u64;
    OpCounts {
        dec_perm: u64::from(k2 > 1),
        hst_perm: k2 - 1,
        sc_mult: k2,
        add: k2 - 1,
        ..OpCounts::default()
    }
}

/// Which output's noise to predict.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseQuery {
    Mv { scheme: MvScheme, n_i: usize, n_o: usize, n: usize },
    Conv { scheme: ConvScheme, shape: ConvShape },
}

/// Noise of a linear-layer output ciphertext (before share masking), given a
/// fresh input.
pub fn predict_noise(query: &NoiseQuery, params: &HeParams) -> Result<f64> {
    let (e0, em, er) = (params.eta0, params.eta_mult, params.eta_rot);
    match *query {
        NoiseQuery::Mv { scheme, n_i, n_o, n } => {
            let s = MvShape::new(n_i, n_o, n)?;
            let ni = n_i as f64;
            Ok(match scheme {
                MvScheme::Naive => ni * e0 * em + (ni - 1.0) * er,
                MvScheme::Diagonal => ni * e0 * em + (ni - 1.0) * er * em,
                MvScheme::Gazelle => {
                    let no = s.padded_n_o();
                    let mult_rot = ((n_i * no - n) / no) as f64;
                    let ras_rot = ((n - no) / no) as f64;
                    ni * e0 * em + (mult_rot * em + ras_rot) * er
                }
                MvScheme::Gala => {
                    let t = s.groups() as f64;
                    t * e0 * em + (t - 1.0) * er
                }
            })
        }
        NoiseQuery::Conv { scheme, shape } => {
            shape.validate()?;
            let s = shape.padded();
            let k2 = s.kernel_area() as f64;
            let ci = s.c_i as f64;
            let cn = s.c_n() as f64;
            let eta_delta = k2 * em * e0 + (k2 - 1.0) * er * em;
            Ok(match scheme {
                ConvScheme::Gazelle => ci * eta_delta + (ci / cn) * (cn - 1.0) * er,
                ConvScheme::Gala => ci * eta_delta + (cn - 1.0) * er,
            })
        }
    }
}

/// Milliseconds implied by `counts` under `model`.
pub fn estimate_time(counts: &OpCounts, model: &CostModel) -> f64 {
    let c = counts.to_table2();
    c.perm as f64 * model.t_perm
        + c.dec_perm as f64 * model.t_decperm
        + c.hst_perm as f64 * model.t_hstperm
        + c.sc_mult as f64 * model.t_scmult
        + c.add as f64 * model.t_add
}
