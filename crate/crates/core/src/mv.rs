//! Encrypted-vector times plaintext-matrix products.
//!
//! Four schemes share the same inputs and produce additive shares of `w x`:
//!
//! | scheme     | ScMult | standalone Perm   | hoisted Perm | Add                   |
//! |------------|--------|-------------------|--------------|-----------------------|
//! | naive      | `n_o`  | `n_o log n_i`     | 0            | `n_o log n_i`         |
//! | diagonal   | `n_i`  | 0                 | `n_i - 1`    | `n_i - 1`             |
//! | hybrid     | `T`    | `log(n / n_o)`    | `T - 1`      | `log(n / n_o) + T - 1`|
//! | GALA       | `T`    | `T - 1`           | 0            | `T - 1`               |
//!
//! with `T = n_i n_o / n` (at least one). Matrices with `n_i n_o < n` are
//! zero-padded to `n / n_i` rows so that one product fills every slot.
//!
//! # Packed layout
//!
//! The packed input holds `n / n_i` copies of `x`. Slot `j` is assigned the
//! row `r(j) = floor(j / n_i) * T + (j mod T)`, and the `t`-th plaintext is
//! `p_t[j] = w[r(j - t)][j mod n_i]`. Then
//! `m = sum_t rotate(p_t (.) x_pack, t)` holds at slot `j` the partial sum of
//! row `r(j)` over columns `j .. j + T`, and folding spans `n_i -> T` leaves row
//! `c T + o` complete at slot `c n_i + o`. The hybrid method computes the same
//! `m` by rotating the input instead of the products and folds it under
//! encryption; GALA folds the two shares in plaintext instead.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytics::{MvBlockPlan, MvScheme, MvShape, OpCounts};
use crate::error::dim_err;
use crate::he::{CostMeter, HeBackend, HeParams};
use crate::oracle::DenseMatrix;
use crate::ring::{fold_steps, SlotVector};
use crate::sharing::{finalize_shares, gen_additive_share, FoldSpec, SharePair};
use crate::Result;

/// One ciphertext-sized product: an `n_o x n_i` matrix with
/// `n_o <= n_i <= n`, all powers of two.
#[derive(Clone, Debug)]
pub struct MvTask {
    w: DenseMatrix,
    shape: MvShape,
    params: HeParams,
}

impl MvTask {
    pub fn new(w: DenseMatrix, params: HeParams) -> Result<Self> {
        let shape = MvShape::new(w.cols(), w.rows(), params.n)?;
        if w.modulus() != params.p {
            return Err(dim_err!(
                "matrix is mod {}, parameters use p = {}",
                w.modulus(),
                params.p
            ));
        }
        Ok(Self { w, shape, params })
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn shape(&self) -> MvShape {
        self.shape
    }

    pub fn params(&self) -> &HeParams {
        &self.params
    }

    /// Slot holding output row `j0` after the packed fold.
    pub fn slot_map(&self) -> Vec<usize> {
        let t = self.shape.groups();
        let n_i = self.shape.n_i;
        (0..self.shape.n_o).map(|j0| (j0 / t) * n_i + j0 % t).collect()
    }

    /// Row of the (padded) matrix whose partial sums occupy slot `j`.
    fn row_class(&self, j: usize) -> usize {
        let t = self.shape.groups();
        (j / self.shape.n_i) * t + j % t
    }
}

/// Everything a scheme run leaves behind.
#[derive(Clone, Debug)]
pub struct MvOutcome<C> {
    /// Output ciphertexts before masking; one per row for the naive scheme.
    pub outputs: Vec<C>,
    pub shares: SharePair,
    /// Slot of each output row in the (folded) output ciphertext.
    pub slot_map: Vec<usize>,
    /// Rotate-and-sum the share holders still apply.
    pub fold: FoldSpec,
    /// Primitives issued by the linear computation itself.
    pub counts: OpCounts,
    /// Primitives issued while masking the outputs.
    pub share_counts: OpCounts,
    /// Seed of the share-mask generator.
    pub seed: u64,
}

/// `x` zero-padded to `n` slots.
pub fn place_input(x: &[u64], params: &HeParams) -> Result<SlotVector> {
    if x.len() > params.n || !x.len().is_power_of_two() {
        return Err(dim_err!("input of length {} for {} slots", x.len(), params.n));
    }
    SlotVector::from_fn(params.n, params.p, |j| x.get(j).copied().unwrap_or(0))
}

/// `n / len(x)` back-to-back copies of `x`.
pub fn pack_input(x: &[u64], params: &HeParams) -> Result<SlotVector> {
    if x.len() > params.n || !x.len().is_power_of_two() {
        return Err(dim_err!("input of length {} for {} slots", x.len(), params.n));
    }
    SlotVector::from_fn(params.n, params.p, |j| x[j % x.len()])
}

/// The input layout each scheme expects.
pub fn encode_input(scheme: MvScheme, x: &[u64], params: &HeParams) -> Result<SlotVector> {
    match scheme {
        MvScheme::Naive => place_input(x, params),
        _ => pack_input(x, params),
    }
}

/// Row-diagonal plaintexts `p_0 .. p_{T-1}` of the packed layout.
pub fn encode_gala_weights(task: &MvTask) -> Result<Vec<SlotVector>> {
    let MvShape { n_i, n, .. } = task.shape;
    let p = task.params.p;
    (0..task.shape.groups())
        .map(|t| {
            SlotVector::from_fn(n, p, |j| {
                let row = task.row_class((j + n - t) % n);
                task.w.get(row, j % n_i)
            })
        })
        .collect()
}

fn mask_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sums `items`, metering one Add per combination.
fn sum_all<B: HeBackend>(
    backend: &B,
    items: impl IntoIterator<Item = B::Ciphertext>,
    meter: &CostMeter,
) -> Result<B::Ciphertext> {
    let mut it = items.into_iter();
    let mut acc = it.next().ok_or_else(|| dim_err!("nothing to sum"))?;
    for c in it {
        acc = backend.add(&acc, &c, meter)?;
    }
    Ok(acc)
}

/// Masks one output ciphertext and finishes the shares.
fn share_output<B: HeBackend>(
    backend: &B,
    out: &B::Ciphertext,
    fold: FoldSpec,
    slot_map: &[usize],
    seed: u64,
) -> Result<(SharePair, OpCounts)> {
    let meter = CostMeter::default();
    let mut rng = mask_rng(seed);
    let (r, masked) = gen_additive_share(backend, out, &mut rng, &meter)?;
    let plain = backend.decrypt(&masked)?;
    Ok((finalize_shares(&plain, &r, fold, slot_map)?, meter.snapshot()))
}

/// Row-wise products, each followed by a full ciphertext rotate-and-sum.
///
/// `ct_x` must hold `x` in slots `[0, n_i)`; row `i` ends up in slot 0 of the
/// `i`-th output ciphertext.
pub fn mv_naive<B: HeBackend>(
    backend: &B,
    task: &MvTask,
    ct_x: &B::Ciphertext,
    seed: u64,
    meter: &CostMeter,
) -> Result<MvOutcome<B::Ciphertext>> {
    let MvShape { n_i, n_o, n } = task.shape;
    let p = task.params.p;
    let before = meter.snapshot();
    let steps = fold_steps(n_i, 1, n)?;
    let mut outputs = Vec::with_capacity(n_o);
    for i in 0..n_o {
        let row = SlotVector::from_fn(n, p, |j| if j < n_i { task.w.get(i, j) } else { 0 })?;
        let mut acc = backend.sc_mult(ct_x, &row, meter)?;
        for &s in &steps {
            let rot = backend.perm(&acc, s, meter);
            acc = backend.add(&acc, &rot, meter)?;
        }
        outputs.push(acc);
    }
    let counts = meter.snapshot().delta_since(before);

    let share_meter = CostMeter::default();
    let mut rng = mask_rng(seed);
    let mut server = Vec::with_capacity(n_o);
    let mut client = Vec::with_capacity(n_o);
    for out in &outputs {
        let (r, masked) = gen_additive_share(backend, out, &mut rng, &share_meter)?;
        server.push(r[0]);
        client.push(backend.decrypt(&masked)?[0]);
    }
    Ok(MvOutcome {
        outputs,
        shares: SharePair {
            server_share: SlotVector::new(server, p)?,
            client_share: SlotVector::new(client, p)?,
        },
        slot_map: alloc::vec![0; n_o],
        fold: FoldSpec::identity(),
        counts,
        share_counts: share_meter.snapshot(),
        seed,
    })
}

/// Generalized-diagonal product over all `n_i` hoisted rotations of the
/// packed input. Rows land in slots `0 .. n_o` with no fold.
pub fn mv_diagonal<B: HeBackend>(
    backend: &B,
    task: &MvTask,
    ct_xpack: &B::Ciphertext,
    seed: u64,
    meter: &CostMeter,
) -> Result<MvOutcome<B::Ciphertext>> {
    let MvShape { n_i, n_o, n } = task.shape;
    let p = task.params.p;
    let before = meter.snapshot();
    let group = (n_i > 1).then(|| backend.dec_perm(ct_xpack, meter));
    let mut products = Vec::with_capacity(n_i);
    for k in 0..n_i {
        let diag = SlotVector::from_fn(n, p, |j| {
            if j < n_i {
                task.w.get(j % n_o, (j + k) % n_i)
            } else {
                0
            }
        })?;
        let rotated = match &group {
            Some(g) if k > 0 => backend.hst_perm(g, k, meter),
            _ => ct_xpack.clone(),
        };
        products.push(backend.sc_mult(&rotated, &diag, meter)?);
    }
    let out = sum_all(backend, products, meter)?;
    let counts = meter.snapshot().delta_since(before);

    let slot_map: Vec<usize> = (0..n_o).collect();
    let (shares, share_counts) = share_output(backend, &out, FoldSpec::identity(), &slot_map, seed)?;
    Ok(MvOutcome {
        outputs: alloc::vec![out],
        shares,
        slot_map,
        fold: FoldSpec::identity(),
        counts,
        share_counts,
        seed,
    })
}

/// Hybrid product: `T` packed diagonals against hoisted input rotations,
/// then `log(n_i / T)` encrypted rotate-and-sum steps.
pub fn mv_hybrid_gazelle<B: HeBackend>(
    backend: &B,
    task: &MvTask,
    ct_xpack: &B::Ciphertext,
    seed: u64,
    meter: &CostMeter,
) -> Result<MvOutcome<B::Ciphertext>> {
    let MvShape { n_i, n, .. } = task.shape;
    let t_groups = task.shape.groups();
    let before = meter.snapshot();
    let plaintexts = encode_gala_weights(task)?;
    let group = (t_groups > 1).then(|| backend.dec_perm(ct_xpack, meter));
    let mut products = Vec::with_capacity(t_groups);
    for (t, pt) in plaintexts.iter().enumerate() {
        let rotated = match &group {
            Some(g) if t > 0 => backend.hst_perm(g, t, meter),
            _ => ct_xpack.clone(),
        };
        products.push(backend.sc_mult(&rotated, &pt.rotate_left(t), meter)?);
    }
    let mut acc = sum_all(backend, products, meter)?;
    for s in fold_steps(n_i, t_groups, n)? {
        let rot = backend.perm(&acc, s, meter);
        acc = backend.add(&acc, &rot, meter)?;
    }
    let counts = meter.snapshot().delta_since(before);

    let slot_map = task.slot_map();
    let (shares, share_counts) = share_output(backend, &acc, FoldSpec::identity(), &slot_map, seed)?;
    Ok(MvOutcome {
        outputs: alloc::vec![acc],
        shares,
        slot_map,
        fold: FoldSpec::identity(),
        counts,
        share_counts,
        seed,
    })
}

/// Row-encoding with share-side rotate-and-sum: `T` products, `T - 1`
/// output rotations, and the `n_i -> T` fold left to the share holders.
pub fn mv_gala<B: HeBackend>(
    backend: &B,
    task: &MvTask,
    ct_xpack: &B::Ciphertext,
    seed: u64,
    meter: &CostMeter,
) -> Result<MvOutcome<B::Ciphertext>> {
    let n_i = task.shape.n_i;
    let t_groups = task.shape.groups();
    let before = meter.snapshot();
    let plaintexts = encode_gala_weights(task)?;
    let mut parts = Vec::with_capacity(t_groups);
    for (t, pt) in plaintexts.iter().enumerate() {
        let prod = backend.sc_mult(ct_xpack, pt, meter)?;
        parts.push(backend.perm(&prod, t, meter));
    }
    let out = sum_all(backend, parts, meter)?;
    let counts = meter.snapshot().delta_since(before);

    let fold = FoldSpec { start_span: n_i, end_span: t_groups };
    let slot_map = task.slot_map();
    let (shares, share_counts) = share_output(backend, &out, fold, &slot_map, seed)?;
    Ok(MvOutcome {
        outputs: alloc::vec![out],
        shares,
        slot_map,
        fold,
        counts,
        share_counts,
        seed,
    })
}

/// Dispatches to the scheme; `ct` must use [`encode_input`]'s layout.
pub fn run_mv<B: HeBackend>(
    scheme: MvScheme,
    backend: &B,
    task: &MvTask,
    ct: &B::Ciphertext,
    seed: u64,
    meter: &CostMeter,
) -> Result<MvOutcome<B::Ciphertext>> {
    match scheme {
        MvScheme::Naive => mv_naive(backend, task, ct, seed, meter),
        MvScheme::Diagonal => mv_diagonal(backend, task, ct, seed, meter),
        MvScheme::Gazelle => mv_hybrid_gazelle(backend, task, ct, seed, meter),
        MvScheme::Gala => mv_gala(backend, task, ct, seed, meter),
    }
}

/// Shares of an arbitrary-size product assembled from per-block runs.
#[derive(Clone, Debug)]
pub struct BlockedMv<C> {
    pub plan: MvBlockPlan,
    /// Server share per output row (length `n_o`).
    pub server_share: Vec<u64>,
    /// Client share per output row (length `n_o`).
    pub client_share: Vec<u64>,
    pub counts: OpCounts,
    /// Output ciphertexts of every block, in block order.
    pub outputs: Vec<C>,
}

impl<C> BlockedMv<C> {
    pub fn reconstruct(&self, p: u64) -> Vec<u64> {
        self.server_share
            .iter()
            .zip(&self.client_share)
            .map(|(&a, &b)| (a + b) % p)
            .collect()
    }
}

fn block_seed(seed: u64, idx: usize) -> u64 {
    seed ^ (idx as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Pads `w` (any size) to powers of two, splits it into ciphertext-sized
/// blocks, runs `scheme` on each with a freshly encrypted input block and
/// sums the shares of column blocks.
pub fn mv_blocked<B: HeBackend>(
    scheme: MvScheme,
    backend: &B,
    w: &DenseMatrix,
    x: &[u64],
    seed: u64,
    meter: &CostMeter,
) -> Result<BlockedMv<B::Ciphertext>> {
    let params = *backend.params();
    if x.len() != w.cols() {
        return Err(dim_err!("vector of length {} against {} columns", x.len(), w.cols()));
    }
    let plan = MvBlockPlan::new(w.cols(), w.rows(), params.n)?;
    let (bc, br) = (plan.block_cols, plan.block_rows);
    let p = params.p;
    let mut server = alloc::vec![0u64; plan.row_blocks * br];
    let mut client = alloc::vec![0u64; plan.row_blocks * br];
    let mut counts = OpCounts::default();
    let mut outputs = Vec::new();
    for rb in 0..plan.row_blocks {
        for cb in 0..plan.col_blocks {
            let sub = DenseMatrix::from_fn(br, bc, p, |i, j| w.get(rb * br + i, cb * bc + j));
            let xs: Vec<u64> = (0..bc).map(|j| x.get(cb * bc + j).map_or(0, |v| v % p)).collect();
            let task = MvTask::new(sub, params)?;
            let ct = backend.encrypt(&encode_input(scheme, &xs, &params)?)?;
            let idx = rb * plan.col_blocks + cb;
            let out = run_mv(scheme, backend, &task, &ct, block_seed(seed, idx), meter)?;
            for i in 0..br {
                let row = rb * br + i;
                server[row] = (server[row] + out.shares.server_share[i]) % p;
                client[row] = (client[row] + out.shares.client_share[i]) % p;
            }
            counts = counts + out.counts;
            outputs.extend(out.outputs);
        }
    }
    server.truncate(w.rows());
    client.truncate(w.rows());
    Ok(BlockedMv { plan, server_share: server, client_share: client, counts, outputs })
}
