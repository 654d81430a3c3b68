//! Multi-channel 2-D convolution on packed ciphertexts.
//!
//! Each ciphertext carries `c_n = n / (u_w u_h)` channel bands; band `ch`
//! occupies slots `[ch u_w u_h, (ch + 1) u_w u_h)` in row-major order. Kernel
//! offset `(dw, dh)` reads the input rotated left by `dh u_w + dw`, with a
//! mask that drops sources outside the image (and so across band borders).
//!
//! For an input block `ib` and output block `ob` the kernel bank is split into
//! `c_n` diagonals; diagonal `l` maps input band `ch` to output channel
//! `ob c_n + (ch - l) mod c_n` and lines up with the output after a left
//! rotation by `l u_w u_h`. The hybrid schedule rotates every diagonal of every
//! `(ob, ib)` pair; GALA first sums diagonal `l` over all input blocks and
//! rotates once per `l`.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytics::{ConvScheme, ConvShape, OpCounts};
use crate::error::dim_err;
use crate::he::{CostMeter, HeBackend, HeParams};
use crate::ring::SlotVector;
use crate::sharing::{finalize_shares, gen_additive_share, FoldSpec, SharePair};
use crate::Result;

/// A convolution layer with its kernel bank laid out `[c_o][c_i][k_h][k_w]`.
#[derive(Clone, Debug)]
pub struct ConvTask {
    shape: ConvShape,
    kernels: Vec<u64>,
    params: HeParams,
}

impl ConvTask {
    pub fn new(shape: ConvShape, kernels: Vec<u64>, params: HeParams) -> Result<Self> {
        shape.validate()?;
        if shape.n != params.n {
            return Err(dim_err!("shape uses {} slots, parameters {}", shape.n, params.n));
        }
        let expected = shape.c_o * shape.c_i * shape.k_h * shape.k_w;
        if kernels.len() != expected {
            return Err(dim_err!("kernel bank has {} coefficients, expected {expected}", kernels.len()));
        }
        if kernels.iter().any(|&k| k >= params.p) {
            return Err(dim_err!("kernel coefficient not reduced mod {}", params.p));
        }
        Ok(Self { shape, kernels, params })
    }

    pub fn shape(&self) -> &ConvShape {
        &self.shape
    }

    /// Shape with channels rounded up to whole ciphertexts.
    pub fn padded(&self) -> ConvShape {
        self.shape.padded()
    }

    pub fn params(&self) -> &HeParams {
        &self.params
    }

    pub fn kernels(&self) -> &[u64] {
        &self.kernels
    }

    /// Coefficient `K[o][i][dy][dx]`; zero for padding channels.
    pub fn kernel(&self, o: usize, i: usize, dy: usize, dx: usize) -> u64 {
        let s = &self.shape;
        if o >= s.c_o || i >= s.c_i {
            return 0;
        }
        self.kernels[((o * s.c_i + i) * s.k_h + dy) * s.k_w + dx]
    }
}

/// One kernel offset relative to the centre tap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OffsetMask {
    pub dw: isize,
    pub dh: isize,
    /// Left rotation that brings the source pixel onto the output pixel.
    pub rotation: usize,
    /// Per slot: does the source lie inside the same band's image?
    pub mask: Vec<bool>,
}

/// Offsets of a `k_w x k_h` kernel in row-major tap order.
pub fn offset_masks(shape: &ConvShape) -> Result<Vec<OffsetMask>> {
    shape.validate()?;
    let (u_w, u_h, n) = (shape.u_w as isize, shape.u_h as isize, shape.n);
    let area = shape.u_w * shape.u_h;
    let bands = shape.c_n();
    let (cw, ch) = ((shape.k_w / 2) as isize, (shape.k_h / 2) as isize);
    let mut out = Vec::with_capacity(shape.kernel_area());
    for dy in 0..shape.k_h as isize {
        for dx in 0..shape.k_w as isize {
            let (dw, dh) = (dx - cw, dy - ch);
            let rotation = (dh * u_w + dw).rem_euclid(n as isize) as usize;
            let mask = (0..n)
                .map(|j| {
                    if j >= bands * area {
                        return false;
                    }
                    let pix = (j % area) as isize;
                    let (y, x) = (pix / u_w + dh, pix % u_w + dw);
                    (0..u_h).contains(&y) && (0..u_w).contains(&x)
                })
                .collect();
            out.push(OffsetMask { dw, dh, rotation, mask });
        }
    }
    Ok(out)
}

/// Lays `inputs` (one row-major grid per channel) into `ceil(c_i / c_n)`
/// slot vectors.
pub fn pack_channels(inputs: &[Vec<u64>], shape: &ConvShape, p: u64) -> Result<Vec<SlotVector>> {
    shape.validate()?;
    let area = shape.u_w * shape.u_h;
    if inputs.len() != shape.c_i || inputs.iter().any(|c| c.len() != area) {
        return Err(dim_err!("expected {} channels of {area} pixels", shape.c_i));
    }
    let cn = shape.c_n();
    (0..shape.c_i.div_ceil(cn))
        .map(|b| {
            SlotVector::from_fn(shape.n, p, |j| {
                let c = b * cn + j / area;
                if j / area < cn && c < inputs.len() {
                    inputs[c][j % area] % p
                } else {
                    0
                }
            })
        })
        .collect()
}

/// Inverse of [`pack_channels`] for the first `channels` channels.
pub fn unpack_channels(packed: &[SlotVector], shape: &ConvShape, channels: usize) -> Result<Vec<Vec<u64>>> {
    let area = shape.u_w * shape.u_h;
    let cn = shape.c_n();
    if packed.len() * cn < channels {
        return Err(dim_err!("{} ciphertexts cannot hold {channels} channels", packed.len()));
    }
    Ok((0..channels)
        .map(|c| {
            let v = &packed[c / cn];
            (0..area).map(|px| v[(c % cn) * area + px]).collect()
        })
        .collect())
}

/// Single-channel convolution of the image in slots `[0, u_w u_h)`.
pub fn siso_conv<B: HeBackend>(
    backend: &B,
    ct: &B::Ciphertext,
    kernel2d: &[u64],
    shape: &ConvShape,
    meter: &CostMeter,
) -> Result<B::Ciphertext> {
    let offsets = offset_masks(shape)?;
    if kernel2d.len() != offsets.len() {
        return Err(dim_err!("kernel has {} taps, expected {}", kernel2d.len(), offsets.len()));
    }
    let area = shape.u_w * shape.u_h;
    let p = backend.params().p;
    let group = (offsets.len() > 1).then(|| backend.dec_perm(ct, meter));
    let mut acc: Option<B::Ciphertext> = None;
    for (om, &k) in offsets.iter().zip(kernel2d) {
        let pt = SlotVector::from_fn(shape.n, p, |j| if j < area && om.mask[j] { k % p } else { 0 })?;
        let src = match &group {
            Some(g) => backend.hst_perm(g, om.rotation, meter),
            None => ct.clone(),
        };
        let term = backend.sc_mult(&src, &pt, meter)?;
        acc = Some(match acc {
            Some(a) => backend.add(&a, &term, meter)?,
            None => term,
        });
    }
    acc.ok_or_else(|| dim_err!("empty kernel"))
}

/// Left rotation aligning diagonal `l` with the output bands.
pub fn mimo_output_rotation(shape: &ConvShape, l: usize) -> usize {
    (l * shape.u_w * shape.u_h) % shape.n
}

/// `(output channel, input channel)` feeding band `ch` of diagonal `l` in
/// block `(ob, ib)`.
pub fn mimo_kernel_grouping(shape: &ConvShape, ob: usize, ib: usize, l: usize, ch: usize) -> (usize, usize) {
    let cn = shape.c_n();
    (ob * cn + (ch + cn - l % cn) % cn, ib * cn + ch)
}

/// Everything a convolution run leaves behind.
#[derive(Clone, Debug)]
pub struct ConvOutcome<C> {
    /// One output ciphertext per output block, before masking.
    pub outputs: Vec<C>,
    /// Shares of every slot of each output ciphertext.
    pub shares: Vec<SharePair>,
    pub counts: OpCounts,
    pub share_counts: OpCounts,
    pub seed: u64,
}

impl<C> ConvOutcome<C> {
    /// Output channels rebuilt from the shares.
    pub fn reconstruct_channels(&self, shape: &ConvShape) -> Result<Vec<Vec<u64>>> {
        let sums = self.shares.iter().map(SharePair::reconstruct).collect::<Result<Vec<_>>>()?;
        unpack_channels(&sums, shape, shape.c_o)
    }
}

/// Packed plaintext for tap `om` of diagonal `l` in block `(ob, ib)`.
fn diagonal_plaintext(task: &ConvTask, om: &OffsetMask, tap: (usize, usize), ob: usize, ib: usize, l: usize) -> Result<SlotVector> {
    let s = task.padded();
    let area = s.u_w * s.u_h;
    let band_values: Vec<u64> = (0..s.c_n())
        .map(|ch| {
            let (o, i) = mimo_kernel_grouping(&s, ob, ib, l, ch);
            task.kernel(o, i, tap.0, tap.1)
        })
        .collect();
    let slots = om
        .mask
        .iter()
        .enumerate()
        .map(|(j, &keep)| if keep { band_values[j / area] } else { 0 })
        .collect();
    SlotVector::new(slots, task.params.p)
}

/// Runs the convolution on packed input ciphertexts and masks each output.
pub fn run_conv<B: HeBackend>(
    scheme: ConvScheme,
    backend: &B,
    task: &ConvTask,
    inputs: &[B::Ciphertext],
    seed: u64,
    meter: &CostMeter,
) -> Result<ConvOutcome<B::Ciphertext>> {
    let s = task.padded();
    let cn = s.c_n();
    let (bi, bo) = (s.c_i / cn, s.c_o / cn);
    if inputs.len() != bi {
        return Err(dim_err!("expected {bi} input ciphertexts, got {}", inputs.len()));
    }
    let offsets = offset_masks(&s)?;
    let taps: Vec<(usize, usize)> = (0..s.k_h).flat_map(|dy| (0..s.k_w).map(move |dx| (dy, dx))).collect();
    let before = meter.snapshot();

    // diag[ob][l]: GALA sums over ib here; the hybrid schedule keeps one
    // running output per ob instead.
    let mut diag: Vec<Vec<Option<B::Ciphertext>>> = vec![vec![None; cn]; bo];
    let mut hybrid: Vec<Option<B::Ciphertext>> = vec![None; bo];
    let accumulate = |slot: &mut Option<B::Ciphertext>, term: B::Ciphertext| -> Result<()> {
        *slot = Some(match slot.take() {
            Some(a) => backend.add(&a, &term, meter)?,
            None => term,
        });
        Ok(())
    };

    for (ib, ct) in inputs.iter().enumerate() {
        let group = (offsets.len() > 1).then(|| backend.dec_perm(ct, meter));
        let rotated: Vec<B::Ciphertext> = offsets
            .iter()
            .map(|om| match &group {
                Some(g) => backend.hst_perm(g, om.rotation, meter),
                None => ct.clone(),
            })
            .collect();
        for ob in 0..bo {
            let mut per_l: Vec<B::Ciphertext> = Vec::with_capacity(cn);
            for (l, slot) in diag[ob].iter_mut().enumerate() {
                let mut sum: Option<B::Ciphertext> = None;
                for ((om, src), &tap) in offsets.iter().zip(&rotated).zip(&taps) {
                    let pt = diagonal_plaintext(task, om, tap, ob, ib, l)?;
                    accumulate(&mut sum, backend.sc_mult(src, &pt, meter)?)?;
                }
                let sum = sum.ok_or_else(|| dim_err!("empty kernel"))?;
                match scheme {
                    ConvScheme::Gala => accumulate(slot, sum)?,
                    ConvScheme::Gazelle => per_l.push(sum),
                }
            }
            if scheme == ConvScheme::Gazelle {
                let mut block: Option<B::Ciphertext> = None;
                for (l, c) in per_l.iter().enumerate() {
                    accumulate(&mut block, backend.perm(c, mimo_output_rotation(&s, l), meter))?;
                }
                accumulate(&mut hybrid[ob], block.ok_or_else(|| dim_err!("no diagonals"))?)?;
            }
        }
    }

    let mut outputs = Vec::with_capacity(bo);
    for ob in 0..bo {
        let out = match scheme {
            ConvScheme::Gazelle => hybrid[ob].take(),
            ConvScheme::Gala => {
                let mut total: Option<B::Ciphertext> = None;
                for (l, d) in diag[ob].iter_mut().enumerate() {
                    let d = d.take().ok_or_else(|| dim_err!("missing diagonal"))?;
                    accumulate(&mut total, backend.perm(&d, mimo_output_rotation(&s, l), meter))?;
                }
                total
            }
        };
        outputs.push(out.ok_or_else(|| dim_err!("no input blocks"))?);
    }
    let counts = meter.snapshot().delta_since(before);

    let share_meter = CostMeter::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full: Vec<usize> = (0..s.n).collect();
    let mut shares = Vec::with_capacity(bo);
    for out in &outputs {
        let (r, masked) = gen_additive_share(backend, out, &mut rng, &share_meter)?;
        shares.push(finalize_shares(&backend.decrypt(&masked)?, &r, FoldSpec::identity(), &full)?);
    }
    Ok(ConvOutcome { outputs, shares, counts, share_counts: share_meter.snapshot(), seed })
}

/// Packs and encrypts channel grids for [`run_conv`].
pub fn encrypt_channels<B: HeBackend>(backend: &B, inputs: &[Vec<u64>], shape: &ConvShape) -> Result<Vec<B::Ciphertext>> {
    pack_channels(inputs, shape, backend.params().p)?
        .iter()
        .map(|v| backend.encrypt(v))
        .collect()
}
