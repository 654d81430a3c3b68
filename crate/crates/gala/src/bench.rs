//! Benchmark tables: matrix-vector counts, convolution counts and noise.

use std::fmt;
use std::str::FromStr;

use gala_core::analytics::{count_conv, count_mv_blocked, estimate_time, predict_noise, MvBlockPlan, NoiseQuery};
use gala_core::conv::{encrypt_channels, run_conv, ConvTask};
use gala_core::mv::mv_blocked;
use gala_core::oracle::{conv2d_mod_p, dot_mod_p, ConvGeometry, DenseMatrix};
use gala_core::{ConvScheme, ConvShape, CostMeter, MockBackend, MvScheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Effective;
use crate::report::{Cell, Table};

/// `AxB`: an `A x B` weight matrix, i.e. `n_o = A` outputs and `n_i = B` inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MvDims {
    pub n_o: usize,
    pub n_i: usize,
}

impl FromStr for MvDims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected AxB, got '{s}'"))?;
        let parse = |v: &str| v.trim().parse::<usize>().ok().filter(|&d| d > 0);
        match (parse(a), parse(b)) {
            (Some(n_o), Some(n_i)) => Ok(Self { n_o, n_i }),
            _ => Err(format!("expected positive integers in '{s}'")),
        }
    }
}

impl fmt::Display for MvDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_o, self.n_i)
    }
}

pub const DEFAULT_MV_DIMS: [MvDims; 3] = [
    MvDims { n_o: 1, n_i: 2048 },
    MvDims { n_o: 2, n_i: 1024 },
    MvDims { n_o: 16, n_i: 128 },
];

/// `UWxUH@CI,KWxKH@CO`, e.g. `16x16@128,3x3@128`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvDims {
    pub u_w: usize,
    pub u_h: usize,
    pub c_i: usize,
    pub k_w: usize,
    pub k_h: usize,
    pub c_o: usize,
}

impl ConvDims {
    pub fn shape(&self, n: usize) -> ConvShape {
        ConvShape { u_w: self.u_w, u_h: self.u_h, c_i: self.c_i, c_o: self.c_o, k_w: self.k_w, k_h: self.k_h, n }
    }
}

impl FromStr for ConvDims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected UWxUH@CI,KWxKH@CO, got '{s}'");
        let part = |p: &str| -> Option<(usize, usize, usize)> {
            let (grid, ch) = p.trim().split_once('@')?;
            let (w, h) = grid.split_once(['x', 'X'])?;
            Some((w.parse().ok()?, h.parse().ok()?, ch.parse().ok()?))
        };
        let (img, ker) = s.split_once(',').ok_or_else(bad)?;
        let ((u_w, u_h, c_i), (k_w, k_h, c_o)) = part(img).zip(part(ker)).ok_or_else(bad)?;
        Ok(Self { u_w, u_h, c_i, k_w, k_h, c_o })
    }
}

impl fmt::Display for ConvDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}@{},{}x{}@{}", self.u_w, self.u_h, self.c_i, self.k_w, self.k_h, self.c_o)
    }
}

const fn cd(u: usize, c_i: usize, k: usize, c_o: usize) -> ConvDims {
    ConvDims { u_w: u, u_h: u, c_i, k_w: k, k_h: k, c_o }
}

/// The four layer shapes of the convolution benchmark.
pub const DEFAULT_CONV_DIMS: [ConvDims; 4] = [cd(16, 128, 1, 128), cd(16, 2048, 1, 512), cd(16, 128, 3, 128), cd(16, 2048, 5, 64)];

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{task}: {source}")]
    Task { task: String, source: gala_core::Error },
}

fn task_err(task: impl fmt::Display) -> impl FnOnce(gala_core::Error) -> BenchError {
    let task = task.to_string();
    move |source| BenchError::Task { task, source }
}

/// Noise predicted for one ciphertext-sized block of an arbitrary product.
fn mv_block_noise(scheme: MvScheme, d: MvDims, eff: &Effective) -> gala_core::Result<f64> {
    let plan = MvBlockPlan::new(d.n_i, d.n_o, eff.params.n)?;
    let q = NoiseQuery::Mv { scheme, n_i: plan.block_cols, n_o: plan.block_rows, n: eff.params.n };
    predict_noise(&q, &eff.params)
}

/// One executed run per scheme and shape, checked against the oracle and the
/// closed-form counts.
pub fn mv_bench(dims: &[MvDims], eff: &Effective, seed: u64) -> Result<Table, BenchError> {
    let params = eff.params;
    let p = params.p;
    let backend = MockBackend::new(params).map_err(task_err("parameters"))?;
    let mut t = Table::new(
        format!("Matrix-vector products, n = {}", params.n),
        &["dims", "scheme", "perm", "dec_perm", "hst_perm", "sc_mult", "add", "est_ms", "noise", "counts_match", "oracle_match"],
    );
    for (di, &d) in dims.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((di as u64) << 32));
        let w = DenseMatrix::from_fn(d.n_o, d.n_i, p, |_, _| rng.gen_range(0..p));
        let x: Vec<u64> = (0..d.n_i).map(|_| rng.gen_range(0..p)).collect();
        let expected = dot_mod_p(&w, &x).map_err(task_err(d))?;
        for scheme in MvScheme::ALL {
            let analytic = count_mv_blocked(scheme, d.n_i, d.n_o, params.n).map_err(task_err(d))?;
            let meter = CostMeter::new(eff.cost);
            let out = mv_blocked(scheme, &backend, &w, &x, seed, &meter).map_err(task_err(d))?;
            let noise = out.outputs.iter().map(|c| c.noise()).fold(0.0, f64::max);
            let predicted = mv_block_noise(scheme, d, eff).map_err(task_err(d))?;
            t.push(vec![
                d.to_string().into(),
                scheme.name().into(),
                analytic.perm.into(),
                analytic.dec_perm.into(),
                analytic.hst_perm.into(),
                analytic.sc_mult.into(),
                analytic.add.into(),
                estimate_time(&analytic, &eff.cost).into(),
                Cell::Float(predicted),
                (out.counts == analytic && noise == predicted).into(),
                (out.reconstruct(p) == expected).into(),
            ]);
        }
    }
    Ok(t)
}

/// Closed-form convolution counts in the decomposed-rotation view, where each
/// standalone Perm is listed as a DecPerm plus a HstPerm.
pub fn conv_bench(dims: &[ConvDims], eff: &Effective) -> Result<Table, BenchError> {
    let n = eff.params.n;
    let mut t = Table::new(
        format!("Convolutions, n = {n}"),
        &["layer", "scheme", "dec_perm", "hst_perm", "perm", "sc_mult", "add", "est_ms", "noise"],
    );
    for d in dims {
        let shape = d.shape(n);
        for scheme in ConvScheme::ALL {
            let c = count_conv(scheme, &shape).map_err(task_err(d))?;
            let noise = predict_noise(&NoiseQuery::Conv { scheme, shape }, &eff.params).map_err(task_err(d))?;
            let c7 = c.to_table7();
            t.push(vec![
                d.to_string().into(),
                scheme.name().into(),
                c7.dec_perm.into(),
                c7.hst_perm.into(),
                c.perm.into(),
                c7.sc_mult.into(),
                c7.add.into(),
                estimate_time(&c, &eff.cost).into(),
                Cell::Float(noise),
            ]);
        }
    }
    Ok(t)
}

/// Executed convolutions are only measured up to this many ScMults.
const MEASURE_LIMIT: u64 = 40_000;

/// Predicted and measured output noise with the remaining headroom in bits.
pub fn noise_table(mv: &[MvDims], conv: &[ConvDims], eff: &Effective, seed: u64) -> Result<Table, BenchError> {
    let params = eff.params;
    let p = params.p;
    let backend = MockBackend::new(params).map_err(task_err("parameters"))?;
    let budget = params.noise_budget;
    let mut t = Table::new(
        format!("Output noise, n = {}, budget {}", params.n, crate::report::format_float(budget)),
        &["task", "scheme", "predicted", "measured", "headroom_bits"],
    );
    let headroom = |v: f64| Cell::Float((budget / v).log2());
    for (di, &d) in mv.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((di as u64) << 32));
        let w = DenseMatrix::from_fn(d.n_o, d.n_i, p, |_, _| rng.gen_range(0..p));
        let x: Vec<u64> = (0..d.n_i).map(|_| rng.gen_range(0..p)).collect();
        for scheme in MvScheme::ALL {
            let predicted = mv_block_noise(scheme, d, eff).map_err(task_err(d))?;
            let out = mv_blocked(scheme, &backend, &w, &x, seed, &CostMeter::default()).map_err(task_err(d))?;
            let measured = out.outputs.iter().map(|c| c.noise()).fold(0.0, f64::max);
            t.push(vec![
                format!("mv {d}").into(),
                scheme.name().into(),
                Cell::Float(predicted),
                Cell::Float(measured),
                headroom(predicted),
            ]);
        }
    }
    for (di, d) in conv.iter().enumerate() {
        let shape = d.shape(params.n);
        let heavy = count_conv(ConvScheme::Gala, &shape).map_err(task_err(d))?.sc_mult > MEASURE_LIMIT;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((di as u64 + 1) << 40));
        let measured_run = if heavy {
            None
        } else {
            let kernels: Vec<u64> = (0..d.c_o * d.c_i * d.k_h * d.k_w).map(|_| rng.gen_range(0..p)).collect();
            let inputs: Vec<Vec<u64>> = (0..d.c_i).map(|_| (0..d.u_w * d.u_h).map(|_| rng.gen_range(0..p)).collect()).collect();
            let task = ConvTask::new(shape, kernels, params).map_err(task_err(d))?;
            let cts = encrypt_channels(&backend, &inputs, &shape).map_err(task_err(d))?;
            Some((task, cts))
        };
        for scheme in ConvScheme::ALL {
            let predicted = predict_noise(&NoiseQuery::Conv { scheme, shape }, &params).map_err(task_err(d))?;
            let measured = match &measured_run {
                Some((task, cts)) => {
                    let out = run_conv(scheme, &backend, task, cts, seed, &CostMeter::default()).map_err(task_err(d))?;
                    Cell::Float(out.outputs.iter().map(|c| c.noise()).fold(0.0, f64::max))
                }
                None => Cell::Text("-".into()),
            };
            t.push(vec![format!("conv {d}").into(), scheme.name().into(), Cell::Float(predicted), measured, headroom(predicted)]);
        }
    }
    Ok(t)
}

/// Checks an executed convolution against the oracle; used by `verify`.
pub fn conv_matches_oracle(
    scheme: ConvScheme,
    d: ConvDims,
    eff: &Effective,
    seed: u64,
) -> gala_core::Result<(bool, gala_core::OpCounts, f64)> {
    let params = eff.params;
    let p = params.p;
    let shape = d.shape(params.n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernels: Vec<u64> = (0..d.c_o * d.c_i * d.k_h * d.k_w).map(|_| rng.gen_range(0..p)).collect();
    let inputs: Vec<Vec<u64>> = (0..d.c_i).map(|_| (0..d.u_w * d.u_h).map(|_| rng.gen_range(0..p)).collect()).collect();
    let g = ConvGeometry { u_w: d.u_w, u_h: d.u_h, c_i: d.c_i, c_o: d.c_o, k_w: d.k_w, k_h: d.k_h, kernels: &kernels, modulus: p };
    let expected = conv2d_mod_p(&g, &inputs)?;
    let backend = MockBackend::new(params)?;
    let task = ConvTask::new(shape, kernels, params)?;
    let cts = encrypt_channels(&backend, &inputs, &shape)?;
    let out = run_conv(scheme, &backend, &task, &cts, seed, &CostMeter::default())?;
    let noise = out.outputs.iter().map(|c| c.noise()).fold(0.0, f64::max);
    Ok((out.reconstruct_channels(&shape)? == expected, out.counts, noise))
}
