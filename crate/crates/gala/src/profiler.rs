//! Per-layer cost profile of a network under the hybrid and GALA schemes.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use gala_core::analytics::{count_conv, count_mv_blocked, estimate_time};
use gala_core::conv::{encrypt_channels, run_conv, ConvTask};
use gala_core::mv::mv_blocked;
use gala_core::oracle::{conv2d_mod_p, dot_mod_p, ConvGeometry, DenseMatrix};
use gala_core::{ConvScheme, CostMeter, CostModel, HeParams, MockBackend, MvScheme, OpCounts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::LayerSpec;
use crate::report::{Cell, Table};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Closed-form counts only.
    #[default]
    Analytic,
    /// Run both schemes on random data, check them against the oracle and
    /// take counts from the meters.
    Executed,
}

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("layer {index} ({layer}): {source}")]
    Layer { index: usize, layer: String, source: gala_core::Error },
    #[error("layer {index} ({layer}): {scheme} output differs from the plaintext oracle")]
    Mismatch { index: usize, layer: String, scheme: &'static str },
}

/// Both schemes' cost for one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerProfile {
    pub index: usize,
    pub spec: LayerSpec,
    pub gazelle: OpCounts,
    pub gala: OpCounts,
    pub gazelle_ms: f64,
    pub gala_ms: f64,
}

impl LayerProfile {
    /// Baseline time over GALA time; 1 when both are zero.
    pub fn speedup(&self) -> f64 {
        ratio(self.gazelle_ms, self.gala_ms)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileReport {
    pub mode: Mode,
    pub layers: Vec<LayerProfile>,
}

/// Network-wide totals for one scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeTotals {
    pub counts: OpCounts,
    pub ms: f64,
}

impl ProfileReport {
    pub fn totals(&self) -> (SchemeTotals, SchemeTotals) {
        let sum = |pick: fn(&LayerProfile) -> (OpCounts, f64)| {
            self.layers.iter().map(pick).fold(
                SchemeTotals { counts: OpCounts::default(), ms: 0.0 },
                |acc, (c, ms)| SchemeTotals { counts: acc.counts + c, ms: acc.ms + ms },
            )
        };
        (sum(|l| (l.gazelle, l.gazelle_ms)), sum(|l| (l.gala, l.gala_ms)))
    }

    /// Hybrid Perm total over GALA Perm total (Table-II view).
    pub fn perm_reduction(&self) -> f64 {
        let (gz, ga) = self.totals();
        ratio(gz.counts.perm as f64, ga.counts.perm as f64)
    }

    pub fn speedup(&self) -> f64 {
        let (gz, ga) = self.totals();
        ratio(gz.ms, ga.ms)
    }

    /// Two rows per layer (hybrid, then GALA) with running totals per scheme.
    pub fn to_table(&self, title: &str) -> Table {
        let mut t = Table::new(
            title,
            &["layer_index", "kind", "scheme", "dec_perm", "hst_perm", "perm", "sc_mult", "add", "est_ms", "cum_ms", "speedup"],
        );
        let (mut cum_gz, mut cum_ga) = (0.0, 0.0);
        for l in &self.layers {
            cum_gz += l.gazelle_ms;
            cum_ga += l.gala_ms;
            let rows = [
                ("gazelle", l.gazelle, l.gazelle_ms, cum_gz, 1.0),
                ("gala", l.gala, l.gala_ms, cum_ga, l.speedup()),
            ];
            for (scheme, c, ms, cum, speedup) in rows {
                let c = c.to_table2();
                t.push(vec![
                    l.index.into(),
                    l.spec.kind().into(),
                    scheme.into(),
                    c.dec_perm.into(),
                    c.hst_perm.into(),
                    c.perm.into(),
                    c.sc_mult.into(),
                    c.add.into(),
                    ms.into(),
                    cum.into(),
                    speedup.into(),
                ]);
            }
        }
        t
    }

    pub fn summary_table(&self, title: &str) -> Table {
        let (gz, ga) = self.totals();
        let mut t = Table::new(title, &["scheme", "perm", "hst_perm", "dec_perm", "sc_mult", "add", "est_ms", "perm_reduction", "speedup"]);
        for (name, s, red, sp) in [("gazelle", gz, 1.0, 1.0), ("gala", ga, self.perm_reduction(), self.speedup())] {
            let c = s.counts.to_table2();
            t.push(vec![
                name.into(),
                c.perm.into(),
                c.hst_perm.into(),
                c.dec_perm.into(),
                c.sc_mult.into(),
                c.add.into(),
                Cell::Float(s.ms),
                Cell::Float(red),
                Cell::Float(sp),
            ]);
        }
        t
    }
}

fn layer_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn analytic_counts(spec: &LayerSpec, n: usize) -> gala_core::Result<(OpCounts, OpCounts)> {
    Ok(match *spec {
        LayerSpec::Conv { .. } => {
            let shape = spec.conv_shape(n).expect("conv layer");
            (count_conv(ConvScheme::Gazelle, &shape)?, count_conv(ConvScheme::Gala, &shape)?)
        }
        LayerSpec::Fc { n_i, n_o } => (
            count_mv_blocked(MvScheme::Gazelle, n_i, n_o, n)?,
            count_mv_blocked(MvScheme::Gala, n_i, n_o, n)?,
        ),
        LayerSpec::Nonlinear { .. } => (OpCounts::default(), OpCounts::default()),
    })
}

/// Runs both schemes of one layer on seeded random data. Returns
/// `Ok(Err(scheme))` when a scheme's output disagrees with the oracle.
fn executed_counts(
    spec: &LayerSpec,
    params: &HeParams,
    seed: u64,
) -> gala_core::Result<Result<(OpCounts, OpCounts), &'static str>> {
    let p = params.p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let backend = MockBackend::new(*params)?;
    match *spec {
        LayerSpec::Conv { u_w, u_h, c_i, k_w, k_h, c_o } => {
            let shape = spec.conv_shape(params.n).expect("conv layer");
            let kernels: Vec<u64> = (0..c_o * c_i * k_h * k_w).map(|_| rng.gen_range(0..p)).collect();
            let inputs: Vec<Vec<u64>> =
                (0..c_i).map(|_| (0..u_w * u_h).map(|_| rng.gen_range(0..p)).collect()).collect();
            let g = ConvGeometry { u_w, u_h, c_i, c_o, k_w, k_h, kernels: &kernels, modulus: p };
            let expected = conv2d_mod_p(&g, &inputs)?;
            let task = ConvTask::new(shape, kernels, *params)?;
            let cts = encrypt_channels(&backend, &inputs, &shape)?;
            let mut counts = [OpCounts::default(); 2];
            for (slot, scheme) in counts.iter_mut().zip(ConvScheme::ALL) {
                let meter = CostMeter::default();
                let out = run_conv(scheme, &backend, &task, &cts, seed, &meter)?;
                if out.reconstruct_channels(&shape)? != expected {
                    return Ok(Err(scheme.name()));
                }
                *slot = out.counts;
            }
            Ok(Ok((counts[0], counts[1])))
        }
        LayerSpec::Fc { n_i, n_o } => {
            let w = DenseMatrix::from_fn(n_o, n_i, p, |_, _| rng.gen_range(0..p));
            let x: Vec<u64> = (0..n_i).map(|_| rng.gen_range(0..p)).collect();
            let expected = dot_mod_p(&w, &x)?;
            let mut counts = [OpCounts::default(); 2];
            for (slot, scheme) in counts.iter_mut().zip([MvScheme::Gazelle, MvScheme::Gala]) {
                let meter = CostMeter::default();
                let out = mv_blocked(scheme, &backend, &w, &x, seed, &meter)?;
                if out.reconstruct(p) != expected {
                    return Ok(Err(scheme.name()));
                }
                *slot = out.counts;
            }
            Ok(Ok((counts[0], counts[1])))
        }
        LayerSpec::Nonlinear { .. } => Ok(Ok((OpCounts::default(), OpCounts::default()))),
    }
}

fn profile_layer(
    index: usize,
    spec: &LayerSpec,
    params: &HeParams,
    cost: &CostModel,
    mode: Mode,
    seed: u64,
) -> Result<LayerProfile, ProfileError> {
    let wrap = |source| ProfileError::Layer { index, layer: spec.to_string(), source };
    let (gazelle, gala) = match mode {
        Mode::Analytic => analytic_counts(spec, params.n).map_err(wrap)?,
        Mode::Executed => executed_counts(spec, params, layer_seed(seed, index))
            .map_err(wrap)?
            .map_err(|scheme| ProfileError::Mismatch { index, layer: spec.to_string(), scheme })?,
    };
    Ok(LayerProfile {
        index,
        spec: spec.clone(),
        gazelle,
        gala,
        gazelle_ms: estimate_time(&gazelle, cost),
        gala_ms: estimate_time(&gala, cost),
    })
}

/// Profiles every layer. Executed mode spreads layers over worker threads;
/// the report is assembled in layer order either way.
pub fn profile_network(
    specs: &[LayerSpec],
    params: &HeParams,
    cost: &CostModel,
    mode: Mode,
    seed: u64,
) -> Result<ProfileReport, ProfileError> {
    let workers = match mode {
        Mode::Analytic => 1,
        Mode::Executed => std::thread::available_parallelism().map_or(1, |n| n.get()).min(specs.len().max(1)),
    };
    let results: Mutex<Vec<Option<Result<LayerProfile, ProfileError>>>> =
        Mutex::new((0..specs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(spec) = specs.get(i) else { break };
                let r = profile_layer(i, spec, params, cost, mode, seed);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    let layers = results
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every layer was profiled"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProfileReport { mode, layers })
}
