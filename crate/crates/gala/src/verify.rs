//! Oracle-equivalence and reference-count checks behind `gala verify`.
//!
//! The report contains no timings, so equal seeds give byte-identical output.

use gala_core::analytics::{count_conv, count_mv, count_mv_blocked, estimate_time, predict_noise, MvBlockPlan, NoiseQuery};
use gala_core::mv::mv_blocked;
use gala_core::oracle::{dot_mod_p, DenseMatrix};
use gala_core::{ConvScheme, ConvShape, CostMeter, CostModel, CountView, MockBackend, MvScheme, OpCounts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::{conv_matches_oracle, ConvDims};
use crate::config::Effective;
use crate::report::Table;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(format!("Verification, seed {}", self.seed), &["check", "status", "detail"]);
        for c in &self.checks {
            t.push(vec![c.name.as_str().into(), if c.passed { "PASS" } else { "FAIL" }.into(), c.detail.as_str().into()]);
        }
        t
    }
}

/// `(n_o, n_i)` shapes exercised at every slot count.
pub const MV_GRID: [(usize, usize); 5] = [(1, 2048), (2, 1024), (16, 128), (8, 256), (4, 16)];
pub const SLOT_COUNTS: [usize; 2] = [256, 2048];
const TASKS_PER_CELL: usize = 3;

fn mv_oracle(report: &mut VerifyReport, eff: &Effective, seed: u64) {
    for n in SLOT_COUNTS {
        let params = eff.params.with_n(n);
        let Ok(backend) = MockBackend::new(params) else {
            report.push(format!("mv n={n}"), false, "invalid parameters");
            continue;
        };
        let p = params.p;
        for (n_o, n_i) in MV_GRID {
            for scheme in MvScheme::ALL {
                let name = format!("mv {} {n_o}x{n_i} n={n}", scheme.name());
                let mut bad = Vec::new();
                for k in 0..TASKS_PER_CELL {
                    let task_seed = seed.wrapping_mul(1_000_003).wrapping_add((n_o * 7919 + n_i * 31 + n + k) as u64);
                    let mut rng = ChaCha8Rng::seed_from_u64(task_seed);
                    let w = DenseMatrix::from_fn(n_o, n_i, p, |_, _| rng.gen_range(0..p));
                    let x: Vec<u64> = (0..n_i).map(|_| rng.gen_range(0..p)).collect();
                    let run = mv_blocked(scheme, &backend, &w, &x, task_seed, &CostMeter::default());
                    let expected = dot_mod_p(&w, &x);
                    let counts = count_mv_blocked(scheme, n_i, n_o, n);
                    let noise = MvBlockPlan::new(n_i, n_o, n).and_then(|plan| {
                        predict_noise(&NoiseQuery::Mv { scheme, n_i: plan.block_cols, n_o: plan.block_rows, n }, &params)
                    });
                    match (run, expected, counts, noise) {
                        (Ok(out), Ok(expected), Ok(counts), Ok(noise)) => {
                            if out.reconstruct(p) != expected {
                                bad.push(format!("task {k}: output"));
                            }
                            if out.counts != counts {
                                bad.push(format!("task {k}: counts"));
                            }
                            if out.outputs.iter().any(|c| c.noise() != noise) {
                                bad.push(format!("task {k}: noise"));
                            }
                        }
                        _ => bad.push(format!("task {k}: error")),
                    }
                }
                let detail = if bad.is_empty() {
                    format!("{TASKS_PER_CELL} tasks: output, counts and noise exact")
                } else {
                    bad.join("; ")
                };
                report.push(name, bad.is_empty(), detail);
            }
        }
    }
}

fn conv_oracle(report: &mut VerifyReport, eff: &Effective, seed: u64) {
    let cases = [
        (64, ConvDims { u_w: 4, u_h: 4, c_i: 4, k_w: 3, k_h: 3, c_o: 8 }),
        (64, ConvDims { u_w: 4, u_h: 4, c_i: 8, k_w: 1, k_h: 1, c_o: 4 }),
        (128, ConvDims { u_w: 4, u_h: 4, c_i: 8, k_w: 3, k_h: 3, c_o: 8 }),
        (128, ConvDims { u_w: 8, u_h: 4, c_i: 6, k_w: 5, k_h: 3, c_o: 3 }),
    ];
    for (i, (n, d)) in cases.into_iter().enumerate() {
        let e = Effective { params: eff.params.with_n(n), ..*eff };
        let shape = d.shape(n);
        for scheme in ConvScheme::ALL {
            let name = format!("conv {} {d} n={n}", scheme.name());
            let predicted = predict_noise(&NoiseQuery::Conv { scheme, shape }, &e.params);
            match (conv_matches_oracle(scheme, d, &e, seed.wrapping_add(i as u64)), count_conv(scheme, &shape), predicted) {
                (Ok((matches, counts, noise)), Ok(expected), Ok(pred)) => {
                    let ok = matches && counts == expected && noise == pred;
                    let detail = format!("output {}, counts {}, noise {}", word(matches), word(counts == expected), word(noise == pred));
                    report.push(name, ok, detail);
                }
                _ => report.push(name, false, "error"),
            }
        }
    }
}

fn word(ok: bool) -> &'static str {
    if ok { "exact" } else { "MISMATCH" }
}

fn counts(perm: u64, dec: u64, hst: u64, sc: u64, add: u64, view: CountView) -> OpCounts {
    OpCounts { perm, dec_perm: dec, hst_perm: hst, sc_mult: sc, add, view }
}

fn describe(c: &OpCounts) -> String {
    format!("perm {} dec {} hst {} scmult {} add {}", c.perm, c.dec_perm, c.hst_perm, c.sc_mult, c.add)
}

fn reference_counts(report: &mut VerifyReport) {
    use CountView::{Table2, Table7};
    let mv = [
        (MvScheme::Diagonal, 2048, 1, counts(0, 1, 2047, 2048, 2047, Table2)),
        (MvScheme::Gazelle, 2048, 1, counts(11, 0, 0, 1, 11, Table2)),
        (MvScheme::Gala, 2048, 1, counts(0, 0, 0, 1, 0, Table2)),
        (MvScheme::Gazelle, 1024, 2, counts(10, 0, 0, 1, 10, Table2)),
        (MvScheme::Gala, 1024, 2, counts(0, 0, 0, 1, 0, Table2)),
        (MvScheme::Gazelle, 128, 16, counts(7, 0, 0, 1, 7, Table2)),
        (MvScheme::Gala, 128, 16, counts(0, 0, 0, 1, 0, Table2)),
    ];
    for (scheme, n_i, n_o, want) in mv {
        let got = count_mv(scheme, n_i, n_o, 2048);
        let ok = got.as_ref() == Ok(&want);
        let detail = got.map(|g| describe(&g)).unwrap_or_else(|e| e.to_string());
        report.push(format!("counts mv {} {n_o}x{n_i}", scheme.name()), ok, detail);
    }

    let sh = |c_i, k, c_o| ConvShape { u_w: 16, u_h: 16, c_i, c_o, k_w: k, k_h: k, n: 2048 };
    let conv = [
        (ConvScheme::Gazelle, sh(128, 1, 128), counts(1792, 1792, 1792, 2048, 2032, Table7)),
        (ConvScheme::Gala, sh(128, 1, 128), counts(112, 112, 112, 2048, 2032, Table7)),
        (ConvScheme::Gazelle, sh(128, 3, 128), counts(1792, 1808, 1920, 18432, 18416, Table7)),
        (ConvScheme::Gala, sh(128, 3, 128), counts(112, 128, 240, 18432, 18416, Table7)),
        (ConvScheme::Gazelle, sh(2048, 5, 64), counts(14336, 14592, 20480, 409600, 409592, Table7)),
        (ConvScheme::Gala, sh(2048, 5, 64), counts(56, 312, 6200, 409600, 409592, Table7)),
    ];
    for (scheme, shape, want) in conv {
        let got = count_conv(scheme, &shape).map(OpCounts::to_table7);
        let ok = got.as_ref() == Ok(&want);
        let detail = got.map(|g| describe(&g)).unwrap_or_else(|e| e.to_string());
        report.push(
            format!("counts conv {} 16x16@{},{}x{}@{}", scheme.name(), shape.c_i, shape.k_w, shape.k_h, shape.c_o),
            ok,
            detail,
        );
    }
}

fn cost_model(report: &mut VerifyReport) {
    let model = CostModel::default();
    let time = |s| count_mv(s, 2048, 2, 2048).map(|c| estimate_time(&c, &model)).unwrap_or(f64::NAN);
    let (gz, ga) = (time(MvScheme::Gazelle), time(MvScheme::Gala));
    let ok = (1.8..=2.2).contains(&gz) && (0.18..=0.22).contains(&ga) && (8.0..=12.0).contains(&(gz / ga));
    report.push(
        "cost model 2x2048 (default calibration)",
        ok,
        format!("gazelle {gz:.4} ms, gala {ga:.4} ms, ratio {:.2}", gz / ga),
    );
}

fn perm_laws(report: &mut VerifyReport) {
    let mut bad = 0;
    let mut total = 0;
    for n in [256usize, 2048] {
        for (u, c_i, c_o, k) in [(16, 128, 128, 3), (8, 64, 32, 1), (16, 2048, 64, 5), (4, 256, 512, 3)] {
            let shape = ConvShape { u_w: u, u_h: u, c_i, c_o, k_w: k, k_h: k, n };
            if shape.validate().is_err() || !shape.is_aligned() {
                continue;
            }
            total += 1;
            let (Ok(gz), Ok(ga)) = (count_conv(ConvScheme::Gazelle, &shape), count_conv(ConvScheme::Gala, &shape)) else {
                bad += 1;
                continue;
            };
            let cn = shape.c_n() as u64;
            if gz.perm * cn != ga.perm * c_i as u64 {
                bad += 1;
            }
        }
    }
    report.push("conv perm ratio equals c_i/c_n", bad == 0 && total > 0, format!("{total} shapes"));

    // T = 4 at every slot count: GALA Perm stays at T - 1
    let mut ok = true;
    for n in [256usize, 512, 1024, 2048] {
        for n_o in [4usize, 8, 16] {
            let n_i = 4 * n / n_o;
            if n_i > n {
                continue;
            }
            ok &= count_mv(MvScheme::Gala, n_i, n_o, n).map(|c| c.perm) == Ok(3);
        }
    }
    report.push("mv gala perm equals T-1", ok, "T = 4 across n and n_o");
}

pub fn run_verification(eff: &Effective, seed: u64) -> VerifyReport {
    let mut report = VerifyReport { seed, checks: Vec::new() };
    reference_counts(&mut report);
    cost_model(&mut report);
    perm_laws(&mut report);
    mv_oracle(&mut report, eff, seed);
    conv_oracle(&mut report, eff, seed);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_build_passes_and_is_deterministic() {
        let eff = Effective::default();
        let a = run_verification(&eff, 7);
        assert!(a.passed(), "{:#?}", a.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        assert_eq!(a, run_verification(&eff, 7));
        assert_eq!(a.to_table().rows.len(), a.checks.len());
    }
}
