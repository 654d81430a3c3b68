use core::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::analytics::{CountView, OpCounts};

/// Per-primitive latency in milliseconds.
///
/// The defaults are fitted to a 2x2048 matrix-vector product at `n = 2048`:
/// eleven rotations at 1.96 ms, two plaintext multiplications at 0.01 ms and
/// eleven additions at 0.037 ms. A hoisted rotation is priced as a
/// decomposition plus a hoisted step; only their sum (`t_perm`) is anchored,
/// the 0.6 / 0.4 split is a modelling choice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub t_perm: f64,
    pub t_scmult: f64,
    pub t_add: f64,
    pub t_decperm: f64,
    pub t_hstperm: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        let t_perm = 0.178;
        Self {
            t_perm,
            t_scmult: 0.005,
            t_add: 0.0034,
            t_decperm: 0.6 * t_perm,
            t_hstperm: 0.4 * t_perm,
        }
    }
}

impl CostModel {
    pub fn is_valid(&self) -> bool {
        [self.t_perm, self.t_scmult, self.t_add, self.t_decperm, self.t_hstperm]
            .iter()
            .all(|t| t.is_finite() && *t >= 0.0)
    }
}

/// Running tally of homomorphic primitives.
///
/// Counters are atomic so a single meter may be shared by worker threads;
/// they only ever increase.
#[derive(Debug, Default)]
pub struct CostMeter {
    dec_perm: AtomicU64,
    hst_perm: AtomicU64,
    full_perm: AtomicU64,
    sc_mult: AtomicU64,
    add: AtomicU64,
    model: CostModel,
}

impl CostMeter {
    pub fn new(model: CostModel) -> Self {
        Self {
            model,
            ..Self::default()
        }
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    pub(crate) fn record_add(&self) {
        self.add.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn record_sc_mult(&self) {
        self.sc_mult.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn record_perm(&self) {
        self.full_perm.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn record_dec_perm(&self) {
        self.dec_perm.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn record_hst_perm(&self) {
        self.hst_perm.fetch_add(1, Ordering::Relaxed);
    }

    /// Folds counts from another meter (e.g. a per-thread one) into this one.
    pub fn absorb(&self, counts: &OpCounts) {
        let c = counts.to_table2();
        self.full_perm.fetch_add(c.perm, Ordering::Relaxed);
        self.dec_perm.fetch_add(c.dec_perm, Ordering::Relaxed);
        self.hst_perm.fetch_add(c.hst_perm, Ordering::Relaxed);
        self.sc_mult.fetch_add(c.sc_mult, Ordering::Relaxed);
        self.add.fetch_add(c.add, Ordering::Relaxed);
    }

    /// Counts so far, full rotations and hoisted rotations kept apart.
    pub fn snapshot(&self) -> OpCounts {
        OpCounts {
            perm: self.full_perm.load(Ordering::Relaxed),
            dec_perm: self.dec_perm.load(Ordering::Relaxed),
            hst_perm: self.hst_perm.load(Ordering::Relaxed),
            sc_mult: self.sc_mult.load(Ordering::Relaxed),
            add: self.add.load(Ordering::Relaxed),
            view: CountView::Table2,
        }
    }

    pub fn estimated_ms(&self) -> f64 {
        crate::analytics::estimate_time(&self.snapshot(), &self.model)
    }
}
