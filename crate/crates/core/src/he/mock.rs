use crate::error::dim_err;
use crate::he::{CostMeter, HeBackend, HeParams};
use crate::ring::SlotVector;
use crate::{Error, Result};

/// A ciphertext whose payload is kept in the clear.
///
/// `noise` follows the abstract recurrences of [`HeParams`]; decryption
/// refuses to return the payload once it reaches the budget.
#[derive(Clone, Debug, PartialEq)]
pub struct MockCiphertext {
    payload: SlotVector,
    noise: f64,
    params: HeParams,
}

impl MockCiphertext {
    pub fn payload(&self) -> &SlotVector {
        &self.payload
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn params(&self) -> &HeParams {
        &self.params
    }

    /// Same ciphertext with its noise level overwritten.
    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }
}

/// A decomposed ciphertext ready for hoisted rotations.
#[derive(Clone, Debug)]
pub struct MockRotationGroup {
    source: MockCiphertext,
}

impl MockRotationGroup {
    pub fn source(&self) -> &MockCiphertext {
        &self.source
    }
}

#[derive(Clone, Debug)]
pub struct MockBackend {
    params: HeParams,
}

impl MockBackend {
    pub fn new(params: HeParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    fn check(&self, ct: &MockCiphertext) -> Result<()> {
        if ct.params != self.params {
            return Err(Error::ParamsMismatch);
        }
        Ok(())
    }

    fn check_plain(&self, s: &SlotVector) -> Result<()> {
        if s.len() != self.params.n || s.modulus() != self.params.p {
            return Err(dim_err!(
                "plaintext has {} slots mod {}, expected {} mod {}",
                s.len(),
                s.modulus(),
                self.params.n,
                self.params.p
            ));
        }
        Ok(())
    }

    fn rotated(&self, src: &MockCiphertext, k: usize) -> MockCiphertext {
        MockCiphertext {
            payload: src.payload.rotate_left(k),
            noise: src.noise + self.params.eta_rot,
            params: src.params,
        }
    }
}

impl HeBackend for MockBackend {
    type Ciphertext = MockCiphertext;
    type RotationGroup = MockRotationGroup;

    fn params(&self) -> &HeParams {
        &self.params
    }

    fn encrypt(&self, x: &SlotVector) -> Result<MockCiphertext> {
        self.check_plain(x)?;
        Ok(MockCiphertext {
            payload: x.clone(),
            noise: self.params.eta0,
            params: self.params,
        })
    }

    fn decrypt(&self, ct: &MockCiphertext) -> Result<SlotVector> {
        self.check(ct)?;
        if ct.noise >= self.params.noise_budget {
            return Err(Error::NoiseOverflow {
                noise: ct.noise,
                budget: self.params.noise_budget,
            });
        }
        Ok(ct.payload.clone())
    }

    fn add(&self, a: &MockCiphertext, b: &MockCiphertext, meter: &CostMeter) -> Result<MockCiphertext> {
        self.check(a)?;
        self.check(b)?;
        let payload = a.payload.add(&b.payload)?;
        meter.record_add();
        Ok(MockCiphertext {
            payload,
            noise: a.noise + b.noise,
            params: self.params,
        })
    }

    fn sub_plain(&self, a: &MockCiphertext, s: &SlotVector, meter: &CostMeter) -> Result<MockCiphertext> {
        self.check(a)?;
        self.check_plain(s)?;
        let payload = a.payload.sub(s)?;
        meter.record_add();
        Ok(MockCiphertext {
            payload,
            noise: a.noise + self.params.eta0,
            params: self.params,
        })
    }

    fn sc_mult(&self, a: &MockCiphertext, s: &SlotVector, meter: &CostMeter) -> Result<MockCiphertext> {
        self.check(a)?;
        self.check_plain(s)?;
        let payload = a.payload.mul(s)?;
        meter.record_sc_mult();
        Ok(MockCiphertext {
            payload,
            noise: a.noise * self.params.eta_mult,
            params: self.params,
        })
    }

    fn perm(&self, a: &MockCiphertext, k: usize, meter: &CostMeter) -> MockCiphertext {
        if k.is_multiple_of(self.params.n) {
            return a.clone();
        }
        meter.record_perm();
        self.rotated(a, k)
    }

    fn dec_perm(&self, a: &MockCiphertext, meter: &CostMeter) -> MockRotationGroup {
        meter.record_dec_perm();
        MockRotationGroup { source: a.clone() }
    }

    fn hst_perm(&self, g: &MockRotationGroup, k: usize, meter: &CostMeter) -> MockCiphertext {
        if k.is_multiple_of(self.params.n) {
            return g.source.clone();
        }
        meter.record_hst_perm();
        self.rotated(&g.source, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::OpCounts;
    use crate::he::CostModel;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (MockBackend, CostMeter) {
        (
            MockBackend::new(HeParams::default().with_n(n)).unwrap(),
            CostMeter::new(CostModel::default()),
        )
    }

    fn rand_vec(n: usize, seed: u64) -> SlotVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SlotVector::random(n, HeParams::default().p, &mut rng).unwrap()
    }

    #[test]
    fn encrypt_fresh_noise_and_round_trip() {
        let (be, _) = setup(64);
        let zero = SlotVector::zeros(64, be.params().p).unwrap();
        let ct = be.encrypt(&zero).unwrap();
        assert_eq!(ct.noise(), 8.0);
        assert!(ct.noise() < be.params().noise_budget);
        assert_eq!(be.decrypt(&ct).unwrap(), zero);
        let x = rand_vec(64, 1);
        assert_eq!(be.decrypt(&be.encrypt(&x).unwrap()).unwrap(), x);
    }

    #[test]
    fn encrypt_rejects_wrong_length() {
        let (be, _) = setup(64);
        let x = rand_vec(32, 1);
        assert!(matches!(be.encrypt(&x), Err(Error::Dimension(_))));
    }

    #[test]
    fn decrypt_fails_at_budget() {
        let (be, _) = setup(64);
        let ct = be.encrypt(&rand_vec(64, 2)).unwrap();
        let budget = be.params().noise_budget;
        assert!(matches!(
            be.decrypt(&ct.clone().with_noise(budget)),
            Err(Error::NoiseOverflow { .. })
        ));
        assert!(be.decrypt(&ct.with_noise(budget * 0.999)).is_ok());
    }

    #[test]
    fn chained_ras_overflows_tiny_budget() {
        let mut params = HeParams::default().with_n(64);
        params.noise_budget = 1e9;
        let be = MockBackend::new(params).unwrap();
        let meter = CostMeter::new(CostModel::default());
        let mut ct = be.encrypt(&rand_vec(64, 3)).unwrap();
        // noise recurrence of one RaS step: e -> 2e + eta_rot
        let mut expected = params.eta0;
        let mut first_failure = None;
        for step in 1..=40 {
            let rot = be.perm(&ct, 1 << (step % 6), &meter);
            ct = be.add(&ct, &rot, &meter).unwrap();
            expected = 2.0 * expected + params.eta_rot;
            assert_eq!(ct.noise(), expected);
            if first_failure.is_none() && be.decrypt(&ct).is_err() {
                first_failure = Some(step);
            }
        }
        // 2^k * (eta0 + eta_rot) - eta_rot first reaches 1e9 at k = 19
        assert_eq!(first_failure, Some(19));
        assert!(matches!(be.decrypt(&ct), Err(Error::NoiseOverflow { .. })));
    }

    #[test]
    fn add_noise_and_counts() {
        let (be, meter) = setup(64);
        let a = be.encrypt(&rand_vec(64, 4)).unwrap();
        let z = be.encrypt(&SlotVector::zeros(64, be.params().p).unwrap()).unwrap();
        let s = be.add(&a, &z, &meter).unwrap();
        assert_eq!(s.payload(), a.payload());
        assert_eq!(s.noise(), a.noise() + 8.0);
        let s2 = be.add(&s, &a, &meter).unwrap();
        assert_eq!(s2.noise(), s.noise() + a.noise());
        assert_eq!(meter.snapshot().add, 2);
    }

    #[test]
    fn scmult_noise() {
        let (be, meter) = setup(64);
        let a = be.encrypt(&rand_vec(64, 5)).unwrap();
        let ones = SlotVector::constant(64, 1, be.params().p).unwrap();
        let m = be.sc_mult(&a, &ones, &meter).unwrap();
        assert_eq!(m.payload(), a.payload());
        assert_eq!(m.noise(), 8.0 * 1024.0);
        assert_eq!(meter.snapshot().sc_mult, 1);
    }

    #[test]
    fn perm_noise_and_zero_is_free() {
        let (be, meter) = setup(64);
        let a = be.encrypt(&rand_vec(64, 6)).unwrap();
        let same = be.perm(&a, 0, &meter);
        assert_eq!(same, a);
        assert_eq!(meter.snapshot(), OpCounts::default());
        let r = be.perm(&a, 5, &meter);
        assert_eq!(r.noise(), 8.0 + 2048.0);
        assert_eq!(r.payload(), &a.payload().rotate_left(5));
        assert_eq!(meter.snapshot().perm, 1);
        assert_eq!(meter.snapshot().to_table7().dec_perm, 1);
        assert_eq!(meter.snapshot().to_table7().hst_perm, 1);
    }

    #[test]
    fn hoisted_rotations() {
        let (be, meter) = setup(64);
        let a = be.encrypt(&rand_vec(64, 7)).unwrap();
        let g = be.dec_perm(&a, &meter);
        assert_eq!(g.source().payload(), a.payload());
        for k in [1, 2, 3] {
            let h = be.hst_perm(&g, k, &meter);
            let p = be.perm(&a, k, &CostMeter::default());
            assert_eq!(h.payload(), p.payload());
            assert_eq!(h.noise(), p.noise());
        }
        assert_eq!(be.hst_perm(&g, 0, &meter), a);
        let c = meter.snapshot();
        assert_eq!((c.dec_perm, c.hst_perm, c.perm), (1, 3, 0));
        let _g2 = be.dec_perm(&a, &meter);
        assert_eq!(meter.snapshot().dec_perm, 2);
    }

    #[test]
    fn params_mismatch_rejected() {
        let (be, meter) = setup(64);
        let other = MockBackend::new(HeParams::new(64, 65537)).unwrap();
        let a = be.encrypt(&rand_vec(64, 8)).unwrap();
        let b = other
            .encrypt(&SlotVector::zeros(64, 65537).unwrap())
            .unwrap();
        assert_eq!(be.add(&a, &b, &meter), Err(Error::ParamsMismatch));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn homomorphism(seed in any::<u64>(), k in 0usize..256) {
            let (be, meter) = setup(256);
            let x = rand_vec(256, seed);
            let y = rand_vec(256, seed ^ 0xdead_beef);
            let cx = be.encrypt(&x).unwrap();
            let cy = be.encrypt(&y).unwrap();
            let p = be.params().p;
            let sum = be.decrypt(&be.add(&cx, &cy, &meter).unwrap()).unwrap();
            let prod = be.decrypt(&be.sc_mult(&cx, &y, &meter).unwrap()).unwrap();
            let rot = be.decrypt(&be.perm(&cx, k, &meter)).unwrap();
            for j in 0..256 {
                prop_assert_eq!(sum[j], (x[j] + y[j]) % p);
                prop_assert_eq!(prod[j], x[j] * y[j] % p);
                prop_assert_eq!(rot[j], x[(j + k) % 256]);
            }
        }
    }
}
