//! HyperLogLog distinct-count sketch.
//!
//! Registers hold the maximum observed rank per bucket, so merging is a
//! register-wise maximum. Cardinality is read with Ertl's improved raw
//! estimator, which needs neither bias tables nor a linear-counting switch.

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

pub const MIN_PRECISION: u8 = 4;
pub const MAX_PRECISION: u8 = 18;
pub const DEFAULT_PRECISION: u8 = 14;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperLogLog {
    precision: u8,
    seed: u64,
    registers: Vec<u8>,
}

impl HyperLogLog {
    /// Panics unless `MIN_PRECISION <= precision <= MAX_PRECISION`.
    pub fn new(precision: u8, seed: u64) -> Self {
        assert!(
            (MIN_PRECISION..=MAX_PRECISION).contains(&precision),
            "precision must be in {MIN_PRECISION}..={MAX_PRECISION}"
        );
        HyperLogLog {
            precision,
            seed,
            registers: vec![0; 1 << precision],
        }
    }

    pub fn precision(&self) -> u8 {
        self.precision
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn registers(&self) -> &[u8] {
        &self.registers
    }

    pub fn insert(&mut self, item: &[u8]) {
        self.insert_hash(xxh3_64_with_seed(item, self.seed));
    }

    pub fn insert_hash(&mut self, hash: u64) {
        let p = u32::from(self.precision);
        let q = 64 - p;
        let idx = (hash >> q) as usize;
        let rest = hash << p;
        let rank = if rest == 0 {
            q + 1
        } else {
            rest.leading_zeros() + 1
        } as u8;
        let reg = &mut self.registers[idx];
        if *reg < rank {
            *reg = rank;
        }
    }

    /// Register-wise maximum. Returns false (and leaves `self` untouched)
    /// when precision or hash seed differ.
    pub fn merge(&mut self, other: &HyperLogLog) -> bool {
        if self.precision != other.precision || self.seed != other.seed {
            return false;
        }
        for (a, &b) in self.registers.iter_mut().zip(&other.registers) {
            if *a < b {
                *a = b;
            }
        }
        true
    }

    pub fn estimate(&self) -> f64 {
        let m = self.registers.len() as f64;
        let q = 64 - usize::from(self.precision);
        let mut histogram = vec![0u32; q + 2];
        for &r in &self.registers {
            histogram[usize::from(r)] += 1;
        }
        let mut z = m * tau((m - f64::from(histogram[q + 1])) / m);
        for k in (1..=q).rev() {
            z += f64::from(histogram[k]);
            z *= 0.5;
        }
        z += m * sigma(f64::from(histogram[0]) / m);
        let alpha_inf = 0.5 / std::f64::consts::LN_2;
        alpha_inf * m * m / z
    }

    pub fn count(&self) -> u64 {
        let e = self.estimate();
        if e.is_finite() {
            e.round() as u64
        } else {
            0
        }
    }
}

fn sigma(mut x: f64) -> f64 {
    if x == 1.0 {
        return f64::INFINITY;
    }
    let mut y = 1.0;
    let mut z = x;
    loop {
        x *= x;
        let prev = z;
        z += x * y;
        y += y;
        if z == prev {
            return z;
        }
    }
}

fn tau(mut x: f64) -> f64 {
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    let mut y = 1.0;
    let mut z = 1.0 - x;
    loop {
        x = x.sqrt();
        let prev = z;
        y *= 0.5;
        z -= (1.0 - x).powi(2) * y;
        if z == prev {
            return z / 3.0;
        }
    }
}
