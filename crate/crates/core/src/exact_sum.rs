//! Exact summation of `f64` values.
//!
//! Floating-point addition is not associative, so summing partitions in a
//! different order changes the low bits of a plain `f64` total. `ExactSum`
//! keeps the sum as a wide fixed-point integer instead; merges are exact and
//! the canonical form is independent of the order values were added.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const LIMB_BITS: u32 = 32;
/// Limb `i` has weight `2^(32 i - OFFSET)`; the smallest subnormal is `2^-1074`.
const OFFSET: i32 = 1088;
const LIMBS: usize = 68;
/// Adds between carry normalizations; each add moves a limb by less than 2^32.
const NORMALIZE_EVERY: u32 = 1 << 29;

#[derive(Clone)]
pub struct ExactSum {
    limbs: Vec<i64>,
    pending: u32,
    pos_inf: u64,
    neg_inf: u64,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum {
            limbs: vec![0; LIMBS],
            pending: 0,
            pos_inf: 0,
            neg_inf: 0,
        }
    }

    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut s = Self::new();
        for v in values {
            s.add(v);
        }
        s
    }

    /// NaN is ignored; infinities are counted separately.
    pub fn add(&mut self, v: f64) {
        if v.is_nan() || v == 0.0 {
            return;
        }
        if v.is_infinite() {
            if v > 0.0 {
                self.pos_inf += 1;
            } else {
                self.neg_inf += 1;
            }
            return;
        }
        let bits = v.to_bits();
        let negative = bits >> 63 == 1;
        let exp_field = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if exp_field == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_field - 1075)
        };
        let pos = (exp + OFFSET) as u32;
        let idx = (pos / LIMB_BITS) as usize;
        let wide = (mantissa as u128) << (pos % LIMB_BITS);
        for k in 0..3 {
            let chunk = ((wide >> (LIMB_BITS * k)) & 0xffff_ffff) as i64;
            if chunk != 0 {
                if negative {
                    self.limbs[idx + k as usize] -= chunk;
                } else {
                    self.limbs[idx + k as usize] += chunk;
                }
            }
        }
        self.pending += 1;
        if self.pending >= NORMALIZE_EVERY {
            self.normalize();
        }
    }

    pub fn merge(&mut self, other: &ExactSum) {
        let mut o = other.clone();
        o.normalize();
        self.normalize();
        for (a, b) in self.limbs.iter_mut().zip(&o.limbs) {
            *a += b;
        }
        self.pos_inf += o.pos_inf;
        self.neg_inf += o.neg_inf;
        self.normalize();
    }

    /// Propagates carries so every limb but the top one lies in `[0, 2^32)`.
    fn normalize(&mut self) {
        let mut carry = 0i64;
        for limb in self.limbs.iter_mut().take(LIMBS - 1) {
            let v = *limb + carry;
            carry = v >> LIMB_BITS;
            *limb = v & 0xffff_ffff;
        }
        self.limbs[LIMBS - 1] += carry;
        self.pending = 0;
    }

    fn canonical(&self) -> ExactSum {
        let mut c = self.clone();
        c.normalize();
        c
    }

    pub fn is_zero(&self) -> bool {
        self.pos_inf == 0 && self.neg_inf == 0 && self.canonical().limbs.iter().all(|&l| l == 0)
    }

    /// Nearest `f64` (to within a couple of ulps) of the exact total.
    pub fn value(&self) -> f64 {
        match (self.pos_inf > 0, self.neg_inf > 0) {
            (true, true) => return f64::NAN,
            (true, false) => return f64::INFINITY,
            (false, true) => return f64::NEG_INFINITY,
            _ => {}
        }
        let mut c = self.canonical();
        let negative = c.limbs[LIMBS - 1] < 0;
        if negative {
            // Two's-complement negation across limbs.
            for l in c.limbs.iter_mut() {
                *l = -*l;
            }
            c.normalize();
        }
        let mut total = 0.0f64;
        for (i, &l) in c.limbs.iter().enumerate() {
            if l != 0 {
                total += scale(l as f64, LIMB_BITS as i32 * i as i32 - OFFSET);
            }
        }
        if negative {
            -total
        } else {
            total
        }
    }
}

/// `x * 2^e` without underflowing intermediate powers.
fn scale(x: f64, e: i32) -> f64 {
    if e < -1000 {
        x * f64::powi(2.0, e + 200) * f64::powi(2.0, -200)
    } else {
        x * f64::powi(2.0, e)
    }
}

impl PartialEq for ExactSum {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.canonical(), other.canonical());
        a.limbs == b.limbs && a.pos_inf == b.pos_inf && a.neg_inf == b.neg_inf
    }
}

impl fmt::Debug for ExactSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactSum({})", self.value())
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    /// Nonzero limbs of the canonical form as (index, value).
    limbs: Vec<(u8, i64)>,
    pos_inf: u64,
    neg_inf: u64,
}

impl Serialize for ExactSum {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let c = self.canonical();
        Wire {
            limbs: c
                .limbs
                .iter()
                .enumerate()
                .filter(|(_, &l)| l != 0)
                .map(|(i, &l)| (i as u8, l))
                .collect(),
            pos_inf: c.pos_inf,
            neg_inf: c.neg_inf,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactSum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        let mut s = ExactSum::new();
        for (i, v) in w.limbs {
            let i = i as usize;
            if i >= LIMBS || (i < LIMBS - 1 && !(0..1i64 << LIMB_BITS).contains(&v)) {
                return Err(serde::de::Error::custom("exact sum limb out of range"));
            }
            s.limbs[i] = v;
        }
        s.pos_inf = w.pos_inf;
        s.neg_inf = w.neg_inf;
        Ok(s)
    }
}
