//! Exact truncated series arithmetic: the coefficient ring for everything else.
//!
//! A [`ScalarSeries`] is a Laurent series in `u = q^{1/2}` with exact rational
//! coefficients, tensored with Laurent polynomials in `Q` and a nilpotent
//! polynomial sector in deformation variables `t_k`, `tbar_k`.  Half-integer
//! powers of `q` (such as `q^{i-1/2}` or `q^{m^2/2}`) are integer powers of `u`.
//!
//! Truncation model: a series is known modulo `u^abs_prec`; terms with
//! u-exponent at or above `abs_prec` are unknown, not zero.  `Q` is never
//! truncated.  The t-sector is nilpotent: total t-degree above the cap is
//! dropped exactly.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational coefficient.
pub type Rat = BigRational;

/// Rational from an integer.
pub fn rat(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

/// Rational from numerator and denominator.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Maximum number of active t-generator slots.
pub const MAX_T_SLOTS: u8 = 8;

/// Hard overflow guards; the structural claim of the construction is that
/// exponents stay far below these.
const Q_ABS_LIMIT: i64 = 1 << 20;
const U_ABS_LIMIT: i64 = 1 << 40;

/// Packed monomial in the t-generators: one byte of exponent per slot.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TMono(pub u64);

impl TMono {
    pub const ONE: TMono = TMono(0);

    pub fn gen(slot: u8) -> Result<TMono> {
        if slot >= MAX_T_SLOTS {
            return Err(Error::TSlotOutOfRange(slot, MAX_T_SLOTS));
        }
        Ok(TMono(1u64 << (8 * slot)))
    }

    pub fn exp(self, slot: u8) -> u8 {
        ((self.0 >> (8 * slot)) & 0xff) as u8
    }

    pub fn total_degree(self) -> u32 {
        (0..MAX_T_SLOTS).map(|s| self.exp(s) as u32).sum()
    }

    /// Product of monomials; per-slot exponents add.
    pub fn mul(self, other: TMono) -> TMono {
        // Slot exponents stay tiny (bounded by the t-cap), so bytewise
        // addition cannot carry in practice; guard anyway.
        let mut out = 0u64;
        for s in 0..MAX_T_SLOTS {
            let e = self.exp(s) as u64 + other.exp(s) as u64;
            assert!(e < 0x100, "t-exponent overflow in slot {s}");
            out |= e << (8 * s);
        }
        TMono(out)
    }

    pub fn is_one(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for TMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TMono({:#x})", self.0)
    }
}

/// A single exponent key: u-exponent, Q-exponent, t-monomial.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Mono {
    pub u: i64,
    pub q: i64,
    pub t: TMono,
}

impl Mono {
    pub const UNIT: Mono = Mono { u: 0, q: 0, t: TMono::ONE };

    pub fn mul(self, other: Mono) -> Mono {
        let u = self.u + other.u;
        let q = self.q + other.q;
        assert!(u.abs() < U_ABS_LIMIT, "u-exponent overflow");
        assert!(q.abs() < Q_ABS_LIMIT, "Q-exponent overflow");
        Mono { u, q, t: self.t.mul(other.t) }
    }
}

/// Absolute u-precision: the series is known modulo `u^p`, or exactly.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Prec {
    Finite(i64),
    Exact,
}

impl Prec {
    pub fn min(self, other: Prec) -> Prec {
        match (self, other) {
            (Prec::Exact, p) | (p, Prec::Exact) => p,
            (Prec::Finite(a), Prec::Finite(b)) => Prec::Finite(a.min(b)),
        }
    }

    /// Shift the precision by a valuation lower bound (`None` = +infinity,
    /// the convention for the zero series).
    pub fn shift(self, val: Option<i64>) -> Prec {
        match (self, val) {
            (Prec::Exact, _) => Prec::Exact,
            (_, None) => Prec::Exact,
            (Prec::Finite(p), Some(v)) => Prec::Finite(p + v),
        }
    }

    pub fn admits(self, u_exp: i64) -> bool {
        match self {
            Prec::Exact => true,
            Prec::Finite(p) => u_exp < p,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Prec::Exact)
    }
}

impl PartialOrd for Prec {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Prec {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (Prec::Exact, Prec::Exact) => std::cmp::Ordering::Equal,
            (Prec::Exact, _) => std::cmp::Ordering::Greater,
            (_, Prec::Exact) => std::cmp::Ordering::Less,
            (Prec::Finite(a), Prec::Finite(b)) => a.cmp(b),
        }
    }
}

/// Truncated Laurent series over the `(u, Q, t)` monomial ring.
#[derive(Clone, PartialEq, Eq)]
pub struct ScalarSeries {
    /// Sorted by monomial, no zero coefficients, all below `prec` and
    /// within the t-cap.
    terms: Vec<(Mono, Rat)>,
    prec: Prec,
    t_cap: u8,
}

impl ScalarSeries {
    pub fn zero(prec: Prec, t_cap: u8) -> Self {
        ScalarSeries { terms: Vec::new(), prec, t_cap }
    }

    /// Exact zero: no unknown tail at all.
    pub fn exact_zero(t_cap: u8) -> Self {
        ScalarSeries { terms: Vec::new(), prec: Prec::Exact, t_cap }
    }

    pub fn one(prec: Prec, t_cap: u8) -> Self {
        Self::monomial(rat(1), Mono::UNIT, prec, t_cap)
    }

    pub fn monomial(c: Rat, m: Mono, prec: Prec, t_cap: u8) -> Self {
        let mut s = ScalarSeries { terms: vec![(m, c)], prec, t_cap };
        s.normalize();
        s
    }

    /// `c * u^ue * Q^qe`, exact.
    pub fn uq_monomial(c: Rat, ue: i64, qe: i64, t_cap: u8) -> Self {
        Self::monomial(c, Mono { u: ue, q: qe, t: TMono::ONE }, Prec::Exact, t_cap)
    }

    /// The generator in slot `slot`, exact.
    pub fn t_gen(slot: u8, t_cap: u8) -> Result<Self> {
        let t = TMono::gen(slot)?;
        Ok(Self::monomial(rat(1), Mono { u: 0, q: 0, t }, Prec::Exact, t_cap))
    }

    pub fn from_terms(terms: Vec<(Mono, Rat)>, prec: Prec, t_cap: u8) -> Self {
        let mut s = ScalarSeries { terms, prec, t_cap };
        s.terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        s.combine_sorted();
        s.normalize();
        s
    }

    fn combine_sorted(&mut self) {
        let mut out: Vec<(Mono, Rat)> = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms.drain(..) {
            match out.last_mut() {
                Some((lm, lc)) if *lm == m => *lc += c,
                _ => out.push((m, c)),
            }
        }
        self.terms = out;
    }

    fn normalize(&mut self) {
        let prec = self.prec;
        let cap = self.t_cap as u32;
        self.terms.retain(|(m, c)| {
            !c.is_zero() && prec.admits(m.u) && m.t.total_degree() <= cap
        });
    }

    pub fn prec(&self) -> Prec {
        self.prec
    }

    pub fn t_cap(&self) -> u8 {
        self.t_cap
    }

    pub fn terms(&self) -> &[(Mono, Rat)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True u-valuation of the stored part; `None` for an empty series.
    pub fn val_u(&self) -> Option<i64> {
        self.terms.iter().map(|(m, _)| m.u).min()
    }

    /// Valuation lower bound used in precision propagation: stored valuation,
    /// or the precision itself when nothing is stored, or +infinity (`None`)
    /// for the exact zero.
    fn val_bound(&self) -> Option<i64> {
        match (self.val_u(), self.prec) {
            (Some(v), _) => Some(v),
            (None, Prec::Finite(p)) => Some(p),
            (None, Prec::Exact) => None,
        }
    }

    pub fn coeff(&self, m: &Mono) -> Rat {
        match self.terms.binary_search_by(|(tm, _)| tm.cmp(m)) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => Rat::zero(),
        }
    }

    /// Merge the t-cap of two operands.  Series whose terms are all at
    /// t-degree zero are compatible with any cap.
    fn merged_cap(&self, other: &Self) -> Result<u8> {
        if self.t_cap == other.t_cap {
            return Ok(self.t_cap);
        }
        let self_flat = self.terms.iter().all(|(m, _)| m.t.is_one());
        let other_flat = other.terms.iter().all(|(m, _)| m.t.is_one());
        match (self_flat, other_flat) {
            (true, _) => Ok(other.t_cap),
            (_, true) => Ok(self.t_cap),
            _ => Err(Error::IncompatibleTCaps(self.t_cap, other.t_cap)),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let cap = self.merged_cap(other)?;
        let prec = self.prec.min(other.prec);
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            match self.terms[i].0.cmp(&other.terms[j].0) {
                std::cmp::Ordering::Less => {
                    terms.push(self.terms[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    terms.push(other.terms[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = &self.terms[i].1 + &other.terms[j].1;
                    terms.push((self.terms[i].0, c));
                    i += 1;
                    j += 1;
                }
            }
        }
        terms.extend_from_slice(&self.terms[i..]);
        terms.extend_from_slice(&other.terms[j..]);
        let mut s = ScalarSeries { terms, prec, t_cap: cap };
        s.normalize();
        Ok(s)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("incompatible t caps")
    }

    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect();
        ScalarSeries { terms, prec: self.prec, t_cap: self.t_cap }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return ScalarSeries::zero(self.prec, self.t_cap);
        }
        let terms = self.terms.iter().map(|(m, k)| (*m, k * c)).collect();
        ScalarSeries { terms, prec: self.prec, t_cap: self.t_cap }
    }

    /// Multiply by a single monomial (exact shift/scale).
    pub fn mul_monomial(&self, c: &Rat, m: Mono) -> Self {
        if c.is_zero() {
            return ScalarSeries::zero(self.prec.shift(Some(m.u)), self.t_cap);
        }
        let terms: Vec<(Mono, Rat)> =
            self.terms.iter().map(|(tm, k)| (tm.mul(m), k * c)).collect();
        let mut s = ScalarSeries {
            terms,
            prec: self.prec.shift(Some(m.u)),
            t_cap: self.t_cap,
        };
        s.normalize();
        s
    }

    pub fn mul(&self, other: &Self) -> Self {
        let cap = self.merged_cap(other).expect("incompatible t caps");
        let prec = self
            .prec
            .shift(other.val_bound())
            .min(other.prec.shift(self.val_bound()));
        if self.terms.is_empty() || other.terms.is_empty() {
            return ScalarSeries::zero(prec, cap);
        }
        // Single-term fast path.
        if self.terms.len() == 1 {
            let (m, c) = &self.terms[0];
            let mut s = other.mul_monomial(c, *m);
            s.prec = prec;
            s.t_cap = cap;
            s.normalize();
            return s;
        }
        if other.terms.len() == 1 {
            let (m, c) = &other.terms[0];
            let mut s = self.mul_monomial(c, *m);
            s.prec = prec;
            s.t_cap = cap;
            s.normalize();
            return s;
        }
        let mut acc: Vec<(Mono, Rat)> =
            Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let u = ma.u + mb.u;
                if !prec.admits(u) {
                    continue;
                }
                let t = ma.t.mul(mb.t);
                if t.total_degree() > cap as u32 {
                    continue;
                }
                let m = ma.mul(*mb);
                acc.push((m, ca * cb));
            }
        }
        ScalarSeries::from_terms(acc, prec, cap)
    }

    /// Truncate to a (possibly lower) precision.
    pub fn truncated(&self, prec: Prec) -> Self {
        let prec = self.prec.min(prec);
        let mut s = self.clone();
        s.prec = prec;
        s.normalize();
        s
    }

    /// Keep only terms whose Q-exponent lies in `[lo, hi]`.  The result is a
    /// view for comparisons "through Q^hi"; its precision is unchanged.
    pub fn restrict_q(&self, lo: i64, hi: i64) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.q >= lo && m.q <= hi)
            .cloned()
            .collect();
        ScalarSeries { terms, prec: self.prec, t_cap: self.t_cap }
    }

    /// Coefficient of a given t-monomial, as a series in `(u, Q)` alone.
    pub fn t_coefficient(&self, t: TMono) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.t == t)
            .map(|(m, c)| (Mono { u: m.u, q: m.q, t: TMono::ONE }, c.clone()))
            .collect();
        ScalarSeries { terms, prec: self.prec, t_cap: self.t_cap }
    }

    /// Flip the sign of the generators in `slots`: `t_k -> -t_k`.
    pub fn flip_t_signs(&self, slots: &[u8]) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut sign = 1i64;
                for &s in slots {
                    if m.t.exp(s) % 2 == 1 {
                        sign = -sign;
                    }
                }
                (*m, if sign < 0 { -c.clone() } else { c.clone() })
            })
            .collect();
        ScalarSeries { terms, prec: self.prec, t_cap: self.t_cap }
    }

    /// Lowest u-layer as `(u-exponent, terms at that exponent)`.
    fn lowest_layer(&self) -> Option<(i64, Vec<(Mono, Rat)>)> {
        let v = self.val_u()?;
        let layer = self.terms.iter().filter(|(m, _)| m.u == v).cloned().collect();
        Some((v, layer))
    }

    fn leading_monomial_unit(&self) -> Result<(Mono, Rat)> {
        let (_, layer) = self.lowest_layer().ok_or(Error::NotAUnit)?;
        if layer.len() != 1 || !layer[0].0.t.is_one() {
            return Err(Error::NotAUnit);
        }
        Ok(layer[0].clone())
    }

    /// Inverse at the series' own precision.  Requires the lowest u-layer to
    /// be a single monomial at t-degree zero.
    pub fn invert(&self) -> Result<Self> {
        self.invert_at(self.prec)
    }

    /// Inverse computed modulo `u^prec` (capped by the input precision).
    pub fn invert_at(&self, prec: Prec) -> Result<Self> {
        let (lead_m, lead_c) = self.leading_monomial_unit()?;
        let inv_lead = ScalarSeries::monomial(
            lead_c.recip(),
            Mono { u: -lead_m.u, q: -lead_m.q, t: TMono::ONE },
            Prec::Exact,
            self.t_cap,
        );
        // a = m (1 + r) with r of positive u-valuation or positive t-degree.
        let r = self.mul(&inv_lead).sub(&ScalarSeries::one(Prec::Exact, self.t_cap));
        let target = self.prec.shift(Some(-2 * lead_m.u)).min(prec);
        if r.is_zero() {
            return Ok(inv_lead.truncated(target));
        }
        if target.is_exact() {
            return Err(Error::UnboundedInverse);
        }
        let mut geom = ScalarSeries::one(target, self.t_cap);
        let mut power = ScalarSeries::one(target, self.t_cap);
        loop {
            power = power.mul(&r.neg()).truncated(target);
            if power.is_zero() {
                break;
            }
            geom = geom.add(&power);
        }
        Ok(geom.mul(&inv_lead).truncated(target))
    }

    /// Exponential of a nilpotent argument: every term must carry positive
    /// u-exponent or positive t-degree.
    pub fn exp(&self) -> Result<Self> {
        for (m, _) in &self.terms {
            if m.t.is_one() && m.u <= 0 {
                return Err(Error::NotNilpotent);
            }
        }
        let has_pure_u = self.terms.iter().any(|(m, _)| m.t.is_one());
        if has_pure_u && self.prec.is_exact() {
            return Err(Error::UnboundedInverse);
        }
        // exp(a) is known modulo the argument's own absolute precision;
        // truncating the powers there is what makes the loop finite.
        let target = self.prec;
        let mut sum = ScalarSeries::one(target, self.t_cap);
        let mut power = ScalarSeries::one(target, self.t_cap);
        let mut k = 1u64;
        loop {
            power = power.mul(self).truncated(target);
            if power.is_zero() {
                break;
            }
            let factorial_inv = Rat::new(BigInt::one(), factorial(k));
            sum = sum.add(&power.scale(&factorial_inv));
            k += 1;
        }
        Ok(sum)
    }

    /// Exact division: the quotient must exist in the ring (coefficients in
    /// `Q` divide exactly layer by layer in `u`, with the nilpotent t-sector
    /// peeled off the divisor first).
    pub fn exact_div(&self, divisor: &Self) -> Result<Self> {
        let cap = self.merged_cap(divisor)?;
        let d0 = divisor.t_coefficient(TMono::ONE);
        if d0.is_zero() {
            return Err(Error::NotExactlyDivisible(
                "divisor has no t-degree-0 part".into(),
            ));
        }
        let d_nil = divisor.sub(&widen_tmono(&d0, cap));
        let d0 = widen_tmono(&d0, cap);
        // q = (a - d_nil * q) / d0, iterated in the t-adic filtration.
        let mut q = div_t_free(self, &d0, cap)?;
        for _ in 0..cap {
            let adjusted = self.sub(&d_nil.mul(&q));
            q = div_t_free(&adjusted, &d0, cap)?;
        }
        Ok(q)
    }

    /// Equality below the shared precision and within the shared t-cap.
    pub fn eq_upto(&self, other: &Self) -> bool {
        self.first_mismatch(other).is_none()
    }

    /// First differing monomial below the shared precision, with both
    /// coefficients; `None` when equal at precision.
    pub fn first_mismatch(&self, other: &Self) -> Option<(Mono, Rat, Rat)> {
        let prec = self.prec.min(other.prec);
        let cap = self.t_cap.min(other.t_cap) as u32;
        let admissible =
            |m: &Mono| prec.admits(m.u) && m.t.total_degree() <= cap;
        let (mut i, mut j) = (0, 0);
        loop {
            let a = self.terms.get(i).filter(|(m, _)| admissible(m));
            // Skip inadmissible terms rather than stopping at them.
            if self.terms.get(i).is_some() && a.is_none() {
                i += 1;
                continue;
            }
            let b = other.terms.get(j).filter(|(m, _)| admissible(m));
            if other.terms.get(j).is_some() && b.is_none() {
                j += 1;
                continue;
            }
            match (a, b) {
                (None, None) => return None,
                (Some((m, c)), None) => return Some((*m, c.clone(), Rat::zero())),
                (None, Some((m, c))) => return Some((*m, Rat::zero(), c.clone())),
                (Some((ma, ca)), Some((mb, cb))) => match ma.cmp(mb) {
                    std::cmp::Ordering::Less => {
                        return Some((*ma, ca.clone(), Rat::zero()))
                    }
                    std::cmp::Ordering::Greater => {
                        return Some((*mb, Rat::zero(), cb.clone()))
                    }
                    std::cmp::Ordering::Equal => {
                        if ca != cb {
                            return Some((*ma, ca.clone(), cb.clone()));
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Reinterpret a series under a different t-cap (used after `t_coefficient`
/// which keeps the original cap).
fn widen_tmono(s: &ScalarSeries, cap: u8) -> ScalarSeries {
    ScalarSeries::from_terms(s.terms.clone(), s.prec(), cap)
}

/// Division by a t-free divisor, layer by layer in `u`.
fn div_t_free(a: &ScalarSeries, d: &ScalarSeries, cap: u8) -> Result<ScalarSeries> {
    debug_assert!(d.terms.iter().all(|(m, _)| m.t.is_one()));
    let vd = match d.val_u() {
        Some(v) => v,
        None => {
            return Err(Error::NotExactlyDivisible("division by zero series".into()))
        }
    };
    let prec = a
        .prec
        .shift(Some(-vd))
        .min(d.prec.shift(Some(a.val_bound().unwrap_or(0) - 2 * vd)));
    if a.is_zero() {
        return Ok(ScalarSeries::zero(prec, cap));
    }
    // Group divisor terms by u-layer.
    let mut d_layers: BTreeMap<i64, Vec<(Mono, Rat)>> = BTreeMap::new();
    for (m, c) in &d.terms {
        d_layers.entry(m.u).or_default().push((*m, c.clone()));
    }
    let d_lowest = d_layers[&vd].clone();
    let va = a.val_u().unwrap();
    let a_max = a.terms.iter().map(|(m, _)| m.u).max().unwrap();
    let d_max = d.terms.iter().map(|(m, _)| m.u).max().unwrap();
    // An exact quotient of (Laurent-)polynomial data cannot have u-exponents
    // above a_max - d_max; for finite precision the loop is bounded anyway.
    let n_end = match prec {
        Prec::Finite(p) => p,
        Prec::Exact => a_max - d_max + 1,
    };
    // Remainder starts as the dividend; peel one quotient layer at a time.
    let mut rem: BTreeMap<i64, Vec<(Mono, Rat)>> = BTreeMap::new();
    for (m, c) in &a.terms {
        rem.entry(m.u).or_default().push((*m, c.clone()));
    }
    let mut quotient: Vec<(Mono, Rat)> = Vec::new();
    let mut n = va - vd;
    while n < n_end {
        if let Some(raw) = rem.remove(&(n + vd)) {
            let layer = ScalarSeries::from_terms(raw, Prec::Exact, cap);
            if !layer.is_zero() {
                let q_layer = divide_layer(layer.terms(), &d_lowest, n)?;
                // Subtract q_layer * (d minus its lowest layer).
                for (qm, qc) in &q_layer {
                    for (du, d_terms) in &d_layers {
                        if *du == vd {
                            continue;
                        }
                        for (dm, dc) in d_terms {
                            let m = qm.mul(*dm);
                            if !prec.shift(Some(vd)).admits(m.u)
                                || m.t.total_degree() > cap as u32
                            {
                                continue;
                            }
                            rem.entry(m.u).or_default().push((m, -(qc * dc)));
                        }
                    }
                }
                quotient.extend(q_layer);
            }
        }
        n += 1;
    }
    if prec.is_exact() {
        for raw in rem.into_values() {
            let layer = ScalarSeries::from_terms(raw, Prec::Exact, cap);
            if !layer.is_zero() {
                return Err(Error::NotExactlyDivisible(
                    "nonzero remainder after exact division".into(),
                ));
            }
        }
    }
    Ok(ScalarSeries::from_terms(quotient, prec, cap))
}

/// Divide one u-layer (a Laurent polynomial in Q tensor t-monomials) by the
/// divisor's lowest u-layer (a Laurent polynomial in Q).  The quotient layer
/// sits at u-exponent `n`.
fn divide_layer(
    layer: &[(Mono, Rat)],
    divisor: &[(Mono, Rat)],
    n: i64,
) -> Result<Vec<(Mono, Rat)>> {
    // Split the dividend by t-monomial; each group is divided independently.
    let mut groups: BTreeMap<TMono, BTreeMap<i64, Rat>> = BTreeMap::new();
    for (m, c) in layer {
        let e = groups.entry(m.t).or_default().entry(m.q).or_insert_with(Rat::zero);
        *e += c.clone();
    }
    let div: BTreeMap<i64, Rat> =
        divisor.iter().map(|(m, c)| (m.q, c.clone())).collect();
    let dq_min = *div.keys().next().unwrap();
    let dq_max = *div.keys().next_back().unwrap();
    let d_lead = div[&dq_min].clone();
    let mut out = Vec::new();
    for (t, mut poly) in groups {
        poly.retain(|_, c| !c.is_zero());
        // Exactness bound: the quotient's Q-degree cannot exceed
        // dividend_max - divisor_max.
        let q_bound = match poly.keys().next_back() {
            Some(&mx) => mx - dq_max,
            None => continue,
        };
        while let Some((&qe, _)) = poly.iter().next() {
            let q_off = qe - dq_min;
            if q_off > q_bound {
                return Err(Error::NotExactlyDivisible(format!(
                    "Q-layer not divisible (layer u^{n})"
                )));
            }
            let factor = &poly[&qe] / &d_lead;
            for (dq, dc) in &div {
                let tgt = q_off + dq;
                let e = poly.entry(tgt).or_insert_with(Rat::zero);
                *e -= &factor * dc;
                if e.is_zero() {
                    poly.remove(&tgt);
                }
            }
            out.push((Mono { u: n, q: q_off, t }, factor));
        }
    }
    Ok(out)
}

impl fmt::Display for ScalarSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        } else {
            for (i, (m, c)) in self.terms.iter().enumerate() {
                let mut parts: Vec<String> = Vec::new();
                if m.u != 0 {
                    parts.push(format!("u^{}", m.u));
                }
                if m.q != 0 {
                    parts.push(format!("Q^{}", m.q));
                }
                for s in 0..MAX_T_SLOTS {
                    let e = m.t.exp(s);
                    if e > 0 {
                        parts.push(if e == 1 {
                            format!("g{s}")
                        } else {
                            format!("g{s}^{e}")
                        });
                    }
                }
                let mono = parts.join("*");
                let sign = if c.is_negative() { "-" } else { "+" };
                let mag = c.abs();
                if i == 0 {
                    if c.is_negative() {
                        write!(f, "-")?;
                    }
                } else {
                    write!(f, " {sign} ")?;
                }
                if mono.is_empty() {
                    write!(f, "{mag}")?;
                } else if mag.is_one() {
                    write!(f, "{mono}")?;
                } else {
                    write!(f, "{mag}*{mono}")?;
                }
            }
        }
        match self.prec {
            Prec::Finite(p) => write!(f, " (mod u^{p})"),
            Prec::Exact => Ok(()),
        }
    }
}

impl fmt::Debug for ScalarSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// `1/(1 - u^{2h})` expanded modulo `u^prec` (h > 0).
pub fn geometric_q_pow(h: i64, prec: i64, t_cap: u8) -> ScalarSeries {
    debug_assert!(h > 0);
    let mut terms = Vec::new();
    let mut e = 0;
    while e < prec {
        terms.push((Mono { u: e, q: 0, t: TMono::ONE }, rat(1)));
        e += 2 * h;
    }
    ScalarSeries::from_terms(terms, Prec::Finite(prec), t_cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fin(p: i64) -> Prec {
        Prec::Finite(p)
    }

    fn upow(e: i64, prec: Prec) -> ScalarSeries {
        ScalarSeries::monomial(rat(1), Mono { u: e, q: 0, t: TMono::ONE }, prec, 2)
    }

    #[test]
    fn additive_inverse_preserves_precision() {
        let a = upow(1, fin(4));
        let s = a.add(&a.neg());
        assert!(s.is_zero());
        assert_eq!(s.prec(), fin(4));
    }

    #[test]
    fn add_uses_min_precision() {
        // (1 + u mod u^4) + (1 mod u^2) = 2 mod u^2 (the u term is above
        // neither precision... it survives only below u^2).
        let a = ScalarSeries::one(fin(4), 2).add(&upow(1, fin(4)));
        let b = ScalarSeries::one(fin(2), 2);
        let s = a.add(&b);
        assert_eq!(s.prec(), fin(2));
        assert_eq!(s.coeff(&Mono::UNIT), rat(2));
        assert_eq!(s.coeff(&Mono { u: 1, q: 0, t: TMono::ONE }), rat(1));
    }

    #[test]
    fn laurent_term_arithmetic() {
        let m = Mono { u: -1, q: 1, t: TMono::ONE };
        let a = ScalarSeries::monomial(rat(1), m, fin(8), 2);
        let s = a.add(&a);
        assert_eq!(s.coeff(&m), rat(2));
    }

    #[test]
    fn mul_monomials_and_precision_rule() {
        let a = upow(-1, Prec::Exact);
        let b = upow(1, Prec::Exact);
        let p = a.mul(&b);
        assert_eq!(p.coeff(&Mono::UNIT), rat(1));
        assert!(p.prec().is_exact());

        // (1 - u^2) * geometric = 1 mod u^10
        let one = ScalarSeries::one(fin(10), 2);
        let f = one.sub(&upow(2, Prec::Exact));
        let g = geometric_q_pow(1, 10, 2);
        let p = f.mul(&g);
        assert!(p.eq_upto(&ScalarSeries::one(fin(10), 2)));
        assert_eq!(p.prec(), fin(10));
    }

    #[test]
    fn nilpotent_t_sector() {
        let t1 = ScalarSeries::t_gen(0, 1).unwrap();
        assert!(t1.mul(&t1).is_zero());
        let t1c2 = ScalarSeries::t_gen(0, 2).unwrap();
        assert!(!t1c2.mul(&t1c2).is_zero());
    }

    #[test]
    fn invert_geometric() {
        let a = ScalarSeries::one(fin(6), 2).sub(&upow(1, Prec::Exact));
        let inv = a.invert().unwrap();
        for e in 0..6 {
            assert_eq!(inv.coeff(&Mono { u: e, q: 0, t: TMono::ONE }), rat(1));
        }
        assert!(a.mul(&inv).eq_upto(&ScalarSeries::one(fin(6), 2)));
    }

    #[test]
    fn invert_monomial() {
        let a = ScalarSeries::monomial(
            rat(1),
            Mono { u: -2, q: 1, t: TMono::ONE },
            Prec::Exact,
            2,
        );
        let inv = a.invert().unwrap();
        assert_eq!(inv.coeff(&Mono { u: 2, q: -1, t: TMono::ONE }), rat(1));
        assert!(inv.prec().is_exact());
    }

    #[test]
    fn invert_shifted_unit() {
        // invert(u + u^2) = u^-1 - 1 + u - ... ; verified by multiplying back.
        let a = upow(1, fin(8)).add(&upow(2, Prec::Exact));
        let inv = a.invert().unwrap();
        assert_eq!(inv.coeff(&Mono { u: -1, q: 0, t: TMono::ONE }), rat(1));
        assert_eq!(inv.coeff(&Mono::UNIT), rat(-1));
        let prod = a.mul(&inv);
        assert!(prod.eq_upto(&ScalarSeries::one(prod.prec(), 2)));
    }

    #[test]
    fn invert_rejects_non_units() {
        let a = upow(1, fin(8)).add(&upow(1, fin(8)).mul(&ScalarSeries::monomial(
            rat(1),
            Mono { u: 0, q: 1, t: TMono::ONE },
            Prec::Exact,
            2,
        )));
        assert_eq!(a.invert().unwrap_err(), Error::NotAUnit);
    }

    #[test]
    fn exp_truncated() {
        let t1 = ScalarSeries::t_gen(0, 2).unwrap();
        let x = upow(1, fin(10));
        let a = t1.mul(&x);
        let e = a.exp().unwrap();
        // 1 + t1 x + t1^2 x^2 / 2
        let t2 = TMono::gen(0).unwrap().mul(TMono::gen(0).unwrap());
        assert_eq!(e.coeff(&Mono { u: 2, q: 0, t: t2 }), ratio(1, 2));
        // exp(a) exp(-a) = 1
        let em = a.neg().exp().unwrap();
        assert!(e.mul(&em).eq_upto(&ScalarSeries::one(fin(10), 2)));
    }

    #[test]
    fn exp_zero_and_inverse_law() {
        let z = ScalarSeries::zero(fin(5), 1);
        assert!(z.exp().unwrap().eq_upto(&ScalarSeries::one(fin(5), 1)));
        let u = upow(1, fin(12));
        let p = u.exp().unwrap().mul(&u.neg().exp().unwrap());
        assert!(p.eq_upto(&ScalarSeries::one(fin(12), 2)));
    }

    #[test]
    fn exp_rejects_constant() {
        let a = ScalarSeries::one(fin(5), 1);
        assert_eq!(a.exp().unwrap_err(), Error::NotNilpotent);
    }

    #[test]
    fn eq_upto_respects_precision() {
        let a = ScalarSeries::one(fin(3), 2);
        let b = ScalarSeries::one(fin(10), 2).add(&upow(5, fin(10)));
        assert!(a.eq_upto(&b));
        assert!(!upow(1, fin(5)).eq_upto(&upow(1, fin(5)).neg()));
    }

    #[test]
    fn exact_div_by_one_plus_q() {
        // (Q + Q^2) q^3 / (1 + Q) = Q q^3
        let dividend = ScalarSeries::from_terms(
            vec![
                (Mono { u: 6, q: 1, t: TMono::ONE }, rat(1)),
                (Mono { u: 6, q: 2, t: TMono::ONE }, rat(1)),
            ],
            Prec::Exact,
            1,
        );
        let divisor = ScalarSeries::from_terms(
            vec![
                (Mono::UNIT, rat(1)),
                (Mono { u: 0, q: 1, t: TMono::ONE }, rat(1)),
            ],
            Prec::Exact,
            1,
        );
        let q = dividend.exact_div(&divisor).unwrap();
        assert_eq!(q.terms().len(), 1);
        assert_eq!(q.coeff(&Mono { u: 6, q: 1, t: TMono::ONE }), rat(1));
    }

    #[test]
    fn exact_div_multi_layer() {
        // a = (1 - u^2)(1 + Q) + u^4 * Q, b = (1 + Q): check a*b/b = a.
        let b = ScalarSeries::from_terms(
            vec![
                (Mono::UNIT, rat(1)),
                (Mono { u: 0, q: 1, t: TMono::ONE }, rat(1)),
            ],
            Prec::Finite(12),
            1,
        );
        let a = ScalarSeries::from_terms(
            vec![
                (Mono::UNIT, rat(1)),
                (Mono { u: 2, q: 0, t: TMono::ONE }, rat(-1)),
                (Mono { u: 4, q: 1, t: TMono::ONE }, rat(1)),
            ],
            Prec::Finite(12),
            1,
        );
        let prod = a.mul(&b);
        let q = prod.exact_div(&b).unwrap();
        assert!(q.eq_upto(&a));
    }

    #[test]
    fn exact_div_with_nilpotent_divisor_part() {
        let t1 = ScalarSeries::t_gen(0, 2).unwrap();
        let b = ScalarSeries::one(fin(10), 2).add(&t1);
        let a = upow(1, fin(10)).mul(&b);
        let q = a.exact_div(&b).unwrap();
        assert!(q.eq_upto(&upow(1, fin(10))));
    }

    #[test]
    fn exact_div_detects_inexact() {
        let b = ScalarSeries::from_terms(
            vec![
                (Mono::UNIT, rat(1)),
                (Mono { u: 0, q: 1, t: TMono::ONE }, rat(1)),
            ],
            Prec::Exact,
            1,
        );
        let a = ScalarSeries::monomial(
            rat(1),
            Mono { u: 0, q: 1, t: TMono::ONE },
            Prec::Exact,
            1,
        );
        assert!(a.exact_div(&b).is_err());
    }
}
