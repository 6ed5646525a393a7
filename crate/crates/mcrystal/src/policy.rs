//! Truncation policies: every check is exact at a stated truncation, and the
//! policy is where the truncation lives.

use crate::error::{Error, Result};
use crate::series::{Prec, ScalarSeries, TMono, MAX_T_SLOTS};

/// Which family a deformation generator belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub enum TKind {
    T,
    TBar,
}

/// A deformation generator `t_k` or `tbar_k`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub struct TGen {
    pub kind: TKind,
    pub index: u8,
}

impl TGen {
    pub fn t(index: u8) -> Self {
        TGen { kind: TKind::T, index }
    }

    pub fn tbar(index: u8) -> Self {
        TGen { kind: TKind::TBar, index }
    }

    pub fn label(&self) -> String {
        match self.kind {
            TKind::T => format!("t{}", self.index),
            TKind::TBar => format!("tb{}", self.index),
        }
    }
}

/// Truncation parameters shared by all modules.
#[derive(Clone, Debug)]
pub struct TruncationPolicy {
    /// Series are computed modulo `u^u_order`.
    pub u_order: i64,
    /// Total-degree cap (nilpotency order) in the deformation generators.
    pub t_cap: u8,
    /// Window halfwidth: matrices live on rows `[-n, n]`.
    pub window_n: i64,
    /// Partition sums run over `|lambda| <= max_weight`.
    pub max_weight: u32,
    /// Partition sums and comparisons are exact through this Q-degree
    /// (relative to the charge-sector vacuum).
    pub q_degree: i64,
    /// Active deformation generators, in slot order.
    pub gens: Vec<TGen>,
    /// Lowest legal u-exponent; breaching it is a hard error.
    pub u_floor: i64,
}

impl TruncationPolicy {
    pub fn new(u_order: i64, t_cap: u8, window_n: i64, max_weight: u32, q_degree: i64) -> Self {
        TruncationPolicy {
            u_order,
            t_cap,
            window_n,
            max_weight,
            q_degree,
            gens: Vec::new(),
            // Generous default: accommodates the q^{±Δ²/2} conjugations on
            // the enlarged build window.
            u_floor: -(window_n + 2 * u_order).pow(2) * 4 - 8 * u_order,
        }
    }

    pub fn with_gens(mut self, gens: Vec<TGen>) -> Self {
        assert!(gens.len() <= MAX_T_SLOTS as usize, "too many t-generators");
        self.gens = gens;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.u_order <= 0 || self.window_n <= 0 {
            return Err(Error::BadConfig("u_order and window must be positive".into()));
        }
        if self.q_degree < 0 {
            return Err(Error::BadConfig("q_degree must be nonnegative".into()));
        }
        if self.gens.len() > MAX_T_SLOTS as usize {
            return Err(Error::BadConfig("too many active t-generators".into()));
        }
        Ok(())
    }

    pub fn prec(&self) -> Prec {
        Prec::Finite(self.u_order)
    }

    pub fn slot_of(&self, gen: TGen) -> Option<u8> {
        self.gens.iter().position(|g| *g == gen).map(|i| i as u8)
    }

    /// The generator series for an active slot.
    pub fn gen_series(&self, gen: TGen) -> Result<ScalarSeries> {
        let slot = self
            .slot_of(gen)
            .ok_or_else(|| Error::BadConfig(format!("generator {} not active", gen.label())))?;
        ScalarSeries::t_gen(slot, self.t_cap)
    }

    /// Slots holding odd-indexed `t` generators (for the alternating
    /// inversion that flips their signs).
    pub fn odd_t_slots(&self) -> Vec<u8> {
        self.gens
            .iter()
            .enumerate()
            .filter(|(_, g)| g.kind == TKind::T && g.index % 2 == 1)
            .map(|(i, _)| i as u8)
            .collect()
    }

    pub fn t_mono_label(&self, t: TMono) -> String {
        let mut parts = Vec::new();
        for (i, g) in self.gens.iter().enumerate() {
            let e = t.exp(i as u8);
            if e == 1 {
                parts.push(g.label());
            } else if e > 1 {
                parts.push(format!("{}^{}", g.label(), e));
            }
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::new(24, 2, 12, 8, 6)
    }
}
