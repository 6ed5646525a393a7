//! Partition functions and tau functions as finite, exactly truncated sums
//! over charged Fock basis states `|s, lambda>`.
//!
//! The two melting-crystal models differ in one weight factor:
//! `s_lambda(q^{-rho})^2` for the previous model, `s_lambda s_{lambda^t}`
//! for the modified one; the `Z_l` family interpolates via `q^{l kappa/2}`.
//! Everything here reduces to skew Schur specializations, the diagonal
//! eigenvalues of `L_0`, `W_0`, `H_k`, and nilpotent deformation arithmetic.

use num::{BigInt, One};

use crate::error::{Error, Result};
use crate::partitions::{enumerate_partitions, schur_poly_t, schur_qrho, Partition, SkewCache};
use crate::policy::{TGen, TKind, TruncationPolicy};
use crate::series::{rat, Mono, Prec, Rat, ScalarSeries, TMono};

/// Which melting-crystal model.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Model {
    Previous,
    Modified,
    Local(u32),
}

impl Model {
    /// Exponent `l` in the weight `q^{l kappa(lambda)/2}`.
    pub fn framing(self) -> i64 {
        match self {
            Model::Previous => 0,
            Model::Modified => 1,
            Model::Local(l) => l as i64,
        }
    }
}

/// Which dressed operator defines the tau function.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GKind {
    /// `g = q^{W0/2} G- G+ Q^{L0} G- G+ q^{W0/2}` (previous model).
    G,
    /// `g' = q^{W0/2} G- G+ Q^{L0} G'- G'+ q^{-W0/2}` (modified model).
    GPrime,
}

/// Vertex operator flavors; primed kinds generate elementary rather than
/// complete homogeneous symmetric functions.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VertexKind {
    GammaPlus,
    GammaMinus,
    GammaPrimePlus,
    GammaPrimeMinus,
}

/// `L_0` eigenvalue on `|s, lambda>`: `|lambda| + s(s+1)/2`.
pub fn l0_eigenvalue(lambda: &Partition, s: i64) -> i64 {
    lambda.weight() as i64 + s * (s + 1) / 2
}

/// `W_0` eigenvalue on `|s, lambda>`:
/// `s(s+1)(2s+1)/6 + sum_i [(lambda_i + s - i + 1)^2 - (s - i + 1)^2]`.
pub fn w0_eigenvalue(lambda: &Partition, s: i64) -> i64 {
    let vac = s * (s + 1) * (2 * s + 1) / 6;
    let excited: i64 = lambda
        .parts()
        .iter()
        .enumerate()
        .map(|(i0, &p)| {
            let i = i0 as i64 + 1;
            let a = p as i64 + s - i + 1;
            let b = s - i + 1;
            a * a - b * b
        })
        .sum();
    vac + excited
}

/// Finite geometric sum `(1 - x^s)/(1 - x)` with `x = u^{x_exp}`, for any
/// integer `s` (negative `s` gives `-sum_{j=s}^{-1} x^j`).
fn geom_sum(x_exp: i64, s: i64, t_cap: u8) -> ScalarSeries {
    let mut terms = Vec::new();
    if s >= 0 {
        for j in 0..s {
            terms.push((Mono { u: j * x_exp, q: 0, t: TMono::ONE }, rat(1)));
        }
    } else {
        for j in s..0 {
            terms.push((Mono { u: j * x_exp, q: 0, t: TMono::ONE }, rat(-1)));
        }
    }
    ScalarSeries::from_terms(terms, Prec::Exact, t_cap)
}

/// External potential `Phi_k(lambda, s)` for `k != 0`:
/// `sum_i (q^{k(lambda_i+s-i+1)} - q^{k(s-i+1)}) + q^k (1-q^{ks})/(1-q^k)`.
/// Always an exact Laurent polynomial in `u`.
pub fn phi_potential(lambda: &Partition, s: i64, k: i64, t_cap: u8) -> ScalarSeries {
    assert!(k != 0, "Phi_k requires k != 0");
    let mut terms = Vec::new();
    for (i0, &p) in lambda.parts().iter().enumerate() {
        let i = i0 as i64 + 1;
        terms.push((
            Mono { u: 2 * k * (p as i64 + s - i + 1), q: 0, t: TMono::ONE },
            rat(1),
        ));
        terms.push((Mono { u: 2 * k * (s - i + 1), q: 0, t: TMono::ONE }, rat(-1)));
    }
    let excited = ScalarSeries::from_terms(terms, Prec::Exact, t_cap);
    let vacuum =
        geom_sum(2 * k, s, t_cap).mul_monomial(&rat(1), Mono { u: 2 * k, q: 0, t: TMono::ONE });
    excited.add(&vacuum)
}

/// Shared context: a truncation policy plus skew-Schur memoization.
pub struct FockContext {
    pub policy: TruncationPolicy,
    pub skew: SkewCache,
}

impl FockContext {
    pub fn new(policy: TruncationPolicy) -> Self {
        FockContext { policy, skew: SkewCache::new() }
    }

    fn prec(&self) -> i64 {
        self.policy.u_order
    }

    fn cap(&self) -> u8 {
        self.policy.t_cap
    }

    /// The deformation exponent `sum_k t_k Phi_k + sum_k tbar_k Phi_{-k}`
    /// over the active generators; for the previous model the `tbar` family
    /// does not enter.
    fn deformation(&self, lambda: &Partition, s: i64, include_tbar: bool) -> ScalarSeries {
        let mut arg = ScalarSeries::exact_zero(self.cap());
        for gen in &self.policy.gens {
            let k = match gen.kind {
                TKind::T => gen.index as i64,
                TKind::TBar => {
                    if !include_tbar {
                        continue;
                    }
                    -(gen.index as i64)
                }
            };
            let slot = self.policy.slot_of(*gen).expect("gen is active");
            let t = ScalarSeries::t_gen(slot, self.cap()).expect("slot in range");
            arg = arg.add(&t.mul(&phi_potential(lambda, s, k, self.cap())));
        }
        arg
    }

    /// Deformed partition function of the given model, summed over
    /// `|lambda| <= max_weight`; exact per Q-coefficient through
    /// `Q^{max_weight + s(s+1)/2}`.
    pub fn partition_function(&self, model: Model, s: i64) -> ScalarSeries {
        let prec = self.prec();
        let cap = self.cap();
        let include_tbar = model != Model::Previous;
        let mut sum = ScalarSeries::zero(Prec::Finite(prec), cap);
        for lambda in enumerate_partitions(self.policy.max_weight) {
            let s_val = schur_qrho(&lambda, prec, cap);
            let mut weight = s_val.mul(&s_val);
            let framing = model.framing() * lambda.kappa();
            let q_exp = l0_eigenvalue(&lambda, s);
            weight = weight.mul_monomial(&rat(1), Mono { u: framing, q: q_exp, t: TMono::ONE });
            let phi = self.deformation(&lambda, s, include_tbar);
            let deformed = weight.mul(&phi.exp().expect("deformation is nilpotent"));
            sum = sum.add(&deformed);
        }
        sum
    }

    /// Infinite-product form of the undeformed `Z` (previous) or `Z'`
    /// (modified), truncated exactly at the working u-order:
    /// `prod_{n=1}^P (1 -+ Q q^n)^{-+n}`.
    pub fn product_formula(&self, model: Model) -> Result<ScalarSeries> {
        let sign = match model {
            Model::Previous => -1i64,
            Model::Modified => 1,
            Model::Local(_) => {
                return Err(Error::BadConfig(
                    "product formula exists only for the previous/modified models".into(),
                ))
            }
        };
        let prec = self.prec();
        let cap = self.cap();
        let p_max = prec / 2 + 1;
        let mut prod = ScalarSeries::one(Prec::Finite(prec), cap);
        for n in 1..=p_max {
            let mut terms = vec![(Mono::UNIT, rat(1))];
            let mut j = 1i64;
            while 2 * n * j < prec {
                let c = if sign < 0 {
                    // (1 - Qq^n)^{-n}: binomial C(n+j-1, j)
                    binomial(n + j - 1, j)
                } else {
                    // (1 + Qq^n)^{n}: binomial C(n, j), zero beyond n
                    if j > n {
                        break;
                    }
                    binomial(n, j)
                };
                terms.push((Mono { u: 2 * n * j, q: j, t: TMono::ONE }, Rat::from(c)));
                j += 1;
            }
            let factor = ScalarSeries::from_terms(terms, Prec::Finite(prec), cap);
            prod = prod.mul(&factor);
        }
        Ok(prod)
    }

    /// Vertex-operator matrix element `<bra| Gamma |ket>` at `q^{-rho}`
    /// (or `Q q^{-rho}` when `q_scaled`).  The unprimed kinds give skew
    /// Schur functions, the primed kinds the conjugate-shape ones.
    pub fn vertex_matrix_element(
        &self,
        kind: VertexKind,
        bra: &Partition,
        ket: &Partition,
        q_scaled: bool,
    ) -> ScalarSeries {
        let prec = self.prec();
        let cap = self.cap();
        // Gamma- and Gamma'- lower the ket: <lambda|G-|mu> = s_{lambda/mu};
        // Gamma+ and Gamma'+ raise it: <mu|G+|lambda> = s_{lambda/mu}.
        let (outer, inner) = match kind {
            VertexKind::GammaMinus | VertexKind::GammaPrimeMinus => (bra, ket),
            VertexKind::GammaPlus | VertexKind::GammaPrimePlus => (ket, bra),
        };
        let primed = matches!(kind, VertexKind::GammaPrimePlus | VertexKind::GammaPrimeMinus);
        let value = if primed {
            self.skew.get(&outer.conjugate(), &inner.conjugate(), prec, cap)
        } else {
            self.skew.get(outer, inner, prec, cap)
        };
        if q_scaled {
            let d = outer.weight() as i64 - inner.weight() as i64;
            value.mul_monomial(&rat(1), Mono { u: 0, q: d, t: TMono::ONE })
        } else {
            value
        }
    }

    /// Matrix element `<lambda, s| g |mu, s>` (or `g'`), as a nested finite
    /// sum over intermediate states; exact per Q-coefficient through
    /// `Q^{q_degree + s(s+1)/2}`.
    pub fn g_matrix_element(
        &self,
        which: GKind,
        lambda: &Partition,
        mu: &Partition,
        s: i64,
    ) -> ScalarSeries {
        let prec = self.prec();
        let cap = self.cap();
        let betas = enumerate_partitions(self.policy.q_degree.max(0) as u32);
        let alphas = enumerate_partitions(lambda.weight());
        let gammas = enumerate_partitions(mu.weight());
        let mut sum = ScalarSeries::zero(Prec::Finite(prec), cap);
        for beta in &betas {
            // A(lambda, beta) = sum_alpha s_{lambda/alpha} s_{beta/alpha}
            let mut left = ScalarSeries::zero(Prec::Finite(prec), cap);
            for alpha in &alphas {
                if !lambda.contains(alpha) || !beta.contains(alpha) {
                    continue;
                }
                let a = self.skew.get(lambda, alpha, prec, cap);
                let b = self.skew.get(beta, alpha, prec, cap);
                left = left.add(&a.mul(&b));
            }
            if left.is_zero() {
                continue;
            }
            // B(beta, mu): plain skew Schur pair for g, conjugated for g'.
            let mut right = ScalarSeries::zero(Prec::Finite(prec), cap);
            for gamma in &gammas {
                if !beta.contains(gamma) || !mu.contains(gamma) {
                    continue;
                }
                let (a, b) = match which {
                    GKind::G => (
                        self.skew.get(beta, gamma, prec, cap),
                        self.skew.get(mu, gamma, prec, cap),
                    ),
                    GKind::GPrime => (
                        self.skew.get(&beta.conjugate(), &gamma.conjugate(), prec, cap),
                        self.skew.get(&mu.conjugate(), &gamma.conjugate(), prec, cap),
                    ),
                };
                right = right.add(&a.mul(&b));
            }
            if right.is_zero() {
                continue;
            }
            let q_exp = l0_eigenvalue(beta, s);
            sum = sum.add(&left.mul(&right).mul_monomial(
                &rat(1),
                Mono { u: 0, q: q_exp, t: TMono::ONE },
            ));
        }
        let w_left = w0_eigenvalue(lambda, s);
        let w_right = w0_eigenvalue(mu, s);
        let w_exp = match which {
            GKind::G => w_left + w_right,
            GKind::GPrime => w_left - w_right,
        };
        sum.mul_monomial(&rat(1), Mono { u: w_exp, q: 0, t: TMono::ONE })
    }

    /// Maximum partition weight that can carry a nonzero Schur polynomial in
    /// the active generators of the given kind at the current t-cap.
    fn t_weight_bound(&self, kind: TKind) -> u32 {
        let max_index = self
            .policy
            .gens
            .iter()
            .filter(|g| g.kind == kind)
            .map(|g| g.index as u32)
            .max()
            .unwrap_or(0);
        max_index * self.cap() as u32
    }

    /// Slot table for `schur_poly_t`: entry `k-1` holds the slot of `t_k`
    /// (or `tbar_k`) when active.
    fn slot_table(&self, kind: TKind) -> Vec<Option<u8>> {
        let max_index = self
            .policy
            .gens
            .iter()
            .filter(|g| g.kind == kind)
            .map(|g| g.index)
            .max()
            .unwrap_or(0);
        (1..=max_index)
            .map(|k| self.policy.slot_of(TGen { kind, index: k }))
            .collect()
    }

    /// Tau function `tau(s, t, tbar) = sum_{lambda,mu} S_lambda(t)
    /// <lambda,s|g|mu,s> S_mu(-tbar)`, truncated by the t-cap and the
    /// policy's Q window.
    pub fn tau(&self, which: GKind, s: i64) -> ScalarSeries {
        let cap = self.cap();
        let t_slots = self.slot_table(TKind::T);
        let tbar_slots = self.slot_table(TKind::TBar);
        let tbar_all: Vec<u8> = tbar_slots.iter().flatten().copied().collect();
        let lambdas: Vec<(Partition, ScalarSeries)> =
            enumerate_partitions(self.t_weight_bound(TKind::T))
                .into_iter()
                .map(|l| {
                    let s_poly = schur_poly_t(&l, &t_slots, cap);
                    (l, s_poly)
                })
                .filter(|(_, p)| !p.is_zero())
                .collect();
        let mus: Vec<(Partition, ScalarSeries)> =
            enumerate_partitions(self.t_weight_bound(TKind::TBar))
                .into_iter()
                .map(|m| {
                    // S_mu(-tbar): flip the sign of every tbar generator.
                    let s_poly = schur_poly_t(&m, &tbar_slots, cap).flip_t_signs(&tbar_all);
                    (m, s_poly)
                })
                .filter(|(_, p)| !p.is_zero())
                .collect();
        let mut sum = ScalarSeries::zero(Prec::Finite(self.prec()), cap);
        for (lambda, s_l) in &lambdas {
            for (mu, s_m) in &mus {
                let g = self.g_matrix_element(which, lambda, mu, s);
                if g.is_zero() {
                    continue;
                }
                sum = sum.add(&s_l.mul(&g).mul(s_m));
            }
        }
        sum
    }

    /// Both sides of the tau relation for the given model and charge:
    /// LHS is the deformed partition sum, RHS the prefactor times the tau
    /// function with inverted arguments.  Returns the first mismatching
    /// coefficient within the policy's Q window, or `None` on agreement.
    pub fn tau_relation_mismatch(
        &self,
        model: Model,
        s: i64,
    ) -> Result<Option<(Mono, Rat, Rat)>> {
        let cap = self.cap();
        let prec = self.prec();
        let (gkind, include_tbar) = match model {
            Model::Previous => (GKind::G, false),
            Model::Modified => (GKind::GPrime, true),
            Model::Local(_) => {
                return Err(Error::BadConfig("tau relation needs previous/modified".into()))
            }
        };
        let lhs = self.partition_function(model, s);

        // Prefactor exp(sum_k q^k t_k/(1-q^k) [ - tbar_k/(1-q^k) ]).
        let mut pref_arg = ScalarSeries::zero(Prec::Finite(prec), cap);
        for gen in &self.policy.gens {
            let slot = self.policy.slot_of(*gen).expect("active");
            let t = ScalarSeries::t_gen(slot, cap)?;
            let k = gen.index as i64;
            let geom = crate::series::geometric_q_pow(k, prec, cap);
            let coeff = match gen.kind {
                TKind::T => geom.mul_monomial(&rat(1), Mono { u: 2 * k, q: 0, t: TMono::ONE }),
                TKind::TBar => {
                    if !include_tbar {
                        continue;
                    }
                    geom.neg()
                }
            };
            pref_arg = pref_arg.add(&t.mul(&coeff));
        }
        let prefactor = pref_arg.exp()?;

        // tau(s, iota(t), -tbar): flip odd t-generators (iota) and all tbar
        // generators (the outer minus cancels the minus built into the tau
        // definition's second argument).
        let tau_base = self.tau(gkind, s);
        let mut flips = self.policy.odd_t_slots();
        for (i, g) in self.policy.gens.iter().enumerate() {
            if g.kind == TKind::TBar {
                flips.push(i as u8);
            }
        }
        let tau_flipped = tau_base.flip_t_signs(&flips);

        let mut rhs = prefactor.mul(&tau_flipped);
        if model == Model::Previous {
            // Extra factor q^{-s(s+1)(2s+1)/6} = u^{-s(s+1)(2s+1)/3}.
            let e = s * (s + 1) * (2 * s + 1) / 3;
            rhs = rhs.mul_monomial(&rat(1), Mono { u: -e, q: 0, t: TMono::ONE });
        }

        // Compare within the shared exact Q window.
        let base = s * (s + 1) / 2;
        let hi = base + self.policy.q_degree.min(self.policy.max_weight as i64);
        let lhs_w = lhs.restrict_q(base, hi);
        let rhs_w = rhs.restrict_q(base, hi);
        Ok(lhs_w.first_mismatch(&rhs_w))
    }
}

fn binomial(n: i64, k: i64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}
