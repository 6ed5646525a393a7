//! Partition combinatorics and Schur-function specializations at `q^{-rho}`,
//! the principal specialization point `(q^{1/2}, q^{3/2}, ...)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;


use crate::series::{geometric_q_pow, rat, Mono, Prec, Rat, ScalarSeries, TMono};

/// Integer partition: weakly decreasing positive parts; empty is the vacuum.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn new(parts: Vec<u32>) -> Self {
        assert!(
            parts.windows(2).all(|w| w[0] >= w[1]) && parts.iter().all(|&p| p > 0),
            "parts must be weakly decreasing and positive"
        );
        Partition { parts }
    }

    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Part at row `i` (0-based), zero beyond the length.
    pub fn part(&self, i: usize) -> u32 {
        self.parts.get(i).copied().unwrap_or(0)
    }

    pub fn weight(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn contains(&self, other: &Partition) -> bool {
        (0..other.len()).all(|i| self.part(i) >= other.part(i))
    }

    pub fn conjugate(&self) -> Partition {
        if self.is_empty() {
            return Partition::empty();
        }
        let cols = self.parts[0] as usize;
        let parts = (0..cols)
            .map(|j| self.parts.iter().filter(|&&p| p as usize > j).count() as u32)
            .collect();
        Partition { parts }
    }

    /// Second Casimir `kappa = sum_i lambda_i (lambda_i - 2i + 1)`, twice the
    /// total content.  Always even.
    pub fn kappa(&self) -> i64 {
        self.parts
            .iter()
            .enumerate()
            .map(|(i, &p)| p as i64 * (p as i64 - 2 * (i as i64 + 1) + 1))
            .sum()
    }

    /// Hook lengths of all cells, row by row.
    pub fn hooks(&self) -> Vec<i64> {
        let conj = self.conjugate();
        let mut out = Vec::with_capacity(self.weight() as usize);
        for (i, &p) in self.parts.iter().enumerate() {
            for j in 0..p as usize {
                let arm = p as i64 - j as i64 - 1;
                let leg = conj.part(j) as i64 - i as i64 - 1;
                out.push(arm + leg + 1);
            }
        }
        out
    }

    /// Sum of hook lengths.
    pub fn hook_sum(&self) -> i64 {
        self.hooks().iter().sum()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// All partitions of weight at most `max_weight`, ordered by
/// `(weight, lexicographic part list)`, each exactly once.
pub fn enumerate_partitions(max_weight: u32) -> Vec<Partition> {
    let mut out = Vec::new();
    for w in 0..=max_weight {
        let mut of_w = Vec::new();
        gen_partitions(w, w, &mut Vec::new(), &mut of_w);
        of_w.sort();
        out.extend(of_w);
    }
    out
}

fn gen_partitions(remaining: u32, max_part: u32, stack: &mut Vec<u32>, out: &mut Vec<Partition>) {
    if remaining == 0 {
        out.push(Partition { parts: stack.clone() });
        return;
    }
    let hi = remaining.min(max_part);
    for p in (1..=hi).rev() {
        stack.push(p);
        gen_partitions(remaining - p, p, stack, out);
        stack.pop();
    }
}

/// `h_n(q^{-rho}) = q^{n/2} / prod_{i=1}^n (1 - q^i)`, the complete
/// homogeneous symmetric function at the principal specialization.
pub fn hn_qrho(n: i64, prec: i64, t_cap: u8) -> ScalarSeries {
    assert!(n >= 0);
    principal_ratio(n, n, prec, t_cap)
}

/// `e_n(q^{-rho}) = q^{n^2/2} / prod_{i=1}^n (1 - q^i)`.
pub fn en_qrho(n: i64, prec: i64, t_cap: u8) -> ScalarSeries {
    assert!(n >= 0);
    principal_ratio(n, n * n, prec, t_cap)
}

/// `u^{u_shift} / prod_{i=1}^n (1 - q^i)` modulo `u^prec`.
fn principal_ratio(n: i64, u_shift: i64, prec: i64, t_cap: u8) -> ScalarSeries {
    let mut s = ScalarSeries::monomial(
        rat(1),
        Mono { u: u_shift, q: 0, t: TMono::ONE },
        Prec::Finite(prec + u_shift.max(0)),
        t_cap,
    );
    for i in 1..=n {
        s = s.mul(&geometric_q_pow(i, prec, t_cap));
    }
    s.truncated(Prec::Finite(prec))
}

/// Hook-formula value of `s_lambda(q^{-rho})`:
/// `q^{-kappa/4} prod_cells q^{h/2}/(1 - q^h)`.
pub fn schur_qrho(lambda: &Partition, prec: i64, t_cap: u8) -> ScalarSeries {
    let hooks = lambda.hooks();
    let u_shift = hooks.iter().sum::<i64>() - lambda.kappa() / 2;
    let mut s = ScalarSeries::monomial(
        rat(1),
        Mono { u: u_shift, q: 0, t: TMono::ONE },
        Prec::Finite(prec + u_shift.max(0)),
        t_cap,
    );
    for &h in &hooks {
        s = s.mul(&geometric_q_pow(h, prec, t_cap));
    }
    s.truncated(Prec::Finite(prec))
}

/// Skew Schur function `s_{lambda/mu}(q^{-rho})` via the Jacobi-Trudi
/// determinant `det(h_{lambda_i - mu_j - i + j})`.  Zero unless `mu` is
/// contained in `lambda`; `s_{lambda/lambda} = 1`.
pub fn skew_schur_qrho(lambda: &Partition, mu: &Partition, prec: i64, t_cap: u8) -> ScalarSeries {
    if !lambda.contains(mu) {
        return ScalarSeries::zero(Prec::Finite(prec), t_cap);
    }
    let n = lambda.len();
    if n == 0 {
        return ScalarSeries::one(Prec::Finite(prec), t_cap);
    }
    let entry = |i: usize, j: usize| -> ScalarSeries {
        let e = lambda.part(i) as i64 - mu.part(j) as i64 - i as i64 + j as i64;
        if e < 0 {
            ScalarSeries::zero(Prec::Finite(prec), t_cap)
        } else {
            hn_qrho(e, prec, t_cap)
        }
    };
    determinant(n, &entry, prec, t_cap)
}

/// Schur polynomial of `lambda` in Miwa variables with power sums
/// `p_k = k t_k`, truncated to the active generators and the t-cap.
/// The slot list gives, for each hierarchy index `k = 1, 2, ...`, the
/// t-slot carrying `t_k` (or `None` when that generator is inactive, in
/// which case `t_k = 0`).
pub fn schur_poly_t(lambda: &Partition, slots: &[Option<u8>], t_cap: u8) -> ScalarSeries {
    let n = lambda.len();
    if n == 0 {
        return ScalarSeries::one(Prec::Exact, t_cap);
    }
    // h_m(t) from exp(sum_k t_k z^k) = sum_m h_m(t) z^m.
    let max_h = lambda.part(0) as i64 + n as i64;
    let hs = miwa_complete_homogeneous(max_h as usize, slots, t_cap);
    let entry = |i: usize, j: usize| -> ScalarSeries {
        let e = lambda.part(i) as i64 - i as i64 + j as i64;
        if e < 0 || e as usize >= hs.len() {
            ScalarSeries::exact_zero(t_cap)
        } else {
            hs[e as usize].clone()
        }
    };
    determinant(n, &entry, i64::MAX, t_cap)
}

/// Coefficients `h_0(t), ..., h_max(t)` of `exp(sum_k t_k z^k)` in `z`.
fn miwa_complete_homogeneous(max: usize, slots: &[Option<u8>], t_cap: u8) -> Vec<ScalarSeries> {
    // exp of a z-polynomial with nilpotent coefficients, computed degreewise.
    let mut hs = vec![ScalarSeries::exact_zero(t_cap); max + 1];
    hs[0] = ScalarSeries::one(Prec::Exact, t_cap);
    // arg[m] = t_m (the coefficient of z^m), for active m.
    let mut arg = vec![ScalarSeries::exact_zero(t_cap); max + 1];
    for (k0, slot) in slots.iter().enumerate() {
        let m = k0 + 1;
        if m <= max {
            if let Some(s) = slot {
                arg[m] = ScalarSeries::t_gen(*s, t_cap).expect("slot in range");
            }
        }
    }
    // exp via the derivative recurrence: m h_m = sum_{j=1}^m j t_j h_{m-j}.
    for m in 1..=max {
        let mut acc = ScalarSeries::exact_zero(t_cap);
        for j in 1..=m {
            if arg[j].is_zero() {
                continue;
            }
            let term = arg[j].scale(&rat(j as i64)).mul(&hs[m - j]);
            acc = acc.add(&term);
        }
        hs[m] = acc.scale(&Rat::new(1.into(), (m as i64).into()));
    }
    hs
}

/// Determinant of an `n x n` matrix of series via cofactor expansion with
/// memoized minors (column subsets).
fn determinant(
    n: usize,
    entry: &dyn Fn(usize, usize) -> ScalarSeries,
    prec: i64,
    t_cap: u8,
) -> ScalarSeries {
    assert!(n <= 16, "Jacobi-Trudi size out of range");
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut memo: HashMap<u32, ScalarSeries> = HashMap::new();
    let zero = if prec == i64::MAX {
        ScalarSeries::exact_zero(t_cap)
    } else {
        ScalarSeries::zero(Prec::Finite(prec), t_cap)
    };
    memo.insert(0, {
        let mut one = ScalarSeries::one(Prec::Exact, t_cap);
        if prec != i64::MAX {
            one = one.truncated(Prec::Finite(prec));
        }
        one
    });
    fn minor(
        cols: u32,
        n: usize,
        entry: &dyn Fn(usize, usize) -> ScalarSeries,
        memo: &mut HashMap<u32, ScalarSeries>,
        zero: &ScalarSeries,
    ) -> ScalarSeries {
        if let Some(v) = memo.get(&cols) {
            return v.clone();
        }
        let row = n - cols.count_ones() as usize;
        let mut acc = zero.clone();
        let mut sign = 1i64;
        for j in 0..n {
            if cols & (1 << j) == 0 {
                continue;
            }
            let e = entry(row, j);
            if !e.is_zero() {
                let sub = minor(cols & !(1 << j), n, entry, memo, zero);
                let term = e.mul(&sub);
                acc = if sign > 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            sign = -sign;
        }
        memo.insert(cols, acc.clone());
        acc
    }
    minor(full, n, entry, &mut memo, &zero)
}

/// Process-wide memo for `skew_schur_qrho` keyed by `(lambda, mu, prec)`.
/// The hot paths in the Fock sums reuse a small set of skew values heavily.
pub struct SkewCache {
    map: Mutex<HashMap<(Partition, Partition, i64), ScalarSeries>>,
}

impl SkewCache {
    pub fn new() -> Self {
        SkewCache { map: Mutex::new(HashMap::new()) }
    }

    pub fn get(&self, lambda: &Partition, mu: &Partition, prec: i64, t_cap: u8) -> ScalarSeries {
        let key = (lambda.clone(), mu.clone(), prec);
        if let Some(v) = self.map.lock().unwrap().get(&key) {
            return v.clone();
        }
        let v = skew_schur_qrho(lambda, mu, prec, t_cap);
        self.map.lock().unwrap().insert(key, v.clone());
        v
    }
}

impl Default for SkewCache {
    fn default() -> Self {
        Self::new()
    }
}

/// Partition counts p(0..=n) by the Euler pentagonal recurrence; used as an
/// independent cross-check on the enumerator.
pub fn partition_counts(n: u32) -> Vec<u64> {
    let n = n as usize;
    let mut p = vec![0u64; n + 1];
    p[0] = 1;
    for m in 1..=n {
        let mut acc: i64 = 0;
        let mut k = 1i64;
        loop {
            let g1 = k * (3 * k - 1) / 2;
            let g2 = k * (3 * k + 1) / 2;
            if g1 as usize > m {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc += sign * p[m - g1 as usize] as i64;
            if g2 as usize <= m {
                acc += sign * p[m - g2 as usize] as i64;
            }
            k += 1;
        }
        p[m] = acc as u64;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ratio;

    fn pt(parts: &[u32]) -> Partition {
        Partition::new(parts.to_vec())
    }

    #[test]
    fn enumeration_counts_and_order() {
        let all = enumerate_partitions(0);
        assert_eq!(all, vec![Partition::empty()]);

        let all = enumerate_partitions(3);
        assert_eq!(all.len(), 7);
        assert_eq!(all[0], Partition::empty());
        assert_eq!(all[1], pt(&[1]));
        // weight-3 block in lexicographic order
        assert_eq!(&all[4..], &[pt(&[1, 1, 1]), pt(&[2, 1]), pt(&[3])]);

        // Sum of p(0..8) = 67, cross-checked against the pentagonal recurrence.
        let all = enumerate_partitions(8);
        assert_eq!(all.len(), 67);
        let counts = partition_counts(8);
        assert_eq!(counts.iter().sum::<u64>(), 67);
        for w in 0..=8u32 {
            let of_w = all.iter().filter(|p| p.weight() == w).count() as u64;
            assert_eq!(of_w, counts[w as usize]);
        }
    }

    #[test]
    fn stats_of_small_partitions() {
        let l = pt(&[2, 1]);
        assert_eq!(l.weight(), 3);
        assert_eq!(l.kappa(), 0);
        assert_eq!(l.conjugate(), pt(&[2, 1]));
        let mut h = l.hooks();
        h.sort();
        assert_eq!(h, vec![1, 1, 3]);

        assert_eq!(pt(&[2]).kappa(), 2);
        assert_eq!(pt(&[1, 1]).kappa(), -2);

        let e = Partition::empty();
        assert_eq!(e.weight(), 0);
        assert_eq!(e.kappa(), 0);
        assert!(e.hooks().is_empty());
    }

    #[test]
    fn kappa_flips_under_conjugation_and_hooks_invariant() {
        for l in enumerate_partitions(8) {
            let c = l.conjugate();
            assert_eq!(c.kappa(), -l.kappa(), "kappa conj for {l}");
            let mut h1 = l.hooks();
            let mut h2 = c.hooks();
            h1.sort();
            h2.sort();
            assert_eq!(h1, h2, "hook multiset for {l}");
            assert_eq!(c.conjugate(), l);
        }
    }

    #[test]
    fn schur_single_box() {
        // s_(1) = u/(1-u^2) = u + u^3 + u^5 + ...
        let s = schur_qrho(&pt(&[1]), 8, 0);
        let expect = ScalarSeries::monomial(
            rat(1),
            Mono { u: 1, q: 0, t: TMono::ONE },
            Prec::Finite(9),
            0,
        )
        .mul(&geometric_q_pow(1, 8, 0))
        .truncated(Prec::Finite(8));
        assert!(s.eq_upto(&expect));
    }

    #[test]
    fn schur_row_two_and_column_two() {
        let prec = 16;
        // s_(2) = u^2/((1-u^2)(1-u^4)) = h_2
        let s2 = schur_qrho(&pt(&[2]), prec, 0);
        assert!(s2.eq_upto(&hn_qrho(2, prec, 0)));
        // s_(1,1) = u^4/((1-u^2)(1-u^4)) = e_2 = q^{kappa((2))/2} s_(2)
        let s11 = schur_qrho(&pt(&[1, 1]), prec, 0);
        assert!(s11.eq_upto(&en_qrho(2, prec, 0)));
        let shifted = s2.mul_monomial(&rat(1), Mono { u: 2, q: 0, t: TMono::ONE });
        assert!(s11.eq_upto(&shifted));
    }

    #[test]
    fn hook_formula_valuation() {
        // The column partition (1^6) has the largest valuation in range:
        // hook sum 21 minus kappa/2 = -15 gives 36, so 40 covers everything.
        for l in enumerate_partitions(6) {
            let s = schur_qrho(&l, 40, 0);
            let predicted = l.hook_sum() - l.kappa() / 2;
            assert_eq!(s.val_u(), Some(predicted), "valuation for {l}");
        }
    }

    #[test]
    fn conjugation_identity_weight_8() {
        let prec = 20;
        for l in enumerate_partitions(8) {
            let lhs = schur_qrho(&l.conjugate(), prec, 0);
            let rhs = schur_qrho(&l, prec, 0)
                .mul_monomial(&rat(1), Mono { u: l.kappa(), q: 0, t: TMono::ONE });
            assert!(lhs.eq_upto(&rhs), "s_conj identity for {l}");
        }
    }

    #[test]
    fn jacobi_trudi_matches_hook_formula() {
        let prec = 16;
        for l in enumerate_partitions(6) {
            let jt = skew_schur_qrho(&l, &Partition::empty(), prec, 0);
            let hook = schur_qrho(&l, prec, 0);
            assert!(jt.eq_upto(&hook), "JT vs hook for {l}");
        }
    }

    #[test]
    fn skew_edge_cases() {
        let prec = 12;
        let l = pt(&[2, 1]);
        assert!(skew_schur_qrho(&l, &l, prec, 0).eq_upto(&ScalarSeries::one(Prec::Finite(prec), 0)));
        let not_contained = skew_schur_qrho(&pt(&[1]), &pt(&[2]), prec, 0);
        assert!(not_contained.is_zero());
        // one-row skew shape: s_(2)/(1) = h_1
        let s = skew_schur_qrho(&pt(&[2]), &pt(&[1]), prec, 0);
        assert!(s.eq_upto(&hn_qrho(1, prec, 0)));
    }

    /// Independent oracle: sum over semistandard tableaux of shape
    /// `lambda/mu` with entries in `1..=nvars`, at `x_i = u^{2i-1}`.
    fn ssyt_oracle(lambda: &Partition, mu: &Partition, nvars: u32, prec: i64) -> ScalarSeries {
        fn rec(
            lambda: &Partition,
            mu: &Partition,
            row: usize,
            col: u32,
            current: &mut Vec<Vec<u32>>,
            nvars: u32,
            acc: &mut Vec<(Mono, Rat)>,
            u_sum: i64,
        ) {
            if row == lambda.len() {
                acc.push((Mono { u: u_sum, q: 0, t: TMono::ONE }, rat(1)));
                return;
            }
            if col == lambda.part(row) {
                rec(lambda, mu, row + 1, mu.part(row + 1), current, nvars, acc, u_sum);
                return;
            }
            let above = if row > 0 && col < lambda.part(row - 1) && col >= mu.part(row - 1) {
                current[row - 1][col as usize]
            } else {
                0
            };
            let left = if col > mu.part(row) {
                current[row][col as usize - 1]
            } else {
                0
            };
            let min = (above + 1).max(left).max(1);
            for v in min..=nvars {
                current[row][col as usize] = v;
                rec(lambda, mu, row, col + 1, current, nvars, acc, u_sum + (2 * v as i64 - 1));
            }
        }
        let mut acc = Vec::new();
        let mut current = vec![vec![0u32; lambda.part(0) as usize]; lambda.len()];
        if lambda.contains(mu) {
            rec(lambda, mu, 0, mu.part(0), &mut current, nvars, &mut acc, 0);
        }
        ScalarSeries::from_terms(acc, Prec::Finite(prec), 0)
    }

    #[test]
    fn ssyt_oracle_agrees_with_jacobi_trudi() {
        // With entries bounded by nvars, the oracle is exact below
        // u^{2 nvars + 1}: any tableau using a variable beyond nvars has
        // u-weight at least 2 nvars + 1.
        let nvars = 6u32;
        let prec = 2 * nvars as i64 + 1;
        let shapes = [
            (pt(&[2]), Partition::empty()),
            (pt(&[1, 1]), Partition::empty()),
            (pt(&[2, 1]), Partition::empty()),
            (pt(&[3, 1]), Partition::empty()),
            (pt(&[2, 2]), Partition::empty()),
            (pt(&[2]), pt(&[1])),
            (pt(&[2, 1]), pt(&[1])),
            (pt(&[3, 2]), pt(&[2])),
            (pt(&[2, 2]), pt(&[1, 1])),
        ];
        for (l, m) in shapes {
            let oracle = ssyt_oracle(&l, &m, nvars, prec);
            let jt = skew_schur_qrho(&l, &m, prec as i64, 0).truncated(Prec::Finite(prec));
            assert!(jt.eq_upto(&oracle), "SSYT oracle vs JT for {l}/{m}");
        }
    }

    #[test]
    fn miwa_schur_polynomials() {
        // slots: t_1 -> slot 0, t_2 -> slot 1, cap 2
        let slots = [Some(0u8), Some(1u8)];
        let cap = 2;
        let s_empty = schur_poly_t(&Partition::empty(), &slots, cap);
        assert!(s_empty.eq_upto(&ScalarSeries::one(Prec::Exact, cap)));

        // S_(1) = t_1
        let s1 = schur_poly_t(&pt(&[1]), &slots, cap);
        let t1 = ScalarSeries::t_gen(0, cap).unwrap();
        assert!(s1.eq_upto(&t1));

        // S_(2) = t_1^2/2 + t_2
        let s2 = schur_poly_t(&pt(&[2]), &slots, cap);
        let t2 = ScalarSeries::t_gen(1, cap).unwrap();
        let expect = t1.mul(&t1).scale(&ratio(1, 2)).add(&t2);
        assert!(s2.eq_upto(&expect), "S_(2) = {s2}");

        // S_(1,1) = t_1^2/2 - t_2
        let s11 = schur_poly_t(&pt(&[1, 1]), &slots, cap);
        let expect = t1.mul(&t1).scale(&ratio(1, 2)).sub(&t2);
        assert!(s11.eq_upto(&expect), "S_(1,1) = {s11}");
    }
}
