//! Exact oracle for the coefficient of `X^(p-1)` in powers of `X + a` reduced
//! modulo `X^p - X`, with coefficients in `F_p[a]`.

use serde::Serialize;

use crate::error::{ensure, Result};
use crate::field::is_prime;

/// Polynomial in `a` over `F_p`, lowest degree first, no trailing zeros.
pub type APoly = Vec<u32>;

fn trim(v: &mut APoly) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn a_mul(x: &[u32], y: &[u32], p: u32) -> APoly {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    let p = p as u64;
    let mut r = vec![0u64; x.len() + y.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0 {
            continue;
        }
        for (j, &yj) in y.iter().enumerate() {
            r[i + j] = (r[i + j] + xi as u64 * yj as u64) % p;
        }
    }
    let mut r: APoly = r.into_iter().map(|c| c as u32).collect();
    trim(&mut r);
    r
}

fn a_add(x: &[u32], y: &[u32], p: u32) -> APoly {
    let mut r: APoly = (0..x.len().max(y.len()))
        .map(|i| (x.get(i).copied().unwrap_or(0) + y.get(i).copied().unwrap_or(0)) % p)
        .collect();
    trim(&mut r);
    r
}

fn a_pow(x: &[u32], mut e: u64, p: u32) -> APoly {
    let mut base = x.to_vec();
    let mut acc = vec![1u32];
    while e > 0 {
        if e & 1 == 1 {
            acc = a_mul(&acc, &base, p);
        }
        e >>= 1;
        if e > 0 {
            base = a_mul(&base, &base, p);
        }
    }
    acc
}

/// Element of `F_p[a][X]/(X^p - X)`, stored as the `p` coefficients of
/// `1, X, ..., X^(p-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedBivariate {
    p: u32,
    coeffs: Vec<APoly>,
}

/// Reduced exponent of `X^e` modulo `X^p - X`: `X^(p+j) = X^(1+j)`.
pub fn reduce_exponent(e: u64, p: u32) -> usize {
    if e < p as u64 {
        e as usize
    } else {
        ((e - 1) % (p as u64 - 1)) as usize + 1
    }
}

impl ReducedBivariate {
    pub fn one(p: u32) -> Self {
        let mut coeffs = vec![Vec::new(); p as usize];
        coeffs[0] = vec![1];
        ReducedBivariate { p, coeffs }
    }

    /// `X + a`.
    pub fn x_plus_a(p: u32) -> Self {
        let mut coeffs = vec![Vec::new(); p as usize];
        coeffs[0] = vec![0, 1];
        coeffs[1 % p as usize] = a_add(&coeffs[1 % p as usize], &[1], p);
        ReducedBivariate { p, coeffs }
    }

    /// Builds the reduction of `sum_j c_j X^j` for arbitrary exponents.
    pub fn from_terms(p: u32, terms: &[(u64, APoly)]) -> Self {
        let mut coeffs = vec![Vec::new(); p as usize];
        for (e, c) in terms {
            let j = reduce_exponent(*e, p);
            coeffs[j] = a_add(&coeffs[j], c, p);
        }
        ReducedBivariate { p, coeffs }
    }

    pub fn coeff(&self, j: usize) -> &APoly {
        &self.coeffs[j]
    }

    pub fn mul(&self, o: &Self) -> Self {
        let p = self.p;
        let mut coeffs = vec![Vec::new(); p as usize];
        for (i, x) in self.coeffs.iter().enumerate() {
            if x.is_empty() {
                continue;
            }
            for (j, y) in o.coeffs.iter().enumerate() {
                if y.is_empty() {
                    continue;
                }
                let e = reduce_exponent((i + j) as u64, p);
                coeffs[e] = a_add(&coeffs[e], &a_mul(x, y, p), p);
            }
        }
        ReducedBivariate { p, coeffs }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.p);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

/// Coefficient of `X^(p-1)` after reduction modulo `X^p - X`.
pub fn coeff_xp1_mod(expr: &ReducedBivariate) -> APoly {
    expr.coeff(expr.p as usize - 1).clone()
}

/// `(a - a^p)^e` over `F_p`.
pub fn artin_schreier_power(p: u32, e: u64) -> APoly {
    let mut base = vec![0u32; p as usize + 1];
    base[1] = 1;
    base[p as usize] = p - 1;
    a_pow(&base, e, p)
}

/// `C(n, 2) mod p`.
fn binom2_mod(n: u64, p: u32) -> u32 {
    let v = n as u128 * (n as u128).saturating_sub(1) / 2;
    (v % p as u128) as u32
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub p: u32,
    pub n: u32,
    /// `E = (np - (n+1))(p-1)/n`.
    pub exponent: u64,
    /// `q = ((n-1)p + (n+1))/n`.
    pub q: u64,
    /// `C(q, 2) mod p`.
    pub binomial: u32,
    /// Extracted coefficient of `X^(p-1)` in `(X + a)^E`.
    pub extracted: APoly,
    /// `C(q, 2) (a - a^p)^(q-2)`.
    pub closed_form: APoly,
    pub holds: bool,
}

/// Compares the coefficient of `X^(p-1)` in `(X + a)^E mod X^p - X` with
/// `C(q, 2)(a - a^p)^(q-2)`, for `n >= 2` dividing `p - 1`. Also asserts the
/// exponent identity `E = p(p-3) + q`.
pub fn lemma210_verify(p: u32, n: u32) -> Result<LemmaReport> {
    ensure!(is_prime(p), InvalidParameter, "p = {p} is not prime");
    ensure!(n >= 2, Precondition, "n must be at least 2");
    ensure!((p - 1) % n == 0, Precondition, "n = {n} does not divide p - 1 = {}", p - 1);
    let (p64, n64) = (p as u64, n as u64);
    let exponent = (n64 * p64 - (n64 + 1)) * (p64 - 1) / n64;
    let q = ((n64 - 1) * p64 + n64 + 1) / n64;
    ensure!(
        exponent as i128 == p as i128 * (p as i128 - 3) + q as i128,
        Internal,
        "exponent identity fails for p = {p}, n = {n}"
    );
    let extracted = coeff_xp1_mod(&ReducedBivariate::x_plus_a(p).pow(exponent));
    let binomial = binom2_mod(q, p);
    let closed_form = if binomial == 0 {
        Vec::new()
    } else {
        a_mul(&[binomial], &artin_schreier_power(p, q - 2), p)
    };
    let holds = extracted == closed_form;
    Ok(LemmaReport { p, n, exponent, q, binomial, extracted, closed_form, holds })
}

/// Every admissible `(p, n)` with `p <= p_max`.
pub fn lemma210_cases(p_max: u32) -> Vec<(u32, u32)> {
    (3..=p_max)
        .filter(|&p| is_prime(p))
        .flat_map(|p| (2..p).filter(move |n| (p - 1) % n == 0).map(move |n| (p, n)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct expansion: (X + a)^E = sum_j C(E, j) X^j a^(E-j), then fold
    // exponents j >= 1 with j ≡ 0 mod (p-1) onto X^(p-1).
    fn oracle(p: u32, e: u64) -> APoly {
        let mut out = vec![0u32; e as usize + 1];
        for j in (p as u64 - 1..=e).step_by(p as usize - 1) {
            out[(e - j) as usize] = (out[(e - j) as usize] + lucas(e, j, p)) % p;
        }
        trim(&mut out);
        out
    }

    fn lucas(mut n: u64, mut k: u64, p: u32) -> u32 {
        let p = p as u64;
        let mut r = 1u64;
        while n > 0 || k > 0 {
            let (ni, ki) = (n % p, k % p);
            if ki > ni {
                return 0;
            }
            let mut c = 1u64;
            for i in 0..ki {
                c = c * (ni - i) % p;
            }
            let mut d = 1u64;
            for i in 1..=ki {
                d = d * i % p;
            }
            let mut inv = 1u64;
            let mut b = d;
            let mut ex = p - 2;
            while ex > 0 {
                if ex & 1 == 1 {
                    inv = inv * b % p;
                }
                b = b * b % p;
                ex >>= 1;
            }
            r = r * c % p * inv % p;
            n /= p;
            k /= p;
        }
        r as u32
    }

    #[test]
    fn worked_examples() {
        let r = lemma210_verify(5, 2).unwrap();
        assert_eq!((r.exponent, r.q, r.binomial), (14, 4, 1));
        assert_eq!(r.extracted, artin_schreier_power(5, 2));
        assert!(r.holds);
        let r = lemma210_verify(7, 3).unwrap();
        assert_eq!((r.q, r.binomial), (6, 1));
        assert_eq!(r.extracted, artin_schreier_power(7, 4));
        let r = lemma210_verify(3, 2).unwrap();
        assert!(r.extracted.is_empty() && r.closed_form.is_empty() && r.holds);
    }

    #[test]
    fn reduction_matches_direct_expansion() {
        for (p, n) in lemma210_cases(13) {
            let r = lemma210_verify(p, n).unwrap();
            assert_eq!(r.extracted, oracle(p, r.exponent), "p = {p}, n = {n}");
        }
        for p in [3, 5, 7] {
            for e in 0..40 {
                let got = coeff_xp1_mod(&ReducedBivariate::x_plus_a(p).pow(e));
                assert_eq!(got, if e >= p as u64 - 1 { oracle(p, e) } else { Vec::new() });
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(lemma210_verify(7, 4).is_err());
        assert!(lemma210_verify(9, 2).is_err());
        assert!(lemma210_verify(5, 1).is_err());
    }

    #[test]
    fn reduce_exponent_rule() {
        assert_eq!(reduce_exponent(5, 5), 1);
        assert_eq!(reduce_exponent(8, 5), 4);
        assert_eq!(reduce_exponent(9, 5), 1);
        assert_eq!(reduce_exponent(4, 5), 4);
    }
}
