//! Finite fields `F_{p^k}` presented as `F_p[t]/(M(t))`.
//!
//! Elements are stored as a single integer `c_0 + c_1 p + ... + c_{k-1} p^{k-1}`
//! where `c_i` are the power-basis coordinates. Multiplication goes through
//! discrete log tables and addition through Zech logarithms, so every
//! operation is a handful of table lookups.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::error::{ensure, Error, Result};

/// Environment variable naming a JSON file that overrides the shipped
/// modulus table. The file holds a list of `{"p": .., "k": .., "modulus": [..]}`
/// records, `modulus` listing `c_0..c_{k-1}` of a monic polynomial.
pub const FIELD_TABLE_ENV: &str = "LOGSPACE_FIELD_TABLE";

/// Largest field order the table-driven representation accepts.
pub const MAX_FIELD_ORDER: u64 = 1 << 23;

/// Fixed irreducible moduli, Conway-style, for `p <= 13` and `k <= 6`.
/// Each entry lists the non-leading coefficients `c_0..c_{k-1}`.
#[rustfmt::skip]
const MODULUS_TABLE: &[(u32, u32, &[u32])] = &[
    (2, 1, &[1]),                  // x + 1
    (2, 2, &[1, 1]),               // x^2 + x + 1
    (2, 3, &[1, 1, 0]),            // x^3 + x + 1
    (2, 4, &[1, 1, 0, 0]),         // x^4 + x + 1
    (2, 5, &[1, 0, 1, 0, 0]),      // x^5 + x^2 + 1
    (2, 6, &[1, 1, 0, 1, 1, 0]),   // x^6 + x^4 + x^3 + x + 1
    (3, 1, &[1]),                  // x + 1
    (3, 2, &[2, 2]),               // x^2 + 2x + 2
    (3, 3, &[1, 2, 0]),            // x^3 + 2x + 1
    (3, 4, &[2, 0, 0, 2]),         // x^4 + 2x^3 + 2
    (3, 5, &[1, 2, 0, 0, 0]),      // x^5 + 2x + 1
    (3, 6, &[2, 2, 1, 0, 2, 0]),   // x^6 + 2x^4 + x^2 + 2x + 2
    (5, 1, &[3]),                  // x + 3
    (5, 2, &[2, 4]),               // x^2 + 4x + 2
    (5, 3, &[3, 3, 0]),            // x^3 + 3x + 3
    (5, 4, &[2, 4, 4, 0]),         // x^4 + 4x^2 + 4x + 2
    (5, 5, &[3, 4, 0, 0, 0]),      // x^5 + 4x + 3
    (5, 6, &[2, 0, 1, 4, 1, 0]),   // x^6 + x^4 + 4x^3 + x^2 + 2
    (7, 1, &[4]),                  // x + 4
    (7, 2, &[3, 6]),               // x^2 + 6x + 3
    (7, 3, &[4, 0, 6]),            // x^3 + 6x^2 + 4
    (7, 4, &[3, 4, 5, 0]),         // x^4 + 5x^2 + 4x + 3
    (7, 5, &[4, 1, 0, 0, 0]),      // x^5 + x + 4
    (7, 6, &[3, 6, 4, 5, 1, 0]),   // x^6 + x^4 + 5x^3 + 4x^2 + 6x + 3
    (11, 1, &[9]),                 // x + 9
    (11, 2, &[2, 7]),              // x^2 + 7x + 2
    (11, 3, &[9, 2, 0]),           // x^3 + 2x + 9
    (11, 4, &[2, 10, 8, 0]),       // x^4 + 8x^2 + 10x + 2
    (11, 5, &[9, 0, 10, 0, 0]),    // x^5 + 10x^2 + 9
    (11, 6, &[2, 7, 6, 4, 3, 0]),  // x^6 + 3x^4 + 4x^3 + 6x^2 + 7x + 2
    (13, 1, &[11]),                // x + 11
    (13, 2, &[2, 12]),             // x^2 + 12x + 2
    (13, 3, &[11, 2, 0]),          // x^3 + 2x + 11
    (13, 4, &[2, 12, 3, 0]),       // x^4 + 3x^2 + 12x + 2
    (13, 5, &[11, 4, 0, 0, 0]),    // x^5 + 4x + 11
    (13, 6, &[2, 1, 11, 10, 11, 0]), // x^6 + 11x^4 + 10x^3 + 11x^2 + x + 2
];

/// Returns the shipped modulus for `(p, k)`, if any.
pub fn shipped_modulus(p: u32, k: u32) -> Option<Vec<u32>> {
    MODULUS_TABLE
        .iter()
        .find(|(pp, kk, _)| *pp == p && *kk == k)
        .map(|(_, _, c)| c.to_vec())
}

/// Every `(p, k)` pair covered by the shipped table.
pub fn shipped_pairs() -> Vec<(u32, u32)> {
    MODULUS_TABLE.iter().map(|(p, k, _)| (*p, *k)).collect()
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// A field element. Only meaningful together with the [`Field`] it came from.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fe(pub u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

const NO_LOG: u32 = u32::MAX;

/// Tables and parameters of one concrete field.
pub struct FieldSpec {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    zech: Vec<u32>,
}

/// Shared handle to a [`FieldSpec`]. Cheap to clone.
#[derive(Clone)]
pub struct Field(Arc<FieldSpec>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.k == other.0.k && self.0.modulus == other.0.modulus)
    }
}
impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} mod {:?}", self.0.p, self.0.k, self.0.modulus)
    }
}

fn override_table() -> &'static HashMap<(u32, u32), Vec<u32>> {
    static TABLE: OnceLock<HashMap<(u32, u32), Vec<u32>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        #[derive(serde::Deserialize)]
        struct Entry {
            p: u32,
            k: u32,
            modulus: Vec<u32>,
        }
        let Ok(path) = std::env::var(FIELD_TABLE_ENV) else {
            return HashMap::new();
        };
        let Ok(text) = std::fs::read_to_string(&path) else {
            return HashMap::new();
        };
        serde_json::from_str::<Vec<Entry>>(&text)
            .map(|v| v.into_iter().map(|e| ((e.p, e.k), e.modulus)).collect())
            .unwrap_or_default()
    })
}

fn cache() -> &'static std::sync::Mutex<HashMap<(u32, Vec<u32>), Field>> {
    static CACHE: OnceLock<std::sync::Mutex<HashMap<(u32, Vec<u32>), Field>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

// Dense coefficient-vector helpers over F_p used while building tables.

fn trim(v: &mut Vec<u32>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn inv_mod(a: u32, p: u32) -> u32 {
    let mut r = 1u64;
    let mut b = a as u64 % p as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

fn rem_fp(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    trim(&mut r);
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], p);
    while r.len() > dm {
        let d = r.len() - 1;
        let c = r[d] as u64 * lead_inv as u64 % p as u64;
        for (i, &mi) in m.iter().enumerate() {
            let idx = d - dm + i;
            r[idx] = ((r[idx] as u64 + (p as u64 - c) * mi as u64) % p as u64) as u32;
        }
        trim(&mut r);
    }
    r
}

/// Trial division by every monic polynomial of degree at most `deg/2`.
fn is_irreducible_fp(full: &[u32], p: u32) -> bool {
    let deg = full.len() - 1;
    if deg <= 1 {
        return deg == 1;
    }
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for idx in 0..count {
            let mut div = Vec::with_capacity(d + 1);
            let mut t = idx;
            for _ in 0..d {
                div.push((t % p as u64) as u32);
                t /= p as u64;
            }
            div.push(1);
            if rem_fp(full, &div, p).is_empty() {
                return false;
            }
        }
    }
    true
}

impl Field {
    /// The field `F_{p^k}` with the default modulus: an override from
    /// [`FIELD_TABLE_ENV`], then the shipped table, then the first irreducible
    /// monic polynomial in lexicographic order.
    pub fn new(p: u32, k: u32) -> Result<Field> {
        ensure!(is_prime(p), InvalidParameter, "p = {p} is not prime");
        ensure!(k >= 1, InvalidParameter, "extension degree must be at least 1");
        let order = (p as u64).checked_pow(k).unwrap_or(u64::MAX);
        ensure!(
            order <= MAX_FIELD_ORDER,
            InvalidParameter,
            "field of order {p}^{k} exceeds the supported size {MAX_FIELD_ORDER}"
        );
        let modulus = if let Some(m) = override_table().get(&(p, k)) {
            m.clone()
        } else if let Some(m) = shipped_modulus(p, k) {
            m
        } else {
            Self::first_irreducible(p, k)
        };
        Field::with_modulus(p, &modulus)
    }

    fn first_irreducible(p: u32, k: u32) -> Vec<u32> {
        let count = (p as u64).pow(k);
        for idx in 0..count {
            let mut c = Vec::with_capacity(k as usize + 1);
            let mut t = idx;
            for _ in 0..k {
                c.push((t % p as u64) as u32);
                t /= p as u64;
            }
            let mut full = c.clone();
            full.push(1);
            if is_irreducible_fp(&full, p) {
                return c;
            }
        }
        unreachable!("irreducible polynomials exist in every degree")
    }

    /// The field `F_p[t]/(t^k + c_{k-1} t^{k-1} + ... + c_0)` where
    /// `modulus = [c_0, ..., c_{k-1}]`. Irreducibility is checked.
    pub fn with_modulus(p: u32, modulus: &[u32]) -> Result<Field> {
        ensure!(is_prime(p), InvalidParameter, "p = {p} is not prime");
        ensure!(!modulus.is_empty(), InvalidParameter, "modulus must have degree at least 1");
        ensure!(
            modulus.iter().all(|&c| c < p),
            InvalidParameter,
            "modulus coefficients must lie in 0..{p}"
        );
        let k = modulus.len() as u32;
        let order = (p as u64).checked_pow(k).unwrap_or(u64::MAX);
        ensure!(
            order <= MAX_FIELD_ORDER,
            InvalidParameter,
            "field of order {p}^{k} exceeds the supported size {MAX_FIELD_ORDER}"
        );
        let key = (p, modulus.to_vec());
        if let Some(f) = cache().lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let mut full = modulus.to_vec();
        full.push(1);
        if !is_irreducible_fp(&full, p) {
            return Err(Error::ReducibleModulus { p, modulus: modulus.to_vec() });
        }
        let spec = Self::build_tables(p, modulus.to_vec());
        let field = Field(Arc::new(spec));
        cache().lock().unwrap().insert(key, field.clone());
        Ok(field)
    }

    fn build_tables(p: u32, modulus: Vec<u32>) -> FieldSpec {
        let k = modulus.len();
        let q = p.pow(k as u32);
        let encode = |c: &[u32]| -> u32 { c.iter().rev().fold(0u32, |acc, &d| acc * p + d) };
        let decode = |mut x: u32| -> Vec<u32> {
            let mut c = vec![0; k];
            for d in c.iter_mut() {
                *d = x % p;
                x /= p;
            }
            c
        };
        // multiply a coordinate vector by g modulo the modulus
        let mul = |a: &[u32], g: &[u32]| -> Vec<u32> {
            let mut prod = vec![0u64; 2 * k];
            for (i, &ai) in a.iter().enumerate() {
                for (j, &gj) in g.iter().enumerate() {
                    prod[i + j] += ai as u64 * gj as u64;
                }
            }
            for d in (k..2 * k).rev() {
                let c = prod[d] % p as u64;
                if c == 0 {
                    continue;
                }
                prod[d] = 0;
                for (i, &mi) in modulus.iter().enumerate() {
                    prod[d - k + i] += (p as u64 - c) * mi as u64;
                }
            }
            prod[..k].iter().map(|&x| (x % p as u64) as u32).collect()
        };
        let n = (q - 1) as usize;
        let mut exp = vec![0u32; 2 * n];
        let mut log = vec![NO_LOG; q as usize];
        for cand in 1..q {
            let g = decode(cand);
            let mut cur = decode(1);
            let mut ok = true;
            for i in 0..n {
                let idx = encode(&cur);
                if i > 0 && idx == 1 {
                    ok = false;
                    break;
                }
                exp[i] = idx;
                cur = mul(&cur, &g);
            }
            if ok {
                break;
            }
        }
        for i in 0..n {
            exp[i + n] = exp[i];
            log[exp[i] as usize] = i as u32;
        }
        let mut zech = vec![NO_LOG; n];
        for i in 0..n {
            let mut c = decode(exp[i]);
            c[0] = (c[0] + 1) % p;
            let s = encode(&c);
            zech[i] = log[s as usize];
        }
        FieldSpec { p, k: k as u32, q, modulus, exp, log, zech }
    }

    pub fn p(&self) -> u32 {
        self.0.p
    }
    pub fn k(&self) -> u32 {
        self.0.k
    }
    /// Field order `p^k`.
    pub fn order(&self) -> u32 {
        self.0.q
    }
    /// Non-leading coefficients `c_0..c_{k-1}` of the monic modulus.
    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }
    pub fn same_field(&self, other: &Field) -> bool {
        self == other
    }

    pub fn zero(&self) -> Fe {
        Fe::ZERO
    }
    pub fn one(&self) -> Fe {
        Fe::ONE
    }
    /// The class of the power-basis generator `t`.
    pub fn generator_t(&self) -> Fe {
        if self.0.k == 1 {
            // t is the root of x + c_0
            Fe((self.0.p - self.0.modulus[0]) % self.0.p)
        } else {
            Fe(self.0.p)
        }
    }

    /// Image of an integer in the prime field.
    pub fn from_int(&self, n: i64) -> Fe {
        Fe(n.rem_euclid(self.0.p as i64) as u32)
    }

    /// Power-basis coordinates of `a`.
    pub fn coeffs(&self, a: Fe) -> Vec<u32> {
        let mut x = a.0;
        (0..self.0.k)
            .map(|_| {
                let d = x % self.0.p;
                x /= self.0.p;
                d
            })
            .collect()
    }

    pub fn from_coeffs(&self, c: &[u32]) -> Result<Fe> {
        ensure!(
            c.len() == self.0.k as usize,
            InvalidParameter,
            "expected {} coordinates, got {}",
            self.0.k,
            c.len()
        );
        ensure!(
            c.iter().all(|&d| d < self.0.p),
            InvalidParameter,
            "coordinates must lie in 0..{}",
            self.0.p
        );
        Ok(Fe(c.iter().rev().fold(0, |acc, &d| acc * self.0.p + d)))
    }

    pub fn contains(&self, a: Fe) -> bool {
        a.0 < self.0.q
    }

    /// Whether `a` lies in the prime subfield `F_p`.
    pub fn in_prime_field(&self, a: Fe) -> bool {
        a.0 < self.0.p
    }

    /// Every element, in index order.
    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        (0..self.0.q).map(Fe)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe(rng.gen_range(0..self.0.q))
    }

    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe(rng.gen_range(1..self.0.q))
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 {
            return b;
        }
        if b.0 == 0 {
            return a;
        }
        let s = &*self.0;
        let la = s.log[a.0 as usize];
        let lb = s.log[b.0 as usize];
        let n = s.q - 1;
        let d = if lb >= la { lb - la } else { lb + n - la };
        let z = s.zech[d as usize];
        if z == NO_LOG {
            Fe::ZERO
        } else {
            Fe(s.exp[(la + z) as usize])
        }
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        let s = &*self.0;
        if a.0 == 0 || s.p == 2 {
            return a;
        }
        let n = s.q - 1;
        Fe(s.exp[(s.log[a.0 as usize] + n / 2) as usize])
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 || b.0 == 0 {
            return Fe::ZERO;
        }
        let s = &*self.0;
        Fe(s.exp[(s.log[a.0 as usize] + s.log[b.0 as usize]) as usize])
    }

    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a.0 == 0 {
            return Err(Error::NotInvertible("zero has no inverse".into()));
        }
        let s = &*self.0;
        let n = s.q - 1;
        Ok(Fe(s.exp[((n - s.log[a.0 as usize]) % n) as usize]))
    }

    /// Inverse of a nonzero element; panics on zero.
    #[inline]
    pub(crate) fn inv_nz(&self, a: Fe) -> Fe {
        assert!(a.0 != 0, "inverse of zero");
        let s = &*self.0;
        let n = s.q - 1;
        Fe(s.exp[((n - s.log[a.0 as usize]) % n) as usize])
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Fe, e: u64) -> Fe {
        if e == 0 {
            return Fe::ONE;
        }
        if a.0 == 0 {
            return Fe::ZERO;
        }
        let s = &*self.0;
        let n = (s.q - 1) as u64;
        let l = s.log[a.0 as usize] as u64 * (e % n) % n;
        Fe(s.exp[l as usize])
    }

    /// Discrete logarithm with respect to the table generator.
    pub fn log(&self, a: Fe) -> Option<u32> {
        let l = self.0.log[a.0 as usize];
        (l != NO_LOG).then_some(l)
    }

    /// `a^p`.
    pub fn frobenius(&self, a: Fe) -> Fe {
        self.pow(a, self.0.p as u64)
    }

    /// The unique `b` with `b^p = a`, namely `a^(p^(k-1))`.
    pub fn frobenius_inverse(&self, a: Fe) -> Fe {
        self.pow(a, (self.0.p as u64).pow(self.0.k - 1))
    }

    /// Whether `a` is a square, and one square root when it is.
    pub fn sqrt(&self, a: Fe) -> Option<Fe> {
        if a.0 == 0 {
            return Some(a);
        }
        if self.0.p == 2 {
            return Some(self.frobenius_inverse(a));
        }
        let l = self.0.log[a.0 as usize];
        (l % 2 == 0).then(|| Fe(self.0.exp[(l / 2) as usize]))
    }

    /// The element `sum c_i t^i` for a coefficient list over `F_p`.
    pub fn from_prime_poly(&self, c: &[i64]) -> Fe {
        let t = self.generator_t();
        let mut acc = Fe::ZERO;
        for &ci in c.iter().rev() {
            acc = self.add(self.mul(acc, t), self.from_int(ci));
        }
        acc
    }

    /// Parses `"3"`, `"t"`, `"2t^2+t+1"` or a coordinate list `"[1,0,2]"`.
    pub fn parse_element(&self, s: &str) -> Result<Fe> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let coords: std::result::Result<Vec<u32>, _> =
                inner.split(',').map(|x| x.trim().parse::<u32>()).collect();
            let coords = coords.map_err(|e| Error::Parse(format!("bad coordinate list {s:?}: {e}")))?;
            return self.from_coeffs(&coords);
        }
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Parse("empty element".into()));
        }
        let mut terms = Vec::new();
        let mut cur = String::new();
        for (i, ch) in compact.chars().enumerate() {
            if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('^') {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        terms.push(cur);
        let mut acc = Fe::ZERO;
        for term in terms {
            let (sign, body) = match term.strip_prefix('-') {
                Some(b) => (-1i64, b.to_string()),
                None => (1, term.trim_start_matches('+').to_string()),
            };
            let bad = || Error::Parse(format!("cannot parse term {term:?} of {s:?}"));
            let (coef, power) = if let Some(pos) = body.find('t') {
                let c = &body[..pos];
                let c = c.trim_end_matches('*');
                let coef: i64 = if c.is_empty() { 1 } else { c.parse().map_err(|_| bad())? };
                let rest = &body[pos + 1..];
                let power: u64 = if rest.is_empty() {
                    1
                } else {
                    rest.strip_prefix('^').ok_or_else(bad)?.parse().map_err(|_| bad())?
                };
                (coef, power)
            } else {
                (body.parse::<i64>().map_err(|_| bad())?, 0)
            };
            let term_val = self.mul(self.from_int(sign * coef), self.pow(self.generator_t(), power));
            acc = self.add(acc, term_val);
        }
        Ok(acc)
    }

    /// Human-readable form in the power basis, e.g. `2t^2+t+1`.
    pub fn format(&self, a: Fe) -> String {
        if self.0.k == 1 {
            return a.0.to_string();
        }
        let c = self.coeffs(a);
        let mut parts = Vec::new();
        for (i, &ci) in c.iter().enumerate().rev() {
            if ci == 0 {
                continue;
            }
            let coef = if ci == 1 && i > 0 { String::new() } else { ci.to_string() };
            parts.push(match i {
                0 => coef,
                1 => format!("{coef}t"),
                _ => format!("{coef}t^{i}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }
}

/// An embedding `F_{p^k} -> F_{p^{kj}}` sending `t` to a fixed root of the
/// smaller field's modulus.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub source: Field,
    pub target: Field,
    image_of_t: Fe,
}

impl Embedding {
    /// Embeds `source` into `target`, choosing the smallest root of the
    /// source modulus in index order.
    pub fn new(source: &Field, target: &Field) -> Result<Embedding> {
        ensure!(source.p() == target.p(), FieldMismatch, "characteristics differ");
        ensure!(
            target.k() % source.k() == 0,
            FieldMismatch,
            "F_{}^{} does not embed in F_{}^{}",
            source.p(),
            source.k(),
            target.p(),
            target.k()
        );
        let m = source.modulus();
        let root = target
            .elements()
            .find(|&x| {
                let mut acc = Fe::ONE;
                for &c in m.iter().rev() {
                    acc = target.add(target.mul(acc, x), Fe(c));
                }
                acc.is_zero()
            })
            .ok_or_else(|| Error::Internal("irreducible modulus has no root in the extension".into()))?;
        Ok(Embedding { source: source.clone(), target: target.clone(), image_of_t: root })
    }

    pub fn map(&self, a: Fe) -> Fe {
        let t = &self.target;
        let mut acc = Fe::ZERO;
        for &c in self.source.coeffs(a).iter().rev() {
            acc = t.add(t.mul(acc, self.image_of_t), Fe(c));
        }
        acc
    }
}

/// A field element carrying its field, for callers that mix fields and want
/// mismatches reported instead of silently computing garbage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldElement {
    pub field: Field,
    pub value: Fe,
}

/// Operation selector for [`field_arith`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl FieldElement {
    pub fn new(field: &Field, value: Fe) -> Self {
        FieldElement { field: field.clone(), value }
    }
}

/// Checked binary arithmetic on elements that carry their field.
pub fn field_arith(a: &FieldElement, b: &FieldElement, op: ArithOp) -> Result<FieldElement> {
    ensure!(
        a.field == b.field,
        FieldMismatch,
        "{:?} vs {:?}",
        a.field,
        b.field
    );
    let f = &a.field;
    let value = match op {
        ArithOp::Add => f.add(a.value, b.value),
        ArithOp::Sub => f.sub(a.value, b.value),
        ArithOp::Mul => f.mul(a.value, b.value),
        ArithOp::Div => f.div(a.value, b.value)?,
    };
    Ok(FieldElement { field: f.clone(), value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Schoolbook arithmetic on coordinate vectors, independent of the tables.
    fn naive_mul(f: &Field, a: Fe, b: Fe) -> Fe {
        let p = f.p() as u64;
        let k = f.k() as usize;
        let (ca, cb) = (f.coeffs(a), f.coeffs(b));
        let mut prod = vec![0u64; 2 * k];
        for i in 0..k {
            for j in 0..k {
                prod[i + j] = (prod[i + j] + ca[i] as u64 * cb[j] as u64) % p;
            }
        }
        let m = f.modulus();
        for d in (k..2 * k).rev() {
            let c = prod[d];
            prod[d] = 0;
            for i in 0..k {
                prod[d - k + i] = (prod[d - k + i] + (p - c) * m[i] as u64) % p;
            }
        }
        let c: Vec<u32> = prod[..k].iter().map(|&x| x as u32).collect();
        f.from_coeffs(&c).unwrap()
    }

    fn naive_add(f: &Field, a: Fe, b: Fe) -> Fe {
        let c: Vec<u32> =
            f.coeffs(a).iter().zip(f.coeffs(b)).map(|(x, y)| (x + y) % f.p()).collect();
        f.from_coeffs(&c).unwrap()
    }

    #[test]
    fn shipped_moduli_are_irreducible_and_primitive() {
        for (p, k) in shipped_pairs() {
            let f = Field::new(p, k).unwrap_or_else(|e| panic!("({p},{k}): {e}"));
            let t = f.generator_t();
            let n = (f.order() - 1) as u64;
            // t primitive: t^(n/r) != 1 for each prime r | n
            let mut m = n;
            let mut r = 2;
            while m > 1 {
                if m % r == 0 {
                    assert_ne!(f.pow(t, n / r), Fe::ONE, "t not primitive for ({p},{k})");
                    while m % r == 0 {
                        m /= r;
                    }
                }
                r += 1;
            }
        }
    }

    #[test]
    fn tables_agree_with_schoolbook_arithmetic() {
        for (p, k) in [(2, 1), (2, 3), (3, 2), (5, 2), (7, 1), (3, 3)] {
            let f = Field::new(p, k).unwrap();
            for a in f.elements() {
                for b in f.elements() {
                    assert_eq!(f.mul(a, b), naive_mul(&f, a, b));
                    assert_eq!(f.add(a, b), naive_add(&f, a, b));
                }
            }
        }
    }

    #[test]
    fn f4_worked_examples() {
        let f = Field::new(2, 2).unwrap();
        let t = f.generator_t();
        let t1 = f.add(t, Fe::ONE);
        assert_eq!(f.mul(t, t1), Fe::ONE);
        assert_eq!(f.frobenius_inverse(t), f.mul(t, t));
        assert_eq!(f.inv(t).unwrap(), t1);
        assert_eq!(f.parse_element("t+1").unwrap(), t1);
        assert_eq!(f.format(t1), "t+1");
    }

    #[test]
    fn reducible_modulus_is_rejected() {
        // x^2 + 1 = (x+1)^2 over F_2
        assert!(matches!(Field::with_modulus(2, &[1, 0]), Err(Error::ReducibleModulus { .. })));
        // x^2 + 1 over F_3 is irreducible, x^2 + 2x + 1 is not
        assert!(Field::with_modulus(3, &[1, 0]).is_ok());
        assert!(Field::with_modulus(3, &[1, 2]).is_err());
    }

    #[test]
    fn mismatched_fields_are_reported() {
        let f4 = Field::new(2, 2).unwrap();
        let f8 = Field::new(2, 3).unwrap();
        let a = FieldElement::new(&f4, Fe(1));
        let b = FieldElement::new(&f8, Fe(1));
        assert!(matches!(field_arith(&a, &b, ArithOp::Add), Err(Error::FieldMismatch(_))));
    }

    #[test]
    fn fallback_modulus_beyond_table() {
        let f = Field::new(2, 8).unwrap();
        assert_eq!(f.order(), 256);
        let f17 = Field::new(17, 2).unwrap();
        assert_eq!(f17.order(), 289);
    }

    #[test]
    fn embedding_is_a_ring_map() {
        let small = Field::new(3, 2).unwrap();
        let big = Field::new(3, 4).unwrap();
        let e = Embedding::new(&small, &big).unwrap();
        for a in small.elements() {
            for b in small.elements() {
                assert_eq!(e.map(small.mul(a, b)), big.mul(e.map(a), e.map(b)));
                assert_eq!(e.map(small.add(a, b)), big.add(e.map(a), e.map(b)));
            }
        }
    }

    proptest! {
        #[test]
        fn field_axioms(p_idx in 0usize..6, k in 1u32..=4, a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
            let p = [2, 3, 5, 7, 11, 13][p_idx];
            let f = Field::new(p, k).unwrap();
            let q = f.order();
            let (a, b, c) = (Fe(a % q), Fe(b % q), Fe(c % q));
            prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            prop_assert_eq!(f.add(a, f.neg(a)), Fe::ZERO);
            prop_assert_eq!(f.sub(f.add(a, b), b), a);
            if !a.is_zero() {
                prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
            }
            prop_assert_eq!(f.frobenius(f.frobenius_inverse(a)), a);
            prop_assert_eq!(f.frobenius(f.add(a, b)), f.add(f.frobenius(a), f.frobenius(b)));
            prop_assert_eq!(f.pow(a, q as u64), a);
        }

        #[test]
        fn element_text_round_trip(k in 1u32..=4, a in any::<u32>()) {
            let f = Field::new(5, k).unwrap();
            let a = Fe(a % f.order());
            prop_assert_eq!(f.parse_element(&f.format(a)).unwrap(), a);
        }
    }
}
