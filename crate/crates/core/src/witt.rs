//! Truncated Witt vectors `W(F_q)/p^N`, realized as `(Z/p^N)[y]/(M(y))` with
//! `M` the integer lift of the field modulus, plus the ramified extension
//! `W[π]/(π^e + 2)` for `p = 2`. On top of these: the decomposition
//! `F = (1 + XQ)^p + U X^m (1 + XR) + pS`, the refined mod-`p²` shape of
//! Frobenius-twisted lifts, and the corrected characteristic-two lift with
//! its good-reduction check.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constructions::p2_certificate;
use crate::error::{ensure, Error, Result};
use crate::field::{Fe, Field};
use crate::forms::log_derivative;
use crate::poly::Poly;

/// Coordinates in the power basis of `y`, each in `0..p^N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WittElement {
    pub coords: Vec<u64>,
}

/// Polynomial over the Witt ring, lowest degree first.
pub type WittPoly = Vec<WittElement>;

struct Inner {
    field: Field,
    n: u32,
    pn: u64,
    /// `M(y) = y^k + sum m_j y^j`; holds `m_0..m_(k-1)`.
    low: Vec<u64>,
}

#[derive(Clone)]
pub struct WittRing(Arc<Inner>);

impl std::fmt::Debug for WittRing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "W(F_{}^{})/{}^{}", self.p(), self.k(), self.p(), self.0.n)
    }
}

impl WittRing {
    pub fn new(field: &Field, n: u32) -> Result<Self> {
        ensure!(n >= 1, InvalidParameter, "precision N must be at least 1");
        let pn = (field.p() as u64)
            .checked_pow(n)
            .filter(|&v| v < 1 << 62)
            .ok_or_else(|| Error::InvalidParameter(format!("p^N = {}^{n} is too large", field.p())))?;
        let low = field.modulus().iter().map(|&c| c as u64).collect();
        Ok(WittRing(Arc::new(Inner { field: field.clone(), n, pn, low })))
    }

    pub fn field(&self) -> &Field {
        &self.0.field
    }
    pub fn p(&self) -> u32 {
        self.0.field.p()
    }
    pub fn k(&self) -> u32 {
        self.0.field.k()
    }
    pub fn precision(&self) -> u32 {
        self.0.n
    }
    /// `p^N`.
    pub fn modulus(&self) -> u64 {
        self.0.pn
    }

    fn k_usize(&self) -> usize {
        self.k() as usize
    }

    pub fn zero(&self) -> WittElement {
        WittElement { coords: vec![0; self.k_usize()] }
    }
    pub fn one(&self) -> WittElement {
        self.from_int(1)
    }
    pub fn from_int(&self, v: i64) -> WittElement {
        let mut c = vec![0; self.k_usize()];
        c[0] = v.rem_euclid(self.0.pn as i64) as u64;
        WittElement { coords: c }
    }
    pub fn from_coords(&self, coords: &[u64]) -> Result<WittElement> {
        ensure!(coords.len() == self.k_usize(), InvalidParameter, "expected {} coordinates", self.k());
        Ok(WittElement { coords: coords.iter().map(|&c| c % self.0.pn).collect() })
    }

    /// Digit-wise lift (coordinates in `0..p`).
    pub fn lift(&self, x: Fe) -> WittElement {
        WittElement { coords: self.field().coeffs(x).into_iter().map(|d| d as u64).collect() }
    }

    pub fn reduce(&self, a: &WittElement) -> Fe {
        let p = self.p() as u64;
        let digits: Vec<u32> = a.coords.iter().map(|&c| (c % p) as u32).collect();
        self.field().from_coeffs(&digits).expect("digits below p")
    }

    pub fn add(&self, a: &WittElement, b: &WittElement) -> WittElement {
        let pn = self.0.pn;
        WittElement { coords: a.coords.iter().zip(&b.coords).map(|(&x, &y)| (x + y) % pn).collect() }
    }
    pub fn neg(&self, a: &WittElement) -> WittElement {
        let pn = self.0.pn;
        WittElement { coords: a.coords.iter().map(|&x| (pn - x) % pn).collect() }
    }
    pub fn sub(&self, a: &WittElement, b: &WittElement) -> WittElement {
        self.add(a, &self.neg(b))
    }
    pub fn mul_int(&self, a: &WittElement, v: i64) -> WittElement {
        let pn = self.0.pn as u128;
        let s = v.rem_euclid(pn as i64) as u128;
        WittElement { coords: a.coords.iter().map(|&x| (x as u128 * s % pn) as u64).collect() }
    }

    pub fn mul(&self, a: &WittElement, b: &WittElement) -> WittElement {
        let k = self.k_usize();
        let pn = self.0.pn as u128;
        let mut r = vec![0u128; 2 * k - 1];
        for (i, &x) in a.coords.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coords.iter().enumerate() {
                r[i + j] = (r[i + j] + x as u128 * y as u128) % pn;
            }
        }
        for i in (k..2 * k - 1).rev() {
            let c = r[i];
            if c == 0 {
                continue;
            }
            for (j, &mj) in self.0.low.iter().enumerate() {
                r[i - k + j] = (r[i - k + j] + pn - c * mj as u128 % pn) % pn;
            }
        }
        WittElement { coords: r[..k].iter().map(|&x| x as u64).collect() }
    }

    pub fn pow(&self, a: &WittElement, mut e: u64) -> WittElement {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    pub fn is_zero(&self, a: &WittElement) -> bool {
        a.coords.iter().all(|&c| c == 0)
    }

    pub fn is_unit(&self, a: &WittElement) -> bool {
        !self.reduce(a).is_zero()
    }

    /// Newton iteration `b <- b(2 - ab)` from the inverse of the residue.
    pub fn inv(&self, a: &WittElement) -> Result<WittElement> {
        let r = self.reduce(a);
        ensure!(!r.is_zero(), NotInvertible, "element is not a unit (zero residue)");
        let mut b = self.lift(self.field().inv(r)?);
        let mut prec = 1;
        while prec < self.0.n {
            let ab = self.mul(a, &b);
            b = self.mul(&b, &self.sub(&self.from_int(2), &ab));
            prec *= 2;
        }
        if self.mul(a, &b) != self.one() {
            return Err(Error::Internal("Newton inverse did not converge".into()));
        }
        Ok(b)
    }

    /// The multiplicative lift of `x`: the fixed point of `a -> a^q` above it.
    pub fn teichmuller(&self, x: Fe) -> WittElement {
        let mut a = self.lift(x);
        let q = self.field().order() as u64;
        for _ in 0..self.0.n {
            a = self.pow(&a, q);
        }
        a
    }

    /// `p`-adic valuation, `None` for zero.
    pub fn valuation(&self, a: &WittElement) -> Option<u32> {
        let p = self.p() as u64;
        a.coords
            .iter()
            .filter(|&&c| c != 0)
            .map(|&c| {
                let mut c = c;
                let mut v = 0;
                while c % p == 0 {
                    c /= p;
                    v += 1;
                }
                v
            })
            .min()
    }

    /// Exact division by `p`; the quotient is meaningful mod `p^(N-1)`.
    pub fn div_p(&self, a: &WittElement) -> Result<WittElement> {
        let p = self.p() as u64;
        ensure!(a.coords.iter().all(|&c| c % p == 0), Internal, "element is not divisible by p");
        Ok(WittElement { coords: a.coords.iter().map(|&c| c / p).collect() })
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> WittElement {
        WittElement { coords: (0..self.k()).map(|_| rng.gen_range(0..self.0.pn)).collect() }
    }

    pub fn format(&self, a: &WittElement) -> String {
        format!("{:?}", a.coords)
    }

    // polynomials

    fn trim(&self, mut a: WittPoly) -> WittPoly {
        while a.last().is_some_and(|c| self.is_zero(c)) {
            a.pop();
        }
        a
    }

    pub fn poly_add(&self, a: &[WittElement], b: &[WittElement]) -> WittPoly {
        let z = self.zero();
        let r = (0..a.len().max(b.len())).map(|i| self.add(a.get(i).unwrap_or(&z), b.get(i).unwrap_or(&z))).collect();
        self.trim(r)
    }

    pub fn poly_sub(&self, a: &[WittElement], b: &[WittElement]) -> WittPoly {
        let z = self.zero();
        let r = (0..a.len().max(b.len())).map(|i| self.sub(a.get(i).unwrap_or(&z), b.get(i).unwrap_or(&z))).collect();
        self.trim(r)
    }

    pub fn poly_scale(&self, a: &[WittElement], c: &WittElement) -> WittPoly {
        self.trim(a.iter().map(|x| self.mul(x, c)).collect())
    }

    pub fn poly_mul(&self, a: &[WittElement], b: &[WittElement]) -> WittPoly {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut r = vec![self.zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            if self.is_zero(x) {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                r[i + j] = self.add(&r[i + j], &self.mul(x, y));
            }
        }
        self.trim(r)
    }

    pub fn poly_pow(&self, a: &[WittElement], e: u64) -> WittPoly {
        let mut acc = vec![self.one()];
        for _ in 0..e {
            acc = self.poly_mul(&acc, a);
        }
        acc
    }

    /// Inverse of a power series with unit constant term, to degree `d`.
    pub fn series_inv(&self, a: &[WittElement], d: usize) -> Result<WittPoly> {
        ensure!(!a.is_empty() && self.is_unit(&a[0]), NotInvertible, "series has no unit constant term");
        let c0 = self.inv(&a[0])?;
        let mut b = vec![c0.clone()];
        for i in 1..=d {
            let mut s = self.zero();
            for j in 1..=i.min(a.len() - 1) {
                s = self.add(&s, &self.mul(&a[j], &b[i - j]));
            }
            b.push(self.neg(&self.mul(&s, &c0)));
        }
        Ok(b)
    }

    pub fn poly_reduce(&self, a: &[WittElement]) -> Poly {
        Poly::new(a.iter().map(|x| self.reduce(x)).collect())
    }

    pub fn poly_teichmuller(&self, a: &Poly) -> WittPoly {
        self.trim(a.coeffs().iter().map(|&c| self.teichmuller(c)).collect())
    }

    pub fn poly_div_p(&self, a: &[WittElement]) -> Result<WittPoly> {
        Ok(self.trim(a.iter().map(|x| self.div_p(x)).collect::<Result<_>>()?))
    }

    /// `prod (1 - r_i X)^(h_i)` for nonnegative `h_i`.
    pub fn product_linear(&self, roots: &[(WittElement, u32)]) -> WittPoly {
        let mut acc = vec![self.one()];
        for (r, h) in roots {
            let lin = vec![self.one(), self.neg(r)];
            acc = self.poly_mul(&acc, &self.poly_pow(&lin, *h as u64));
        }
        acc
    }

    fn coeff<'a>(&self, a: &'a [WittElement], i: usize, z: &'a WittElement) -> &'a WittElement {
        a.get(i).unwrap_or(z)
    }
}

// ---------------------------------------------------------------------------

/// `W[π]/(π^e + 2)` over a characteristic-two Witt ring.
#[derive(Clone, Debug)]
pub struct RamifiedRing {
    base: WittRing,
    e: usize,
}

/// Coordinates in the basis `1, π, ..., π^(e-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RamElement {
    pub c: Vec<WittElement>,
}

impl RamifiedRing {
    pub fn new(base: &WittRing, e: usize) -> Result<Self> {
        ensure!(base.p() == 2, Precondition, "the ramified ring is only available for p = 2");
        ensure!(e >= 1, InvalidParameter, "ramification index must be positive");
        Ok(RamifiedRing { base: base.clone(), e })
    }
    pub fn base(&self) -> &WittRing {
        &self.base
    }
    pub fn e(&self) -> usize {
        self.e
    }
    pub fn from_base(&self, a: &WittElement) -> RamElement {
        let mut c = vec![self.base.zero(); self.e];
        c[0] = a.clone();
        RamElement { c }
    }
    pub fn zero(&self) -> RamElement {
        RamElement { c: vec![self.base.zero(); self.e] }
    }
    pub fn pi(&self) -> RamElement {
        if self.e == 1 {
            return self.from_base(&self.base.from_int(-2));
        }
        let mut c = vec![self.base.zero(); self.e];
        c[1] = self.base.one();
        RamElement { c }
    }
    pub fn add(&self, a: &RamElement, b: &RamElement) -> RamElement {
        RamElement { c: a.c.iter().zip(&b.c).map(|(x, y)| self.base.add(x, y)).collect() }
    }
    pub fn sub(&self, a: &RamElement, b: &RamElement) -> RamElement {
        RamElement { c: a.c.iter().zip(&b.c).map(|(x, y)| self.base.sub(x, y)).collect() }
    }
    pub fn mul(&self, a: &RamElement, b: &RamElement) -> RamElement {
        let w = &self.base;
        let e = self.e;
        let mut r = vec![w.zero(); 2 * e - 1];
        for (i, x) in a.c.iter().enumerate() {
            for (j, y) in b.c.iter().enumerate() {
                r[i + j] = w.add(&r[i + j], &w.mul(x, y));
            }
        }
        // π^e = -2
        for i in (e..2 * e - 1).rev() {
            let t = w.mul_int(&r[i], -2);
            r[i - e] = w.add(&r[i - e], &t);
        }
        r.truncate(e);
        RamElement { c: r }
    }
    pub fn pow(&self, a: &RamElement, n: u64) -> RamElement {
        let mut acc = self.from_base(&self.base.one());
        for _ in 0..n {
            acc = self.mul(&acc, a);
        }
        acc
    }
    /// Valuation in units of `v(π) = 1`; `None` for zero (at this precision).
    pub fn valuation(&self, a: &RamElement) -> Option<u32> {
        a.c.iter()
            .enumerate()
            .filter_map(|(j, x)| self.base.valuation(x).map(|v| v * self.e as u32 + j as u32))
            .min()
    }
    /// Division by `2^s`; requires every coordinate divisible by `2^s`.
    pub fn div_pow2(&self, a: &RamElement, s: u32) -> Option<RamElement> {
        let d = 1u64 << s;
        if a.c.iter().any(|x| x.coords.iter().any(|&v| v % d != 0)) {
            return None;
        }
        Some(RamElement { c: a.c.iter().map(|x| WittElement { coords: x.coords.iter().map(|&v| v / d).collect() }).collect() })
    }
    /// Residue modulo `π`.
    pub fn reduce(&self, a: &RamElement) -> Fe {
        self.base.reduce(&a.c[0])
    }
}

// ---------------------------------------------------------------------------

/// `F = (1 + XQ)^p + U X^m (1 + XR) + pS`.
#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    pub m: usize,
    pub q: WittPoly,
    pub u: WittElement,
    pub r: WittPoly,
    pub s: WittPoly,
}

impl Decomposition {
    /// `(1 + XQ)^p + U X^m (1 + XR) + pS`.
    pub fn recompose(&self, w: &WittRing) -> WittPoly {
        let p = w.p() as u64;
        let mut g = vec![w.one()];
        g.extend(self.q.iter().cloned());
        let mut h = vec![w.zero(); self.m];
        h.push(w.one());
        h.extend(self.r.iter().cloned());
        let a = w.poly_pow(&g, p);
        let b = w.poly_scale(&h, &self.u);
        let c: WittPoly = self.s.iter().map(|x| w.mul_int(x, p as i64)).collect();
        w.poly_add(&w.poly_add(&a, &b), &c)
    }
}

/// Splits `F` as `(1 + XQ)^p + U X^m (1 + XR) + pS`. The reduction `f` must
/// have `f(0) = 1` and no terms of degree `< m` prime to `p`, with a nonzero
/// `x^m` term. `1 + xq` collects the `p`-th roots of the terms of `f` at
/// exponents divisible by `p`; the remainder is `(u/m) x^m (1 + x r)`. `Q`
/// and `R` are Teichmüller lifts, `U` the lift of `u/m`, and `S` is the exact
/// quotient by `p`.
pub fn decompose_lemma212(w: &WittRing, big_f: &[WittElement], m: usize) -> Result<Decomposition> {
    let fld = w.field();
    let p = w.p() as usize;
    ensure!(m >= 1, Precondition, "m must be positive");
    ensure!(m % p != 0, Precondition, "m = {m} is divisible by p = {p}");
    let f = w.poly_reduce(big_f);
    ensure!(f.coeff(0) == Fe::ONE, Precondition, "reduction must have constant term 1");
    for i in 1..m {
        ensure!(
            i % p == 0 || f.coeff(i).is_zero(),
            Precondition,
            "reduction has a nonzero x^{i} term below degree m = {m} with exponent prime to p"
        );
    }
    ensure!(!f.coeff(m).is_zero(), Precondition, "reduction has zero x^{m} coefficient");
    let deg = f.deg().max(0) as usize;
    let g_coeffs: Vec<Fe> = (0..=deg / p).map(|j| fld.frobenius_inverse(f.coeff(j * p))).collect();
    let g = Poly::new(g_coeffs);
    let h = f.sub(fld, &g.pow(fld, p as u64));
    let hm = h.coeff(m);
    if hm.is_zero() || (0..m).any(|i| !h.coeff(i).is_zero()) {
        return Err(Error::Internal("remainder does not start at x^m".into()));
    }
    // h = hm x^m (1 + x r)
    let r_tilde: Vec<Fe> = h.coeffs().iter().skip(m + 1).map(|&c| fld.div(c, hm).unwrap()).collect();
    let q_tilde: Vec<Fe> = g.coeffs().iter().skip(1).copied().collect();
    let q = w.poly_teichmuller(&Poly::new(q_tilde));
    let r = w.poly_teichmuller(&Poly::new(r_tilde));
    let u = w.teichmuller(hm);
    let mut partial = Decomposition { m, q, u, r, s: Vec::new() };
    let rest = w.poly_sub(big_f, &partial.recompose(w));
    partial.s = w.poly_div_p(&rest).map_err(|_| Error::Internal("remainder is not divisible by p".into()))?;
    Ok(partial)
}

/// Outcome of the refined mod-`p²` shape check.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeReport {
    pub p: u32,
    pub k: u32,
    pub precision: u32,
    pub m: usize,
    pub points: Vec<u32>,
    pub classes: Vec<u32>,
    /// Degree bound `⌈(m+1)/p⌉` below which the remainder vanishes mod `p²`.
    pub bound: usize,
    pub decomposition: Decomposition,
    /// `U` with `U^p` the decomposition unit.
    pub u_root: WittElement,
    /// Coefficients of the remainder divided by `p`, reduced mod `p`, below
    /// the bound.
    pub low_remainder: Vec<u32>,
    pub holds: bool,
}

/// Builds `F = prod (1 - Y_i^p X)^(h_i)` with `Y_i` the Teichmüller lift of
/// `x_i^(1/p)` and checks that `F - (1 + XQ)^p - U^p X^m (1 + XR)` vanishes
/// mod `p²` below degree `⌈(m+1)/p⌉`. The points and classes must define a
/// logarithmic form with `m + 1` simple poles and a zero of order `m - 1` at
/// infinity, with `p | m + 1`. A pole at zero contributes the factor 1.
pub fn refined_lift_shape(f: &Field, points: &[(Fe, u32)], n: u32) -> Result<ShapeReport> {
    let p = f.p();
    ensure!(n >= 3, InvalidParameter, "the shape check needs precision N >= 3");
    let m1 = points.len();
    ensure!(m1 >= 2, Precondition, "need at least two poles");
    ensure!(m1 % p as usize == 0, Precondition, "m + 1 = {m1} is not divisible by p = {p}");
    ensure!(points.iter().all(|&(_, h)| h >= 1 && h < p), Precondition, "classes must lie in 1..p-1");
    let m = m1 - 1;
    let pts: Vec<(Fe, i64)> = points.iter().map(|&(x, h)| (x, h as i64)).collect();
    let form = log_derivative(f, &pts)?;
    ensure!(
        form.order_at_infinity() == Some(m as i64 - 1),
        Precondition,
        "the form has order {:?} at infinity, expected {}",
        form.order_at_infinity(),
        m - 1
    );
    let w = WittRing::new(f, n)?;
    let roots: Vec<(WittElement, u32)> = points
        .iter()
        .map(|&(x, h)| (w.pow(&w.teichmuller(f.frobenius_inverse(x)), p as u64), h))
        .collect();
    let big_f = w.product_linear(&roots);
    let dec = decompose_lemma212(&w, &big_f, m)?;
    let bound = m1.div_ceil(p as usize);
    let p2 = (p as u64) * (p as u64);
    let z = w.zero();
    let mut low = Vec::with_capacity(bound);
    let mut holds = true;
    for i in 0..bound {
        let s = w.coeff(&dec.s, i, &z);
        // pS ≡ 0 mod p² ⟺ S ≡ 0 mod p
        holds &= s.coords.iter().all(|&c| (c * p as u64) % p2 == 0);
        low.push(w.reduce(s).0);
    }
    if !holds {
        return Err(Error::Internal(format!(
            "refined shape fails below degree {bound}: remainder/p mod p = {low:?}"
        )));
    }
    let u_root = w.teichmuller(f.frobenius_inverse(w.reduce(&dec.u)));
    Ok(ShapeReport {
        p,
        k: f.k(),
        precision: n,
        m,
        points: points.iter().map(|x| x.0 .0).collect(),
        classes: points.iter().map(|x| x.1).collect(),
        bound,
        decomposition: dec,
        u_root,
        low_remainder: low,
        holds,
    })
}

// ---------------------------------------------------------------------------

/// Corrected lift `F = prod (1 - X_i X - 2ε_i X)` and every intermediate.
#[derive(Clone, Debug, Serialize)]
pub struct LiftP2 {
    pub n: usize,
    pub u: WittElement,
    /// `X_1..X_2n`; the last `n` are Teichmüller lifts of the solved roots.
    pub points: Vec<WittElement>,
    /// `Q` with `Q(0) = 1`, lifting `x^n q(1/x)`.
    pub q: WittPoly,
    /// `R = (F~ - Q² - U X^(2n-1)) / 2` for the uncorrected product `F~`.
    pub r: WittPoly,
    /// `α_1..α_(n-1)`: coefficients of `-R Q^(-2)`.
    pub alphas: Vec<WittElement>,
    /// `ε_1..ε_2n`, zero for `i <= n` and for `i = 2n`.
    pub eps: Vec<WittElement>,
    pub f_uncorrected: WittPoly,
    pub f: WittPoly,
}

/// Solves `V x = b` over the Witt ring by elimination with unit pivots.
pub fn solve_linear(w: &WittRing, mat: &[Vec<WittElement>], rhs: &[WittElement]) -> Result<Vec<WittElement>> {
    let n = rhs.len();
    let mut a: Vec<Vec<WittElement>> = mat.iter().zip(rhs).map(|(row, b)| {
        let mut r = row.clone();
        r.push(b.clone());
        r
    }).collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| w.is_unit(&a[r][col]))
            .ok_or_else(|| Error::NotInvertible("matrix is singular modulo p".into()))?;
        a.swap(col, piv);
        let inv = w.inv(&a[col][col])?;
        for j in col..=n {
            a[col][j] = w.mul(&a[col][j], &inv);
        }
        for r in 0..n {
            if r != col && !w.is_zero(&a[r][col]) {
                let c = a[r][col].clone();
                for j in col..=n {
                    let t = w.mul(&c, &a[col][j]);
                    a[r][j] = w.sub(&a[r][j], &t);
                }
            }
        }
    }
    Ok(a.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// Extends pairwise distinct `X_1..X_n` by lifts of the remaining roots of the
/// characteristic-two certificate for `u = U mod 2`, then perturbs the new
/// points by `2ε_i` so that `(F - Q² - U X^(2n-1))/2` vanishes mod 2 in
/// degrees `1..n-1`. The perturbations solve the Vandermonde system
/// `sum_(n<i<2n) ε_i X_i^j = α_(j+1)` for `0 <= j <= n-2`, where `α_k` are the
/// coefficients of `-R Q^(-2)`; `ε_2n = 0`.
pub fn lift_p2(w: &WittRing, xs: &[WittElement], u: &WittElement) -> Result<LiftP2> {
    let f = w.field();
    ensure!(w.p() == 2, Precondition, "the corrected lift is specific to p = 2");
    ensure!(w.is_unit(u), Precondition, "U must be a unit");
    let n = xs.len();
    ensure!(n >= 1, InvalidParameter, "need at least one point");
    let red: Vec<Fe> = xs.iter().map(|x| w.reduce(x)).collect();
    let mut sorted = red.clone();
    sorted.sort();
    ensure!(sorted.windows(2).all(|p| p[0] != p[1]), Precondition, "the X_i collide mod 2");
    let ur = w.reduce(u);
    let cert = p2_certificate(f, &red, ur)?;
    ensure!(cert.other_roots.len() == n, NeedsLargerField, "the certificate does not split");
    let mut points = xs.to_vec();
    points.extend(cert.other_roots.iter().map(|&y| w.teichmuller(y)));
    let all: Vec<(WittElement, u32)> = points.iter().map(|x| (x.clone(), 1)).collect();
    let f_tilde = w.product_linear(&all);
    // x^n q(1/x)
    let q_rev: Vec<Fe> = (0..=n).map(|j| cert.q.coeff(n - j)).collect();
    let q = w.poly_teichmuller(&Poly::new(q_rev));
    let q2 = w.poly_mul(&q, &q);
    let m = 2 * n - 1;
    let mut ux = vec![w.zero(); m];
    ux.push(u.clone());
    let diff = w.poly_sub(&w.poly_sub(&f_tilde, &q2), &ux);
    let r = w.poly_div_p(&diff).map_err(|_| Error::Internal("F~ - Q² - UX^m is not even".into()))?;
    let series = w.poly_mul(&r, &w.series_inv(&q2, n)?);
    let z = w.zero();
    let alphas: Vec<WittElement> = (1..n).map(|k| w.neg(w.coeff(&series, k, &z))).collect();
    let mut eps = vec![w.zero(); 2 * n];
    if n >= 2 {
        let unknowns: Vec<&WittElement> = points[n..2 * n - 1].iter().collect();
        let mat: Vec<Vec<WittElement>> =
            (0..n - 1).map(|j| unknowns.iter().map(|x| w.pow(x, j as u64)).collect()).collect();
        let sol = solve_linear(w, &mat, &alphas)?;
        for (row, a) in mat.iter().zip(&alphas) {
            let lhs = row.iter().zip(&sol).fold(w.zero(), |acc, (v, e)| w.add(&acc, &w.mul(v, e)));
            if &lhs != a {
                return Err(Error::Internal("Vandermonde solution does not reproduce α".into()));
            }
        }
        for (i, e) in sol.into_iter().enumerate() {
            eps[n + i] = e;
        }
    }
    let mut big_f = vec![w.one()];
    for (x, e) in points.iter().zip(&eps) {
        let lin = vec![w.one(), w.neg(&w.add(x, &w.mul_int(e, 2)))];
        big_f = w.poly_mul(&big_f, &lin);
    }
    let expect: Vec<Fe> = (0..=2 * n).map(|j| cert.f.coeff(2 * n - j)).collect();
    if w.poly_reduce(&big_f) != Poly::new(expect) {
        return Err(Error::Internal("lift does not reduce to the certificate".into()));
    }
    Ok(LiftP2 { n, u: u.clone(), points, q, r, alphas, eps, f_uncorrected: f_tilde, f: big_f })
}

/// Result of the substitution `X = π² T`, `Y = -2Z + Q(X)` into `Y² = F(X)`.
#[derive(Clone, Debug, Serialize)]
pub struct ReductionCheck {
    pub n: usize,
    /// Every coefficient of `(-2Z + Q)² - F` was divisible by 4.
    pub integral: bool,
    /// Reduction of `((-2Z+Q)² - F)/4`, as the `t`-polynomials multiplying
    /// `z^0, z^1, z^2` (empty when not integral).
    pub reduction: Vec<Vec<u32>>,
    pub u: u32,
    pub holds: bool,
}

/// Substitutes into `Y² = F` in `W[π]/(π^(2n-1) + 2)` and checks that the
/// equation reduces to `z² - z = u t^(2n-1)`. `Q` and `u` are recovered from
/// `F` by [`decompose_lemma212`] with `m = 2n - 1`.
pub fn reduction_check_p2(w: &WittRing, big_f: &[WittElement], n: usize) -> Result<ReductionCheck> {
    ensure!(w.p() == 2, Precondition, "the reduction check is specific to p = 2");
    ensure!(n >= 1, InvalidParameter, "n must be positive");
    ensure!(w.precision() >= 3, InvalidParameter, "the reduction check needs N >= 3");
    let m = 2 * n - 1;
    let dec = decompose_lemma212(w, big_f, m)
        .map_err(|e| Error::Precondition(format!("F is not of the lifted shape: {e}")))?;
    let mut q = vec![w.one()];
    q.extend(dec.q.iter().cloned());
    let ram = RamifiedRing::new(w, m)?;
    let pi2 = ram.mul(&ram.pi(), &ram.pi());
    let subst = |a: &[WittElement]| -> Vec<RamElement> {
        let mut scale = ram.from_base(&w.one());
        a.iter()
            .map(|c| {
                let v = ram.mul(&ram.from_base(c), &scale);
                scale = ram.mul(&scale, &pi2);
                v
            })
            .collect()
    };
    let fs = subst(big_f);
    let qs = subst(&q);
    let mut q2 = vec![ram.zero(); 2 * qs.len() - 1];
    for (i, a) in qs.iter().enumerate() {
        for (j, b) in qs.iter().enumerate() {
            q2[i + j] = ram.add(&q2[i + j], &ram.mul(a, b));
        }
    }
    let len = q2.len().max(fs.len());
    let zero = ram.zero();
    let c0: Vec<RamElement> =
        (0..len).map(|i| ram.sub(q2.get(i).unwrap_or(&zero), fs.get(i).unwrap_or(&zero))).collect();
    let four = ram.from_base(&w.from_int(4));
    let c1: Vec<RamElement> = qs.iter().map(|a| ram.sub(&zero, &ram.mul(&four, a))).collect();
    let c2 = vec![four];
    let u = w.reduce(&dec.u);
    let mut reduction = Vec::new();
    for part in [&c0, &c1, &c2] {
        let mut red = Vec::with_capacity(part.len());
        for c in part.iter() {
            match ram.div_pow2(c, 2) {
                Some(d) => red.push(ram.reduce(&d)),
                None => {
                    return Ok(ReductionCheck { n, integral: false, reduction: Vec::new(), u: u.0, holds: false });
                }
            }
        }
        reduction.push(Poly::new(red));
    }
    let fld = w.field();
    let expect =
        [Poly::monomial(fld.neg(u), m), Poly::constant(fld.neg(Fe::ONE)), Poly::one()];
    let holds = reduction.iter().zip(&expect).all(|(a, b)| a == b);
    Ok(ReductionCheck {
        n,
        integral: true,
        reduction: reduction.iter().map(|p| p.coeffs().iter().map(|c| c.0).collect()).collect(),
        u: u.0,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn teichmuller_basics() {
        let f = Field::new(2, 2).unwrap();
        let w = WittRing::new(&f, 4).unwrap();
        assert_eq!(w.teichmuller(Fe::ONE), w.one());
        let om = w.teichmuller(f.generator_t());
        assert_eq!(w.pow(&om, 3), w.one());
        assert_ne!(om, w.one());
        assert_eq!(w.reduce(&om), f.generator_t());
        let f = Field::new(3, 2).unwrap();
        let w = WittRing::new(&f, 5).unwrap();
        for x in f.elements() {
            let t = w.teichmuller(x);
            assert_eq!(w.pow(&t, 9), t);
            assert_eq!(w.reduce(&t), x);
        }
    }

    #[test]
    fn inverses_reduce() {
        let f = Field::new(5, 2).unwrap();
        let w = WittRing::new(&f, 6).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut n = 0;
        while n < 50 {
            let a = w.random(&mut rng);
            if !w.is_unit(&a) {
                assert!(w.inv(&a).is_err());
                continue;
            }
            let b = w.inv(&a).unwrap();
            assert_eq!(w.mul(&a, &b), w.one());
            assert_eq!(w.reduce(&b), f.inv(w.reduce(&a)).unwrap());
            n += 1;
        }
    }

    #[test]
    fn decompose_two_points() {
        let f = Field::new(2, 3).unwrap();
        let w = WittRing::new(&f, 6).unwrap();
        let x1 = w.teichmuller(Fe(3));
        let x2 = w.teichmuller(Fe(5));
        let big_f = w.product_linear(&[(x1.clone(), 1), (x2.clone(), 1)]);
        let d = decompose_lemma212(&w, &big_f, 1).unwrap();
        assert_eq!(d.q.len(), 1);
        let a2 = w.mul(&d.q[0], &d.q[0]);
        assert_eq!(w.reduce(&a2), w.reduce(&w.mul(&x1, &x2)));
        assert_eq!(w.reduce(&d.u), w.reduce(&w.add(&x1, &x2)));
        assert_eq!(d.recompose(&w), big_f);
    }

    #[test]
    fn decompose_rejects_low_terms() {
        let f = Field::new(3, 1).unwrap();
        let w = WittRing::new(&f, 4).unwrap();
        let big_f = vec![w.one(), w.one(), w.zero(), w.zero(), w.one()];
        assert!(matches!(decompose_lemma212(&w, &big_f, 4), Err(Error::Precondition(_))));
    }

    #[test]
    fn ramified_pi_power() {
        let f = Field::new(2, 1).unwrap();
        let w = WittRing::new(&f, 6).unwrap();
        let r = RamifiedRing::new(&w, 5).unwrap();
        assert_eq!(r.pow(&r.pi(), 5), r.from_base(&w.from_int(-2)));
        assert_eq!(r.valuation(&r.from_base(&w.from_int(4))), Some(10));
        assert_eq!(r.valuation(&r.pow(&r.pi(), 3)), Some(3));
    }

    #[test]
    fn lift_single_pair_is_direct() {
        let f = Field::new(2, 2).unwrap();
        let w = WittRing::new(&f, 6).unwrap();
        let l = lift_p2(&w, &[w.teichmuller(Fe(1))], &w.one());
        let l = match l {
            Ok(l) => l,
            Err(Error::NeedsLargerField(_)) => return,
            Err(e) => panic!("{e}"),
        };
        assert!(l.eps.iter().all(|e| w.is_zero(e)));
        assert_eq!(l.f, l.f_uncorrected);
        assert!(reduction_check_p2(&w, &l.f, 1).unwrap().holds);
    }

    #[test]
    fn lift_rejects_collisions() {
        let f = Field::new(2, 3).unwrap();
        let w = WittRing::new(&f, 6).unwrap();
        let a = w.teichmuller(Fe(3));
        let b = w.add(&a, &w.from_int(2));
        assert!(matches!(lift_p2(&w, &[a, b], &w.one()), Err(Error::Precondition(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reduction_is_a_homomorphism(seed in any::<u64>()) {
            let f = Field::new(3, 2).unwrap();
            let w = WittRing::new(&f, 5).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = w.random(&mut rng);
            let b = w.random(&mut rng);
            prop_assert_eq!(w.reduce(&w.add(&a, &b)), f.add(w.reduce(&a), w.reduce(&b)));
            prop_assert_eq!(w.reduce(&w.mul(&a, &b)), f.mul(w.reduce(&a), w.reduce(&b)));
            prop_assert_eq!(w.reduce(&w.neg(&a)), f.neg(w.reduce(&a)));
            let t = w.teichmuller(w.reduce(&a));
            let s = w.teichmuller(w.reduce(&b));
            prop_assert_eq!(w.mul(&t, &s), w.teichmuller(f.mul(w.reduce(&a), w.reduce(&b))));
        }
    }
}
