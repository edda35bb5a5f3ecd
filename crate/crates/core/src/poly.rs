//! Dense univariate polynomials over a [`Field`], lowest degree first.

use crate::error::{ensure, Error, Result};
use crate::field::{Fe, Field};

/// Polynomial with no trailing zero coefficients. The zero polynomial has an
/// empty coefficient list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    c: Vec<Fe>,
}

impl Poly {
    pub fn new(mut c: Vec<Fe>) -> Poly {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly { c }
    }

    pub fn zero() -> Poly {
        Poly { c: Vec::new() }
    }

    pub fn one() -> Poly {
        Poly { c: vec![Fe::ONE] }
    }

    pub fn constant(a: Fe) -> Poly {
        Poly::new(vec![a])
    }

    /// `z`.
    pub fn x() -> Poly {
        Poly { c: vec![Fe::ZERO, Fe::ONE] }
    }

    /// `a z^d`.
    pub fn monomial(a: Fe, d: usize) -> Poly {
        let mut c = vec![Fe::ZERO; d + 1];
        c[d] = a;
        Poly::new(c)
    }

    /// `z - a`.
    pub fn linear_root(f: &Field, a: Fe) -> Poly {
        Poly::new(vec![f.neg(a), Fe::ONE])
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.c
    }

    pub fn into_coeffs(self) -> Vec<Fe> {
        self.c
    }

    pub fn coeff(&self, i: usize) -> Fe {
        self.c.get(i).copied().unwrap_or(Fe::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    /// Degree with the convention `deg 0 = -1`.
    pub fn deg(&self) -> i64 {
        self.c.len() as i64 - 1
    }

    pub fn leading(&self) -> Fe {
        self.c.last().copied().unwrap_or(Fe::ZERO)
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == Fe::ONE
    }

    pub fn add(&self, f: &Field, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|i| f.add(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn sub(&self, f: &Field, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|i| f.sub(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn neg(&self, f: &Field) -> Poly {
        Poly { c: self.c.iter().map(|&a| f.neg(a)).collect() }
    }

    pub fn scale(&self, f: &Field, a: Fe) -> Poly {
        Poly::new(self.c.iter().map(|&x| f.mul(x, a)).collect())
    }

    pub fn mul(&self, f: &Field, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut r = vec![Fe::ZERO; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                r[i + j] = f.add(r[i + j], f.mul(a, b));
            }
        }
        Poly::new(r)
    }

    /// `z^d * self`.
    pub fn shift(&self, d: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![Fe::ZERO; d];
        c.extend_from_slice(&self.c);
        Poly { c }
    }

    pub fn pow(&self, f: &Field, mut e: u64) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(f, &base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(f, &base);
            }
        }
        acc
    }

    pub fn div_rem(&self, f: &Field, d: &Poly) -> Result<(Poly, Poly)> {
        ensure!(!d.is_zero(), NotInvertible, "division by the zero polynomial");
        let dd = d.c.len() - 1;
        let inv = f.inv_nz(d.leading());
        let mut r = self.c.clone();
        if r.len() <= dd {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut q = vec![Fe::ZERO; r.len() - dd];
        for i in (dd..r.len()).rev() {
            let c = f.mul(r[i], inv);
            if c.is_zero() {
                continue;
            }
            q[i - dd] = c;
            for (j, &dj) in d.c.iter().enumerate() {
                r[i - dd + j] = f.sub(r[i - dd + j], f.mul(c, dj));
            }
        }
        r.truncate(dd);
        Ok((Poly::new(q), Poly::new(r)))
    }

    pub fn rem(&self, f: &Field, d: &Poly) -> Result<Poly> {
        Ok(self.div_rem(f, d)?.1)
    }

    /// Quotient of an exact division; errors if the remainder is nonzero.
    pub fn exact_div(&self, f: &Field, d: &Poly) -> Result<Poly> {
        let (q, r) = self.div_rem(f, d)?;
        ensure!(r.is_zero(), Precondition, "division is not exact");
        Ok(q)
    }

    pub fn divides(&self, f: &Field, other: &Poly) -> bool {
        !self.is_zero() && other.rem(f, self).map(|r| r.is_zero()).unwrap_or(false)
    }

    pub fn monic(&self, f: &Field) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        self.scale(f, f.inv_nz(self.leading()))
    }

    /// Monic greatest common divisor (zero only if both inputs are zero).
    pub fn gcd(&self, f: &Field, o: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(f, &b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a.monic(f)
    }

    pub fn derivative(&self, f: &Field) -> Poly {
        Poly::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &a)| f.mul(a, f.from_int(i as i64)))
                .collect(),
        )
    }

    /// `n`-th formal derivative, using falling factorials mod p.
    pub fn nth_derivative(&self, f: &Field, n: usize) -> Poly {
        if self.c.len() <= n {
            return Poly::zero();
        }
        let p = f.p() as i64;
        Poly::new(
            (n..self.c.len())
                .map(|i| {
                    let mut ff = 1i64;
                    for j in 0..n {
                        ff = ff * ((i - j) as i64 % p) % p;
                    }
                    f.mul(self.c[i], f.from_int(ff))
                })
                .collect(),
        )
    }

    pub fn eval(&self, f: &Field, x: Fe) -> Fe {
        let mut acc = Fe::ZERO;
        for &a in self.c.iter().rev() {
            acc = f.add(f.mul(acc, x), a);
        }
        acc
    }

    /// `self(g(z))`.
    pub fn compose(&self, f: &Field, g: &Poly) -> Poly {
        let mut acc = Poly::zero();
        for &a in self.c.iter().rev() {
            acc = acc.mul(f, g).add(f, &Poly::constant(a));
        }
        acc
    }

    /// `self(z + a)`.
    pub fn taylor_shift(&self, f: &Field, a: Fe) -> Poly {
        self.compose(f, &Poly::new(vec![a, Fe::ONE]))
    }

    /// `self^e mod m`.
    pub fn pow_mod(&self, f: &Field, mut e: u64, m: &Poly) -> Result<Poly> {
        let mut base = self.rem(f, m)?;
        let mut acc = Poly::one().rem(f, m)?;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(f, &base).rem(f, m)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(f, &base).rem(f, m)?;
            }
        }
        Ok(acc)
    }

    pub fn is_squarefree(&self, f: &Field) -> bool {
        match self.degree() {
            None => false,
            Some(0) => true,
            Some(_) => self.gcd(f, &self.derivative(f)) == Poly::one(),
        }
    }

    /// Applies the Frobenius `a -> a^p` to every coefficient.
    pub fn frobenius_coeffwise(&self, f: &Field) -> Poly {
        Poly::new(self.c.iter().map(|&a| f.frobenius(a)).collect())
    }

    /// Applies `a -> a^(1/p)` to every coefficient.
    pub fn frobenius_inverse_coeffwise(&self, f: &Field) -> Poly {
        Poly::new(self.c.iter().map(|&a| f.frobenius_inverse(a)).collect())
    }

    /// The unique `g` with `g^p = self`, defined when `self` only has terms in
    /// degrees divisible by `p`.
    pub fn pth_root_coeffwise(&self, f: &Field) -> Result<Poly> {
        let p = f.p() as usize;
        for (i, a) in self.c.iter().enumerate() {
            ensure!(
                i % p == 0 || a.is_zero(),
                Precondition,
                "term of degree {i} is not a p-th power"
            );
        }
        Ok(Poly::new(self.c.iter().step_by(p).map(|&a| f.frobenius_inverse(a)).collect()))
    }

    /// Roots in the field with multiplicities, found by evaluating at every
    /// element. Multiplicities come from repeated division by `z - x`.
    pub fn roots_exhaustive(&self, f: &Field) -> Result<Vec<(Fe, usize)>> {
        ensure!(!self.is_zero(), Precondition, "the zero polynomial has every element as a root");
        let mut out = Vec::new();
        for x in f.elements() {
            if !self.eval(f, x).is_zero() {
                continue;
            }
            let lin = Poly::linear_root(f, x);
            let mut g = self.clone();
            let mut mult = 0;
            loop {
                let (q, r) = g.div_rem(f, &lin)?;
                if !r.is_zero() {
                    break;
                }
                mult += 1;
                g = q;
            }
            out.push((x, mult));
        }
        Ok(out)
    }

    /// Like [`Poly::roots_exhaustive`] but fails with
    /// [`Error::NeedsLargerField`] unless the polynomial splits.
    pub fn split_roots(&self, f: &Field) -> Result<Vec<(Fe, usize)>> {
        let roots = self.roots_exhaustive(f)?;
        let total: usize = roots.iter().map(|r| r.1).sum();
        let deg = self.degree().unwrap_or(0);
        if total != deg {
            return Err(Error::NeedsLargerField(format!(
                "polynomial of degree {deg} has only {total} roots (with multiplicity) in F_{}^{}",
                f.p(),
                f.k()
            )));
        }
        Ok(roots)
    }

    /// Product of `z - x` over the given points.
    pub fn from_roots(f: &Field, roots: &[Fe]) -> Poly {
        roots.iter().fold(Poly::one(), |acc, &x| acc.mul(f, &Poly::linear_root(f, x)))
    }

    /// Interpolating polynomial of degree `< n` through `n` points with
    /// distinct abscissae.
    pub fn interpolate(f: &Field, xs: &[Fe], ys: &[Fe]) -> Result<Poly> {
        ensure!(xs.len() == ys.len(), InvalidParameter, "abscissae and values differ in length");
        let mut acc = Poly::zero();
        for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
            let mut basis = Poly::one();
            let mut denom = Fe::ONE;
            for (j, &xj) in xs.iter().enumerate() {
                if i == j {
                    continue;
                }
                ensure!(xi != xj, Precondition, "interpolation abscissae must be distinct");
                basis = basis.mul(f, &Poly::linear_root(f, xj));
                denom = f.mul(denom, f.sub(xi, xj));
            }
            acc = acc.add(f, &basis.scale(f, f.mul(yi, f.inv_nz(denom))));
        }
        Ok(acc)
    }

    pub fn map_coeffs(&self, g: impl Fn(Fe) -> Fe) -> Poly {
        Poly::new(self.c.iter().map(|&a| g(a)).collect())
    }

    pub fn format(&self, f: &Field) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (i, &a) in self.c.iter().enumerate().rev() {
            if a.is_zero() {
                continue;
            }
            let s = f.format(a);
            let s = if s.contains('+') { format!("({s})") } else { s };
            parts.push(match (i, s.as_str()) {
                (0, _) => s,
                (1, "1") => "z".into(),
                (1, _) => format!("{s}z"),
                (_, "1") => format!("z^{i}"),
                _ => format!("{s}z^{i}"),
            });
        }
        parts.join(" + ")
    }
}

/// Moore-type product
/// `prod_i prod_{j_1..j_{i-1} in F_p} (Q_i + j_{i-1} Q_{i-1} + ... + j_1 Q_1)`,
/// which vanishes exactly when the `Q_i` are `F_p`-linearly dependent. For two
/// inputs `(A, B)` it is `A B^p - A^p B`.
pub fn moore_product(f: &Field, qs: &[Poly]) -> Poly {
    let p = f.p() as u64;
    let mut acc = Poly::one();
    for i in 0..qs.len() {
        let count = p.pow(i as u32);
        for idx in 0..count {
            let mut t = idx;
            let mut term = qs[i].clone();
            for q in qs.iter().take(i) {
                let j = t % p;
                t /= p;
                if j != 0 {
                    term = term.add(f, &q.scale(f, Fe(j as u32)));
                }
            }
            acc = acc.mul(f, &term);
        }
    }
    acc
}

/// Whether the elements are linearly independent over `F_p`.
pub fn fp_independent(f: &Field, xs: &[Fe]) -> bool {
    let qs: Vec<Poly> = xs.iter().map(|&a| Poly::constant(a)).collect();
    !moore_product(f, &qs).is_zero()
}
