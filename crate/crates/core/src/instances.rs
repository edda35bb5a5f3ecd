//! Seeded random instances for the constructions, pullbacks and lifts.

use rand::Rng;

use crate::constructions::{additive_poly, construct_p2, matignon_space, AdditiveConstruction, P2Construction};
use crate::error::{ensure, Error, Result};
use crate::field::{Fe, Field};
use crate::poly::{fp_independent, Poly};
use crate::witt::{WittElement, WittRing};

const MAX_TRIES: usize = 10_000;

/// `n` distinct elements, optionally all nonzero.
pub fn distinct_elements<R: Rng + ?Sized>(f: &Field, n: usize, nonzero: bool, rng: &mut R) -> Result<Vec<Fe>> {
    let avail = f.order() as usize - usize::from(nonzero);
    ensure!(n <= avail, NeedsLargerField, "{n} distinct elements do not fit in F_{}^{}", f.p(), f.k());
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = if nonzero { f.random_nonzero(rng) } else { f.random(rng) };
        if !out.contains(&x) {
            out.push(x);
        }
    }
    Ok(out)
}

/// `n` random `F_p`-independent elements of `pool`.
pub fn independent_from<R: Rng + ?Sized>(f: &Field, pool: &[Fe], n: usize, rng: &mut R) -> Result<Vec<Fe>> {
    for _ in 0..MAX_TRIES {
        let a: Vec<Fe> = (0..n).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
        if fp_independent(f, &a) {
            return Ok(a);
        }
    }
    Err(Error::NeedsLargerField(format!("no {n} independent elements found")))
}

pub fn random_independent<R: Rng + ?Sized>(f: &Field, n: usize, rng: &mut R) -> Result<Vec<Fe>> {
    ensure!(n as u32 <= f.k(), NeedsLargerField, "F_{}^{} has no {n} independent elements", f.p(), f.k());
    let all: Vec<Fe> = f.elements().collect();
    independent_from(f, &all, n, rng)
}

/// Random `x_1..x_n`, `u != v` for which the characteristic-two construction
/// splits over `f`.
pub fn random_p2<R: Rng + ?Sized>(f: &Field, n: usize, rng: &mut R) -> Result<P2Construction> {
    ensure!(3 * n <= f.order() as usize, NeedsLargerField, "3n = {} poles do not fit", 3 * n);
    for _ in 0..MAX_TRIES {
        let xs = distinct_elements(f, n, false, rng)?;
        let u = f.random_nonzero(rng);
        let v = f.random_nonzero(rng);
        if u == v {
            continue;
        }
        match construct_p2(f, &xs, u, v) {
            Ok(c) => return Ok(c),
            Err(Error::NeedsLargerField(_)) | Err(Error::Precondition(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NeedsLargerField(format!("no split instance with n = {n} over F_2^{}", f.k())))
}

pub fn random_additive_space<R: Rng + ?Sized>(f: &Field, n: usize, rng: &mut R) -> Result<AdditiveConstruction> {
    matignon_space(f, &random_independent(f, n, rng)?)
}

/// An étale map `Φ = γ Ad_V(t) = αt + P(t^p)` with `dim V = d` and a space
/// built from generators inside the image of `Φ`, so every preimage of a
/// pole is rational.
#[derive(Clone, Debug)]
pub struct EtaleInstance {
    pub base: AdditiveConstruction,
    pub alpha: Fe,
    pub big_p: Poly,
    pub kernel: Vec<Fe>,
    pub gamma: Fe,
}

pub fn random_etale_instance<R: Rng + ?Sized>(f: &Field, n: usize, d: usize, rng: &mut R) -> Result<EtaleInstance> {
    ensure!(d >= 1, InvalidParameter, "the kernel must be nontrivial");
    ensure!(
        (n + d) as u32 <= f.k(),
        NeedsLargerField,
        "n + d = {} exceeds k = {}",
        n + d,
        f.k()
    );
    let kernel = random_independent(f, d, rng)?;
    let gamma = f.random_nonzero(rng);
    let phi = additive_poly(f, &kernel)?.scale(f, gamma);
    let mut image: Vec<Fe> = f.elements().map(|x| phi.eval(f, x)).collect();
    image.sort();
    image.dedup();
    let a = independent_from(f, &image, n, rng)?;
    let base = matignon_space(f, &a)?;
    let p = f.p() as usize;
    let big_p = Poly::new((0..=phi.deg() as usize / p).map(|i| phi.coeff(i * p)).collect());
    Ok(EtaleInstance { base, alpha: phi.coeff(1), big_p, kernel, gamma })
}

/// Residues `x_1..x_n` (distinct) and `u != 0`, lifted either by Teichmüller
/// or by adding random multiples of `p` to the Teichmüller lift.
pub fn random_lift_inputs<R: Rng + ?Sized>(
    w: &WittRing,
    n: usize,
    teichmuller: bool,
    rng: &mut R,
) -> Result<(Vec<WittElement>, WittElement)> {
    let f = w.field();
    let xs = distinct_elements(f, n, false, rng)?;
    let u = f.random_nonzero(rng);
    let lift = |x: Fe, rng: &mut R| {
        let t = w.teichmuller(x);
        if teichmuller {
            t
        } else {
            let r = w.random(rng);
            w.add(&t, &w.mul_int(&r, w.p() as i64))
        }
    };
    let lifted = xs.iter().map(|&x| lift(x, rng)).collect();
    let u = lift(u, rng);
    Ok((lifted, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::pullback_etale;
    use rand::SeedableRng;

    #[test]
    fn etale_instance_pulls_back() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let f = Field::new(3, 3).unwrap();
        let inst = random_etale_instance(&f, 2, 1, &mut rng).unwrap();
        let pb = pullback_etale(&inst.base.space, inst.alpha, &inst.big_p).unwrap();
        assert!(pb.validation.is_valid());
        assert_eq!(pb.space.pole_count(), 6 * 3);
    }
}
