//! Exhaustive searches: points realizing a residue datum, and pairs `(A, B)`
//! giving two-dimensional spaces. Work is split into index-range shards that
//! can run in parallel and be checkpointed; results are merged in shard
//! order so output does not depend on the thread count.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::constructions::HurwitzDatum;
use crate::error::{ensure, Error, Result};
use crate::field::{Fe, Field};
use crate::forms::log_derivative;
use crate::poly::Poly;
use crate::space::{forms_from_ab, validate_space_with_extension, Validation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Stop each shard at its first witness.
    FindOne,
    /// Exhaust the whole candidate space.
    VerifyNone,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Found,
    ExhaustedNone,
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub mode: SearchMode,
    /// Worker threads; 0 uses the global rayon pool.
    pub jobs: usize,
    pub shards: usize,
    /// Witnesses kept per shard (all are counted).
    pub max_witnesses: usize,
    pub checkpoint: Option<PathBuf>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { mode: SearchMode::FindOne, jobs: 0, shards: 64, max_witnesses: 64, checkpoint: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ShardOutcome<W> {
    examined: u64,
    witness_count: u64,
    witnesses: Vec<(u64, W)>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint<W> {
    task: String,
    shards: usize,
    done: BTreeMap<usize, ShardOutcome<W>>,
}

struct Merged<W> {
    examined: u64,
    witness_count: u64,
    witnesses: Vec<W>,
    elapsed: Duration,
}

fn write_checkpoint<W: Serialize>(path: &PathBuf, cp: &Checkpoint<W>) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let text = serde_json::to_string(cp).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&tmp, text).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Io(e.to_string()))
}

fn run_shards<W, F>(total: u64, opts: &SearchOptions, task: &str, work: F) -> Result<Merged<W>>
where
    W: Serialize + DeserializeOwned + Send + Sync + Clone,
    F: Fn(u64, u64) -> ShardOutcome<W> + Sync,
{
    let start = Instant::now();
    let shards = (opts.shards.max(1) as u64).min(total.max(1)) as usize;
    let bounds = |i: usize| (total * i as u64 / shards as u64, total * (i as u64 + 1) / shards as u64);
    let mut state: Checkpoint<W> = Checkpoint { task: task.to_string(), shards, done: BTreeMap::new() };
    if let Some(path) = &opts.checkpoint {
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e.to_string()))?;
            let cp: Checkpoint<W> =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("checkpoint: {e}")))?;
            ensure!(
                cp.task == task && cp.shards == shards,
                Precondition,
                "checkpoint {} belongs to a different task",
                path.display()
            );
            state = cp;
        }
    }
    let pending: Vec<usize> = (0..shards).filter(|i| !state.done.contains_key(i)).collect();
    let state = Mutex::new(state);
    let run = || -> Result<()> {
        pending.par_iter().try_for_each(|&i| {
            let (lo, hi) = bounds(i);
            let out = work(lo, hi);
            let mut st = state.lock().unwrap();
            st.done.insert(i, out);
            if let Some(path) = &opts.checkpoint {
                write_checkpoint(path, &*st)?;
            }
            Ok(())
        })
    };
    if opts.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?;
        pool.install(run)?;
    } else {
        run()?;
    }
    let state = state.into_inner().unwrap();
    let mut merged = Merged { examined: 0, witness_count: 0, witnesses: Vec::new(), elapsed: Duration::ZERO };
    for (_, out) in state.done {
        merged.examined += out.examined;
        merged.witness_count += out.witness_count;
        merged.witnesses.extend(out.witnesses.into_iter().map(|w| w.1));
    }
    if opts.mode == SearchMode::FindOne {
        merged.witnesses.truncate(1);
    }
    merged.elapsed = start.elapsed();
    Ok(merged)
}

fn task_key(kind: &str, f: &Field, extra: &str) -> String {
    format!("{kind}|p={}|k={}|modulus={:?}|{extra}", f.p(), f.k(), f.modulus())
}

// ---------------------------------------------------------------------------
// residue data

#[derive(Clone, Debug, Serialize)]
pub struct HurwitzSearchResult {
    pub verdict: Verdict,
    pub examined: u64,
    pub witness_count: u64,
    /// Pole positions `x_0 = 0, x_1 = 1, x_2, ...` for each stored witness.
    pub witnesses: Vec<Vec<u32>>,
    #[serde(skip)]
    pub elapsed: Duration,
}

fn power_sums_vanish(f: &Field, h: &[Fe], xs: &[Fe], top: usize) -> bool {
    let mut pw: Vec<Fe> = xs.to_vec();
    for _ in 1..=top {
        let s = h.iter().zip(&pw).fold(Fe::ZERO, |acc, (&hi, &xi)| f.add(acc, f.mul(hi, xi)));
        if !s.is_zero() {
            return false;
        }
        for (pi, &xi) in pw.iter_mut().zip(xs) {
            *pi = f.mul(*pi, xi);
        }
    }
    true
}

/// Searches for distinct points `x_i` with `sum_i h_i x_i^l = 0` for
/// `1 <= l <= m - 1`, i.e. a logarithmic form `sum h_i dz/(z - x_i)` with a
/// single zero at infinity. Affine changes of `z` allow `x_0 = 0`, `x_1 = 1`.
/// Every stored witness is rebuilt as a form and checked for `m + 1` simple
/// poles with the prescribed residues and a zero of order `m - 1` at infinity.
pub fn hurwitz_search(f: &Field, datum: &HurwitzDatum, opts: &SearchOptions) -> Result<HurwitzSearchResult> {
    ensure!(datum.p == f.p(), FieldMismatch, "datum is for p = {}, field has p = {}", datum.p, f.p());
    let m1 = datum.len();
    let m = m1 - 1;
    ensure!(m1 as u32 <= f.order(), NeedsLargerField, "{m1} distinct points do not fit in F_{}^{}", f.p(), f.k());
    let h: Vec<Fe> = datum.classes.iter().map(|&c| Fe(c)).collect();
    let q = f.order() as u64;
    let free = m1 - 2;
    let total = q.checked_pow(free as u32).ok_or_else(|| Error::InvalidParameter("search space too large".into()))?;
    let key = task_key("hurwitz", f, &format!("classes={:?}", datum.classes));
    let merged = run_shards(total, opts, &key, |lo, hi| {
        let mut out: ShardOutcome<Vec<u32>> = ShardOutcome { examined: 0, witness_count: 0, witnesses: Vec::new() };
        let mut xs = vec![Fe::ZERO; m1];
        xs[1] = Fe::ONE;
        for idx in lo..hi {
            let mut t = idx;
            for x in xs.iter_mut().skip(2) {
                *x = Fe((t % q) as u32);
                t /= q;
            }
            let mut sorted = xs.clone();
            sorted.sort();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                continue;
            }
            out.examined += 1;
            if power_sums_vanish(f, &h, &xs, m.saturating_sub(1)) {
                out.witness_count += 1;
                if out.witnesses.len() < opts.max_witnesses {
                    out.witnesses.push((idx, xs.iter().map(|x| x.0).collect()));
                }
                if opts.mode == SearchMode::FindOne {
                    break;
                }
            }
        }
        out
    })?;
    for w in &merged.witnesses {
        let pts: Vec<(Fe, i64)> = w.iter().zip(&datum.classes).map(|(&x, &c)| (Fe(x), c as i64)).collect();
        let form = log_derivative(f, &pts)?;
        let poles = form.poles_and_residues(f)?;
        let ok = form.order_at_infinity() == Some(m as i64 - 1)
            && poles.len() == m1
            && poles.iter().all(|pl| {
                pl.order == 1 && pts.iter().any(|&(x, c)| x == pl.point && f.from_int(c) == pl.residue)
            });
        if !ok {
            return Err(Error::Internal(format!("witness {w:?} does not revalidate")));
        }
    }
    Ok(HurwitzSearchResult {
        verdict: if merged.witness_count > 0 { Verdict::Found } else { Verdict::ExhaustedNone },
        examined: merged.examined,
        witness_count: merged.witness_count,
        witnesses: merged.witnesses,
        elapsed: merged.elapsed,
    })
}

// ---------------------------------------------------------------------------
// pairs (A, B)

/// Pair witness stored by element indices, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairWitness {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
}

impl PairWitness {
    pub fn polys(&self) -> (Poly, Poly) {
        (
            Poly::new(self.a.iter().map(|&x| Fe(x)).collect()),
            Poly::new(self.b.iter().map(|&x| Fe(x)).collect()),
        )
    }
}

/// Which symmetries the enumeration quotients out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Leading pair up to `GL_2(F_p)` and scaling, translation, and the
    /// scalings that fix the leading pair.
    Full,
    /// Every pair with `F_p`-independent leading coefficients.
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpaceSearchResult {
    pub p: u32,
    pub k: u32,
    pub m: usize,
    pub normalization: Normalization,
    pub verdict: Verdict,
    /// Candidates enumerated by index, before the scaling filter.
    pub enumerated: u64,
    /// Candidates that reached the congruence test.
    pub examined: u64,
    pub witness_count: u64,
    pub witnesses: Vec<PairWitness>,
    /// For each stored witness, the degree of the field its poles were
    /// validated in.
    pub witness_fields: Vec<u32>,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// One block of the enumeration: a fixed leading pair and, per non-leading
/// coefficient of `A` and `B`, the list of admissible values.
#[derive(Clone, Debug)]
struct Block {
    e1: Fe,
    e2: Fe,
    a_vals: Vec<Vec<Fe>>,
    b_vals: Vec<Vec<Fe>>,
    num_a: u64,
    num_b: u64,
}

impl Block {
    fn new(e1: Fe, e2: Fe, a_vals: Vec<Vec<Fe>>, b_vals: Vec<Vec<Fe>>) -> Block {
        let num_a = a_vals.iter().map(|v| v.len() as u64).product();
        let num_b = b_vals.iter().map(|v| v.len() as u64).product();
        Block { e1, e2, a_vals, b_vals, num_a, num_b }
    }
    fn size(&self) -> u64 {
        self.num_a * self.num_b
    }
}

fn decode(vals: &[Vec<Fe>], mut idx: u64, lead: Fe) -> Vec<Fe> {
    let mut c: Vec<Fe> = vals
        .iter()
        .map(|v| {
            let n = v.len() as u64;
            let x = v[(idx % n) as usize];
            idx /= n;
            x
        })
        .collect();
    c.push(lead);
    c
}

/// Canonical ordered basis of the `F_p`-span of `x, y`: the smallest nonzero
/// element, then the smallest element off its line.
fn canonical_basis(f: &Field, x: Fe, y: Fe) -> (Fe, Fe) {
    let p = f.p();
    let mut span = Vec::with_capacity((p * p) as usize);
    for i in 0..p {
        for j in 0..p {
            span.push(f.add(f.mul(Fe(i), x), f.mul(Fe(j), y)));
        }
    }
    let e1 = *span.iter().filter(|z| !z.is_zero()).min().unwrap();
    let line: Vec<Fe> = (0..p).map(|i| f.mul(Fe(i), e1)).collect();
    let e2 = *span.iter().filter(|z| !line.contains(z)).min().unwrap();
    (e1, e2)
}

fn independent(f: &Field, x: Fe, y: Fe) -> bool {
    !x.is_zero() && (0..f.p()).all(|i| f.mul(Fe(i), x) != y)
}

/// Canonical bases of all 2-dimensional `F_p`-subspaces of `F_q`.
fn subspaces(f: &Field) -> Vec<(Fe, Fe)> {
    let mut out = Vec::new();
    for x in f.elements().skip(1) {
        for y in f.elements() {
            if y > x && independent(f, x, y) && canonical_basis(f, x, y) == (x, y) {
                out.push((x, y));
            }
        }
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The group `μ_d` of `d`-th roots of unity in `F_q^*`, `d | q - 1`.
fn roots_of_unity(f: &Field, d: u64) -> Vec<Fe> {
    let n = f.order() as u64 - 1;
    let g = (1..f.order()).map(Fe).find(|&x| f.log(x) == Some(1)).unwrap();
    let z = f.pow(g, n / d);
    (0..d).map(|i| f.pow(z, i)).collect()
}

struct Plan {
    blocks: Vec<Block>,
    /// Per A-degree and B-degree: canonical-value table, or `None` when the
    /// scaling subgroup acts trivially there.
    order: Vec<(bool, usize)>,
    canon: Vec<Vec<bool>>,
    filter: bool,
}

fn build_plan(f: &Field, lambda: usize, norm: Normalization) -> Plan {
    let p = f.p() as usize;
    let q = f.order() as u64;
    let all: Vec<Fe> = f.elements().collect();
    let nonzero: Vec<Fe> = f.elements().skip(1).collect();
    let zero = vec![Fe::ZERO];
    if norm == Normalization::None {
        let mut blocks = Vec::new();
        for x in f.elements() {
            for y in f.elements() {
                if independent(f, x, y) {
                    blocks.push(Block::new(x, y, vec![all.clone(); lambda], vec![all.clone(); lambda]));
                }
            }
        }
        return Plan { blocks, order: Vec::new(), canon: Vec::new(), filter: false };
    }
    let m = (p * lambda - 1) as u64;
    let g = gcd(m, q - 1);
    // scalings z -> cz move the leading span V to hV, h in μ_((q-1)/g)
    let h_group = roots_of_unity(f, (q - 1) / g);
    let subs = subspaces(f);
    let reps: Vec<(Fe, Fe)> = subs
        .iter()
        .copied()
        .filter(|&(x, y)| {
            h_group
                .iter()
                .map(|&h| canonical_basis(f, f.mul(h, x), f.mul(h, y)))
                .min()
                .unwrap()
                == (x, y)
        })
        .collect();
    // translation pieces
    let mut pieces: Vec<(Vec<Vec<Fe>>, Vec<Vec<Fe>>)> = Vec::new();
    let free = || vec![all.clone(); lambda];
    if lambda % p != 0 {
        let mut a = free();
        a[lambda - 1] = zero.clone();
        pieces.push((a, free()));
    } else if p > 2 {
        let mut a1 = free();
        a1[lambda - 1] = nonzero.clone();
        a1[lambda - 2] = zero.clone();
        pieces.push((a1, free()));
        let mut a2 = free();
        a2[lambda - 1] = zero.clone();
        let mut b2 = free();
        b2[lambda - 1] = nonzero.clone();
        b2[lambda - 2] = zero.clone();
        pieces.push((a2, b2));
        let mut a3 = free();
        a3[lambda - 1] = zero.clone();
        let mut b3 = free();
        b3[lambda - 1] = zero.clone();
        pieces.push((a3, b3));
    } else {
        pieces.push((free(), free()));
    }
    let mut blocks = Vec::new();
    for &(e1, e2) in &reps {
        for (a, b) in &pieces {
            blocks.push(Block::new(e1, e2, a.clone(), b.clone()));
        }
    }
    // scalings with ζ^m = 1 fix the leading pair and multiply the degree-i
    // coefficients by ζ^(i - λ)
    let mut canon = Vec::with_capacity(lambda);
    let mut sizes = Vec::with_capacity(lambda);
    for i in 0..lambda {
        let d = g / gcd(g, (lambda - i) as u64);
        let mu = roots_of_unity(f, d);
        canon.push(f.elements().map(|x| mu.iter().all(|&z| f.mul(x, z) >= x)).collect::<Vec<bool>>());
        sizes.push(d);
    }
    let mut order: Vec<(bool, usize)> = (0..lambda).rev().flat_map(|i| [(false, i), (true, i)]).collect();
    order.sort_by_key(|&(_, i)| std::cmp::Reverse(sizes[i]));
    let filter = g > 1;
    Plan { blocks, order, canon, filter }
}

/// First nonzero coordinate in the fixed order, and whether it is canonical.
fn scaling_canonical(plan: &Plan, a: &[Fe], b: &[Fe]) -> bool {
    for &(is_b, i) in &plan.order {
        let x = if is_b { b[i] } else { a[i] };
        if !x.is_zero() {
            return plan.canon[i][x.0 as usize];
        }
    }
    true
}

// Allocation-free polynomial helpers for the inner loop.

fn mul_into(f: &Field, a: &[Fe], b: &[Fe], out: &mut Vec<Fe>) {
    out.clear();
    out.resize(a.len() + b.len() - 1, Fe::ZERO);
    for (i, &x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
}

/// Reduces `r` modulo `m` (degree `d`, leading coefficient inverse `inv_lc`).
fn reduce(f: &Field, r: &mut Vec<Fe>, m: &[Fe], inv_lc: Fe) {
    let d = m.len() - 1;
    for i in (d..r.len()).rev() {
        let c = f.mul(r[i], inv_lc);
        if c.is_zero() {
            continue;
        }
        for j in 0..d {
            r[i - d + j] = f.sub(r[i - d + j], f.mul(c, m[j]));
        }
        r[i] = Fe::ZERO;
    }
    r.truncate(d);
}

fn is_one(r: &[Fe]) -> bool {
    r.first() == Some(&Fe::ONE) && r[1..].iter().all(|x| x.is_zero())
}

fn poly_vec(p: &Poly, len: usize) -> Vec<Fe> {
    let mut v = p.coeffs().to_vec();
    v.resize(len, Fe::ZERO);
    v
}

/// `(f')^(p-1) ≡ 1 mod f` with `f = A^p - A B^(p-1)`: the congruence form of
/// the pair condition.
pub fn pair_congruence(f: &Field, a: &Poly, b: &Poly) -> bool {
    let p = f.p() as u64;
    let big_f = a.pow(f, p).sub(f, &a.mul(f, &b.pow(f, p - 1)));
    if big_f.deg() < 1 {
        return false;
    }
    let d = big_f.derivative(f);
    d.pow_mod(f, p - 1, &big_f).map(|r| r == Poly::one()).unwrap_or(false)
}

struct Scratch {
    t1: Vec<Fe>,
    t2: Vec<Fe>,
    fpoly: Vec<Fe>,
    h: Vec<Fe>,
    acc: Vec<Fe>,
    base: Vec<Fe>,
}

/// Searches pairs `(A, B)` of degree `λ = (m+1)/p` over `F_q` whose forms
/// `A dz/(A^p B - A B^p)`, `B dz/(A^p B - A B^p)` span a space with `m + 1`
/// poles. Candidates pass, in order: the degree condition (built into the
/// enumeration), the congruence `(f')^(p-1) ≡ 1 mod f`, and the full Cartier
/// check on both forms. Stored witnesses are revalidated with
/// [`validate_space_with_extension`].
pub fn space_search_dim2(f: &Field, m: usize, norm: Normalization, opts: &SearchOptions) -> Result<SpaceSearchResult> {
    let p = f.p() as usize;
    ensure!((m + 1) % p == 0, Precondition, "m + 1 = {} is not divisible by p = {p}", m + 1);
    let lambda = (m + 1) / p;
    let plan = build_plan(f, lambda, norm);
    let offsets: Vec<u64> = plan
        .blocks
        .iter()
        .scan(0u64, |acc, b| {
            let o = *acc;
            *acc += b.size();
            Some(o)
        })
        .collect();
    let total: u64 = plan.blocks.iter().map(|b| b.size()).sum();
    let key = task_key("space2", f, &format!("m={m}|norm={norm:?}"));
    let enumerated = total;
    let merged = run_shards(total, opts, &key, |lo, hi| {
        let mut out = ShardOutcome { examined: 0, witness_count: 0, witnesses: Vec::new() };
        let mut sc = Scratch { t1: vec![], t2: vec![], fpoly: vec![], h: vec![], acc: vec![], base: vec![] };
        for (bi, block) in plan.blocks.iter().enumerate() {
            let (start, end) = (offsets[bi], offsets[bi] + block.size());
            if end <= lo || start >= hi {
                continue;
            }
            let (l, r) = (lo.max(start) - start, hi.min(end) - start);
            if scan_block(f, &plan, block, start, l, r, opts, &mut sc, &mut out) {
                break;
            }
        }
        out
    })?;
    let mut witness_fields = Vec::new();
    for w in &merged.witnesses {
        let (a, b) = w.polys();
        let forms = forms_from_ab(f, &a, &b)?;
        if !forms.condition_holds || !forms.logarithmic {
            return Err(Error::Internal(format!("witness {w:?} fails the pair condition")));
        }
        let space = forms.space(f)?;
        let (validation, field) = validate_space_with_extension(&space, (f.k() * 3).min(12))?;
        match validation {
            Validation::Valid(_) => witness_fields.push(field.k()),
            Validation::Invalid(r) => {
                return Err(Error::Internal(format!("witness {w:?} fails {} at {:?}", r.criterion.name(), r.combination)))
            }
        }
    }
    Ok(SpaceSearchResult {
        p: f.p(),
        k: f.k(),
        m,
        normalization: norm,
        verdict: if merged.witness_count > 0 { Verdict::Found } else { Verdict::ExhaustedNone },
        enumerated,
        examined: merged.examined,
        witness_count: merged.witness_count,
        witnesses: merged.witnesses,
        witness_fields,
        elapsed: merged.elapsed,
    })
}

/// Scans local indices `l..r` of one block (B outer, A inner). Returns true
/// when the shard should stop.
#[allow(clippy::too_many_arguments)]
fn scan_block(
    f: &Field,
    plan: &Plan,
    block: &Block,
    start: u64,
    l: u64,
    r: u64,
    opts: &SearchOptions,
    sc: &mut Scratch,
    out: &mut ShardOutcome<PairWitness>,
) -> bool {
    let p = f.p() as usize;
    let lambda = block.a_vals.len();
    let deg_f = p * lambda;
    // A-side tables: coefficients, A^p, A'
    let na = block.num_a as usize;
    let a_tab: Vec<(Vec<Fe>, Vec<Fe>, Vec<Fe>)> = (0..na)
        .map(|ia| {
            let a = decode(&block.a_vals, ia as u64, block.e1);
            let ap = Poly::new(a.clone()).pow(f, p as u64);
            let da = Poly::new(a.clone()).derivative(f);
            (a, poly_vec(&ap, deg_f + 1), poly_vec(&da, lambda.max(1)))
        })
        .collect();
    let lead = f.sub(f.pow(block.e1, p as u64), f.mul(block.e1, f.pow(block.e2, p as u64 - 1)));
    let inv_lc = f.inv_nz(lead);
    let mut cur_b = u64::MAX;
    let mut bp1 = Vec::new();
    let mut bp2d = Vec::new();
    let mut bvec = Vec::new();
    for idx in l..r {
        let ib = idx / block.num_a;
        let ia = (idx % block.num_a) as usize;
        if ib != cur_b {
            cur_b = ib;
            bvec = decode(&block.b_vals, ib, block.e2);
            let bpoly = Poly::new(bvec.clone());
            let b_pm2 = bpoly.pow(f, p as u64 - 2);
            bp1 = poly_vec(&b_pm2.mul(f, &bpoly), (p - 1) * lambda + 1);
            let d = b_pm2.mul(f, &bpoly.derivative(f));
            bp2d = poly_vec(&d, deg_f);
        }
        let (a, ap, da) = &a_tab[ia];
        if plan.filter && !scaling_canonical(plan, &a[..lambda], &bvec[..lambda]) {
            continue;
        }
        out.examined += 1;
        // f = A^p - A B^(p-1)
        mul_into(f, a, &bp1, &mut sc.t1);
        sc.fpoly.clear();
        sc.fpoly.extend_from_slice(ap);
        for (i, &x) in sc.t1.iter().enumerate() {
            sc.fpoly[i] = f.sub(sc.fpoly[i], x);
        }
        // f' = -A' B^(p-1) + A B^(p-2) B'
        mul_into(f, da, &bp1, &mut sc.t1);
        mul_into(f, a, &bp2d, &mut sc.t2);
        sc.h.clear();
        sc.h.resize(deg_f, Fe::ZERO);
        for (i, &x) in sc.t2.iter().enumerate().take(deg_f) {
            sc.h[i] = x;
        }
        for (i, &x) in sc.t1.iter().enumerate().take(deg_f) {
            sc.h[i] = f.sub(sc.h[i], x);
        }
        // h^(p-1) mod f
        let mut e = p - 1;
        sc.acc.clear();
        sc.acc.push(Fe::ONE);
        sc.base.clear();
        sc.base.extend_from_slice(&sc.h);
        let mut first = true;
        while e > 0 {
            if e & 1 == 1 {
                if first {
                    sc.acc.clear();
                    sc.acc.extend_from_slice(&sc.base);
                    first = false;
                } else {
                    mul_into(f, &sc.acc, &sc.base, &mut sc.t1);
                    reduce(f, &mut sc.t1, &sc.fpoly, inv_lc);
                    std::mem::swap(&mut sc.acc, &mut sc.t1);
                }
            }
            e >>= 1;
            if e > 0 {
                mul_into(f, &sc.base, &sc.base, &mut sc.t1);
                reduce(f, &mut sc.t1, &sc.fpoly, inv_lc);
                std::mem::swap(&mut sc.base, &mut sc.t1);
            }
        }
        if !is_one(&sc.acc) {
            continue;
        }
        let (pa, pb) = (Poly::new(a.clone()), Poly::new(bvec.clone()));
        let full = forms_from_ab(f, &pa, &pb).map(|x| x.logarithmic).unwrap_or(false);
        if !full {
            continue;
        }
        out.witness_count += 1;
        if out.witnesses.len() < opts.max_witnesses {
            let w = PairWitness { a: pa.coeffs().iter().map(|x| x.0).collect(), b: pb.coeffs().iter().map(|x| x.0).collect() };
            out.witnesses.push((start + idx, w));
        }
        if opts.mode == SearchMode::FindOne {
            return true;
        }
    }
    false
}

/// Index count of the normalized enumeration, used to gate long runs.
pub fn space_search_size(f: &Field, m: usize) -> u64 {
    let p = f.p() as usize;
    if (m + 1) % p != 0 {
        return 0;
    }
    build_plan(f, (m + 1) / p, Normalization::Full).blocks.iter().map(|b| b.size()).sum()
}

/// Enumerations larger than this only run with the long-run flag.
pub const LONG_RUN_THRESHOLD: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowVerdict {
    Found,
    ExhaustedNone,
    /// Some field was skipped because it needs the long-run flag.
    Incomplete,
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldRun {
    pub k: u32,
    /// `None` when skipped.
    pub verdict: Option<Verdict>,
    pub enumerated: u64,
    pub examined: u64,
    pub witness: Option<PairWitness>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExistenceRow {
    pub m_plus_1: usize,
    pub verdict: RowVerdict,
    pub fields: Vec<FieldRun>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExistenceReport {
    pub p: u32,
    pub k_max: u32,
    pub long_run: bool,
    pub scope: String,
    pub rows: Vec<ExistenceRow>,
}

impl ExistenceReport {
    pub fn row(&self, m_plus_1: usize) -> Option<&ExistenceRow> {
        self.rows.iter().find(|r| r.m_plus_1 == m_plus_1)
    }
}

/// For `m + 1 in {p, 2p, 3p}` and each `k <= k_max`, searches `F_{p^k}` for a
/// two-dimensional space with `m + 1` poles. A row is `found` if some field
/// has a witness and `exhausted_none` if every field was exhausted; the
/// verdicts say nothing about fields beyond `F_{p^k_max}`.
pub fn theorem29_verify(p: u32, k_max: u32, long_run: bool, opts: &SearchOptions) -> Result<ExistenceReport> {
    ensure!(crate::field::is_prime(p), InvalidParameter, "p = {p} is not prime");
    ensure!(p != 2, Precondition, "p = 2 is excluded (two-dimensional spaces exist for every even m + 1)");
    ensure!(k_max >= 1, InvalidParameter, "k_max must be at least 1");
    let mut rows = Vec::new();
    for mult in 1..=3usize {
        let m1 = mult * p as usize;
        let mut fields = Vec::new();
        for k in 1..=k_max {
            let f = Field::new(p, k)?;
            let size = space_search_size(&f, m1 - 1);
            if size > LONG_RUN_THRESHOLD && !long_run {
                fields.push(FieldRun { k, verdict: None, enumerated: size, examined: 0, witness: None, elapsed: Duration::ZERO });
                continue;
            }
            let mut o = opts.clone();
            o.mode = SearchMode::FindOne;
            o.checkpoint = None;
            let r = space_search_dim2(&f, m1 - 1, Normalization::Full, &o)?;
            fields.push(FieldRun {
                k,
                verdict: Some(r.verdict),
                enumerated: r.enumerated,
                examined: r.examined,
                witness: r.witnesses.first().cloned(),
                elapsed: r.elapsed,
            });
        }
        let verdict = if fields.iter().any(|x| x.verdict == Some(Verdict::Found)) {
            RowVerdict::Found
        } else if fields.iter().all(|x| x.verdict == Some(Verdict::ExhaustedNone)) {
            RowVerdict::ExhaustedNone
        } else {
            RowVerdict::Incomplete
        };
        rows.push(ExistenceRow { m_plus_1: m1, verdict, fields });
    }
    Ok(ExistenceReport {
        p,
        k_max,
        long_run,
        scope: format!("verdicts are relative to the searched fields F_{p}^k with k <= {k_max}"),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(mode: SearchMode) -> SearchOptions {
        SearchOptions { mode, ..Default::default() }
    }

    #[test]
    fn hurwitz_all_ones() {
        let f = Field::new(5, 1).unwrap();
        let d = HurwitzDatum::new(5, vec![1; 5]).unwrap();
        let r = hurwitz_search(&f, &d, &opts(SearchMode::FindOne)).unwrap();
        assert_eq!(r.verdict, Verdict::Found);
        let mut pts = r.witnesses[0].clone();
        pts.sort();
        assert_eq!(pts, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn congruence_matches_pair_condition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f = Field::new(3, 2).unwrap();
        for _ in 0..300 {
            let a = Poly::new((0..3).map(|_| Fe(rng.gen_range(0..9))).collect());
            let b = Poly::new((0..3).map(|_| Fe(rng.gen_range(0..9))).collect());
            if a.deg() < 1 {
                continue;
            }
            assert_eq!(pair_congruence(&f, &a, &b), crate::space::pair_condition(&f, &a, &b));
        }
    }

    #[test]
    fn subspace_counts() {
        // Gaussian binomial [k choose 2]_p
        for (p, k, expect) in [(3, 2, 1), (3, 3, 13), (2, 3, 7), (2, 4, 35), (5, 2, 1)] {
            let f = Field::new(p, k).unwrap();
            assert_eq!(subspaces(&f).len(), expect);
        }
    }

    #[test]
    fn p3_six_poles_found_over_f9() {
        let f = Field::new(3, 2).unwrap();
        let r = space_search_dim2(&f, 5, Normalization::Full, &opts(SearchMode::FindOne)).unwrap();
        assert_eq!(r.verdict, Verdict::Found);
    }
}
