//! Quadratic Assignment Procedure: Pearson correlation between two
//! node-aligned tie matrices, with a permutation null built by relabeling
//! rows and columns of the second matrix jointly.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::WeightedGraph;

/// Largest node count enumerated exhaustively in [`QapMode::Auto`]
/// (8! = 40320 relabelings).
pub const EXHAUSTIVE_MAX_NODES: usize = 8;

const CHUNK: usize = 256;
// |r| within this of |r_obs| counts as "at least as extreme"
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    #[default]
    TwoSided,
    Greater,
    Less,
}

impl std::str::FromStr for Tail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" | "two_sided" => Ok(Self::TwoSided),
            "greater" => Ok(Self::Greater),
            "less" => Ok(Self::Less),
            other => Err(Error::InvalidConfig(format!("unknown tail `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    None,
    Log1p,
    Rank,
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "log1p" => Ok(Self::Log1p),
            "rank" => Ok(Self::Rank),
            other => Err(Error::InvalidConfig(format!("unknown transform `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QapMode {
    /// Exhaustive for up to [`EXHAUSTIVE_MAX_NODES`] nodes, Monte Carlo above.
    #[default]
    Auto,
    Exhaustive,
    MonteCarlo,
}

impl std::str::FromStr for QapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "exhaustive" => Ok(Self::Exhaustive),
            "monte-carlo" | "monte_carlo" => Ok(Self::MonteCarlo),
            other => Err(Error::InvalidConfig(format!("unknown QAP mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QapOptions {
    pub n_permutations: usize,
    pub seed: u64,
    pub tail: Tail,
    pub transform: Transform,
    pub mode: QapMode,
}

impl Default for QapOptions {
    fn default() -> Self {
        QapOptions {
            n_permutations: 1000,
            seed: 0,
            tail: Tail::TwoSided,
            transform: Transform::None,
            mode: QapMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QapResult {
    pub r_observed: f64,
    /// Relabelings evaluated; in exhaustive mode this is `n!`, identity included.
    pub n_permutations: usize,
    pub p_value: f64,
    pub seed: u64,
    pub n_nodes: usize,
    pub tail: Tail,
    pub transform: Transform,
    pub exhaustive: bool,
    pub null_mean: f64,
    pub null_sd: f64,
}

/// Centered data shared by every permuted correlation.
struct Prepared {
    n: usize,
    // centered upper triangle of `a`, row-major
    a: Vec<f64>,
    // centered full matrix of `b`
    b: Vec<f64>,
    denom: f64,
}

impl Prepared {
    fn new(a: &WeightedGraph, b: &WeightedGraph, transform: Transform) -> Result<Self> {
        if a.nodes() != b.nodes() {
            return Err(Error::NotAligned);
        }
        let n = a.len();
        let ua = apply_transform(&a.upper_triangle(), transform);
        let ub = apply_transform(&b.upper_triangle(), transform);
        let (ma, mb) = (mean(&ua), mean(&ub));
        let a_c: Vec<f64> = ua.iter().map(|x| x - ma).collect();
        let mut b_c = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                b_c[i * n + j] = ub[k] - mb;
                b_c[j * n + i] = ub[k] - mb;
                k += 1;
            }
        }
        let sa: f64 = a_c.iter().map(|x| x * x).sum();
        let sb: f64 = ub.iter().map(|y| (y - mb) * (y - mb)).sum();
        if ua.is_empty() || sa == 0.0 {
            return Err(Error::ZeroVariance("first matrix"));
        }
        if sb == 0.0 {
            return Err(Error::ZeroVariance("second matrix"));
        }
        Ok(Prepared {
            n,
            a: a_c,
            b: b_c,
            denom: (sa * sb).sqrt(),
        })
    }

    /// Correlation of `a` with `b` relabeled so node `i` takes `perm[i]`'s ties.
    fn r(&self, perm: &[usize]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        let mut k = 0;
        for i in 0..n {
            let row = &self.b[perm[i] * n..(perm[i] + 1) * n];
            for j in (i + 1)..n {
                s += self.a[k] * row[perm[j]];
                k += 1;
            }
        }
        (s / self.denom).clamp(-1.0, 1.0)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn apply_transform(values: &[f64], transform: Transform) -> Vec<f64> {
    match transform {
        Transform::None => values.to_vec(),
        Transform::Log1p => values.iter().map(|v| v.ln_1p()).collect(),
        Transform::Rank => average_ranks(values),
    }
}

/// 1-based ranks, ties sharing their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation over the off-diagonal upper triangle.
pub fn matrix_pearson(a: &WeightedGraph, b: &WeightedGraph) -> Result<f64> {
    let prep = Prepared::new(a, b, Transform::None)?;
    let identity: Vec<usize> = (0..prep.n).collect();
    Ok(prep.r(&identity))
}

fn is_extreme(r: f64, observed: f64, tail: Tail) -> bool {
    match tail {
        Tail::TwoSided => r.abs() >= observed.abs() - TIE_TOLERANCE,
        Tail::Greater => r >= observed - TIE_TOLERANCE,
        Tail::Less => r <= observed + TIE_TOLERANCE,
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    count: usize,
    extreme: usize,
    sum: f64,
    sum_sq: f64,
}

impl Tally {
    fn add(&mut self, r: f64, observed: f64, tail: Tail) {
        self.count += 1;
        self.extreme += usize::from(is_extreme(r, observed, tail));
        self.sum += r;
        self.sum_sq += r * r;
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.count += other.count;
        self.extreme += other.extreme;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }
}

/// Rearranges `v` into its lexicographic successor; false at the last.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn exhaustive(prep: &Prepared, observed: f64, tail: Tail, exec: Exec) -> Tally {
    let n = prep.n;
    // one branch per choice of the first image
    exec.map_range(n, |first| {
        let mut rest: Vec<usize> = (0..n).filter(|&x| x != first).collect();
        let mut perm = vec![0; n];
        let mut tally = Tally::default();
        loop {
            perm[0] = first;
            perm[1..].copy_from_slice(&rest);
            tally.add(prep.r(&perm), observed, tail);
            if !next_permutation(&mut rest) {
                break;
            }
        }
        tally
    })
    .into_iter()
    .fold(Tally::default(), Tally::merge)
}

fn monte_carlo(prep: &Prepared, observed: f64, opts: &QapOptions, exec: Exec) -> Tally {
    let n = prep.n;
    let chunks = opts.n_permutations.div_ceil(CHUNK);
    exec.map_range(chunks, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        let draws = CHUNK.min(opts.n_permutations - k * CHUNK);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tally = Tally::default();
        for _ in 0..draws {
            // uniform over all n! relabelings, identity included, so the
            // estimate targets the exhaustive p
            perm.shuffle(&mut rng);
            tally.add(prep.r(&perm), observed, opts.tail);
        }
        tally
    })
    .into_iter()
    .fold(Tally::default(), Tally::merge)
}

pub fn qap_correlation(a: &WeightedGraph, b: &WeightedGraph, opts: QapOptions) -> Result<QapResult> {
    qap_correlation_with(a, b, opts, Exec::default())
}

/// QAP correlation test. Monte Carlo draws are split into fixed chunks,
/// each with its own ChaCha stream, so results do not depend on the
/// number of workers.
pub fn qap_correlation_with(a: &WeightedGraph, b: &WeightedGraph, opts: QapOptions, exec: Exec) -> Result<QapResult> {
    if opts.n_permutations == 0 {
        return Err(Error::InvalidConfig("n_permutations must be at least 1".into()));
    }
    let prep = Prepared::new(a, b, opts.transform)?;
    let n = prep.n;
    let identity: Vec<usize> = (0..n).collect();
    let observed = prep.r(&identity);
    let use_exhaustive = match opts.mode {
        QapMode::Auto => n <= EXHAUSTIVE_MAX_NODES,
        QapMode::Exhaustive => {
            if n > 10 {
                return Err(Error::InvalidConfig(format!(
                    "exhaustive QAP over {n}! relabelings is impractical"
                )));
            }
            true
        }
        QapMode::MonteCarlo => {
            if n < 3 {
                return Err(Error::InvalidConfig("Monte Carlo QAP needs at least 3 nodes".into()));
            }
            false
        }
    };
    let (tally, p_value) = if use_exhaustive {
        let t = exhaustive(&prep, observed, opts.tail, exec);
        (t, t.extreme as f64 / t.count as f64)
    } else {
        let t = monte_carlo(&prep, observed, &opts, exec);
        (t, (1 + t.extreme) as f64 / (1 + t.count) as f64)
    };
    let null_mean = tally.sum / tally.count as f64;
    let null_var = (tally.sum_sq / tally.count as f64 - null_mean * null_mean).max(0.0);
    Ok(QapResult {
        r_observed: observed,
        n_permutations: tally.count,
        p_value,
        seed: opts.seed,
        n_nodes: n,
        tail: opts.tail,
        transform: opts.transform,
        exhaustive: use_exhaustive,
        null_mean,
        null_sd: null_var.sqrt(),
    })
}
