//! Random directed TSP instances, tour ranking and exact cost statistics.
//!
//! Tours start at city 0, so an instance on `n` cities has `(n-1)!` tours.
//! A tour is ranked by the lexicographic position of its suffix
//! `visits[1..]` among the permutations of `{1, .., n-1}`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Tolerance for the decomposition-vs-enumeration cross check of the second
/// moment.
pub const SECOND_MOMENT_REL_TOL: f64 = 1e-10;

const ENUM_CHUNK: usize = 4096;

/// Upper limits on exhaustive work, expressed in city counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Largest `n` for which all `(n-1)!` tour costs may be materialized.
    pub max_cost_cities: usize,
    /// Largest `n` for which a full statevector may be allocated.
    pub max_state_cities: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_cost_cities: 11,
            max_state_cities: 10,
        }
    }
}

impl Budget {
    pub fn max_cost_len(&self) -> usize {
        factorial(self.max_cost_cities.saturating_sub(1)).unwrap_or(usize::MAX)
    }

    pub fn max_state_len(&self) -> usize {
        factorial(self.max_state_cities.saturating_sub(1)).unwrap_or(usize::MAX)
    }

    pub fn check_costs(&self, n: usize) -> Result<()> {
        if n > self.max_cost_cities {
            return Err(Error::ResourceLimit {
                what: "tour cost enumeration",
                requested: format!("n = {n}"),
                limit: format!("n <= {}", self.max_cost_cities),
            });
        }
        Ok(())
    }

    pub fn check_state_len(&self, len: usize) -> Result<()> {
        let limit = self.max_state_len();
        if len > limit {
            return Err(Error::ResourceLimit {
                what: "statevector",
                requested: format!("{len} amplitudes"),
                limit: format!("{limit} amplitudes (n <= {})", self.max_state_cities),
            });
        }
        Ok(())
    }
}

pub fn factorial(k: usize) -> Option<usize> {
    (1..=k).try_fold(1usize, |acc, x| acc.checked_mul(x))
}

/// Number of tours `(n-1)!` on `n` cities.
pub fn tour_count(n: usize) -> Result<usize> {
    if n < 3 {
        return Err(Error::invalid(
            "n",
            format!("need at least 3 cities, got {n}"),
        ));
    }
    factorial(n - 1).ok_or_else(|| Error::invalid("n", format!("(n-1)! overflows for n = {n}")))
}

/// Directed cost matrix with the interval its entries were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance {
    n: usize,
    costs: Vec<f64>,
    c1: f64,
    c2: f64,
    seed: u64,
}

impl TspInstance {
    /// Draws every off-diagonal `c_jk` independently and uniformly from
    /// `[c1, c2]`. The row-major draw order makes the matrix a pure function of
    /// the seed.
    pub fn generate(n: usize, c1: f64, c2: f64, seed: u64) -> Result<Self> {
        check_bounds(n, c1, c2)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = c2 - c1;
        let mut costs = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    let u: f64 = rng.gen();
                    costs[j * n + k] = (c1 + width * u).min(c2);
                }
            }
        }
        Ok(TspInstance {
            n,
            costs,
            c1,
            c2,
            seed,
        })
    }

    /// Builds an instance from an explicit matrix. Diagonal entries are
    /// ignored and stored as zero.
    pub fn from_matrix(rows: &[Vec<f64>], c1: f64, c2: f64, seed: u64) -> Result<Self> {
        let n = rows.len();
        check_bounds(n, c1, c2)?;
        let mut costs = vec![0.0; n * n];
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(
                    "costs",
                    format!("row {j} has {} entries, expected {n}", row.len()),
                ));
            }
            for (k, &c) in row.iter().enumerate() {
                if j == k {
                    continue;
                }
                if !(c1..=c2).contains(&c) {
                    return Err(Error::invalid(
                        "costs",
                        format!("c[{j}][{k}] = {c} outside [{c1}, {c2}]"),
                    ));
                }
                costs[j * n + k] = c;
            }
        }
        Ok(TspInstance {
            n,
            costs,
            c1,
            c2,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn cost(&self, from: usize, to: usize) -> f64 {
        self.costs[from * self.n + to]
    }

    pub fn tour_count(&self) -> usize {
        tour_count(self.n).expect("validated at construction")
    }

    /// Flat text form: a `n c1 c2 seed` header followed by `n` rows of
    /// costs, every real written with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {:.16e} {:.16e} {}",
            self.n, self.c1, self.c2, self.seed
        );
        for j in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|k| format!("{:.16e}", if j == k { 0.0 } else { self.cost(j, k) }))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            reason: "empty input".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: hline + 1,
                reason: format!("header needs `n c1 c2 seed`, got {} fields", fields.len()),
            });
        }
        let parse_err = |line: usize, what: &str| Error::Parse {
            line: line + 1,
            reason: format!("cannot parse {what}"),
        };
        let n: usize = fields[0].parse().map_err(|_| parse_err(hline, "n"))?;
        let c1: f64 = fields[1].parse().map_err(|_| parse_err(hline, "c1"))?;
        let c2: f64 = fields[2].parse().map_err(|_| parse_err(hline, "c2"))?;
        let seed: u64 = fields[3].parse().map_err(|_| parse_err(hline, "seed"))?;
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let (lno, line) = lines.next().ok_or(Error::Parse {
                line: hline + rows.len() + 2,
                reason: format!("expected {n} cost rows, found {}", rows.len()),
            })?;
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| parse_err(lno, "cost")))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if let Some((lno, _)) = lines.next() {
            return Err(Error::Parse {
                line: lno + 1,
                reason: "trailing data after cost matrix".into(),
            });
        }
        TspInstance::from_matrix(&rows, c1, c2, seed)
    }
}

fn check_bounds(n: usize, c1: f64, c2: f64) -> Result<()> {
    tour_count(n)?;
    if !(c1.is_finite() && c2.is_finite()) {
        return Err(Error::invalid("c1/c2", "cost bounds must be finite"));
    }
    if c1 < 0.0 {
        return Err(Error::invalid("c1", format!("must be >= 0, got {c1}")));
    }
    if c2 < c1 {
        return Err(Error::invalid(
            "c2",
            format!("must be >= c1 = {c1}, got {c2}"),
        ));
    }
    Ok(())
}

pub fn generate_instance(n: usize, c1: f64, c2: f64, seed: u64) -> Result<TspInstance> {
    TspInstance::generate(n, c1, c2, seed)
}

/// Rank of a tour among the `(n-1)!` tours of its instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TourIndex(pub usize);

/// A Hamiltonian cycle through all cities, starting (and ending) at city 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tour {
    visits: Vec<usize>,
}

impl Tour {
    pub fn new(visits: Vec<usize>) -> Result<Self> {
        let n = visits.len();
        if n < 3 {
            return Err(Error::invalid(
                "tour",
                format!("need at least 3 cities, got {n}"),
            ));
        }
        if visits[0] != 0 {
            return Err(Error::invalid("tour", "must start at city 0"));
        }
        let mut seen = vec![false; n];
        for &v in &visits {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::invalid(
                    "tour",
                    format!("{visits:?} is not a permutation"),
                ));
            }
        }
        Ok(Tour { visits })
    }

    pub fn visits(&self) -> &[usize] {
        &self.visits
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }
}

pub fn tour_from_index(idx: TourIndex, n: usize) -> Result<Tour> {
    let count = tour_count(n)?;
    if idx.0 >= count {
        return Err(Error::invalid(
            "index",
            format!("{} out of range for {count} tours", idx.0),
        ));
    }
    let mut visits = Vec::with_capacity(n);
    visits.push(0);
    unrank_suffix(idx.0, n, &mut visits);
    Ok(Tour { visits })
}

/// Appends the `rank`-th lexicographic permutation of `1..n` to `out`.
fn unrank_suffix(mut rank: usize, n: usize, out: &mut Vec<usize>) {
    let mut pool: Vec<usize> = (1..n).collect();
    let mut block = factorial(n.saturating_sub(2)).unwrap_or(1);
    for remaining in (1..n).rev() {
        let pick = rank / block;
        rank %= block;
        out.push(pool.remove(pick));
        if remaining > 1 {
            block /= remaining - 1;
        }
    }
}

pub fn index_from_tour(t: &Tour) -> TourIndex {
    let suffix = &t.visits[1..];
    let m = suffix.len();
    let mut rank = 0usize;
    let mut weight = factorial(m.saturating_sub(1)).unwrap_or(1);
    for i in 0..m {
        let smaller = suffix[i + 1..].iter().filter(|&&v| v < suffix[i]).count();
        rank += smaller * weight;
        if m - 1 - i > 0 {
            weight /= m - 1 - i;
        }
    }
    TourIndex(rank)
}

/// Closed-cycle cost, including the return edge to city 0.
pub fn tour_cost(inst: &TspInstance, t: &Tour) -> f64 {
    cycle_cost(inst, &t.visits)
}

#[inline]
fn cycle_cost(inst: &TspInstance, visits: &[usize]) -> f64 {
    let n = visits.len();
    let mut total = 0.0;
    for k in 0..n {
        total += inst.cost(visits[k], visits[(k + 1) % n]);
    }
    total
}

/// Lexicographic successor of `perm` in place; false when `perm` was the
/// last permutation.
fn next_permutation(perm: &mut [usize]) -> bool {
    let len = perm.len();
    if len < 2 {
        return false;
    }
    let mut i = len - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = len - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Costs of all tours in `TourIndex` order, using the default budget.
pub fn enumerate_costs(inst: &TspInstance) -> Result<Vec<f64>> {
    enumerate_costs_with(inst, &Budget::default())
}

pub fn enumerate_costs_with(inst: &TspInstance, budget: &Budget) -> Result<Vec<f64>> {
    budget.check_costs(inst.n)?;
    let n = inst.n;
    let mut out = vec![0.0; inst.tour_count()];
    out.par_chunks_mut(ENUM_CHUNK)
        .enumerate()
        .for_each(|(chunk, slot)| {
            let mut visits = Vec::with_capacity(n);
            visits.push(0);
            unrank_suffix(chunk * ENUM_CHUNK, n, &mut visits);
            for (i, c) in slot.iter_mut().enumerate() {
                if i > 0 {
                    next_permutation(&mut visits[1..]);
                }
                *c = cycle_cost(inst, &visits);
            }
        });
    Ok(out)
}

/// Mean tour cost from the pair sum: every directed edge lies on exactly
/// `(n-2)!` tours, so the mean is `sum_{j != k} c_jk / (n-1)`.
pub fn exact_mean_pairsum(inst: &TspInstance) -> f64 {
    let n = inst.n;
    let mut sum = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j != k {
                sum += inst.cost(j, k);
            }
        }
    }
    sum / (n - 1) as f64
}

/// Mean of the squared tour cost, from edge-pair counting alone.
///
/// Splitting `c(T)^2` into same-edge, head-to-tail adjacent and disjoint
/// edge products gives the weights `(n-2)!`, `2 (n-3)!` and `(n-3)!` over
/// `(n-1)!` tours.
pub fn second_moment_decomposition(inst: &TspInstance) -> Result<f64> {
    let n = inst.n;
    if n < 4 {
        return Err(Error::invalid(
            "n",
            format!("decomposition needs n >= 4, got {n}"),
        ));
    }
    let mut same = 0.0;
    let mut adjacent = 0.0;
    let mut disjoint = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let ab = inst.cost(a, b);
            same += ab * ab;
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                adjacent += ab * inst.cost(b, c);
                for d in 0..n {
                    if d == a || d == b || d == c {
                        continue;
                    }
                    disjoint += ab * inst.cost(c, d);
                }
            }
        }
    }
    let n1 = (n - 1) as f64;
    let n2 = (n - 2) as f64;
    Ok(same / n1 + (2.0 * adjacent + disjoint) / (n1 * n2))
}

/// Second moment by decomposition, cross-checked against enumeration when
/// the instance fits the budget. A disagreement beyond
/// [`SECOND_MOMENT_REL_TOL`] is returned as [`Error::MomentDiscrepancy`].
pub fn exact_second_moment_decomposition(inst: &TspInstance) -> Result<f64> {
    exact_second_moment_decomposition_with(inst, &Budget::default())
}

pub fn exact_second_moment_decomposition_with(inst: &TspInstance, budget: &Budget) -> Result<f64> {
    let decomposition = second_moment_decomposition(inst)?;
    if budget.check_costs(inst.n).is_err() {
        return Ok(decomposition);
    }
    let costs = enumerate_costs_with(inst, budget)?;
    let enumerated = costs.iter().map(|c| c * c).sum::<f64>() / costs.len() as f64;
    let relative = (decomposition - enumerated).abs() / enumerated.abs().max(f64::MIN_POSITIVE);
    if relative > SECOND_MOMENT_REL_TOL {
        return Err(Error::MomentDiscrepancy {
            decomposition,
            enumerated,
            relative,
        });
    }
    Ok(decomposition)
}

/// Membership mask over tour indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TourSet {
    mask: Vec<bool>,
    len: usize,
}

impl TourSet {
    pub fn empty(universe: usize) -> Self {
        TourSet {
            mask: vec![false; universe],
            len: 0,
        }
    }

    pub fn full(universe: usize) -> Self {
        TourSet {
            mask: vec![true; universe],
            len: universe,
        }
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set = TourSet::empty(universe);
        for i in indices {
            if i >= universe {
                return Err(Error::invalid(
                    "target",
                    format!("index {i} outside [0, {universe})"),
                ));
            }
            if !std::mem::replace(&mut set.mask[i], true) {
                set.len += 1;
            }
        }
        Ok(set)
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let len = mask.iter().filter(|&&b| b).count();
        TourSet { mask, len }
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.mask.get(idx).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn fraction(&self) -> f64 {
        if self.mask.is_empty() {
            0.0
        } else {
            self.len as f64 / self.mask.len() as f64
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}
