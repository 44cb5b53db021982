//! Single-path Monte Carlo.
//!
//! Each loop samples a chessboard path with a per-step flip probability,
//! builds its entwined loop and walks it, depositing `+1` on every bond
//! crossed forward in time and `-1` on every bond crossed backward. Deposits
//! are keyed by the bond's upper site, its forward-time space direction and
//! the channel (original or twin) the bond belongs to.
//!
//! Loop `i` draws its randomness from its own ChaCha stream derived from
//! `(seed, i)`, so the result does not depend on how loop indices are split
//! across workers.

use std::io::{self, BufRead, Write};
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::LightCone;
use crate::error::{Error, Result};
use crate::path::{Direction, Path, Site};
use crate::twin::{Channel, EntwinedLoop, Entwiner, TimeDir};

/// Largest base path length accepted by [`expected_lattice`].
pub const EXPECTATION_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Length of every sampled base path.
    pub n_steps: usize,
    /// Probability of reversing direction at each step after the first.
    pub corner_prob: f64,
    pub loops: u64,
    pub seed: u64,
    pub workers: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 1 {
            return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.corner_prob) {
            return Err(Error::InvalidParameter(format!(
                "corner probability must lie in [0, 1], got {}",
                self.corner_prob
            )));
        }
        if self.loops < 1 {
            return Err(Error::InvalidParameter("loops must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Corner weight realised by the sampler, `p / (1 - p)`.
    pub fn effective_corner_weight(&self) -> f64 {
        effective_corner_weight(self.corner_prob)
    }
}

/// `p / (1 - p)`: the ratio of the probabilities of turning and going straight.
pub fn effective_corner_weight(corner_prob: f64) -> f64 {
    corner_prob / (1.0 - corner_prob)
}

#[inline]
fn slot(sigma: Direction, channel: Channel) -> usize {
    let d = match sigma {
        Direction::Minus => 0,
        Direction::Plus => 1,
    };
    let c = match channel {
        Channel::A => 0,
        Channel::B => 1,
    };
    2 * d + c
}

/// Every `(σ, channel)` pair in CSV order.
const CELL_ORDER: [(Direction, Channel); 4] = [
    (Direction::Minus, Channel::A),
    (Direction::Minus, Channel::B),
    (Direction::Plus, Channel::A),
    (Direction::Plus, Channel::B),
];

/// Net signed deposits accumulated over completed loops.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeLattice {
    config: SimConfig,
    loops_completed: u64,
    max_t: usize,
    cone: LightCone,
    counts: Vec<[i64; 4]>,
}

impl ChargeLattice {
    /// An empty lattice able to hold every loop `config` can produce.
    pub fn new(config: SimConfig) -> ChargeLattice {
        // the even-corner extension can at most double the path
        let cone = LightCone::new(2 * config.n_steps);
        ChargeLattice {
            config,
            loops_completed: 0,
            max_t: 0,
            cone,
            counts: vec![[0; 4]; cone.len()],
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn loops_completed(&self) -> u64 {
        self.loops_completed
    }

    /// Largest time slice touched so far.
    pub fn max_t(&self) -> usize {
        self.max_t
    }

    /// Largest time slice any loop could touch.
    pub fn capacity_t(&self) -> usize {
        self.cone.t_max()
    }

    pub fn count(&self, site: Site, sigma: Direction, channel: Channel) -> i64 {
        self.cone
            .index(site)
            .map_or(0, |i| self.counts[i][slot(sigma, channel)])
    }

    /// Sum of every deposit in slice `t`.
    pub fn slice_total(&self, t: usize) -> i64 {
        LightCone::slice(t)
            .filter_map(|s| self.cone.index(s))
            .map(|i| self.counts[i].iter().sum::<i64>())
            .sum()
    }

    /// True when every slice sums to zero, as it must for closed loops.
    pub fn is_neutral(&self) -> bool {
        (1..=self.capacity_t()).all(|t| self.slice_total(t) == 0)
    }

    /// Nonzero-or-not cells `(site, σ, channel, count)` for `1 <= t <= max_t`,
    /// ordered by `(t, x, σ, channel)`.
    pub fn cells(&self) -> impl Iterator<Item = (Site, Direction, Channel, i64)> + '_ {
        (1..=self.max_t).flat_map(LightCone::slice).flat_map(move |site| {
            let i = self.cone.index_unchecked(site.x, site.t);
            CELL_ORDER
                .iter()
                .map(move |&(d, c)| (site, d, c, self.counts[i][slot(d, c)]))
        })
    }

    /// Nonzero counts as CSV (`t,x,sigma,channel,count`).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,sigma,channel,count")?;
        for (site, d, c, n) in self.cells().filter(|cell| cell.3 != 0) {
            writeln!(out, "{},{},{},{},{}", site.t, site.x, d.signed_label(), c, n)?;
        }
        Ok(())
    }

    pub fn metadata(&self) -> SimMetadata {
        SimMetadata {
            n_steps: self.config.n_steps,
            corner_prob: self.config.corner_prob,
            loops: self.loops_completed,
            seed: self.config.seed,
            workers: self.config.workers,
            max_t: self.max_t,
        }
    }

    /// Rebuilds a lattice from its CSV export and metadata sidecar.
    pub fn read_csv<R: BufRead>(input: R, meta: &SimMetadata) -> Result<ChargeLattice> {
        let config = SimConfig {
            n_steps: meta.n_steps,
            corner_prob: meta.corner_prob,
            loops: meta.loops,
            seed: meta.seed,
            workers: meta.workers,
        };
        config.validate()?;
        let mut lattice = ChargeLattice::new(config);
        lattice.loops_completed = meta.loops;
        lattice.max_t = meta.max_t;
        if meta.max_t > lattice.capacity_t() {
            return Err(Error::InvalidParameter(format!(
                "max_t {} exceeds what {} steps can reach",
                meta.max_t, meta.n_steps
            )));
        }

        let bad = |line: usize, why: &str| Error::InvalidParameter(format!("counts line {line}: {why}"));
        let mut lines = input.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim() == "t,x,sigma,channel,count" => {}
            _ => return Err(bad(1, "missing header t,x,sigma,channel,count")),
        }
        for (no, line) in lines {
            let line = line.map_err(|e| bad(no + 1, &e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            let [t, x, sigma, channel, count] = fields[..] else {
                return Err(bad(no + 1, "expected 5 fields"));
            };
            let num = |s: &str| s.parse::<i64>().map_err(|_| bad(no + 1, "not an integer"));
            let site = Site::new(num(x)?, num(t)?);
            let sigma = Direction::from_sign(num(sigma)?).ok_or_else(|| bad(no + 1, "sigma must be +1 or -1"))?;
            let channel = match channel {
                "A" => Channel::A,
                "B" => Channel::B,
                _ => return Err(bad(no + 1, "channel must be A or B")),
            };
            let i = lattice
                .cone
                .index(site)
                .filter(|_| site.t as usize <= meta.max_t)
                .ok_or_else(|| bad(no + 1, "site outside the lattice"))?;
            lattice.counts[i][slot(sigma, channel)] = num(count)?;
        }
        Ok(lattice)
    }
}

/// Run metadata written next to the counts CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimMetadata {
    pub n_steps: usize,
    pub corner_prob: f64,
    pub loops: u64,
    pub seed: u64,
    pub workers: usize,
    pub max_t: usize,
}

/// Random stream for loop `index`.
pub fn loop_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Samples an `n`-step path with first step `+` and per-step flip
/// probability `corner_prob`.
pub fn sample_path<R: Rng + ?Sized>(n: usize, corner_prob: f64, rng: &mut R) -> Path {
    let mut steps = Vec::with_capacity(n);
    sample_steps(n, corner_prob, rng, &mut steps);
    Path::new(steps).expect("n >= 1")
}

fn sample_steps<R: Rng + ?Sized>(n: usize, corner_prob: f64, rng: &mut R, out: &mut Vec<Direction>) {
    assert!(n >= 1, "paths need at least one step");
    out.clear();
    let mut d = Direction::Plus;
    out.push(d);
    for _ in 1..n {
        if rng.random_bool(corner_prob) {
            d = d.flip();
        }
        out.push(d);
    }
}

/// Walks `lp` from the origin and records one deposit per move.
pub fn deposit(lp: &EntwinedLoop, lattice: &mut ChargeLattice) {
    let (mut x, mut t) = (0i64, 0i64);
    let mut top = 0i64;
    for mv in lp.moves() {
        let (nx, nt) = (x + mv.space.sign(), t + mv.time.sign());
        let (ux, ut) = match mv.time {
            TimeDir::Forward => (nx, nt),
            TimeDir::Backward => (x, t),
        };
        let i = lattice.cone.index_unchecked(ux, ut);
        lattice.counts[i][slot(mv.bond_dir(), mv.channel)] += mv.time.sign();
        top = top.max(ut);
        x = nx;
        t = nt;
    }
    debug_assert_eq!((x, t), (0, 0), "loop not closed");
    lattice.max_t = lattice.max_t.max(top as usize);
    lattice.loops_completed += 1;
}

/// Runs the loops with indices in `range`.
pub fn run_shard(config: &SimConfig, range: Range<u64>) -> ChargeLattice {
    let mut lattice = ChargeLattice::new(*config);
    let mut steps = Vec::with_capacity(config.n_steps);
    let mut entwiner = Entwiner::new();
    let mut lp = EntwinedLoop::default();
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    for index in range {
        let mut rng = base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        sample_steps(config.n_steps, config.corner_prob, &mut rng, &mut steps);
        entwiner.build(&steps, &mut lp);
        deposit(&lp, &mut lattice);
    }
    lattice
}

/// Block partition of `0..loops` into `workers` contiguous ranges.
pub fn partition(loops: u64, workers: usize) -> Vec<Range<u64>> {
    let w = workers as u64;
    (0..w).map(|k| loops * k / w..loops * (k + 1) / w).collect()
}

/// Runs `config.loops` loops on `config.workers` threads.
pub fn run(config: &SimConfig) -> Result<ChargeLattice> {
    config.validate()?;
    let ranges = partition(config.loops, config.workers);
    let shards: Vec<ChargeLattice> = if ranges.len() == 1 {
        vec![run_shard(config, ranges[0].clone())]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .into_iter()
                .map(|r| scope.spawn(move || run_shard(config, r)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    };
    shards
        .into_iter()
        .try_fold(ChargeLattice::new(*config), |acc, s| merge(&acc, &s))
}

/// Pointwise sum of two lattices produced under the same configuration.
pub fn merge(a: &ChargeLattice, b: &ChargeLattice) -> Result<ChargeLattice> {
    if a.config != b.config {
        return Err(Error::ConfigMismatch);
    }
    let mut out = a.clone();
    for (acc, v) in out.counts.iter_mut().zip(&b.counts) {
        for k in 0..4 {
            acc[k] += v[k];
        }
    }
    out.loops_completed += b.loops_completed;
    out.max_t = a.max_t.max(b.max_t);
    Ok(out)
}

/// Exact per-loop expectation of the deposits, by enumeration of every base path.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedLattice {
    n_steps: usize,
    corner_prob: f64,
    max_t: usize,
    cone: LightCone,
    /// Expected net deposit per loop.
    mean: Vec<[f64; 4]>,
    /// Probability that a loop crosses the cell's bond at all.
    crossing: Vec<[f64; 4]>,
}

impl ExpectedLattice {
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn corner_prob(&self) -> f64 {
        self.corner_prob
    }

    pub fn max_t(&self) -> usize {
        self.max_t
    }

    pub fn mean(&self, site: Site, sigma: Direction, channel: Channel) -> f64 {
        self.cone
            .index(site)
            .map_or(0.0, |i| self.mean[i][slot(sigma, channel)])
    }

    pub fn crossing(&self, site: Site, sigma: Direction, channel: Channel) -> f64 {
        self.cone
            .index(site)
            .map_or(0.0, |i| self.crossing[i][slot(sigma, channel)])
    }

    /// `(site, σ, channel, mean)` for `1 <= t <= max_t` in CSV order.
    pub fn cells(&self) -> impl Iterator<Item = (Site, Direction, Channel, f64)> + '_ {
        (1..=self.max_t).flat_map(LightCone::slice).flat_map(move |site| {
            let i = self.cone.index_unchecked(site.x, site.t);
            CELL_ORDER
                .iter()
                .map(move |&(d, c)| (site, d, c, self.mean[i][slot(d, c)]))
        })
    }

    /// Sum of expected deposits in slice `t`.
    pub fn slice_total(&self, t: usize) -> f64 {
        LightCone::slice(t)
            .filter_map(|s| self.cone.index(s))
            .map(|i| self.mean[i].iter().sum::<f64>())
            .sum()
    }

    /// Nonzero expectations as CSV (`t,x,sigma,channel,mean`).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,sigma,channel,mean")?;
        for (site, d, c, m) in self.cells().filter(|cell| cell.3 != 0.0) {
            writeln!(out, "{},{},{},{},{:.16e}", site.t, site.x, d.signed_label(), c, m)?;
        }
        Ok(())
    }
}

/// Enumerates all `2^(n-1)` base paths and averages their deposit patterns
/// with the sampler's path probabilities.
pub fn expected_lattice(n: usize, corner_prob: f64) -> Result<ExpectedLattice> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n > EXPECTATION_LIMIT {
        return Err(Error::Guard {
            what: "expected_lattice n",
            requested: n,
            limit: EXPECTATION_LIMIT,
        });
    }
    if !(0.0..=1.0).contains(&corner_prob) {
        return Err(Error::InvalidParameter(format!(
            "corner probability must lie in [0, 1], got {corner_prob}"
        )));
    }
    let cone = LightCone::new(2 * n);
    let mut out = ExpectedLattice {
        n_steps: n,
        corner_prob,
        max_t: 0,
        cone,
        mean: vec![[0.0; 4]; cone.len()],
        crossing: vec![[0.0; 4]; cone.len()],
    };
    let mut entwiner = Entwiner::new();
    let mut lp = EntwinedLoop::default();
    let mut steps = Vec::with_capacity(n);
    for code in 0u64..(1u64 << (n - 1)) {
        steps.clear();
        let mut d = Direction::Plus;
        steps.push(d);
        let mut corners = 0;
        for k in 0..n - 1 {
            if code >> k & 1 == 1 {
                d = d.flip();
                corners += 1;
            }
            steps.push(d);
        }
        let prob = corner_prob.powi(corners) * (1.0 - corner_prob).powi(n as i32 - 1 - corners);
        if prob == 0.0 {
            continue;
        }
        entwiner.build(&steps, &mut lp);
        for seg in lp.segments() {
            let upper = if seg.to.t > seg.from.t { seg.to } else { seg.from };
            let i = cone.index_unchecked(upper.x, upper.t);
            let k = slot(seg.mv.bond_dir(), seg.mv.channel);
            out.mean[i][k] += prob * seg.mv.time.sign() as f64;
            out.crossing[i][k] += prob;
            out.max_t = out.max_t.max(upper.t as usize);
        }
    }
    Ok(out)
}
