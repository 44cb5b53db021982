//! Exact chessboard kernel.
//!
//! Every path from the origin contributes `a^R` (with `a = εm` and `R` its
//! corner count). The contributions are binned by `R mod 4`, which makes the
//! real decomposition `K = Φ_R + iΦ_I` a direct readout:
//! `Φ_R = w0 - w2` and `Φ_I = w1 - w3`.
//!
//! [`kernel_table`] computes the bins slice by slice with a transfer-matrix
//! recursion over `(x, final direction, R mod 4)`. [`enumerate_kernel`] sums
//! over every path literally and is kept as an independent oracle.

use std::io::{self, Write};

use num_bigint::BigUint;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cone::LightCone;
use crate::error::{Error, Result};
use crate::path::{Direction, Site};

/// Largest `t_max` accepted by the enumeration backends.
pub const ENUMERATION_LIMIT: usize = 20;

/// Sign convention for the imaginary unit in the corner factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Corner factor `+iεm`.
    #[default]
    Feynman,
    /// Corner factor `-iεm`.
    Gersch,
}

impl Convention {
    fn imaginary_sign(self) -> f64 {
        match self {
            Convention::Feynman => 1.0,
            Convention::Gersch => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub t_max: usize,
    /// Dimensionless weight per corner, `a = εm`.
    pub corner_weight: f64,
    pub convention: Convention,
}

impl KernelParams {
    pub fn new(t_max: usize, corner_weight: f64) -> KernelParams {
        KernelParams {
            t_max,
            corner_weight,
            convention: Convention::Feynman,
        }
    }

    pub fn with_convention(mut self, convention: Convention) -> KernelParams {
        self.convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_max < 1 {
            return Err(Error::InvalidParameter("t_max must be at least 1".into()));
        }
        if !(self.corner_weight >= 0.0 && self.corner_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "corner weight must be finite and nonnegative, got {}",
                self.corner_weight
            )));
        }
        Ok(())
    }
}

/// Weights of the paths ending in one cell, binned by `R mod 4`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KernelCell {
    pub w: [f64; 4],
}

impl KernelCell {
    pub const ZERO: KernelCell = KernelCell { w: [0.0; 4] };

    pub fn new(w: [f64; 4]) -> KernelCell {
        KernelCell { w }
    }

    pub fn phi_components(&self) -> (f64, f64) {
        phi_components(self)
    }

    pub fn signed(&self) -> f64 {
        signed_kernel(self)
    }

    /// Total weight regardless of sign.
    pub fn unsigned(&self) -> f64 {
        self.w.iter().sum()
    }

    /// The cell one corner later: weights scaled by `a`, bins rotated by one.
    #[inline]
    fn turned(&self, a: f64) -> KernelCell {
        let w = self.w;
        KernelCell {
            w: [a * w[3], a * w[0], a * w[1], a * w[2]],
        }
    }

    #[inline]
    fn add(&mut self, other: &KernelCell) {
        for (acc, v) in self.w.iter_mut().zip(other.w) {
            *acc += v;
        }
    }
}

/// `(Φ_R, Φ_I) = (w0 - w2, w1 - w3)`.
pub fn phi_components(cell: &KernelCell) -> (f64, f64) {
    let w = cell.w;
    (w[0] - w[2], w[1] - w[3])
}

/// Colour-signed weight: blue (`R mod 4 ∈ {0,1}`) counts `+`, red counts `-`.
/// Equal to `Φ_R + Φ_I`.
pub fn signed_kernel(cell: &KernelCell) -> f64 {
    let w = cell.w;
    (w[0] - w[2]) + (w[1] - w[3])
}

#[inline]
fn dir_slot(d: Direction) -> usize {
    match d {
        Direction::Minus => 0,
        Direction::Plus => 1,
    }
}

/// Kernel bins for every reachable `(site, final direction)` with `1 <= t <= t_max`,
/// for paths whose first step is `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    params: KernelParams,
    start: Direction,
    cone: LightCone,
    cells: Vec<[KernelCell; 2]>,
    reachable: Vec<[bool; 2]>,
}

impl KernelTable {
    fn empty(params: KernelParams, start: Direction) -> KernelTable {
        let cone = LightCone::new(params.t_max);
        KernelTable {
            params,
            start,
            cone,
            cells: vec![[KernelCell::ZERO; 2]; cone.len()],
            reachable: vec![[false; 2]; cone.len()],
        }
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn start(&self) -> Direction {
        self.start
    }

    pub fn t_max(&self) -> usize {
        self.params.t_max
    }

    /// Bins at `(site, end)`; zero outside the cone or for unreachable cells.
    pub fn cell(&self, site: Site, end: Direction) -> KernelCell {
        match self.cone.index(site) {
            Some(i) => self.cells[i][dir_slot(end)],
            None => KernelCell::ZERO,
        }
    }

    /// Whether at least one path with the table's first step ends in this cell.
    pub fn is_reachable(&self, site: Site, end: Direction) -> bool {
        self.cone
            .index(site)
            .is_some_and(|i| self.reachable[i][dir_slot(end)])
    }

    /// Bins for paths starting in direction `start`, using the mirror
    /// symmetry `x -> -x`, `σ -> -σ` when `start` differs from the table's.
    pub fn cell_for_start(&self, site: Site, end: Direction, start: Direction) -> KernelCell {
        if start == self.start {
            self.cell(site, end)
        } else {
            self.cell(Site::new(-site.x, site.t), end.flip())
        }
    }

    /// Reachable cells ordered by `(t, x, end)` with `-1` before `+1`.
    pub fn cells(&self) -> impl Iterator<Item = (Site, Direction, KernelCell)> + '_ {
        self.cone.sites().flat_map(move |site| {
            let i = self.cone.index_unchecked(site.x, site.t);
            Direction::BOTH
                .into_iter()
                .filter(move |&d| self.reachable[i][dir_slot(d)])
                .map(move |d| (site, d, self.cells[i][dir_slot(d)]))
        })
    }

    /// Reachable cells of one slice.
    pub fn slice(&self, t: usize) -> impl Iterator<Item = (Site, Direction, KernelCell)> + '_ {
        self.cells().filter(move |(s, _, _)| s.t == t as i64)
    }

    /// Complex kernel under the table's convention.
    pub fn complex(&self, site: Site, end: Direction) -> Complex64 {
        complex_kernel(self, site, end)
    }

    /// Writes the reachable cells of the given slices as CSV
    /// (`t,x,end_dir,w0,w1,w2,w3,phi_r,phi_i,g`).
    pub fn write_csv<W: Write>(&self, mut out: W, slices: Option<usize>) -> io::Result<()> {
        writeln!(out, "t,x,end_dir,w0,w1,w2,w3,phi_r,phi_i,g")?;
        for (site, end, cell) in self.cells() {
            if slices.is_some_and(|t| site.t != t as i64) {
                continue;
            }
            let (phi_r, phi_i) = cell.phi_components();
            let w = cell.w;
            writeln!(
                out,
                "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                site.t,
                site.x,
                end.signed_label(),
                w[0],
                w[1],
                w[2],
                w[3],
                phi_r,
                phi_i,
                cell.signed()
            )?;
        }
        Ok(())
    }
}

/// Transfer-matrix evaluation of the kernel.
pub fn kernel_table(params: KernelParams, start: Direction) -> Result<KernelTable> {
    params.validate()?;
    let a = params.corner_weight;
    let mut table = KernelTable::empty(params, start);
    let cone = table.cone;

    let first = cone.index_unchecked(start.sign(), 1);
    table.cells[first][dir_slot(start)] = KernelCell::new([1.0, 0.0, 0.0, 0.0]);
    table.reachable[first][dir_slot(start)] = true;

    for t in 2..=params.t_max as i64 {
        for site in LightCone::slice(t as usize) {
            let here = cone.index_unchecked(site.x, t);
            for end in Direction::BOTH {
                let Some(prev) = cone.index(Site::new(site.x - end.sign(), t - 1)) else {
                    continue;
                };
                let straight = dir_slot(end);
                let turn = dir_slot(end.flip());
                let mut cell = KernelCell::ZERO;
                let mut reach = false;
                if table.reachable[prev][straight] {
                    cell.add(&table.cells[prev][straight]);
                    reach = true;
                }
                if table.reachable[prev][turn] {
                    cell.add(&table.cells[prev][turn].turned(a));
                    reach = true;
                }
                table.cells[here][straight] = cell;
                table.reachable[here][straight] = reach;
            }
        }
    }
    Ok(table)
}

/// Literal sum over every path of every length up to `t_max`.
///
/// Costs `O(2^t_max)`; refuses `t_max > ENUMERATION_LIMIT`.
pub fn enumerate_kernel(params: KernelParams, start: Direction) -> Result<KernelTable> {
    params.validate()?;
    if params.t_max > ENUMERATION_LIMIT {
        return Err(Error::Guard {
            what: "enumerate_kernel t_max",
            requested: params.t_max,
            limit: ENUMERATION_LIMIT,
        });
    }
    let a = params.corner_weight;
    let mut table = KernelTable::empty(params, start);
    let cone = table.cone;

    for len in 1..=params.t_max {
        // bit k of `code` set means step k+1 flips relative to step k
        for code in 0u64..(1u64 << (len - 1)) {
            let mut dir = start;
            let mut x = start.sign();
            let mut corners = 0i32;
            for k in 0..len - 1 {
                if code >> k & 1 == 1 {
                    dir = dir.flip();
                    corners += 1;
                }
                x += dir.sign();
            }
            let i = cone.index_unchecked(x, len as i64);
            table.cells[i][dir_slot(dir)].w[(corners % 4) as usize] += a.powi(corners);
            table.reachable[i][dir_slot(dir)] = true;
        }
    }
    Ok(table)
}

/// `K = (w0 - w2) ± i (w1 - w3)`; zero outside the table.
pub fn complex_kernel(table: &KernelTable, site: Site, end: Direction) -> Complex64 {
    let (phi_r, phi_i) = table.cell(site, end).phi_components();
    Complex64::new(phi_r, table.params.convention.imaginary_sign() * phi_i)
}

/// Number of paths with first step `start` that end at `(x, t)` moving in
/// direction `end` and have exactly `corners` corners.
///
/// Integer dynamic programming over `(x, direction, corners)`; exact for any `t`.
pub fn count_paths(x: i64, t: usize, end: Direction, start: Direction, corners: usize) -> BigUint {
    let zero = BigUint::ZERO;
    if t == 0 || !Site::new(x, t as i64).in_light_cone() || corners + 1 > t {
        return zero;
    }
    let width = 2 * t + 1;
    let col = |x: i64| (x + t as i64) as usize;
    let max_r = corners;
    // layer[col][dir][r]
    let mut layer = vec![[vec![zero.clone(); max_r + 1], vec![zero.clone(); max_r + 1]]; width];
    layer[col(start.sign())][dir_slot(start)][0] = BigUint::from(1u32);

    for _ in 1..t {
        let mut next = vec![[vec![zero.clone(); max_r + 1], vec![zero.clone(); max_r + 1]]; width];
        for (c, cell) in layer.iter().enumerate() {
            for from in Direction::BOTH {
                for (r, count) in cell[dir_slot(from)].iter().enumerate() {
                    if count == &zero {
                        continue;
                    }
                    for to in Direction::BOTH {
                        let r_next = if to == from { r } else { r + 1 };
                        if r_next > max_r {
                            continue;
                        }
                        let nc = c as i64 + to.sign();
                        if nc < 0 || nc >= width as i64 {
                            continue;
                        }
                        next[nc as usize][dir_slot(to)][r_next] += count;
                    }
                }
            }
        }
        layer = next;
    }
    layer[col(x)][dir_slot(end)][corners].clone()
}
