//! Comparing Monte Carlo charge densities with the exact kernel.
//!
//! The walker deposits `ρ_σ(x, t)` per arrival direction. Their difference
//! `ρ_+ - ρ_-` follows `Φ_R + Φ_I` of the exact kernel up to one constant per
//! slice, so every comparison fits that constant by least squares before
//! scoring residuals.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::cone::LightCone;
use crate::error::{Error, Result};
use crate::kernel::{kernel_table, KernelParams, KernelTable};
use crate::montecarlo::{effective_corner_weight, ChargeLattice, ExpectedLattice};
use crate::path::{Direction, Site};
use crate::twin::Channel;

/// Net deposits of one slice, split by arrival direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhoSlice {
    pub t: usize,
    /// Reachable `x` in increasing order.
    pub xs: Vec<i64>,
    pub plus: Vec<i64>,
    pub minus: Vec<i64>,
}

impl RhoSlice {
    /// `ρ_+ - ρ_-` per `x`.
    pub fn difference(&self) -> Vec<i64> {
        self.plus.iter().zip(&self.minus).map(|(p, m)| p - m).collect()
    }
}

/// `ρ_σ(x) = Σ_channels counts[(x, t), σ, channel]` for every `x` of slice `t`.
pub fn rho_from_counts(lattice: &ChargeLattice, t: usize) -> Result<RhoSlice> {
    if t < 1 || t > lattice.capacity_t() {
        return Err(Error::SliceOutOfRange {
            t,
            max: lattice.capacity_t(),
        });
    }
    let mut out = RhoSlice {
        t,
        xs: Vec::with_capacity(t + 1),
        plus: Vec::with_capacity(t + 1),
        minus: Vec::with_capacity(t + 1),
    };
    for site in LightCone::slice(t) {
        let sum = |d| Channel::BOTH.iter().map(|&c| lattice.count(site, d, c)).sum::<i64>();
        out.xs.push(site.x);
        out.plus.push(sum(Direction::Plus));
        out.minus.push(sum(Direction::Minus));
    }
    Ok(out)
}

/// Start-`+` kernel table with the corner weight the sampler realises at
/// `corner_prob`.
pub fn sampler_kernel(corner_prob: f64, t_max: usize) -> Result<KernelTable> {
    if !(0.0..1.0).contains(&corner_prob) {
        return Err(Error::InvalidParameter(format!(
            "corner probability {corner_prob} has no finite corner weight"
        )));
    }
    kernel_table(
        KernelParams::new(t_max, effective_corner_weight(corner_prob)),
        Direction::Plus,
    )
}

/// Exact counterpart of `ρ_+ - ρ_-` at slice `t`, ordered by increasing `x`:
/// `Σ_σ σ [G_{σ+}(x) - G_{σ-}(x)]`, with `G_{σs}` the colour-signed kernel for
/// end direction `σ` and start direction `s`.
pub fn exact_prediction(table: &KernelTable, t: usize) -> Result<Vec<f64>> {
    if t < 1 || t > table.t_max() {
        return Err(Error::SliceOutOfRange {
            t,
            max: table.t_max(),
        });
    }
    let g = |site, end, start| table.cell_for_start(site, end, start).signed();
    Ok(LightCone::slice(t)
        .map(|site| {
            Direction::BOTH
                .iter()
                .map(|&sigma| {
                    sigma.sign() as f64
                        * (g(site, sigma, Direction::Plus) - g(site, sigma, Direction::Minus))
                })
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub x: i64,
    pub mc: f64,
    pub exact: f64,
    pub scaled_mc: f64,
    pub z: f64,
}

/// One slice of Monte Carlo against exact, after fitting a single scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceComparison {
    pub t: usize,
    pub entries: Vec<ComparisonEntry>,
    /// Minimiser of `Σ (scale·mc - exact)²`.
    pub scale: f64,
    pub reduced_chi2: f64,
    pub warning: Option<String>,
}

/// Summary record written next to the comparison CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub t: usize,
    pub scale: f64,
    pub reduced_chi2: f64,
    pub n_points: usize,
    pub max_abs_z: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

impl SliceComparison {
    pub fn max_abs_z(&self) -> f64 {
        self.entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> ComparisonSummary {
        ComparisonSummary {
            t: self.t,
            scale: self.scale,
            reduced_chi2: self.reduced_chi2,
            n_points: self.entries.len(),
            max_abs_z: self.max_abs_z(),
            warning: self.warning.clone(),
        }
    }

    /// `Σ (scale·mc - exact)²` for an arbitrary scale.
    pub fn residual_sum(&self, scale: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| (scale * e.mc - e.exact).powi(2))
            .sum()
    }

    /// CSV with columns `t,x,mc,exact,scaled_mc,z`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,mc,exact,scaled_mc,z")?;
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.t, e.x, e.mc, e.exact, e.scaled_mc, e.z
            )?;
        }
        Ok(())
    }
}

/// Fits the scale and scores a profile given per-point standard errors of `mc`.
pub fn compare_profile(
    t: usize,
    xs: &[i64],
    mc: &[f64],
    exact: &[f64],
    std_err: &[f64],
) -> SliceComparison {
    assert!(xs.len() == mc.len() && mc.len() == exact.len() && exact.len() == std_err.len());
    let num: f64 = mc.iter().zip(exact).map(|(m, e)| m * e).sum();
    let den: f64 = mc.iter().map(|m| m * m).sum();
    let scale = if den > 0.0 { num / den } else { 1.0 };

    let entries: Vec<ComparisonEntry> = (0..xs.len())
        .map(|k| {
            let scaled = scale * mc[k];
            let resid = scaled - exact[k];
            let sigma = scale.abs() * std_err[k];
            let z = if sigma > 0.0 {
                resid / sigma
            } else if resid.abs() <= 1e-12 * exact[k].abs().max(1.0) {
                0.0
            } else {
                resid.signum() * f64::INFINITY
            };
            ComparisonEntry {
                x: xs[k],
                mc: mc[k],
                exact: exact[k],
                scaled_mc: scaled,
                z,
            }
        })
        .collect();
    let chi2: f64 = entries.iter().map(|e| e.z * e.z).sum();
    let dof = entries.len().saturating_sub(1).max(1);
    SliceComparison {
        t,
        entries,
        scale,
        reduced_chi2: chi2 / dof as f64,
        warning: None,
    }
}

/// Compares `(ρ_+ - ρ_-)/N` at slice `t` with the exact kernel built at the
/// sampler's corner weight.
///
/// Per-point errors treat the four cells feeding each `x` as independent
/// `{-1, 0, +1}` draws; the second moment of each is the probability that a
/// loop crosses the cell's bond, which the unsigned kernel gives exactly.
pub fn compare_slice(lattice: &ChargeLattice, t: usize) -> Result<SliceComparison> {
    let config = lattice.config();
    let n = config.n_steps;
    if t < 1 || t > n {
        return Err(Error::SliceOutOfRange { t, max: n });
    }
    let loops = lattice.loops_completed();
    if loops == 0 {
        return Err(Error::InvalidParameter("lattice holds no completed loops".into()));
    }
    let p = config.corner_prob;
    let table = sampler_kernel(p, t)?;
    let exact = exact_prediction(&table, t)?;
    let rho = rho_from_counts(lattice, t)?;
    let nf = loops as f64;
    let mc: Vec<f64> = rho.difference().iter().map(|&d| d as f64 / nf).collect();

    let straight = (1.0 - p).powi(t as i32 - 1);
    let std_err: Vec<f64> = LightCone::slice(t)
        .map(|site| {
            let var: f64 = Direction::BOTH
                .iter()
                .flat_map(|&sigma| Channel::BOTH.map(|c| (sigma, c)))
                .map(|(sigma, c)| {
                    let start = match c {
                        Channel::A => Direction::Plus,
                        Channel::B => Direction::Minus,
                    };
                    let crossing = straight * table.cell_for_start(site, sigma, start).unsigned();
                    let m = lattice.count(site, sigma, c) as f64 / nf;
                    (crossing - m * m).max(0.0)
                })
                .sum();
            (var / nf).sqrt()
        })
        .collect();

    let mut cmp = compare_profile(t, &rho.xs, &mc, &exact, &std_err);
    if 2 * t > n {
        cmp.warning = Some(format!(
            "slice t={t} is outside the default comparison range 2..={}",
            n / 2
        ));
    }
    Ok(cmp)
}

/// Per-cell standardized residual against the exact expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellZ {
    pub site: Site,
    pub sigma: Direction,
    pub channel: Channel,
    pub observed: f64,
    pub expected: f64,
    pub z: f64,
}

/// Scores every cell of `lattice` against the enumerated expectation.
pub fn compare_to_expectation(
    lattice: &ChargeLattice,
    expected: &ExpectedLattice,
) -> Result<Vec<CellZ>> {
    let config = lattice.config();
    if config.n_steps != expected.n_steps() || config.corner_prob != expected.corner_prob() {
        return Err(Error::ConfigMismatch);
    }
    let loops = lattice.loops_completed();
    if loops == 0 {
        return Err(Error::InvalidParameter("lattice holds no completed loops".into()));
    }
    let nf = loops as f64;
    let t_max = lattice.max_t().max(expected.max_t());
    let mut out = Vec::new();
    for site in (1..=t_max).flat_map(LightCone::slice) {
        for sigma in Direction::BOTH {
            for channel in Channel::BOTH {
                let observed = lattice.count(site, sigma, channel) as f64 / nf;
                let mean = expected.mean(site, sigma, channel);
                let var = (expected.crossing(site, sigma, channel) - mean * mean).max(0.0);
                let resid = observed - mean;
                let z = if var > 0.0 {
                    resid / (var / nf).sqrt()
                } else if resid.abs() <= 1e-12 {
                    0.0
                } else {
                    resid.signum() * f64::INFINITY
                };
                out.push(CellZ {
                    site,
                    sigma,
                    channel,
                    observed,
                    expected: mean,
                    z,
                });
            }
        }
    }
    Ok(out)
}

/// Number of sign changes along `values`, ignoring entries with `|v| <= floor`.
pub fn sign_changes(values: &[f64], floor: f64) -> usize {
    let signs: Vec<bool> = values
        .iter()
        .filter(|v| v.abs() > floor)
        .map(|&v| v > 0.0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}
