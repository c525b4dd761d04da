//! Tabulated distribution curves.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::images::{crossing_unchecked, pdf_unchecked, require_conditions};
use super::last_exit::{hitting_cdf_inverted, hitting_pdf_inverted, lambda_cdf, lambda_pdf, sigma_cdf, sigma_pdf};
use super::two_sided::{two_sided_sigma_cdf, two_sided_sigma_pdf};
use crate::barriers::{BarrierSpec, Family};
use crate::error::{domain, Error, Result};

/// Grids stay ENDPOINT_CLIP·T away from the singular ends of the time range.
pub const ENDPOINT_CLIP: f64 = 1e-9;

/// Inverted hitting curves are tabulated on [T, DEFAULT_INVERTED_SPAN·T]
/// unless told otherwise.
pub const DEFAULT_INVERTED_SPAN: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    /// σ, the last time at or above the barrier (two-sided: outside the strip)
    Sigma,
    /// λ, the last time on the barrier
    Lambda,
    /// σ̂, first time at or above an inverted barrier after T
    HittingInverted,
    /// first hitting time of the images boundary
    HittingImages,
}

impl DensityKind {
    /// The natural curve for a family.
    pub fn default_for(spec: &BarrierSpec) -> Self {
        match spec.family() {
            Family::TimeInverted { .. } => DensityKind::HittingInverted,
            Family::ImagesLambert { .. } => DensityKind::HittingImages,
            _ => DensityKind::Sigma,
        }
    }
}

/// (t, CDF, PDF) triples on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub kind: DensityKind,
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
    pub pdf: Vec<f64>,
}

/// `n` points on [clip, T − clip], spaced as (1 − cos πs)/2 so that they
/// cluster at both ends, where last-exit densities blow up like the inverse
/// square root of the distance. Built from the two ends inwards: t and T − t
/// are exact mirror images.
fn mirrored_grid(horizon: f64, clip: f64, n: usize) -> Vec<f64> {
    let span = horizon - 2.0 * clip;
    let mut grid = vec![0.0; n];
    for k in 0..n / 2 {
        let s = k as f64 / (n - 1) as f64;
        let raw = clip + span * 0.5 * (1.0 - (std::f64::consts::PI * s).cos());
        let far = horizon - raw;
        grid[k] = horizon - far;
        grid[n - 1 - k] = far;
    }
    if n % 2 == 1 {
        grid[n / 2] = 0.5 * horizon;
    }
    grid
}

/// `n` points on [lo, hi] spaced as 1 − cos(πs/2): clustered at `lo` only.
fn left_clustered_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            lo + (hi - lo) * (1.0 - (0.5 * std::f64::consts::PI * s).cos())
        })
        .collect();
    g[n - 1] = hi;
    g
}

fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|k| lo + k as f64 * h).collect();
    g[n - 1] = hi;
    g
}

/// CDFs obtained as differences of order-one terms can dip by a few ulps
/// where the density underflows; such dips are flattened. Larger decreases
/// are left in place.
fn flatten_rounding_dips(cdf: &mut [f64]) {
    for i in 1..cdf.len() {
        let prev = cdf[i - 1];
        if cdf[i] < prev && prev - cdf[i] <= 8.0 * f64::EPSILON * prev.max(1e-300) {
            cdf[i] = prev;
        }
    }
}

impl DensityCurve {
    /// Tabulates `kind` for `spec` on `points` grid times.
    pub fn tabulate(spec: &BarrierSpec, kind: DensityKind, points: usize) -> Result<Self> {
        Self::tabulate_until(spec, kind, points, None)
    }

    /// As [`tabulate`](Self::tabulate), with an explicit right end for the
    /// inverted family (default 100·T).
    pub fn tabulate_until(spec: &BarrierSpec, kind: DensityKind, points: usize, t_max: Option<f64>) -> Result<Self> {
        if points < 2 {
            return Err(domain(format!("a density grid needs at least 2 points, got {points}")));
        }
        let big_t = spec.horizon();
        let clip = ENDPOINT_CLIP * big_t;
        let (grid, mut cdf, pdf): (Vec<f64>, Vec<f64>, Vec<f64>) = match (kind, spec.family()) {
            (DensityKind::Sigma, _) if spec.is_two_sided() => {
                let grid = mirrored_grid(big_t, clip, points);
                let cdf = grid.iter().map(|&t| two_sided_sigma_cdf(spec, t)).collect::<Result<_>>()?;
                let pdf = grid.iter().map(|&t| two_sided_sigma_pdf(spec, t)).collect::<Result<_>>()?;
                (grid, cdf, pdf)
            }
            (DensityKind::Sigma, _) => {
                let grid = mirrored_grid(big_t, clip, points);
                let cdf = grid.iter().map(|&t| sigma_cdf(spec, t)).collect::<Result<_>>()?;
                let pdf = grid.iter().map(|&t| sigma_pdf(spec, t)).collect::<Result<_>>()?;
                (grid, cdf, pdf)
            }
            (DensityKind::Lambda, _) => {
                let grid = mirrored_grid(big_t, clip, points);
                let cdf = grid.iter().map(|&t| lambda_cdf(spec, t)).collect::<Result<_>>()?;
                let pdf = grid.iter().map(|&t| lambda_pdf(spec, t)).collect::<Result<_>>()?;
                (grid, cdf, pdf)
            }
            (DensityKind::HittingInverted, Family::TimeInverted { .. }) => {
                let t_max = t_max.unwrap_or(DEFAULT_INVERTED_SPAN * big_t);
                if !(t_max > big_t + clip && t_max.is_finite()) {
                    return Err(domain(format!("t_max = {t_max} must exceed T = {big_t}")));
                }
                let grid = left_clustered_grid(big_t + clip, t_max, points);
                let cdf = grid.iter().map(|&t| hitting_cdf_inverted(spec, t)).collect::<Result<_>>()?;
                let pdf = grid.iter().map(|&t| hitting_pdf_inverted(spec, t)).collect::<Result<_>>()?;
                (grid, cdf, pdf)
            }
            (DensityKind::HittingImages, Family::ImagesLambert { .. }) => {
                let m = spec.measure()?;
                require_conditions(spec, &m)?;
                let grid = uniform_grid(clip, big_t, points);
                let mut cdf = Vec::with_capacity(points);
                let mut pdf = Vec::with_capacity(points);
                for &t in &grid {
                    let f = spec.upper(t)?;
                    cdf.push(crossing_unchecked(&m, f, t));
                    pdf.push(pdf_unchecked(&m, f, t));
                }
                (grid, cdf, pdf)
            }
            (k, f) => {
                return Err(domain(format!("no {k:?} curve for the {} family", f.name())));
            }
        };
        flatten_rounding_dips(&mut cdf);
        Ok(Self { kind, grid, cdf, pdf })
    }

    /// CSV with header `t,cdf,pdf` and 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Domain(format!("csv write failed: {e}"));
        w.write_record(["t", "cdf", "pdf"]).map_err(io)?;
        for i in 0..self.grid.len() {
            w.write_record([
                format!("{:.16e}", self.grid[i]),
                format!("{:.16e}", self.cdf[i]),
                format!("{:.16e}", self.pdf[i]),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Domain(format!("csv write failed: {e}")))?;
        Ok(())
    }

    /// Parses the output of [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(kind: DensityKind, input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            t: f64,
            cdf: f64,
            pdf: f64,
        }
        let mut r = csv::Reader::from_reader(input);
        let mut curve = DensityCurve { kind, grid: Vec::new(), cdf: Vec::new(), pdf: Vec::new() };
        for row in r.deserialize::<Row>() {
            let row = row.map_err(|e| Error::Parse(format!("bad csv row: {e}")))?;
            curve.grid.push(row.t);
            curve.cdf.push(row.cdf);
            curve.pdf.push(row.pdf);
        }
        Ok(curve)
    }
}
