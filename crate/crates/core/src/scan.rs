//! Grid scans of the complex plane and their CSV/PGM exports.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::operator::OperatorModel;
use crate::resolvent::{classify_point, ClassifyParams, Label};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ScanRegion {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidRegion("bounds must be finite".into()));
        }
        if self.re_min >= self.re_max {
            return Err(Error::InvalidRegion(format!(
                "re_min {} must be below re_max {}",
                self.re_min, self.re_max
            )));
        }
        if self.im_min >= self.im_max {
            return Err(Error::InvalidRegion(format!(
                "im_min {} must be below im_max {}",
                self.im_min, self.im_max
            )));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidRegion("nx and ny must be at least 2".into()));
        }
        Ok(())
    }

    /// Real part of grid column `ix`. Coincident points of refined grids are bit-identical.
    pub fn re(&self, ix: usize) -> f64 {
        self.re_min + (self.re_max - self.re_min) * (ix as f64 / (self.nx - 1) as f64)
    }

    pub fn im(&self, iy: usize) -> f64 {
        self.im_min + (self.im_max - self.im_min) * (iy as f64 / (self.ny - 1) as f64)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(re, im)` of point `idx` in row-major order from `(re_min, im_min)`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        (self.re(idx % self.nx), self.im(idx / self.nx))
    }
}

/// Labels and scalar channels for every grid point, row-major from `(re_min, im_min)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanResult {
    pub region: ScanRegion,
    pub labels: Vec<Label>,
    pub q: Vec<f64>,
    pub growth: Vec<f64>,
    pub residual: Vec<f64>,
    pub params: ClassifyParams,
}

/// Classifies every grid point on a pool of `workers` threads (0 = rayon default).
pub fn scan<T: Real>(
    model: &OperatorModel<T>,
    region: &ScanRegion,
    params: &ClassifyParams,
    workers: usize,
) -> Result<ScanResult> {
    region.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let points: Vec<(Label, f64, f64, f64)> = pool.install(|| {
        (0..region.len())
            .into_par_iter()
            .map(|idx| {
                let (re, im) = region.point(idx);
                let lambda = Complex::new(T::lit(re), T::lit(im));
                let pc = classify_point(model, lambda, params);
                (pc.label, pc.q(), pc.growth(), pc.residual())
            })
            .collect()
    });
    Ok(ScanResult {
        region: *region,
        labels: points.iter().map(|p| p.0).collect(),
        q: points.iter().map(|p| p.1).collect(),
        growth: points.iter().map(|p| p.2).collect(),
        residual: points.iter().map(|p| p.3).collect(),
        params: *params,
    })
}

pub const CSV_HEADER: &str = "re,im,label,q,growth,residual";

pub fn scan_csv(result: &ScanResult) -> String {
    let mut out = String::with_capacity(64 * result.labels.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (idx, label) in result.labels.iter().enumerate() {
        let (re, im) = result.region.point(idx);
        let _ = writeln!(
            out,
            "{re},{im},{},{},{},{}",
            label.as_str(),
            result.q[idx],
            result.growth[idx],
            result.residual[idx]
        );
    }
    out
}

pub fn export_csv(result: &ScanResult, path: &Path) -> Result<()> {
    atomic_write(path, scan_csv(result).as_bytes())
}

/// Parses a scan CSV back into `(re, im, label)` rows.
pub fn read_scan_csv(path: &Path) -> Result<Vec<(f64, f64, Label)>> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| parse_err(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(parse_err(format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(format!("{s:?}: {e}")));
        let label = Label::parse(&rec[2]).ok_or_else(|| parse_err(format!("bad label {:?}", &rec[2])))?;
        rows.push((num(&rec[0])?, num(&rec[1])?, label));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatmapChannel {
    Label,
    Q,
    Growth,
}

impl HeatmapChannel {
    pub fn as_str(self) -> &'static str {
        match self {
            HeatmapChannel::Label => "label",
            HeatmapChannel::Q => "q",
            HeatmapChannel::Growth => "growth",
        }
    }
}

impl FromStr for HeatmapChannel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "label" => Ok(HeatmapChannel::Label),
            "q" => Ok(HeatmapChannel::Q),
            "growth" => Ok(HeatmapChannel::Growth),
            _ => Err(Error::InvalidArgument(format!(
                "unknown channel {s:?} (expected label, q or growth)"
            ))),
        }
    }
}

/// Gray level of a label.
pub fn label_gray(label: Label) -> u8 {
    match label {
        Label::Resolvent => 255,
        Label::Indeterminate => 128,
        Label::Spectrum => 64,
        Label::Eigenvalue => 0,
    }
}

fn unit_gray(x: f64) -> u8 {
    if x.is_nan() {
        0
    } else {
        (255.0 * x.clamp(0.0, 1.0)).round() as u8
    }
}

/// Gray level of a point: 255 where the resolvent is certain, 0 toward the spectrum.
pub fn channel_gray(result: &ScanResult, channel: HeatmapChannel, idx: usize) -> u8 {
    match channel {
        HeatmapChannel::Label => label_gray(result.labels[idx]),
        HeatmapChannel::Q => unit_gray(1.0 - result.q[idx]),
        HeatmapChannel::Growth => {
            let g = result.growth[idx];
            if g.is_nan() {
                0
            } else {
                unit_gray(1.0 - 1.0 / g)
            }
        }
    }
}

/// Plain PGM (`P2`); the top row is `im_max`.
pub fn heatmap_pgm(result: &ScanResult, channel: HeatmapChannel) -> String {
    let (nx, ny) = (result.region.nx, result.region.ny);
    let mut out = format!("P2\n{nx} {ny}\n255\n");
    for iy in (0..ny).rev() {
        let row: Vec<String> = (0..nx)
            .map(|ix| channel_gray(result, channel, iy * nx + ix).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn export_heatmap(result: &ScanResult, channel: HeatmapChannel, path: &Path) -> Result<()> {
    atomic_write(path, heatmap_pgm(result, channel).as_bytes())
}
