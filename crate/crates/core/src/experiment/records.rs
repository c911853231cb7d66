use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One initial line at one sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationRow {
    pub phase: String,
    pub alpha: f64,
    pub time: String,
    pub t: f64,
    pub fidelity_extwkb: Option<f64>,
    pub fidelity_thawed: Option<f64>,
    pub norm_extwkb: Option<f64>,
    pub c_t: Option<f64>,
    pub non_contraction: Option<f64>,
    pub caustic_margin: Option<f64>,
    pub mass_deficit: Option<f64>,
    pub ehrenfest_indicator: Option<f64>,
    pub remainder_diagnostic: Option<f64>,
    pub sqrt_hbar_dphi: Option<f64>,
    pub kernel_phase: Option<f64>,
    pub backward_l2: Option<f64>,
    pub amplitude_deviation: Option<f64>,
    pub exact_mean_q: Option<f64>,
    pub exact_mean_p: Option<f64>,
}

/// Pulled-back amplitudes on the scaled grid `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub u: f64,
    pub exact_abs: f64,
    pub metaplectic_abs: f64,
    pub exact_dphase: Option<f64>,
    pub metaplectic_dphase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierRow {
    /// `p + lambda q` of the packet centre.
    pub offset: f64,
    pub p0: f64,
    pub q0: f64,
    pub t_final: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub left_mass: f64,
    pub right_mass: f64,
    /// Wigner mass within `3 sqrt(hbar)` of the unstable line.
    pub band_mass: f64,
    pub fidelity_extwkb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovRow {
    pub k: f64,
    pub hbar: f64,
    pub trace: f64,
    pub multiplier: f64,
    pub lyapunov: f64,
    pub ehrenfest_time: f64,
    pub unstable_slope: f64,
    pub stable_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Into::into))
        .collect()
}

pub fn write_rows_to<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    write_rows(rows, File::create(path)?)
}

pub fn read_rows_from<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_rows(File::open(path)?)
}
