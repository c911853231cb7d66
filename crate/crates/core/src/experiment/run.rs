use std::fs;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baseline::Baseline;
use super::records::{
    write_rows_to, BarrierRow, CheckOutcome, LyapunovRow, ProfileRow, PropagationRow, StageTiming,
};
use super::spec::{ExperimentKind, ExperimentSpec, KickSide, Method, ModelSpec, SampleTime};
use crate::classical::{ehrenfest_time, hyperbolic_splitting};
use crate::error::{Error, Result};
use crate::metaplectic::{apply_l, propagate_thawed_gaussian, ExtendedWkb, Profile, WkbOptions};
use crate::models::{HamiltonianModel, QuadraticPhase};
use crate::phase_space::{wigner_function, GridSpec, PhasePoint, WaveFunction, WignerOptions};
use crate::quantum::{apply_kick, exact_propagate, exact_propagate_between, resolve_grid, GridSearch};

/// Everything a run produces. Profiles and timings are written to their own
/// files so that the JSON report is identical across reruns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub spec: ExperimentSpec,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub propagation: Vec<PropagationRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub barrier: Vec<BarrierRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovRow>,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
    #[serde(skip)]
    pub profiles: Vec<(String, Vec<ProfileRow>)>,
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

struct Timer(Vec<StageTiming>);

impl Timer {
    fn run<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.at_stage(stage));
        self.0.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

/// `L_q a e^{i S_0 / hbar}`.
pub fn initial_state(profile: &Profile, phase: QuadraticPhase, hbar: f64, grid: GridSpec) -> Result<WaveFunction> {
    let mut psi = apply_l(profile, phase.q0, hbar, grid)?;
    psi.multiply_by(|x| Complex64::from_polar(1.0, phase.s0(x) / hbar));
    Ok(psi)
}

fn profiles_for(spec: &ExperimentSpec, phases: &[QuadraticPhase]) -> Vec<Profile> {
    let a_ref = phases[0].alpha;
    phases
        .iter()
        .map(|ph| {
            if spec.shared_state {
                spec.profile.chirped(a_ref - ph.alpha)
            } else {
                spec.profile.clone()
            }
        })
        .collect()
}

fn kicked(model: &HamiltonianModel, psi: WaveFunction, side: KickSide) -> Result<WaveFunction> {
    if side == KickSide::After {
        Ok(apply_kick(model, &psi))
    } else {
        Ok(psi)
    }
}

/// Reference states for each initial state at each sample time.
fn exact_series(
    model: &HamiltonianModel,
    initial: &[WaveFunction],
    times: &[SampleTime],
) -> Result<Vec<Vec<WaveFunction>>> {
    initial
        .par_iter()
        .map(|psi0| {
            let mut out = Vec::with_capacity(times.len());
            let mut state = psi0.clone();
            let mut t_prev = 0.0;
            for st in times {
                if st.t > t_prev {
                    state = exact_propagate_between(model, &state, t_prev, st.t)?;
                    t_prev = st.t;
                }
                out.push(kicked(model, state.clone(), st.side)?);
            }
            Ok(out)
        })
        .collect()
}

fn start_grid(spec: &ExperimentSpec) -> Result<GridSpec> {
    spec.grid.build()
}

fn resolved<F>(spec: &ExperimentSpec, run: F) -> Result<(GridSpec, Vec<WaveFunction>)>
where
    F: FnMut(GridSpec) -> Result<Vec<WaveFunction>>,
{
    let mut run = run;
    let grid = start_grid(spec)?;
    if spec.grid.resolve {
        resolve_grid(grid, GridSearch::default(), run)
    } else {
        Ok((grid, run(grid)?))
    }
}

/// `d arg f / du` from centred differences where `|f|` exceeds a thousandth of its peak.
fn phase_derivative(values: &[Complex64], du: f64) -> Vec<Option<f64>> {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    (0..values.len())
        .map(|i| {
            if i == 0 || i + 1 == values.len() || values[i].norm() < 1e-3 * peak {
                return None;
            }
            let d = (values[i + 1] - values[i - 1]) / (2.0 * du);
            Some((values[i].conj() * d).im / values[i].norm_sqr())
        })
        .collect()
}

fn profile_rows(exact: &Profile, meta: &Profile) -> Vec<ProfileRow> {
    let (Profile::Sampled { grid, values: ev }, Profile::Sampled { values: mv, .. }) = (exact, meta) else {
        return Vec::new();
    };
    let (ed, md) = (phase_derivative(ev, grid.dx()), phase_derivative(mv, grid.dx()));
    grid.points()
        .enumerate()
        .map(|(i, u)| ProfileRow {
            u,
            exact_abs: ev[i].norm(),
            metaplectic_abs: mv[i].norm(),
            exact_dphase: ed[i],
            metaplectic_dphase: md[i],
        })
        .collect()
}

struct LineOutput {
    rows: Vec<PropagationRow>,
    profiles: Vec<(String, Vec<ProfileRow>)>,
    finals: Vec<WaveFunction>,
}

fn run_line(
    spec: &ExperimentSpec,
    model: &HamiltonianModel,
    phase: QuadraticPhase,
    label: &str,
    profile: &Profile,
    grid: GridSpec,
    exact: &[WaveFunction],
) -> Result<LineOutput> {
    let hbar = spec.hbar;
    let want_wkb = spec.methods.contains(&Method::Extwkb);
    let want_thawed = spec.methods.contains(&Method::Thawed);
    let mut instants: Vec<f64> = spec.times.iter().map(|s| s.t).collect();
    instants.dedup();
    let wkb = if want_wkb {
        Some(
            ExtendedWkb::prepare(model, phase, profile, hbar, grid, &instants, WkbOptions::default())
                .map_err(|e| e.at_stage(&format!("extwkb setup ({label})")))?,
        )
    } else {
        None
    };
    let b0 = match (want_thawed, profile.width_parameter()) {
        (true, Some(b)) => Some(b + phase.alpha),
        (true, None) => {
            return Err(Error::Unsupported("thawed Gaussian needs a Gaussian profile".into()).at_stage("thawed"))
        }
        _ => None,
    };
    let mut out = LineOutput {
        rows: Vec::new(),
        profiles: Vec::new(),
        finals: Vec::new(),
    };
    for (st, ex) in spec.times.iter().zip(exact) {
        let time = st.to_string();
        let stage = format!("{label} at t = {time}");
        let mut row = PropagationRow {
            phase: label.to_string(),
            alpha: phase.alpha,
            time: time.clone(),
            t: st.t,
            fidelity_extwkb: None,
            fidelity_thawed: None,
            norm_extwkb: None,
            c_t: None,
            non_contraction: None,
            caustic_margin: None,
            mass_deficit: None,
            ehrenfest_indicator: None,
            remainder_diagnostic: None,
            sqrt_hbar_dphi: None,
            kernel_phase: None,
            backward_l2: None,
            amplitude_deviation: None,
            exact_mean_q: Some(ex.mean_position()),
            exact_mean_p: Some(ex.mean_momentum()),
        };
        if let Some(wkb) = &wkb {
            let state = wkb.state(st.t).map_err(|e| e.at_stage(&format!("extwkb {stage}")))?;
            let psi = kicked(model, state.psi, st.side)?;
            let m = state.meta;
            row.fidelity_extwkb = Some(ex.fidelity(&psi)?);
            row.norm_extwkb = Some(psi.norm());
            row.c_t = Some(m.c_t);
            row.non_contraction = Some(m.non_contraction);
            row.caustic_margin = Some(m.caustic_margin);
            row.mass_deficit = Some(m.mass_deficit);
            row.ehrenfest_indicator = Some(m.ehrenfest_indicator);
            row.remainder_diagnostic = Some(m.remainder_diagnostic);
            row.sqrt_hbar_dphi = Some(m.sqrt_hbar_dphi);
            row.kernel_phase = Some(m.kernel_phase);
            if st.side != KickSide::After {
                let back = wkb
                    .backward_test(st.t, ex)
                    .map_err(|e| e.at_stage(&format!("backward test {stage}")))?;
                row.backward_l2 = Some(back.l2_distance);
                row.amplitude_deviation = Some(back.amplitude_deviation);
                if spec.profiles {
                    out.profiles.push((
                        format!("{label}_t={time}"),
                        profile_rows(&back.exact_profile, &back.metaplectic_profile),
                    ));
                }
            }
            out.finals.push(psi);
        }
        if let Some(b0) = b0 {
            let th = propagate_thawed_gaussian(model, phase.center(), b0, hbar, st.t, grid)
                .map_err(|e| e.at_stage(&format!("thawed {stage}")))?;
            row.fidelity_thawed = Some(ex.fidelity(&kicked(model, th.psi, st.side)?)?);
        }
        out.rows.push(row);
    }
    Ok(out)
}

fn run_propagation(spec: &ExperimentSpec, timer: &mut Timer) -> Result<ExperimentReport> {
    let model = timer.run("model", || spec.model.build())?;
    let phases = timer.run("initial manifold", || spec.phases.iter().map(|p| p.build()).collect::<Result<Vec<_>>>())?;
    let profiles = profiles_for(spec, &phases);
    let (grid, flat) = timer.run("exact reference", || {
        resolved(spec, |g| {
            let init = phases
                .iter()
                .zip(&profiles)
                .map(|(ph, pr)| initial_state(pr, *ph, spec.hbar, g))
                .collect::<Result<Vec<_>>>()?;
            Ok(exact_series(&model, &init, &spec.times)?.into_iter().flatten().collect())
        })
    })?;
    let exact: Vec<&[WaveFunction]> = flat.chunks(spec.times.len()).collect();
    let lines = timer.run("semiclassical", || {
        phases
            .par_iter()
            .zip(&spec.phases)
            .zip(&profiles)
            .zip(&exact)
            .map(|(((ph, ps), pr), ex)| run_line(spec, &model, *ph, &ps.label(), pr, grid, ex))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut report = empty_report(spec, grid);
    let finals: Vec<Option<&WaveFunction>> = lines.iter().map(|l| l.finals.last()).collect();
    for l in &lines {
        report.propagation.extend(l.rows.iter().cloned());
        report.profiles.extend(l.profiles.iter().cloned());
    }
    report.checks = timer.run("checks", || propagation_checks(spec, &report.propagation, &finals))?;
    Ok(report)
}

fn empty_report(spec: &ExperimentSpec, grid: GridSpec) -> ExperimentReport {
    ExperimentReport {
        name: spec.name.clone(),
        spec: spec.clone(),
        grid,
        propagation: Vec::new(),
        barrier: Vec::new(),
        lyapunov: None,
        checks: Vec::new(),
        passed: true,
        profiles: Vec::new(),
        timings: Vec::new(),
    }
}

fn at_least(name: String, value: f64, bound: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        value,
        bound,
        passed: value >= bound,
    }
}

fn at_most(name: String, value: f64, bound: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        value,
        bound,
        passed: value <= bound,
    }
}

fn propagation_checks(
    spec: &ExperimentSpec,
    rows: &[PropagationRow],
    finals: &[Option<&WaveFunction>],
) -> Result<Vec<CheckOutcome>> {
    let c = &spec.checks;
    let base = match &c.baseline {
        Some(name) => Some(Baseline::builtin().entry(name)?),
        None => None,
    };
    let mut out = Vec::new();
    let min_fid = [c.min_fidelity, base.and_then(|b| b.min_fidelity)];
    let max_l2 = [c.max_backward_l2, base.and_then(|b| b.max_backward_l2)];
    let max_amp = [c.max_amplitude_deviation, base.and_then(|b| b.max_amplitude_deviation)];
    for r in rows {
        let tag = format!("{} t={}", r.phase, r.time);
        for bound in min_fid.iter().flatten() {
            if let Some(f) = r.fidelity_extwkb {
                out.push(at_least(format!("fidelity {tag}"), f, *bound));
            }
        }
        for bound in max_l2.iter().flatten() {
            if let Some(v) = r.backward_l2 {
                out.push(at_most(format!("backward l2 {tag}"), v, *bound));
            }
        }
        for bound in max_amp.iter().flatten() {
            if let Some(v) = r.amplitude_deviation {
                out.push(at_most(format!("amplitude deviation {tag}"), v, *bound));
            }
        }
    }
    let last_time = spec.times.last().map(|t| t.to_string());
    let finals_rows: Vec<&PropagationRow> = rows.iter().filter(|r| Some(&r.time) == last_time.as_ref()).collect();
    if c.beats_thawed {
        for r in &finals_rows {
            if let (Some(w), Some(t)) = (r.fidelity_extwkb, r.fidelity_thawed) {
                out.push(at_least(format!("extwkb beats thawed {} t={}", r.phase, r.time), w, t));
            }
        }
    }
    if let Some(drop) = c.max_slope_drop {
        let first = finals_rows.first().and_then(|r| r.fidelity_extwkb);
        let reference = base.and_then(|b| b.reference_fidelity);
        for r in &finals_rows {
            let Some(f) = r.fidelity_extwkb else { continue };
            if let Some(f0) = first {
                out.push(at_most(format!("slope drop {} t={}", r.phase, r.time), f0 - f, drop));
            }
            if let Some(f0) = reference {
                out.push(at_least(format!("slope fidelity vs baseline {} t={}", r.phase, r.time), f, f0 - drop));
            }
        }
    }
    if let Some(bound) = c.min_pairwise_fidelity {
        let states: Vec<&WaveFunction> = finals.iter().flatten().copied().collect();
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                out.push(at_least(
                    format!("pairwise fidelity {} / {}", spec.phases[i].label(), spec.phases[j].label()),
                    states[i].fidelity(states[j])?,
                    bound,
                ));
            }
        }
    }
    Ok(out)
}

fn run_barrier(spec: &ExperimentSpec, timer: &mut Timer) -> Result<ExperimentReport> {
    let model = timer.run("model", || spec.model.build())?;
    let ModelSpec::Barrier { v0 } = spec.model else {
        unreachable!("validated")
    };
    let lambda = v0.sqrt();
    let hbar = spec.hbar;
    let t_final = spec
        .times
        .last()
        .map(|t| t.t)
        .unwrap_or_else(|| ehrenfest_time(lambda, hbar) + 1.0);
    let base = spec.phases.first().copied().unwrap_or_default();
    let phases: Vec<QuadraticPhase> = timer.run("initial manifold", || {
        spec.offsets
            .iter()
            .map(|&off| {
                let mut p = base;
                p.p0 = off - lambda * base.q0;
                p.build()
            })
            .collect()
    })?;
    let (grid, finals) = timer.run("exact reference", || {
        resolved(spec, |g| {
            phases
                .par_iter()
                .map(|ph| exact_propagate(&model, &initial_state(&spec.profile, *ph, hbar, g)?, t_final))
                .collect()
        })
    })?;
    let band = 3.0 * hbar.sqrt();
    let norm = (1.0 + lambda * lambda).sqrt();
    let rows = timer.run("fate", || {
        phases
            .par_iter()
            .zip(&spec.offsets)
            .zip(&finals)
            .map(|((ph, &offset), psi)| {
                let stride = (grid.n_points() / 1024).max(1);
                let w = wigner_function(
                    psi,
                    &WignerOptions {
                        q_stride: stride,
                        ..WignerOptions::default()
                    },
                )?;
                let band_mass = w.mass_where(|q, p| (p - lambda * q).abs() / norm <= band) / w.total_mass();
                let dens = psi.density();
                let dx = grid.dx();
                let left: f64 = grid.points().zip(&dens).filter(|(x, _)| *x < 0.0).map(|(_, d)| d * dx).sum();
                let total = psi.norm_sqr();
                let fidelity_extwkb = if spec.methods.contains(&Method::Extwkb) {
                    let wkb = ExtendedWkb::prepare(&model, *ph, &spec.profile, hbar, grid, &[t_final], WkbOptions::default())?;
                    Some(psi.fidelity(&wkb.state(t_final)?.psi)?)
                } else {
                    None
                };
                Ok(BarrierRow {
                    offset,
                    p0: ph.p0,
                    q0: ph.q0,
                    t_final,
                    mean_q: psi.mean_position(),
                    mean_p: psi.mean_momentum(),
                    left_mass: left / total,
                    right_mass: 1.0 - left / total,
                    band_mass,
                    fidelity_extwkb,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut report = empty_report(spec, grid);
    let c = &spec.checks;
    for r in &rows {
        if c.trichotomy && r.offset != 0.0 {
            let (value, bound) = (r.mean_q * r.offset.signum(), 0.0);
            report.checks.push(CheckOutcome {
                name: format!("mean q follows sign of offset {}", r.offset),
                value,
                bound,
                passed: value > bound,
            });
        }
        if let (Some(bound), true) = (c.critical_band_mass, r.offset == 0.0) {
            report.checks.push(at_least("critical band mass".into(), r.band_mass, bound));
        }
        if let (Some(bound), Some(f)) = (c.min_fidelity, r.fidelity_extwkb) {
            report.checks.push(at_least(format!("fidelity offset {}", r.offset), f, bound));
        }
    }
    report.barrier = rows;
    Ok(report)
}

fn run_lyapunov(spec: &ExperimentSpec, timer: &mut Timer) -> Result<ExperimentReport> {
    let model = timer.run("model", || spec.model.build())?;
    let k = match spec.model {
        ModelSpec::Kho { k } => k,
        _ => return Err(Error::Unsupported("Lyapunov runs need the kicked model".into()).at_stage("model")),
    };
    let split = timer.run("period map", || hyperbolic_splitting(&model, PhasePoint::new(0.0, 0.0), 1.0))?;
    let row = LyapunovRow {
        k,
        hbar: spec.hbar,
        trace: split.period_map.trace(),
        multiplier: split.multiplier,
        lyapunov: split.lyapunov,
        ehrenfest_time: ehrenfest_time(split.lyapunov, spec.hbar),
        unstable_slope: split.unstable.slope(),
        stable_slope: split.stable.slope(),
    };
    let mut report = empty_report(spec, start_grid(spec)?);
    let within = |name: &str, v: f64, [center, tol]: [f64; 2]| CheckOutcome {
        name: format!("{name} within {center} +- {tol}"),
        value: v,
        bound: tol,
        passed: (v - center).abs() <= tol,
    };
    if let Some(r) = spec.checks.lyapunov {
        report.checks.push(within("lyapunov", row.lyapunov, r));
    }
    if let Some(r) = spec.checks.ehrenfest_time {
        report.checks.push(within("ehrenfest time", row.ehrenfest_time, r));
    }
    report.lyapunov = Some(row);
    Ok(report)
}

/// Runs one experiment. Failures name the stage they came from.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate().map_err(|e| e.at_stage("spec"))?;
    let mut timer = Timer(Vec::new());
    let mut report = match spec.kind {
        ExperimentKind::Propagation => run_propagation(spec, &mut timer),
        ExperimentKind::BarrierSweep => run_barrier(spec, &mut timer),
        ExperimentKind::Lyapunov => run_lyapunov(spec, &mut timer),
    }?;
    report.passed = report.checks.iter().all(|c| c.passed);
    report.timings = timer.0;
    Ok(report)
}

/// Writes `report.json`, the CSV tables, profile CSVs under `profiles/` and
/// `timings.json` into `dir`.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(dir.join("report.json"), json + "\n")?;
    if !report.propagation.is_empty() {
        write_rows_to(&report.propagation, &dir.join("propagation.csv"))?;
    }
    if !report.barrier.is_empty() {
        write_rows_to(&report.barrier, &dir.join("barrier.csv"))?;
    }
    if let Some(row) = &report.lyapunov {
        write_rows_to(std::slice::from_ref(row), &dir.join("lyapunov.csv"))?;
    }
    if !report.profiles.is_empty() {
        let pdir = dir.join("profiles");
        fs::create_dir_all(&pdir)?;
        for (name, rows) in &report.profiles {
            write_rows_to(rows, &pdir.join(format!("{name}.csv")))?;
        }
    }
    let timings = serde_json::to_string_pretty(&report.timings).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(dir.join("timings.json"), timings + "\n")?;
    Ok(())
}
