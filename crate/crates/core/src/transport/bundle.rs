use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{flow_between, FlowResult, DEFAULT_DT_MAX};
use crate::error::{Error, Result};
use crate::models::{HamiltonianModel, QuadraticPhase};

/// Knobs for seeding and caustic monitoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundleOptions {
    /// `phi'` is checked at least this often along every trajectory.
    pub monitor_dt: f64,
    /// A caustic is declared when `phi'` drops below this value.
    pub caustic_threshold: f64,
    pub dt_max: f64,
}

impl Default for BundleOptions {
    fn default() -> Self {
        Self {
            monitor_dt: 0.01,
            caustic_threshold: 1e-6,
            dt_max: DEFAULT_DT_MAX,
        }
    }
}

/// State of every seed at one sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleSlice {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub action: Vec<f64>,
    /// `dq(t)/dx` along the initial manifold.
    pub dphi: Vec<f64>,
    /// `dp(t)/dx` along the initial manifold.
    pub dp_dx: Vec<f64>,
    /// Smallest `phi'` met on `[0, t]` by each seed.
    pub min_dphi: Vec<f64>,
}

/// Trajectories launched from `(S0'(x_i), x_i)` for uniformly spaced `x_i`.
#[derive(Debug, Clone)]
pub struct TrajectoryBundle {
    pub(crate) model: HamiltonianModel,
    pub(crate) phase0: QuadraticPhase,
    pub(crate) options: BundleOptions,
    pub seeds: Vec<f64>,
    pub slices: Vec<BundleSlice>,
}

impl TrajectoryBundle {
    pub fn model(&self) -> &HamiltonianModel {
        &self.model
    }

    pub fn phase0(&self) -> QuadraticPhase {
        self.phase0
    }

    pub fn options(&self) -> BundleOptions {
        self.options
    }

    pub fn times(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.t).collect()
    }

    pub fn seed_spacing(&self) -> f64 {
        self.seeds[1] - self.seeds[0]
    }

    pub fn slice(&self, t: f64) -> Result<&BundleSlice> {
        self.slices
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .ok_or_else(|| Error::InvalidParameter(format!("time {t} was not sampled by the bundle")))
    }

    /// Smallest `phi'` over every seed and every monitored time.
    pub fn non_contraction(&self) -> f64 {
        self.slices
            .iter()
            .flat_map(|s| s.min_dphi.iter().cloned())
            .fold(f64::INFINITY, f64::min)
    }
}

/// `phi'` of the accumulated tangent map for slope `alpha`.
fn dphi_of(f: &FlowResult, alpha: f64) -> f64 {
    f.tangent.qp() * alpha + f.tangent.qq()
}

struct SeedTrack {
    q: Vec<f64>,
    p: Vec<f64>,
    action: Vec<f64>,
    dphi: Vec<f64>,
    dp_dx: Vec<f64>,
    min_dphi: Vec<f64>,
}

/// Follows one seed through `times`, failing at the first caustic.
fn track_seed(
    model: &HamiltonianModel,
    phase0: QuadraticPhase,
    x: f64,
    times: &[f64],
    opts: &BundleOptions,
) -> Result<SeedTrack> {
    let alpha = phase0.alpha;
    let mut acc = FlowResult::identity(phase0.point(x));
    let mut t = 0.0;
    let mut lowest = 1.0f64;
    let mut track = SeedTrack {
        q: Vec::with_capacity(times.len()),
        p: Vec::with_capacity(times.len()),
        action: Vec::with_capacity(times.len()),
        dphi: Vec::with_capacity(times.len()),
        dp_dx: Vec::with_capacity(times.len()),
        min_dphi: Vec::with_capacity(times.len()),
    };
    for &target in times {
        while t < target {
            let next = (t + opts.monitor_dt).min(target);
            let seg = flow_between(model, acc.end_point, t, next, opts.dt_max)?;
            let candidate = acc.then(&seg);
            let d = dphi_of(&candidate, alpha);
            if !(d >= opts.caustic_threshold) {
                let t_c = locate_caustic(model, &acc, alpha, t, next, opts)?;
                return Err(Error::Caustic {
                    t: t_c,
                    x,
                    derivative: d,
                });
            }
            lowest = lowest.min(d);
            acc = candidate;
            t = next;
        }
        track.q.push(acc.end_point.q);
        track.p.push(acc.end_point.p);
        track.action.push(acc.action);
        track.dphi.push(dphi_of(&acc, alpha));
        track.dp_dx.push(acc.tangent.pp() * alpha + acc.tangent.pq());
        track.min_dphi.push(lowest);
    }
    Ok(track)
}

/// Bisects `(t0, t1]` for the first time `phi'` falls below the threshold.
fn locate_caustic(
    model: &HamiltonianModel,
    start: &FlowResult,
    alpha: f64,
    t0: f64,
    t1: f64,
    opts: &BundleOptions,
) -> Result<f64> {
    let (mut lo, mut hi) = (t0, t1);
    for _ in 0..60 {
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let seg = flow_between(model, start.end_point, t0, mid, opts.dt_max)?;
        if dphi_of(&start.then(&seg), alpha) >= opts.caustic_threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("no sample times".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sample times must be finite, non-negative and strictly increasing: {times:?}"
        )));
    }
    Ok(())
}

/// Flows `n_seeds` uniformly spaced points of the initial manifold over
/// `x_window` and records their states at `times`.
pub fn build_bundle(
    model: &HamiltonianModel,
    phase0: QuadraticPhase,
    x_window: (f64, f64),
    n_seeds: usize,
    times: &[f64],
) -> Result<TrajectoryBundle> {
    build_bundle_with(model, phase0, x_window, n_seeds, times, BundleOptions::default())
}

pub fn build_bundle_with(
    model: &HamiltonianModel,
    phase0: QuadraticPhase,
    x_window: (f64, f64),
    n_seeds: usize,
    times: &[f64],
    options: BundleOptions,
) -> Result<TrajectoryBundle> {
    if n_seeds < 33 {
        return Err(Error::InvalidParameter(format!("need at least 33 seeds, got {n_seeds}")));
    }
    let (a, b) = x_window;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("bad window [{a}, {b}]")));
    }
    if !(options.monitor_dt > 0.0) {
        return Err(Error::InvalidParameter("monitor_dt must be positive".into()));
    }
    validate_times(times)?;
    let seeds: Vec<f64> = (0..n_seeds)
        .map(|i| a + (b - a) * i as f64 / (n_seeds - 1) as f64)
        .collect();
    let tracks: Vec<Result<SeedTrack>> = seeds
        .par_iter()
        .map(|&x| track_seed(model, phase0, x, times, &options))
        .collect();

    // report the earliest caustic among all seeds
    let mut earliest: Option<Error> = None;
    for r in &tracks {
        if let Err(e) = r {
            let replace = match (&earliest, e) {
                (None, _) => true,
                (Some(Error::Caustic { t: t_old, .. }), Error::Caustic { t, .. }) => t < t_old,
                (Some(Error::Caustic { .. }), _) => true,
                _ => false,
            };
            if replace {
                earliest = Some(e.clone());
            }
        }
    }
    if let Some(e) = earliest {
        return Err(e);
    }
    let tracks: Vec<SeedTrack> = tracks.into_iter().map(|r| r.expect("checked above")).collect();

    let slices = times
        .iter()
        .enumerate()
        .map(|(k, &t)| BundleSlice {
            t,
            q: tracks.iter().map(|s| s.q[k]).collect(),
            p: tracks.iter().map(|s| s.p[k]).collect(),
            action: tracks.iter().map(|s| s.action[k]).collect(),
            dphi: tracks.iter().map(|s| s.dphi[k]).collect(),
            dp_dx: tracks.iter().map(|s| s.dp_dx[k]).collect(),
            min_dphi: tracks.iter().map(|s| s.min_dphi[k]).collect(),
        })
        .collect();
    Ok(TrajectoryBundle {
        model: model.clone(),
        phase0,
        options,
        seeds,
        slices,
    })
}

/// Smallest `phi'` met by one trajectory on `[0, t_end]`, or `None` past a caustic.
fn seed_min_dphi(
    model: &HamiltonianModel,
    phase0: QuadraticPhase,
    x: f64,
    t_end: f64,
    opts: &BundleOptions,
) -> Result<Option<f64>> {
    match track_seed(model, phase0, x, &[t_end], opts) {
        Ok(track) => Ok(Some(track.min_dphi[0])),
        Err(Error::Caustic { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Largest interval inside `max_window` around `phase0.q0` whose trajectories
/// keep `phi' >= floor` on `[0, t_end]`.
pub fn caustic_free_window(
    model: &HamiltonianModel,
    phase0: QuadraticPhase,
    max_window: (f64, f64),
    t_end: f64,
    floor: f64,
    options: &BundleOptions,
) -> Result<(f64, f64)> {
    let ok = |x: f64| -> Result<bool> {
        Ok(matches!(seed_min_dphi(model, phase0, x, t_end, options)?, Some(d) if d >= floor))
    };
    let q0 = phase0.q0;
    if !(max_window.0 <= q0 && q0 <= max_window.1) {
        return Err(Error::InvalidParameter("window must contain the centre".into()));
    }
    if !ok(q0)? {
        let track = track_seed(model, phase0, q0, &[t_end], options);
        return Err(match track {
            Err(e) => e,
            Ok(t) => Error::Caustic {
                t: t_end,
                x: q0,
                derivative: t.min_dphi[0],
            },
        });
    }
    let edge = |target: f64| -> Result<f64> {
        const SCAN: usize = 64;
        let mut good = q0;
        for i in 1..=SCAN {
            let x = q0 + (target - q0) * i as f64 / SCAN as f64;
            if ok(x)? {
                good = x;
                continue;
            }
            let mut bad = x;
            for _ in 0..40 {
                let mid = 0.5 * (good + bad);
                if ok(mid)? {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            return Ok(good);
        }
        Ok(good)
    };
    Ok((edge(max_window.0)?, edge(max_window.1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{AnalyticOracle, Dispersion};

    #[test]
    fn free_particle_uniform_stretch() {
        let m = HamiltonianModel::free();
        let ph = QuadraticPhase::new(1.0, 0.0, 1.0);
        let b = build_bundle(&m, ph, (-1.0, 1.0), 33, &[0.0, 0.5, 2.0]).unwrap();
        for s in &b.slices {
            for (i, &d) in s.dphi.iter().enumerate() {
                assert!((d - (1.0 + s.t)).abs() < 1e-12);
                assert!((s.p[i] - ph.momentum(b.seeds[i])).abs() < 1e-15);
            }
        }
        assert!((b.non_contraction() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn caustic_detected_at_minus_inverse_alpha() {
        let m = HamiltonianModel::free();
        let ph = QuadraticPhase::new(0.0, 0.0, -1.0);
        match build_bundle(&m, ph, (-1.0, 1.0), 33, &[0.5, 2.0]) {
            Err(Error::Caustic { t, .. }) => assert!((t - 1.0).abs() < 1e-3, "{t}"),
            other => panic!("expected a caustic, got {other:?}"),
        }
    }

    #[test]
    fn stable_manifold_contracts() {
        let m = HamiltonianModel::barrier(1.0).unwrap();
        let ph = QuadraticPhase::new(0.0, 0.0, -1.0);
        let b = build_bundle(&m, ph, (-1.0, 1.0), 33, &[1.0, 3.0]).unwrap();
        let s = b.slice(3.0).unwrap();
        for &d in &s.dphi {
            assert!((d - (-3.0f64).exp()).abs() < 1e-12);
        }
        assert!((b.non_contraction() - (-3.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn bundle_agrees_with_closed_forms() {
        let m = HamiltonianModel::integrable(Dispersion::quartic(0.1));
        let ph = QuadraticPhase::new(1.0, 0.0, 0.5);
        let b = build_bundle(&m, ph, (-0.5, 0.5), 41, &[1.0, 2.5]).unwrap();
        let o = AnalyticOracle::new(&m, ph).unwrap();
        for s in &b.slices {
            for (i, &x) in b.seeds.iter().enumerate() {
                let (phi, dphi) = o.transport_map(s.t, x).unwrap();
                assert!((s.q[i] - phi).abs() < 1e-12);
                assert!((s.dphi[i] - dphi).abs() < 1e-10);
                assert!(s.dphi[i] > 1.0);
                // momentum is conserved
                assert!((s.p[i] - ph.momentum(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kicked_window_is_trimmed_to_the_caustic_free_part() {
        let m = HamiltonianModel::kicked_harmonic(2.0).unwrap();
        let ph = QuadraticPhase::new(0.0, 0.0, 0.0);
        let opts = BundleOptions::default();
        let (lo, hi) = caustic_free_window(&m, ph, (-1.0, 1.0), 4.0, 1e-2, &opts).unwrap();
        assert!(lo < -0.1 && hi > 0.1 && lo > -1.0 && hi < 1.0, "{lo} {hi}");
        assert!(build_bundle(&m, ph, (lo, hi), 65, &[4.0]).is_ok());
        assert!(matches!(
            build_bundle(&m, ph, (-1.0, 1.0), 65, &[4.0]),
            Err(Error::Caustic { .. })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = HamiltonianModel::free();
        let ph = QuadraticPhase::new(0.0, 0.0, 0.0);
        assert!(build_bundle(&m, ph, (-1.0, 1.0), 8, &[1.0]).is_err());
        assert!(build_bundle(&m, ph, (1.0, -1.0), 33, &[1.0]).is_err());
        assert!(build_bundle(&m, ph, (-1.0, 1.0), 33, &[2.0, 1.0]).is_err());
    }
}
