//! Sliding-window estimation of the per-step turn ("evolution matrix") and the
//! instantaneous curvature center.
//!
//! Consecutive position increments of a target on a circle, sampled at a
//! constant rate, are related by a fixed rotation:
//!
//! ```text
//! Δ(j) = [cos δ  −sin δ] Δ(j−1)
//!        [sin δ   cos δ]
//! ```
//!
//! Stacking every pair in the window gives an overdetermined linear system in
//! `(cos δ, sin δ)`. Because the regressor block `[[a_e, −a_n], [a_n, a_e]]`
//! is a scaled rotation, its normal matrix is `|a|²·I` and the least-squares
//! solution reduces to `c = Σ a·b / Σ|a|²`, `s = Σ a×b / Σ|a|²`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;

/// Below this turn angle (rad) the track is treated as a straight line.
pub const EPS_DELTA: f64 = 1e-4;
/// Increments shorter than this (m) carry no direction information.
pub const EPS_INC: f64 = 1e-9;
pub const DEFAULT_WINDOW: usize = 20;
pub const MIN_WINDOW: usize = 3;

/// Bounded, time-ordered buffer of position observations (oldest first).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationWindow {
    capacity: usize,
    samples: VecDeque<(f64, Vec2)>,
}

impl ObservationWindow {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity < MIN_WINDOW {
            return Err(Error::InvalidArgument(format!(
                "window capacity must be at least {MIN_WINDOW}, got {capacity}"
            )));
        }
        Ok(ObservationWindow {
            capacity,
            samples: VecDeque::with_capacity(capacity + 1),
        })
    }

    /// Builds a window holding the trailing `capacity` samples of `samples`.
    pub fn from_samples<I>(capacity: usize, samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, Vec2)>,
    {
        let mut w = Self::new(capacity)?;
        for (t, p) in samples {
            w.push(t, p)?;
        }
        Ok(w)
    }

    /// Appends an observation, evicting the oldest one once full.
    pub fn push(&mut self, t: f64, pos: Vec2) -> Result<()> {
        if !t.is_finite() || !pos.is_finite() {
            return Err(Error::InvalidArgument("observation must be finite".into()));
        }
        if let Some(&(last, _)) = self.samples.back() {
            if !(t > last) {
                return Err(Error::NonMonotoneTime { t, last });
            }
        }
        self.samples.push_back((t, pos));
        if self.samples.len() > self.capacity {
            self.samples.pop_front();
        }
        Ok(())
    }

    /// Value-semantics variant of [`push`](Self::push).
    pub fn with_observation(&self, t: f64, pos: Vec2) -> Result<Self> {
        let mut w = self.clone();
        w.push(t, pos)?;
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &(f64, Vec2)> + ExactSizeIterator {
        self.samples.iter()
    }

    pub fn last(&self) -> Option<(f64, Vec2)> {
        self.samples.back().copied()
    }

    /// The most recent `n` samples as a new window of capacity `max(n, 3)`.
    pub fn tail(&self, n: usize) -> Result<Self> {
        let skip = self.len().saturating_sub(n);
        Self::from_samples(n.max(MIN_WINDOW), self.samples.iter().skip(skip).copied())
    }

    fn require(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            return Err(Error::InsufficientData {
                needed,
                got: self.len(),
            });
        }
        Ok(())
    }

    /// Time between the last two samples.
    pub fn last_interval(&self) -> Result<f64> {
        self.require(2)?;
        let n = self.len();
        Ok(self.samples[n - 1].0 - self.samples[n - 2].0)
    }

    /// Mean sampling interval and the worst relative deviation from it.
    pub fn sampling_interval(&self) -> Result<(f64, f64)> {
        self.require(2)?;
        let gaps: Vec<f64> = self
            .samples
            .iter()
            .zip(self.samples.iter().skip(1))
            .map(|(a, b)| b.0 - a.0)
            .collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let jitter = gaps
            .iter()
            .map(|g| (g - mean).abs() / mean)
            .fold(0.0, f64::max);
        Ok((mean, jitter))
    }
}

/// Consecutive position differences, oldest first.
pub fn build_increments(w: &ObservationWindow) -> Result<Vec<Vec2>> {
    w.require(2)?;
    Ok(w.iter()
        .zip(w.iter().skip(1))
        .map(|(a, b)| b.1 - a.1)
        .collect())
}

/// Unit-normalized least-squares rotation between consecutive increments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionMatrix {
    /// cos δ
    pub c: f64,
    /// sin δ
    pub s: f64,
    /// Turn per sample (rad), `atan2(s, c)`.
    pub delta: f64,
}

impl EvolutionMatrix {
    pub fn from_angle(delta: f64) -> Self {
        let (s, c) = delta.sin_cos();
        EvolutionMatrix { c, s, delta }
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        v.rotate_cs(self.c, self.s)
    }

    pub fn is_straight(&self) -> bool {
        self.delta.abs() < EPS_DELTA
    }
}

/// Unconstrained least-squares `(c, s)` minimizing
/// `Σ |Δ(j) − (c·Δ(j−1) + s·perp(Δ(j−1)))|²`.
pub fn least_squares_rotation(increments: &[Vec2]) -> Result<(f64, f64)> {
    if increments.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: increments.len(),
        });
    }
    if increments.iter().all(|d| d.norm() <= EPS_INC) {
        return Err(Error::DegenerateIncrements);
    }
    // Normalizing by the mean increment length keeps the sums O(n).
    let scale = increments.iter().map(|d| d.norm()).sum::<f64>() / increments.len() as f64;
    let (mut ab, mut axb, mut aa) = (0.0, 0.0, 0.0);
    for pair in increments.windows(2) {
        let a = pair[0].scale(1.0 / scale);
        let b = pair[1].scale(1.0 / scale);
        ab += a.dot(b);
        axb += a.cross(b);
        aa += a.norm_sq();
    }
    if !(aa > 0.0) {
        return Err(Error::DegenerateIncrements);
    }
    Ok((ab / aa, axb / aa))
}

/// Residual norm of the stacked increment system at `(c, s)`.
pub fn ls_residual(increments: &[Vec2], c: f64, s: f64) -> f64 {
    increments
        .windows(2)
        .map(|p| (p[1] - p[0].rotate_cs(c, s)).norm_sq())
        .sum::<f64>()
        .sqrt()
}

pub fn solve_evolution(increments: &[Vec2]) -> Result<EvolutionMatrix> {
    let (c, s) = least_squares_rotation(increments)?;
    let norm = c.hypot(s);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateIncrements);
    }
    let (c, s) = (c / norm, s / norm);
    Ok(EvolutionMatrix {
        c,
        s,
        delta: s.atan2(c),
    })
}

/// How the curvature center is placed relative to the latest chord.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterMode {
    /// `p0 = p(k) + (−Δ_n, Δ_e)/δ`, the first-order small-angle form.
    /// Biased by roughly `r·δ/2` along the chord.
    Raw,
    /// Perpendicular bisector of the latest chord at distance
    /// `|Δ| / (2·tan(δ/2))`; exact on circular arcs.
    #[default]
    MidpointCorrected,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEstimate {
    /// `None` on straight-line (or stationary) windows.
    pub center: Option<Vec2>,
    pub radius: Option<f64>,
    /// Chord speed of the latest increment (m/s).
    pub speed: f64,
    pub delta: f64,
    /// Unit direction of the latest increment; zero when stationary.
    pub heading: Vec2,
    pub straight_line: bool,
}

/// Recovers center, radius and speed from the window's latest increment and
/// the estimated per-sample turn.
pub fn curvature_center(
    w: &ObservationWindow,
    ev: &EvolutionMatrix,
    mode: CenterMode,
) -> Result<CurvatureEstimate> {
    w.require(2)?;
    let n = w.len();
    let (t_prev, p_prev) = w.samples[n - 2];
    let (t_last, p_last) = w.samples[n - 1];
    let inc = p_last - p_prev;
    let chord = inc.norm();
    let speed = chord / (t_last - t_prev);
    let stationary = chord <= EPS_INC;
    let heading = if stationary {
        Vec2::ZERO
    } else {
        inc.scale(1.0 / chord)
    };

    if stationary || ev.is_straight() {
        return Ok(CurvatureEstimate {
            center: None,
            radius: None,
            speed,
            delta: ev.delta,
            heading,
            straight_line: true,
        });
    }

    let delta = ev.delta;
    let center = match mode {
        CenterMode::Raw => p_last + inc.perp().scale(1.0 / delta),
        CenterMode::MidpointCorrected => {
            let mid = (p_prev + p_last).scale(0.5);
            mid + inc.perp().scale(1.0 / (2.0 * (0.5 * delta).tan()))
        }
    };
    let radius = chord / (2.0 * (0.5 * delta.abs()).sin());
    Ok(CurvatureEstimate {
        center: Some(center),
        radius: Some(radius),
        speed,
        delta,
        heading,
        straight_line: false,
    })
}

/// Mean chord speed `|Δpos|/Δt` over the window.
pub fn estimate_speed(w: &ObservationWindow) -> Result<f64> {
    w.require(2)?;
    let speeds: Vec<f64> = w
        .iter()
        .zip(w.iter().skip(1))
        .map(|(a, b)| (b.1 - a.1).norm() / (b.0 - a.0))
        .collect();
    Ok(speeds.iter().sum::<f64>() / speeds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Uniformly sampled circle: `center + r·(cos θ_k, sin θ_k)`, `θ_k = φ + k·δ`.
    fn circle(
        center: Vec2,
        r: f64,
        phase: f64,
        delta: f64,
        dt: f64,
        n: usize,
        cap: usize,
    ) -> ObservationWindow {
        ObservationWindow::from_samples(
            cap,
            (0..n).map(|k| {
                let th = phase + delta * k as f64;
                (k as f64 * dt, center + Vec2::from_angle(th).scale(r))
            }),
        )
        .unwrap()
    }

    #[test]
    fn push_semantics() {
        let mut w = ObservationWindow::new(5).unwrap();
        assert!(w.is_empty());
        w.push(0.0, Vec2::new(1.0, 2.0)).unwrap();
        assert_eq!(w.len(), 1);
        for k in 1..5 {
            w.push(k as f64, Vec2::new(k as f64, 0.0)).unwrap();
        }
        assert!(w.is_full());
        w.push(5.0, Vec2::new(5.0, 0.0)).unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(w.iter().next().unwrap().0, 1.0);

        let mut w = ObservationWindow::new(3).unwrap();
        w.push(1.0, Vec2::ZERO).unwrap();
        assert_eq!(
            w.push(1.0, Vec2::ZERO),
            Err(Error::NonMonotoneTime { t: 1.0, last: 1.0 })
        );
        assert!(ObservationWindow::new(2).is_err());
    }

    #[test]
    fn with_observation_leaves_original() {
        let w = ObservationWindow::new(3).unwrap();
        let w2 = w.with_observation(0.0, Vec2::ZERO).unwrap();
        assert_eq!(w.len(), 0);
        assert_eq!(w2.len(), 1);
    }

    #[test]
    fn increments_basic() {
        let w = ObservationWindow::from_samples(
            5,
            [
                (0.0, Vec2::new(0.0, 0.0)),
                (1.0, Vec2::new(1.0, 0.0)),
                (2.0, Vec2::new(1.0, 1.0)),
            ],
        )
        .unwrap();
        assert_eq!(
            build_increments(&w).unwrap(),
            vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]
        );

        let w = ObservationWindow::from_samples(5, [(0.0, Vec2::ZERO)]).unwrap();
        assert_eq!(
            build_increments(&w),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        );
    }

    #[test]
    fn circle_increments_are_chords() {
        let (r, delta) = (10.0_f64, 0.05_f64);
        let chord = 2.0 * r * (delta / 2.0).sin();
        assert!((chord - 0.499_947_918).abs() < 1e-9);
        let w = circle(Vec2::ZERO, r, 0.3, delta, 0.1, 20, 20);
        for inc in build_increments(&w).unwrap() {
            assert!((inc.norm() - chord).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_on_circles_and_lines() {
        let w = circle(Vec2::new(3.0, 4.0), 10.0, 0.0, 0.05, 0.1, 20, 20);
        let ev = solve_evolution(&build_increments(&w).unwrap()).unwrap();
        assert!((ev.c - 0.05f64.cos()).abs() < 1e-9);
        assert!((ev.s - 0.05f64.sin()).abs() < 1e-9);
        assert!((ev.delta - 0.05).abs() < 1e-9);
        assert!((ev.c * ev.c + ev.s * ev.s - 1.0).abs() < 1e-12);

        let ev = solve_evolution(&[Vec2::new(1.0, 0.0); 3]).unwrap();
        assert_eq!((ev.c, ev.s, ev.delta), (1.0, 0.0, 0.0));

        let w = circle(Vec2::ZERO, 7.0, 1.0, -0.1, 0.1, 20, 20);
        let ev = solve_evolution(&build_increments(&w).unwrap()).unwrap();
        assert!((ev.delta + 0.1).abs() < 1e-9);
    }

    #[test]
    fn solve_errors() {
        assert_eq!(
            solve_evolution(&[Vec2::new(1.0, 0.0)]),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        );
        assert_eq!(
            solve_evolution(&[Vec2::ZERO; 4]),
            Err(Error::DegenerateIncrements)
        );
        // Only the last increment moves, so no regressor carries direction.
        assert_eq!(
            solve_evolution(&[Vec2::ZERO, Vec2::new(1.0, 0.0)]),
            Err(Error::DegenerateIncrements)
        );
    }

    #[test]
    fn center_recovery_both_modes() {
        let c = Vec2::new(3.0, 4.0);
        let w = circle(c, 10.0, 0.0, 0.05, 0.1, 20, 20);
        let ev = solve_evolution(&build_increments(&w).unwrap()).unwrap();

        let est = curvature_center(&w, &ev, CenterMode::MidpointCorrected).unwrap();
        assert!(!est.straight_line);
        assert!(est.center.unwrap().distance(c) < 1e-9);
        assert!((est.radius.unwrap() - 10.0).abs() < 1e-9);

        let raw = curvature_center(&w, &ev, CenterMode::Raw).unwrap();
        let bias = raw.center.unwrap().distance(c);
        assert!(bias < 0.5, "raw bias {bias}");
        assert!(
            bias > 0.1,
            "raw mode should show its first-order bias, got {bias}"
        );
    }

    #[test]
    fn center_clockwise() {
        let c = Vec2::new(-2.0, 1.0);
        let w = circle(c, 5.0, 2.0, -0.08, 0.1, 10, 10);
        let ev = solve_evolution(&build_increments(&w).unwrap()).unwrap();
        let est = curvature_center(&w, &ev, CenterMode::MidpointCorrected).unwrap();
        assert!(est.center.unwrap().distance(c) < 1e-9);
        assert!((est.radius.unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn straight_line_flag() {
        let w = ObservationWindow::from_samples(
            5,
            (0..5).map(|k| (k as f64, Vec2::new(k as f64, 0.0))),
        )
        .unwrap();
        let ev = solve_evolution(&build_increments(&w).unwrap()).unwrap();
        let est = curvature_center(&w, &ev, CenterMode::MidpointCorrected).unwrap();
        assert!(est.straight_line);
        assert!(est.center.is_none() && est.radius.is_none());
        assert_eq!(est.heading, Vec2::new(1.0, 0.0));
        assert_eq!(est.speed, 1.0);
    }

    #[test]
    fn speed_estimates() {
        let w = ObservationWindow::from_samples(3, [(0.0, Vec2::ZERO), (1.0, Vec2::new(1.0, 0.0))])
            .unwrap();
        assert_eq!(estimate_speed(&w).unwrap(), 1.0);

        let w = circle(Vec2::ZERO, 10.0, 0.0, 0.05, 0.1, 20, 20);
        let expected = 5.0 * (0.025f64.sin() / 0.025);
        assert!((expected - 4.99948).abs() < 1e-5);
        assert!((estimate_speed(&w).unwrap() - expected).abs() < 1e-12);

        let w = ObservationWindow::from_samples(3, (0..3).map(|k| (k as f64, Vec2::new(2.0, 2.0))))
            .unwrap();
        assert_eq!(estimate_speed(&w).unwrap(), 0.0);
        let w = ObservationWindow::new(3).unwrap();
        assert!(matches!(
            estimate_speed(&w),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn full_system_residual_beats_single_pairs() {
        use rand_chacha::ChaCha8Rng;
        use rand_core::{RngCore, SeedableRng};
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut noise = || (rng.next_u64() as f64 / u64::MAX as f64 - 0.5) * 0.2;
            let w = ObservationWindow::from_samples(
                20,
                (0..20).map(|k| {
                    let p = Vec2::from_angle(0.05 * k as f64).scale(10.0);
                    (k as f64 * 0.1, p + Vec2::new(noise(), noise()))
                }),
            )
            .unwrap();
            let inc = build_increments(&w).unwrap();
            let (c, s) = least_squares_rotation(&inc).unwrap();
            let full = ls_residual(&inc, c, s);
            for j in 0..inc.len() - 1 {
                let (cj, sj) = least_squares_rotation(&inc[j..j + 2]).unwrap();
                assert!(full <= ls_residual(&inc, cj, sj) + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn exact_on_circles(
            r in 1.0..1000.0f64,
            delta_mag in 1e-4..0.5f64,
            ccw in any::<bool>(),
            phase in -3.2..3.2f64,
            ce in -500.0..500.0f64,
            cn in -500.0..500.0f64,
        ) {
            let delta = if ccw { delta_mag } else { -delta_mag };
            let c = Vec2::new(ce, cn);
            let w = circle(c, r, phase, delta, 0.1, 20, 20);
            let ev = solve_evolution(&build_increments(&w).unwrap()).unwrap();
            prop_assert!((ev.c * ev.c + ev.s * ev.s - 1.0).abs() <= 1e-12);
            prop_assert!((ev.delta - delta).abs() <= 1e-9);
            if !ev.is_straight() {
                let est = curvature_center(&w, &ev, CenterMode::MidpointCorrected).unwrap();
                prop_assert!(est.center.unwrap().distance(c) <= 1e-9 * r.max(1.0) * (1.0 + c.norm() / r));
            }
        }

        #[test]
        fn rotation_and_scale_invariance(
            phi in -3.2..3.2f64,
            pivot_e in -50.0..50.0f64,
            pivot_n in -50.0..50.0f64,
            lambda in 0.01..100.0f64,
            delta in 0.01..0.4f64,
        ) {
            let w = circle(Vec2::new(1.0, -2.0), 8.0, 0.4, delta, 0.1, 12, 12);
            let pivot = Vec2::new(pivot_e, pivot_n);
            let rotated = ObservationWindow::from_samples(
                12, w.iter().map(|&(t, p)| (t, pivot + (p - pivot).rotate(phi)))).unwrap();
            let scaled = ObservationWindow::from_samples(
                12, w.iter().map(|&(t, p)| (t, p.scale(lambda)))).unwrap();

            let ev = solve_evolution(&build_increments(&w).unwrap()).unwrap();
            let ev_rot = solve_evolution(&build_increments(&rotated).unwrap()).unwrap();
            let ev_sc = solve_evolution(&build_increments(&scaled).unwrap()).unwrap();
            prop_assert!((ev.delta - ev_rot.delta).abs() <= 1e-12);
            prop_assert!((ev.delta - ev_sc.delta).abs() <= 1e-12);

            let est = curvature_center(&w, &ev, CenterMode::MidpointCorrected).unwrap();
            let est_sc = curvature_center(&scaled, &ev_sc, CenterMode::MidpointCorrected).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            prop_assert!(rel(est_sc.radius.unwrap(), lambda * est.radius.unwrap()) <= 1e-9);
            let (last, last_sc) = (w.last().unwrap().1, scaled.last().unwrap().1);
            let disp = est.center.unwrap() - last;
            let disp_sc = est_sc.center.unwrap() - last_sc;
            prop_assert!((disp_sc - disp.scale(lambda)).norm() <= 1e-9 * lambda * disp.norm());
        }
    }
}
