//! Geodesics of the two-dimensional group K with 𝔨 = span{A, V}, [A,V] = V,
//! g(A,A) = 1, g(V,V) = −1, g(A,V) = 0.
//!
//! Velocities are written γ̇ = γ₁A + γ₂V in the left-invariant frame, so the
//! geodesic equation γ̇ₖ + Σ Γᵏᵢⱼ γᵢγⱼ = 0 is an autonomous ODE in ℝ².

use crate::error::{Error, Result};
use crate::nomizu::KData;
use serde::Serialize;

/// Norm at which a solution is declared to have escaped.
pub const BLOWUP_NORM: f64 = 1e8;
/// Largest admissible escape-time bracket.
pub const BRACKET_WIDTH: f64 = 1e-4;
/// Margin absorbing the integration error of the accepted time.
const TIME_MARGIN: f64 = 1e-6;
/// Tolerance band for the null character.
pub const NULL_BAND: f64 = 1e-10;

/// Left-invariant metric on a two-dimensional Lie algebra with basis (A, V)
/// and [A,V] = c V.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KGroupMetric {
    pub c: f64,
    pub g_aa: f64,
    pub g_vv: f64,
    pub g_av: f64,
}

/// `table[x][y]` holds the (A, V) components of ∇_{e_x} e_y, e₀ = A, e₁ = V.
pub type ConnectionTable = [[[f64; 2]; 2]; 2];

impl KGroupMetric {
    pub fn lemma() -> Self {
        Self { c: 1.0, g_aa: 1.0, g_vv: -1.0, g_av: 0.0 }
    }

    /// Normalized data of a terminal chain algebra. A is rescaled to unit
    /// length, which rescales the structure constant by the same factor.
    pub fn from_terminal(k: &KData) -> Result<Self> {
        if k.a_norm <= 0.0 || k.v_norm >= 0.0 {
            return Err(Error::Signature(format!("terminal metric signs ({}, {}) are not (+, −)", k.a_norm, k.v_norm)));
        }
        let a = k.a_norm.sqrt();
        let v = (-k.v_norm).sqrt();
        Ok(Self { c: 1.0 / a, g_aa: 1.0, g_vv: -1.0, g_av: k.av / (a * v) })
    }

    fn gram(&self) -> [[f64; 2]; 2] {
        [[self.g_aa, self.g_av], [self.g_av, self.g_vv]]
    }

    fn bracket(&self, x: usize, y: usize) -> [f64; 2] {
        match (x, y) {
            (0, 1) => [0.0, self.c],
            (1, 0) => [0.0, -self.c],
            _ => [0.0, 0.0],
        }
    }

    fn inner(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        let g = self.gram();
        (0..2).map(|i| (0..2).map(|j| u[i] * g[i][j] * v[j]).sum::<f64>()).sum()
    }

    /// Levi-Civita coefficients from the Koszul formula for left-invariant
    /// fields, 2g(∇_XY,Z) = g([X,Y],Z) − g([Y,Z],X) + g([Z,X],Y).
    pub fn derive_connection(&self) -> Result<ConnectionTable> {
        let g = self.gram();
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if det.abs() < 1e-14 {
            return Err(Error::Degenerate(det));
        }
        let inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
        let e = |i: usize| if i == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
        let mut out = [[[0.0; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                let low: Vec<f64> = (0..2)
                    .map(|z| {
                        0.5 * (self.inner(self.bracket(x, y), e(z)) - self.inner(self.bracket(y, z), e(x))
                            + self.inner(self.bracket(z, x), e(y)))
                    })
                    .collect();
                for k in 0..2 {
                    out[x][y][k] = inv[k][0] * low[0] + inv[k][1] * low[1];
                }
            }
        }
        Ok(out)
    }

    /// γ̇ = −∇_γ̇ γ̇ in frame components.
    pub fn rhs(&self, table: &ConnectionTable, s: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    out[k] -= table[i][j][k] * s[i] * s[j];
                }
            }
        }
        out
    }
}

/// Velocity components (γ₁, γ₂) at parameter t.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeodesicState {
    pub gamma1: f64,
    pub gamma2: f64,
    pub t: f64,
}

impl GeodesicState {
    pub fn new(gamma1: f64, gamma2: f64) -> Self {
        Self { gamma1, gamma2, t: 0.0 }
    }

    pub fn at(gamma1: f64, gamma2: f64, t: f64) -> Self {
        Self { gamma1, gamma2, t }
    }

    pub fn norm(&self) -> f64 {
        self.gamma1.hypot(self.gamma2)
    }

    /// γ₁² − γ₂², the value g(γ̇, γ̇).
    pub fn character_value(&self) -> f64 {
        self.gamma1 * self.gamma1 - self.gamma2 * self.gamma2
    }
}

/// Right-hand side of γ̇₁ = γ₂², γ̇₂ = γ₁γ₂.
pub fn geodesic_rhs(s: &GeodesicState) -> (f64, f64) {
    (s.gamma2 * s.gamma2, s.gamma1 * s.gamma2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalKind {
    Spacelike,
    Null,
    Timelike,
}

/// Labels follow the incompleteness proof: γ₁² − γ₂² < 0 (e.g. (0,1)) is
/// called space-like and γ₁² − γ₂² > 0 time-like, although with
/// g(V,V) = −1 the metric sign says the opposite.
pub fn causal_character(s: &GeodesicState) -> CausalKind {
    let c = s.character_value();
    if c.abs() <= NULL_BAND {
        CausalKind::Null
    } else if c < 0.0 {
        CausalKind::Spacelike
    } else {
        CausalKind::Timelike
    }
}

/// Parameters of the time-like family through (1, r): s = √(1−r²), tanh k = s.
pub fn timelike_parameters(r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Precondition(format!("time-like family needs 0 < r < 1, got {r}")));
    }
    let s = (1.0 - r * r).sqrt();
    Ok((s, s.atanh()))
}

/// Singular times (backward, forward) of the closed-form families; `None`
/// means the solution extends for all times in that direction.
pub fn singular_times(kind: CausalKind, r: f64) -> Result<(Option<f64>, Option<f64>)> {
    Ok(match kind {
        CausalKind::Spacelike => (Some(-std::f64::consts::FRAC_PI_2), Some(std::f64::consts::FRAC_PI_2)),
        CausalKind::Null => (None, Some(1.0)),
        CausalKind::Timelike => {
            let (s, k) = timelike_parameters(r)?;
            (None, Some(k / s))
        }
    })
}

/// Closed-form solutions: space-like (tan t, sec t) from (0,1), null
/// 1/(1−t) from (1,1), time-like (s·coth(k−st), s/sinh(k−st)) from (1,r).
/// The time-like pair (s·coth(st+k), s/sinh(st+k)) with singular time −k/s
/// solves the time-reversed system instead; see [`reversed_timelike`].
pub fn closed_form(kind: CausalKind, r: f64, t: f64) -> Result<GeodesicState> {
    let (lo, hi) = singular_times(kind, r)?;
    if lo.is_some_and(|a| t <= a) {
        return Err(Error::Domain { t, singular_time: lo.unwrap() });
    }
    if hi.is_some_and(|b| t >= b) {
        return Err(Error::Domain { t, singular_time: hi.unwrap() });
    }
    Ok(match kind {
        CausalKind::Spacelike => GeodesicState::at(t.tan(), 1.0 / t.cos(), t),
        CausalKind::Null => GeodesicState::at(1.0 / (1.0 - t), 1.0 / (1.0 - t), t),
        CausalKind::Timelike => {
            let (s, k) = timelike_parameters(r)?;
            let u = k - s * t;
            GeodesicState::at(s / u.tanh(), s / u.sinh(), t)
        }
    })
}

/// (s·coth(st+k), s/sinh(st+k)): equals (1, r) at t = 0 and satisfies
/// ẋ = −y², ẏ = −xy. Singular at t = −k/s.
pub fn reversed_timelike(r: f64, t: f64) -> Result<GeodesicState> {
    let (s, k) = timelike_parameters(r)?;
    if t <= -k / s {
        return Err(Error::Domain { t, singular_time: -k / s });
    }
    let u = s * t + k;
    Ok(GeodesicState::at(s / u.tanh(), s / u.sinh(), t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Self::Forward => 1.0,
            Self::Backward => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupReport {
    pub detected: bool,
    pub direction: Direction,
    /// Signed bracket [t_low, t_high] (ordered on the real line).
    pub t_low: f64,
    pub t_high: f64,
    pub escape_time_estimate: f64,
    pub width: f64,
    pub max_norm_reached: f64,
    /// Refined fixed-step runs across the bracket also diverge.
    pub confirmed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub initial: GeodesicState,
    pub direction: Direction,
    /// Accepted steps, starting with the initial state.
    pub points: Vec<GeodesicState>,
    /// max |γ₁² − γ₂² − (γ₁² − γ₂²)(0)| over the whole run.
    pub character_drift: f64,
    pub rejected_steps: usize,
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

type State = [f64; 2];

fn field(sign: f64, y: State) -> State {
    [sign * y[1] * y[1], sign * y[0] * y[1]]
}

fn dp_step(sign: f64, y: State, h: f64) -> (State, f64) {
    let mut k = [[0.0; 2]; 7];
    for i in 0..7 {
        let mut yi = y;
        for (j, kj) in k.iter().enumerate().take(i) {
            yi[0] += h * A[i][j] * kj[0];
            yi[1] += h * A[i][j] * kj[1];
        }
        k[i] = field(sign, yi);
    }
    let mut y5 = y;
    let mut y4 = y;
    for i in 0..7 {
        for c in 0..2 {
            y5[c] += h * B5[i] * k[i][c];
            y4[c] += h * B4[i] * k[i][c];
        }
    }
    let err = (y5[0] - y4[0]).abs().max((y5[1] - y4[1]).abs());
    (y5, err)
}

fn rk4_step(sign: f64, y: State, h: f64) -> State {
    let add = |a: State, b: State, s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
    let k1 = field(sign, y);
    let k2 = field(sign, add(y, k1, h / 2.0));
    let k3 = field(sign, add(y, k2, h / 2.0));
    let k4 = field(sign, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

fn norm(y: State) -> f64 {
    y[0].hypot(y[1])
}

/// Fixed-step RK4 over `span` with 2^m steps for increasing m: divergence
/// is confirmed when every refinement leaves the threshold and the reached
/// norm grows with refinement.
fn confirm_divergence(sign: f64, y0: State, span: f64) -> bool {
    let mut last = 0.0;
    let mut ok = true;
    for m in [6u32, 8, 10, 12] {
        let steps = 1usize << m;
        let h = span / steps as f64;
        let mut y = y0;
        let mut peak = norm(y);
        for _ in 0..steps {
            y = rk4_step(sign, y, h);
            let nrm = norm(y);
            if !nrm.is_finite() {
                peak = f64::INFINITY;
                break;
            }
            peak = peak.max(nrm);
        }
        ok &= peak > BLOWUP_NORM && peak >= last;
        last = peak;
    }
    ok
}

/// Adaptive Dormand–Prince integration of the geodesic system from `init`
/// up to |t − t₀| = `t_max` in `direction`; `tol` is the local error target
/// (absolute + relative).
pub fn integrate(init: GeodesicState, direction: Direction, t_max: f64, tol: f64) -> Result<(Trajectory, BlowupReport)> {
    if !(tol > 0.0) || !(t_max >= 0.0) {
        return Err(Error::Precondition(format!("need tol > 0 and t_max ≥ 0, got {tol}, {t_max}")));
    }
    let sign = direction.sign();
    let mut y = [init.gamma1, init.gamma2];
    let c0 = init.character_value();
    let mut tau = 0.0;
    let mut h = 1e-3_f64.min(t_max.max(1e-12));
    let mut points = vec![init];
    let mut drift: f64 = 0.0;
    let mut rejected = 0usize;
    let mut max_norm = norm(y);
    let mut escaped = false;
    let mut prev = y;
    while tau < t_max {
        h = h.min(t_max - tau);
        let (y_new, err) = dp_step(sign, y, h);
        let scale = tol * (1.0 + norm(y).max(norm(y_new)));
        if !err.is_finite() || err > scale {
            rejected += 1;
            let f = if err.is_finite() { 0.9 * (scale / err).powf(0.2) } else { 0.1 };
            h *= f.clamp(0.1, 0.5);
            if h < 1e-15 * (1.0 + tau) {
                escaped = true;
                break;
            }
            continue;
        }
        prev = y;
        y = y_new;
        tau += h;
        let st = GeodesicState::at(y[0], y[1], init.t + sign * tau);
        max_norm = max_norm.max(st.norm());
        points.push(st);
        if st.norm() > BLOWUP_NORM {
            escaped = true;
            break;
        }
        drift = drift.max((st.character_value() - c0).abs());
        let f = if err > 0.0 { 0.9 * (scale / err).powf(0.2) } else { 5.0 };
        h *= f.clamp(0.2, 5.0);
    }

    let blowup = if escaped {
        let last = *points.last().unwrap();
        let y_last = [last.gamma1, last.gamma2];
        // Riccati-type growth ‖y‖ ≈ 1/(t₀ − t): remaining time ≈ ‖y‖/‖ẏ‖.
        let fy = field(1.0, y_last);
        let remaining = 2.0 * norm(y_last) / norm(fy).max(f64::MIN_POSITIVE);
        let tau_low = (tau - TIME_MARGIN).max(0.0);
        let tau_high = tau + remaining + TIME_MARGIN;
        let confirmed = confirm_divergence(sign, prev, tau_high - (tau - h_last(&points)));
        let (a, b) = (init.t + sign * tau_low, init.t + sign * tau_high);
        let (t_low, t_high) = if a <= b { (a, b) } else { (b, a) };
        BlowupReport {
            detected: true,
            direction,
            t_low,
            t_high,
            escape_time_estimate: init.t + sign * (tau + 0.5 * remaining),
            width: t_high - t_low,
            max_norm_reached: max_norm,
            confirmed,
        }
    } else {
        BlowupReport {
            detected: false,
            direction,
            t_low: f64::NAN,
            t_high: f64::NAN,
            escape_time_estimate: f64::NAN,
            width: f64::NAN,
            max_norm_reached: max_norm,
            confirmed: false,
        }
    };
    Ok((Trajectory { initial: init, direction, points, character_drift: drift, rejected_steps: rejected }, blowup))
}

fn h_last(points: &[GeodesicState]) -> f64 {
    match points.len() {
        0 | 1 => 0.0,
        n => (points[n - 1].t - points[n - 2].t).abs(),
    }
}

/// Largest deviation of the integrated points from the closed form, over
/// points with |t| ≤ `fraction` of the distance to the singular time (or
/// all points if the family is regular in that direction).
pub fn closed_form_deviation(traj: &Trajectory, kind: CausalKind, r: f64, fraction: f64) -> Result<f64> {
    let (lo, hi) = singular_times(kind, r)?;
    let end = match traj.direction {
        Direction::Forward => hi,
        Direction::Backward => lo,
    };
    let mut dev: f64 = 0.0;
    for p in &traj.points {
        if let Some(e) = end {
            if (p.t - traj.initial.t).abs() > fraction * (e - traj.initial.t).abs() {
                continue;
            }
        }
        let c = closed_form(kind, r, p.t)?;
        dev = dev.max((c.gamma1 - p.gamma1).abs().max((c.gamma2 - p.gamma2).abs()));
    }
    Ok(dev)
}
