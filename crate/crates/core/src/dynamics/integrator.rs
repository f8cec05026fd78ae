//! Adaptive explicit Runge–Kutta propagation of i·dψ/dt = H(t)ψ.
//!
//! The stepper is the Dormand–Prince 8(5,3) pair with the combined 5th/3rd
//! order error estimate of Hairer's DOP853. Integration restarts at every
//! envelope breakpoint so no step straddles a discontinuity, and intervals on
//! which the Hamiltonian vanishes are skipped.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A (possibly time-dependent) Hamiltonian acting on a flat amplitude vector.
pub trait Hamiltonian {
    fn dim(&self) -> usize;

    /// Writes −i·H(t)·ψ into `out`. `within` is a time strictly inside the
    /// current smooth segment and resolves one-sided values at breakpoints.
    fn derivative(&self, t: f64, within: f64, psi: &[C64], out: &mut [C64]);

    /// Discontinuities of H in [t0, t1], including both ends.
    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        vec![t0, t1]
    }

    /// True when H vanishes identically on (t0, t1).
    fn is_idle(&self, _t0: f64, _t1: f64) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible step (s).
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            min_step: 1e-18,
            max_steps: 50_000_000,
        }
    }
}

impl Tolerances {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            atol: rtol * 1e-2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PropagationStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// |‖ψ(t1)‖² − ‖ψ(t0)‖²|
    pub norm_drift: f64,
}

impl PropagationStats {
    fn absorb(&mut self, other: PropagationStats) {
        self.steps += other.steps;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
    }
}

pub fn norm_sqr(psi: &[C64]) -> f64 {
    psi.iter().map(|c| c.norm_sqr()).sum()
}

/// Propagates `psi` in place from `t0` to `t1`.
pub fn propagate<H: Hamiltonian + ?Sized>(
    psi: &mut [C64],
    ham: &H,
    t0: f64,
    t1: f64,
    tol: &Tolerances,
) -> Result<PropagationStats> {
    propagate_sampled(psi, ham, &[t0, t1], tol, |_, _| {})
}

/// Propagates through the ascending `times`, calling `observe` with the
/// state at every listed time (the first one included).
pub fn propagate_sampled<H, F>(
    psi: &mut [C64],
    ham: &H,
    times: &[f64],
    tol: &Tolerances,
    mut observe: F,
) -> Result<PropagationStats>
where
    H: Hamiltonian + ?Sized,
    F: FnMut(f64, &[C64]),
{
    tol.validate()?;
    if psi.len() != ham.dim() {
        return Err(Error::InvalidParameter(format!(
            "state dimension {} does not match Hamiltonian dimension {}",
            psi.len(),
            ham.dim()
        )));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("propagation times must ascend".into()));
    }
    let Some(&first) = times.first() else {
        return Ok(PropagationStats::default());
    };
    let norm0 = norm_sqr(psi);
    let mut stats = PropagationStats::default();
    let mut stepper = Dop853::new(psi.len());
    let mut h_prev = None;
    observe(first, psi);
    for w in times.windows(2) {
        for seg in ham.breakpoints(w[0], w[1]).windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b <= a || ham.is_idle(a, b) {
                continue;
            }
            let (s, h) = stepper.integrate(psi, ham, a, b, h_prev, tol)?;
            h_prev = Some(h);
            stats.absorb(s);
        }
        observe(w[1], psi);
    }
    stats.norm_drift = (norm_sqr(psi) - norm0).abs();
    Ok(stats)
}

#[allow(clippy::excessive_precision)]
mod tableau {
    pub const C: [f64; 12] = [
        0.0,
        0.526001519587677318785587544488e-01,
        0.789002279381515978178381316732e-01,
        0.118350341907227396726757197510,
        0.281649658092772603273242802490,
        0.333333333333333333333333333333,
        0.25,
        0.307692307692307692307692307692,
        0.651282051282051282051282051282,
        0.6,
        0.857142857142857142857142857142,
        1.0,
    ];

    pub const A: [[f64; 12]; 12] = [
        [0.0; 12],
        [5.26001519587677318785587544488e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.97250569845378994544595329183e-2, 5.91751709536136983633785987549e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [2.95875854768068491816892993775e-2, 0.0, 8.87627564304205475450678981324e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [
            2.41365134159266685502369798665e-1, 0.0, -8.84549479328286085344864962717e-1,
            9.24834003261792003115737966543e-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ],
        [
            3.7037037037037037037037037037e-2, 0.0, 0.0, 1.70828608729473871279604482173e-1,
            1.25467687566822425016691814123e-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ],
        [
            3.7109375e-2, 0.0, 0.0, 1.70252211019544039314978060272e-1,
            6.02165389804559606850219397283e-2, -1.7578125e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ],
        [
            3.70920001185047927108779319836e-2, 0.0, 0.0, 1.70383925712239993810214054705e-1,
            1.07262030446373284651809199168e-1, -1.53194377486244017527936158236e-2,
            8.27378916381402288758473766002e-3, 0.0, 0.0, 0.0, 0.0, 0.0,
        ],
        [
            6.24110958716075717114429577812e-1, 0.0, 0.0, -3.36089262944694129406857109825,
            -8.68219346841726006818189891453e-1, 2.75920996994467083049415600797e1,
            2.01540675504778934086186788979e1, -4.34898841810699588477366255144e1, 0.0, 0.0, 0.0, 0.0,
        ],
        [
            4.77662536438264365890433908527e-1, 0.0, 0.0, -2.48811461997166764192642586468,
            -5.90290826836842996371446475743e-1, 2.12300514481811942347288949897e1,
            1.52792336328824235832596922938e1, -3.32882109689848629194453265587e1,
            -2.03312017085086261358222928593e-2, 0.0, 0.0, 0.0,
        ],
        [
            -9.3714243008598732571704021658e-1, 0.0, 0.0, 5.18637242884406370830023853209,
            1.09143734899672957818500254654, -8.14978701074692612513997267357,
            -1.85200656599969598641566180701e1, 2.27394870993505042818970056734e1,
            2.49360555267965238987089396762, -3.0467644718982195003823669022, 0.0, 0.0,
        ],
        [
            2.27331014751653820792359768449, 0.0, 0.0, -1.05344954667372501984066689879e1,
            -2.00087205822486249909675718444, -1.79589318631187989172765950534e1,
            2.79488845294199600508499808837e1, -2.85899827713502369474065508674,
            -8.87285693353062954433549289258, 1.23605671757943030647266201528e1,
            6.43392746015763530355970484046e-1, 0.0,
        ],
    ];

    pub const B: [f64; 12] = [
        5.42937341165687622380535766363e-2,
        0.0,
        0.0,
        0.0,
        0.0,
        4.45031289275240888144113950566,
        1.89151789931450038304281599044,
        -5.8012039600105847814672114227,
        3.1116436695781989440891606237e-1,
        -1.52160949662516078556178806805e-1,
        2.01365400804030348374776537501e-1,
        4.47106157277725905176885569043e-2,
    ];

    /// Weights of the 3rd-order error estimate, B − B̂₃ (13th entry pairs
    /// with the derivative at the new point).
    pub const E3: [f64; 13] = [
        5.42937341165687622380535766363e-2 - 0.244094488188976377952755905512,
        0.0,
        0.0,
        0.0,
        0.0,
        4.45031289275240888144113950566,
        1.89151789931450038304281599044,
        -5.8012039600105847814672114227,
        3.1116436695781989440891606237e-1 - 0.733846688281611857341361741547,
        -1.52160949662516078556178806805e-1,
        2.01365400804030348374776537501e-1,
        4.47106157277725905176885569043e-2 - 0.220588235294117647058823529412e-1,
        0.0,
    ];

    pub const E5: [f64; 13] = [
        0.1312004499419488073250102996e-1,
        0.0,
        0.0,
        0.0,
        0.0,
        -0.1225156446376204440720569753e+1,
        -0.4957589496572501915214079952,
        0.1664377182454986536961530415e+1,
        -0.3503288487499736816886487290,
        0.3341791187130174790297318841,
        0.8192320648511571246570742613e-1,
        -0.2235530786388629525884427845e-1,
        0.0,
    ];
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

struct Dop853 {
    k: Vec<Vec<C64>>,
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
}

impl Dop853 {
    fn new(n: usize) -> Self {
        Self {
            k: vec![vec![C64::new(0.0, 0.0); n]; 13],
            y_stage: vec![C64::new(0.0, 0.0); n],
            y_new: vec![C64::new(0.0, 0.0); n],
        }
    }

    fn initial_step<H: Hamiltonian + ?Sized>(
        &mut self,
        y: &[C64],
        ham: &H,
        t: f64,
        within: f64,
        span: f64,
        tol: &Tolerances,
    ) -> f64 {
        // Hairer, Nørsett & Wanner, "Solving ODEs I", II.4
        let n = y.len() as f64;
        ham.derivative(t, within, y, &mut self.k[0]);
        let scale = |c: C64| tol.atol + tol.rtol * c.norm();
        let d0 = (y.iter().map(|c| (c.norm() / scale(*c)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (y
            .iter()
            .zip(&self.k[0])
            .map(|(c, f)| (f.norm() / scale(*c)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        for i in 0..y.len() {
            self.y_stage[i] = y[i] + self.k[0][i] * h0;
        }
        ham.derivative(t + h0, within, &self.y_stage, &mut self.k[1]);
        let d2 = (y
            .iter()
            .zip(self.k[1].iter().zip(&self.k[0]))
            .map(|(c, (f1, f0))| ((f1 - f0).norm() / scale(*c)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (1e-6 * h0).max(h0 * 1e-3)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrates one smooth segment; returns the stats and the last
    /// suggested step size.
    fn integrate<H: Hamiltonian + ?Sized>(
        &mut self,
        y: &mut [C64],
        ham: &H,
        t0: f64,
        t1: f64,
        h_hint: Option<f64>,
        tol: &Tolerances,
    ) -> Result<(PropagationStats, f64)> {
        use tableau::*;
        let n = y.len();
        let span = t1 - t0;
        let within = 0.5 * (t0 + t1);
        let mut stats = PropagationStats::default();
        let mut h = match h_hint {
            Some(h) => h.min(span),
            None => {
                stats.evaluations += 2;
                self.initial_step(y, ham, t0, within, span, tol)
            }
        };
        let mut t = t0;
        ham.derivative(t, within, y, &mut self.k[0]);
        stats.evaluations += 1;
        let mut last_rejected = false;
        let mut h_suggest = h;
        while t < t1 {
            if stats.steps + stats.rejected > tol.max_steps {
                return Err(Error::TooManySteps {
                    t,
                    steps: stats.steps,
                });
            }
            if h < tol.min_step {
                return Err(Error::StepUnderflow { t, step: h });
            }
            let remaining = t1 - t;
            let mut final_step = false;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                final_step = true;
            }

            for s in 1..12 {
                for i in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += self.k[j][i] * *a;
                        }
                    }
                    self.y_stage[i] = y[i] + acc * h;
                }
                let (head, tail) = self.k.split_at_mut(s);
                let _ = head;
                ham.derivative(t + C[s] * h, within, &self.y_stage, &mut tail[0]);
            }
            for i in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (j, b) in B.iter().enumerate() {
                    if *b != 0.0 {
                        acc += self.k[j][i] * *b;
                    }
                }
                self.y_new[i] = y[i] + acc * h;
            }
            let t_new = if final_step { t1 } else { t + h };
            {
                let (head, tail) = self.k.split_at_mut(12);
                let _ = head;
                ham.derivative(t_new, within, &self.y_new, &mut tail[0]);
            }
            stats.evaluations += 12;

            let mut err5 = 0.0;
            let mut err3 = 0.0;
            for i in 0..n {
                let sc = tol.atol + tol.rtol * y[i].norm().max(self.y_new[i].norm());
                let mut e5 = C64::new(0.0, 0.0);
                let mut e3 = C64::new(0.0, 0.0);
                for j in 0..13 {
                    if E5[j] != 0.0 {
                        e5 += self.k[j][i] * E5[j];
                    }
                    if E3[j] != 0.0 {
                        e3 += self.k[j][i] * E3[j];
                    }
                }
                err5 += (e5 / sc).norm_sqr();
                err3 += (e3 / sc).norm_sqr();
            }
            let err = if err5 == 0.0 && err3 == 0.0 {
                0.0
            } else {
                h * err5 / ((err5 + 0.01 * err3) * n as f64).sqrt()
            };

            if err <= 1.0 {
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(ERROR_EXPONENT)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                let factor = if last_rejected { factor.min(1.0) } else { factor };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 12);
                t = t_new;
                stats.steps += 1;
                if !final_step {
                    h_suggest = h * factor;
                }
                h *= factor;
                last_rejected = false;
            } else {
                h *= (SAFETY * err.powf(ERROR_EXPONENT)).max(MIN_FACTOR);
                stats.rejected += 1;
                last_rejected = true;
            }
        }
        Ok((stats, h_suggest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// H = diag(ω_k): each amplitude picks up exp(−iω_k t).
    struct Diagonal(Vec<f64>);

    impl Hamiltonian for Diagonal {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn derivative(&self, _t: f64, _within: f64, psi: &[C64], out: &mut [C64]) {
            for ((o, p), w) in out.iter_mut().zip(psi).zip(&self.0) {
                *o = C64::new(0.0, -w) * p;
            }
        }
    }

    /// Two-level Rabi drive with time-dependent coupling g(t) = g·(1 + sin t).
    struct Driven(f64);

    impl Hamiltonian for Driven {
        fn dim(&self) -> usize {
            2
        }
        fn derivative(&self, t: f64, _within: f64, psi: &[C64], out: &mut [C64]) {
            let g = self.0 * (1.0 + t.sin());
            out[0] = C64::new(0.0, -g) * psi[1];
            out[1] = C64::new(0.0, -g) * psi[0];
        }
    }

    #[test]
    fn zero_hamiltonian_leaves_state_unchanged() {
        let mut psi = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let before = psi.clone();
        propagate(&mut psi, &Diagonal(vec![0.0, 0.0]), 0.0, 1.0, &Tolerances::default()).unwrap();
        assert_eq!(psi, before);
    }

    #[test]
    fn diagonal_phases_are_exact() {
        let w = vec![1.0, -3.5, 40.0];
        let mut psi = vec![C64::new(1.0 / 3f64.sqrt(), 0.0); 3];
        let stats = propagate(&mut psi, &Diagonal(w.clone()), 0.0, 2.0, &Tolerances::default()).unwrap();
        for (p, wk) in psi.iter().zip(&w) {
            let expect = C64::from_polar(1.0 / 3f64.sqrt(), -wk * 2.0);
            assert!((p - expect).norm() < 1e-11, "{p} vs {expect}");
        }
        assert!(stats.norm_drift < 1e-10);
    }

    #[test]
    fn driven_two_level_closed_form() {
        // the coupling commutes with itself, so the rotation angle is ∫g dt
        let g = 3.0;
        let t1 = 2.0;
        let mut psi = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        propagate(&mut psi, &Driven(g), 0.0, t1, &Tolerances::default()).unwrap();
        let angle = g * (t1 + 1.0 - t1.cos());
        assert!((psi[0].re - angle.cos()).abs() < 1e-11);
        assert!((psi[1].im + angle.sin()).abs() < 1e-11);
    }

    #[test]
    fn sampled_times_are_visited() {
        let mut psi = vec![C64::new(1.0, 0.0)];
        let mut seen = vec![];
        propagate_sampled(&mut psi, &Diagonal(vec![2.0]), &[0.0, 0.5, 1.0], &Tolerances::default(), |t, p| {
            seen.push((t, p[0]))
        })
        .unwrap();
        assert_eq!(seen.len(), 3);
        assert!((seen[1].1 - C64::from_polar(1.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn step_underflow_is_reported() {
        let tol = Tolerances {
            min_step: 1.0,
            ..Tolerances::default()
        };
        let mut psi = vec![C64::new(1.0, 0.0)];
        let err = propagate(&mut psi, &Diagonal(vec![1e6]), 0.0, 10.0, &tol).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }));
    }
}
