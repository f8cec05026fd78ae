//! Spin ⊗ truncated Fock space with secular phases and micromotion.
//!
//! Operators act in the interaction picture of the secular oscillator:
//! a → a·e^{−iω_S t}. Rotations R(φ) = diag(e^{iφm}) move the secular phase
//! onto fixed matrices, so D̃±(t) = R(ω_S t)·D±·R(−ω_S t) with
//! D± = exp(±2iη(a + a†)) built once from the eigenbasis of a + a†.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::{Drive, Hamiltonian, ModelFlags};
use crate::error::{Error, Result};
use crate::trap::TrapParams;

pub const DEFAULT_FOCK_M: usize = 64;
pub const FOCK_TAIL_THRESHOLD: f64 = 1e-8;

/// Truncated annihilation operator on Fock levels 0..m.
pub fn annihilation(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

/// a + a† truncated to m levels.
pub fn position(m: usize) -> DMatrix<f64> {
    let a = annihilation(m);
    &a + a.transpose()
}

/// (a + a†)² evaluated before truncation, so the top level keeps its full
/// diagonal 2m + 1.
pub fn position_squared(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            2.0 * i as f64 + 1.0
        } else if j == i + 2 || i == j + 2 {
            let k = i.min(j) as f64;
            ((k + 1.0) * (k + 2.0)).sqrt()
        } else {
            0.0
        }
    })
}

fn rotation_phases(m: usize, phi: f64) -> Vec<C64> {
    (0..m).map(|k| C64::from_polar(1.0, phi * k as f64)).collect()
}

/// Q·diag(e^{i·s·λ})·Qᵀ for the eigen-decomposition of a real symmetric
/// generator.
fn exp_i_scaled(eig: &SymmetricEigen<f64, nalgebra::Dyn>, s: f64) -> DMatrix<C64> {
    let q = eig.eigenvectors.map(|v| C64::new(v, 0.0));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, s * l)));
    &q * d * q.transpose()
}

/// Displacement D(α) = exp(αa† − α*a) on m levels.
pub fn displacement(m: usize, alpha: C64) -> DMatrix<C64> {
    // D(i|α|) = exp(i|α|X); a rotation by arg α − π/2 carries it to D(α)
    let eig = SymmetricEigen::new(position(m));
    let core = exp_i_scaled(&eig, alpha.norm());
    let phi = alpha.arg() - std::f64::consts::FRAC_PI_2;
    let r = rotation_phases(m, phi);
    DMatrix::from_fn(m, m, |i, j| r[i] * core[(i, j)] * r[j].conj())
}

/// Closed-form coherent state e^{−|α|²/2}·αᵐ/√m! on m levels.
pub fn coherent_state(m: usize, alpha: C64) -> Vec<C64> {
    let mut out = Vec::with_capacity(m);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 0..m {
        if k > 0 {
            c *= alpha / (k as f64).sqrt();
        }
        out.push(c);
    }
    out
}

/// Fixed matrices shared by every evaluation of the Fock model.
#[derive(Clone, Debug)]
pub struct FockOps {
    m: usize,
    eta: f64,
    /// D₊ = cos(2ηX) + i·sin(2ηX); D₋ is its complex conjugate.
    cos_part: DMatrix<f64>,
    sin_part: DMatrix<f64>,
}

impl FockOps {
    pub fn new(m: usize, eta: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter("Fock cutoff must be at least 2".into()));
        }
        let eig = SymmetricEigen::new(position(m));
        let q = &eig.eigenvectors;
        let scaled = |f: fn(f64) -> f64| {
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| f(2.0 * eta * l)));
            q * d * q.transpose()
        };
        Ok(Self {
            m,
            eta,
            cos_part: scaled(f64::cos),
            sin_part: scaled(f64::sin),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// D₊ as a dense complex matrix.
    pub fn d_plus(&self) -> DMatrix<C64> {
        self.cos_part.zip_map(&self.sin_part, C64::new)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    m_max: usize,
    coeffs: Vec<C64>,
}

impl FockState {
    /// |0⟩ ⊗ |m = 0⟩.
    pub fn ground(m_max: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * m_max];
        coeffs[0] = C64::new(1.0, 0.0);
        Self { m_max, coeffs }
    }

    pub fn from_coeffs(m_max: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 2 * m_max {
            return Err(Error::InvalidParameter(format!(
                "expected {} Fock amplitudes, got {}",
                2 * m_max,
                coeffs.len()
            )));
        }
        Ok(Self { m_max, coeffs })
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn index(&self, s: usize, m: usize) -> usize {
        s * self.m_max + m
    }

    pub fn spin(&self, s: usize) -> &[C64] {
        &self.coeffs[s * self.m_max..(s + 1) * self.m_max]
    }

    pub fn spin_mut(&mut self, s: usize) -> &mut [C64] {
        &mut self.coeffs[s * self.m_max..(s + 1) * self.m_max]
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        super::integrator::norm_sqr(&self.coeffs)
    }

    pub fn spin_population(&self, s: usize) -> f64 {
        super::integrator::norm_sqr(self.spin(s))
    }

    /// Population in the top 10% of Fock levels (at least one), both spins.
    pub fn tail_mass(&self) -> f64 {
        let top = self.m_max.div_ceil(10).max(1);
        (0..2)
            .map(|s| super::integrator::norm_sqr(&self.spin(s)[self.m_max - top..]))
            .sum()
    }

    pub fn check_cutoff(&self, threshold: f64) -> Result<()> {
        let tail = self.tail_mass();
        if tail > threshold {
            return Err(Error::FockTruncation {
                tail,
                m_max: self.m_max,
            });
        }
        Ok(())
    }
}

/// Full interaction-picture Hamiltonian: micromotion, forward and backward
/// kicks with secular-rotating displacements.
pub struct FockModel<'a> {
    drive: &'a Drive,
    ops: &'a FockOps,
    omega_s: f64,
    omega_rf: f64,
    phi_rf: f64,
    q_z: f64,
    flags: ModelFlags,
    /// Diagonal and second off-diagonal of (a + a†)².
    x2_diag: Vec<f64>,
    x2_off: Vec<f64>,
}

impl<'a> FockModel<'a> {
    pub fn new(drive: &'a Drive, ops: &'a FockOps, trap: &TrapParams, flags: ModelFlags) -> Result<Self> {
        trap.validate()?;
        let omega_s = crate::trap::secular_frequency(trap)?;
        let m = ops.m;
        Ok(Self {
            drive,
            ops,
            omega_s,
            omega_rf: trap.omega_rf,
            phi_rf: trap.phi_rf,
            q_z: trap.q_z,
            flags,
            x2_diag: (0..m).map(|k| 2.0 * k as f64 + 1.0).collect(),
            x2_off: (0..m.saturating_sub(2))
                .map(|k| ((k as f64 + 1.0) * (k as f64 + 2.0)).sqrt())
                .collect(),
        })
    }

    pub fn omega_s(&self) -> f64 {
        self.omega_s
    }

    fn micromotion_active(&self) -> bool {
        self.flags.include_micromotion && self.q_z != 0.0 && self.omega_s > 0.0
    }

    /// Coefficient of (ã + ã†)² at time t.
    fn micromotion_coefficient(&self, t: f64) -> f64 {
        let q = self.q_z;
        self.omega_rf * self.omega_rf / (16.0 * self.omega_s)
            * (2.0 * q * (self.omega_rf * t + self.phi_rf).cos() - 0.5 * q * q)
    }

    fn secular_phase(&self, t: f64) -> f64 {
        if self.flags.frozen_secular {
            0.0
        } else {
            self.omega_s * t
        }
    }

    fn add_x2(&self, c: f64, u: &[C64], r: &[C64], out: &mut [C64]) {
        let m = u.len();
        for k in 0..m {
            let mut acc = u[k] * self.x2_diag[k];
            if k + 2 < m {
                acc += u[k + 2] * self.x2_off[k];
            }
            if k >= 2 {
                acc += u[k - 2] * self.x2_off[k - 2];
            }
            out[k] += r[k] * acc * c;
        }
    }
}

impl Hamiltonian for FockModel<'_> {
    fn dim(&self) -> usize {
        2 * self.ops.m
    }

    fn derivative(&self, t: f64, within: f64, psi: &[C64], out: &mut [C64]) {
        let m = self.ops.m;
        let zero = C64::new(0.0, 0.0);
        // accumulate H·ψ, then multiply by −i
        out.iter_mut().for_each(|o| *o = zero);
        let r = rotation_phases(m, self.secular_phase(t));
        let (p0, p1) = psi.split_at(m);
        let u0: Vec<C64> = p0.iter().zip(&r).map(|(p, r)| p * r.conj()).collect();
        let u1: Vec<C64> = p1.iter().zip(&r).map(|(p, r)| p * r.conj()).collect();
        let (d0, d1) = out.split_at_mut(m);

        if self.micromotion_active() {
            let c = self.micromotion_coefficient(t);
            self.add_x2(c, &u0, &r, d0);
            self.add_x2(c, &u1, &r, d1);
        }

        let g = 0.5 * self.drive.envelope.value_within(t, within);
        if g != 0.0 {
            // C·u and S·u for both spins; the matrices are symmetric
            let (cm, sm) = (self.ops.cos_part.as_slice(), self.ops.sin_part.as_slice());
            let mut c0 = vec![zero; m];
            let mut s0 = vec![zero; m];
            let mut c1 = vec![zero; m];
            let mut s1 = vec![zero; m];
            for j in 0..m {
                let (a0, a1) = (u0[j], u1[j]);
                let col_c = &cm[j * m..(j + 1) * m];
                let col_s = &sm[j * m..(j + 1) * m];
                for i in 0..m {
                    c0[i] += a0 * col_c[i];
                    s0[i] += a0 * col_s[i];
                    c1[i] += a1 * col_c[i];
                    s1[i] += a1 * col_s[i];
                }
            }
            let i_unit = C64::new(0.0, 1.0);
            let em = C64::from_polar(g, self.drive.omega_minus() * t);
            let ep = C64::from_polar(g, self.drive.omega_plus() * t);
            let back = self.flags.include_backward;
            for k in 0..m {
                let dp0 = c0[k] + i_unit * s0[k];
                let dm0 = c0[k] - i_unit * s0[k];
                let dp1 = c1[k] + i_unit * s1[k];
                let dm1 = c1[k] - i_unit * s1[k];
                // σ₊: forward carries D₊, backward D₋
                let mut up = em * dp0;
                let mut down = em.conj() * dm1;
                if back {
                    up += ep * dm0;
                    down += ep.conj() * dp1;
                }
                d1[k] += r[k] * up;
                d0[k] += r[k] * down;
            }
        }
        out.iter_mut().for_each(|o| *o = C64::new(o.im, -o.re));
    }

    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.drive.envelope.breakpoints(t0, t1)
    }

    fn is_idle(&self, t0: f64, t1: f64) -> bool {
        !self.micromotion_active() && self.drive.envelope.value(0.5 * (t0 + t1)) == 0.0
    }
}
