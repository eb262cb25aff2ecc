//! One-dimensional Willis model in the transform domain.
//!
//! Moduli symbols `C`, `S`, `rho` are sampled on a finite set of `(k, omega)`
//! points. Eliminating strain, stress and momentum leaves `G_f u = f` and
//! `sigma = G_sigma u`.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WillisError {
    #[error("resonance at k = {k}, omega = {omega}: G_f vanishes")]
    Resonance { k: f64, omega: f64 },
    #[error("zero-coupling recovery needs k != 0 and omega != 0 (k = {k}, omega = {omega})")]
    Undefined { k: f64, omega: f64 },
    #[error("lattices differ")]
    LatticeMismatch,
    #[error("expected {expected} samples, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite sample")]
    NonFinite,
}

/// One lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: f64,
    pub omega: f64,
}

/// Product lattice `k x omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub k: Vec<f64>,
    pub omega: Vec<f64>,
}

impl Lattice {
    pub fn modes(&self) -> Vec<Mode> {
        self.k
            .iter()
            .flat_map(|k| self.omega.iter().map(move |w| Mode { k: *k, omega: *w }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WillisModuli {
    pub modes: Vec<Mode>,
    pub c_hat: Vec<Complex64>,
    pub s_hat: Vec<Complex64>,
    pub rho_hat: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedKernels {
    pub modes: Vec<Mode>,
    pub g_f: Vec<Complex64>,
    pub g_sigma: Vec<Complex64>,
}

fn finite(z: &Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

impl WillisModuli {
    pub fn new(
        modes: Vec<Mode>,
        c_hat: Vec<Complex64>,
        s_hat: Vec<Complex64>,
        rho_hat: Vec<Complex64>,
    ) -> Result<Self, WillisError> {
        for v in [&c_hat, &s_hat, &rho_hat] {
            if v.len() != modes.len() {
                return Err(WillisError::Length {
                    expected: modes.len(),
                    got: v.len(),
                });
            }
            if !v.iter().all(finite) {
                return Err(WillisError::NonFinite);
            }
        }
        if modes.iter().any(|m| !m.k.is_finite() || !m.omega.is_finite()) {
            return Err(WillisError::NonFinite);
        }
        Ok(WillisModuli {
            modes,
            c_hat,
            s_hat,
            rho_hat,
        })
    }

    /// The same `(C, S, rho)` at every mode.
    pub fn constant(modes: Vec<Mode>, c: Complex64, s: Complex64, rho: Complex64) -> Result<Self, WillisError> {
        let n = modes.len();
        WillisModuli::new(modes, vec![c; n], vec![s; n], vec![rho; n])
    }

    /// Random lattice points in `[0.1, 10]^2` with moduli whose real and
    /// imaginary parts are uniform in `[-2, 2]`.
    pub fn random(count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = |rng: &mut ChaCha8Rng| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let mut m = WillisModuli {
            modes: Vec::with_capacity(count),
            c_hat: Vec::with_capacity(count),
            s_hat: Vec::with_capacity(count),
            rho_hat: Vec::with_capacity(count),
        };
        for _ in 0..count {
            m.modes.push(Mode {
                k: rng.random_range(0.1..10.0),
                omega: rng.random_range(0.1..10.0),
            });
            m.c_hat.push(z(&mut rng));
            m.s_hat.push(z(&mut rng));
            m.rho_hat.push(z(&mut rng));
        }
        m
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// `k^2 C - omega k (S + conj S) - omega^2 rho`.
pub fn gf_point(m: Mode, c: Complex64, s: Complex64, rho: Complex64) -> Complex64 {
    c * m.k * m.k - (s + s.conj()) * (m.omega * m.k) - rho * (m.omega * m.omega)
}

/// `i k C - i omega S`.
pub fn gsigma_point(m: Mode, c: Complex64, s: Complex64) -> Complex64 {
    Complex64::i() * (c * m.k - s * m.omega)
}

/// The kernel obtained by eliminating the four transformed relations
/// directly: `k^2 C - omega k (S - conj S) - omega^2 rho`.
pub fn system_gf_point(m: Mode, c: Complex64, s: Complex64, rho: Complex64) -> Complex64 {
    c * m.k * m.k - (s - s.conj()) * (m.omega * m.k) - rho * (m.omega * m.omega)
}

pub fn reduce_gf(m: &WillisModuli) -> Vec<Complex64> {
    (0..m.len())
        .map(|i| gf_point(m.modes[i], m.c_hat[i], m.s_hat[i], m.rho_hat[i]))
        .collect()
}

pub fn reduce_gsigma(m: &WillisModuli) -> Vec<Complex64> {
    (0..m.len())
        .map(|i| gsigma_point(m.modes[i], m.c_hat[i], m.s_hat[i]))
        .collect()
}

pub fn reduce(m: &WillisModuli) -> ReducedKernels {
    ReducedKernels {
        modes: m.modes.clone(),
        g_f: reduce_gf(m),
        g_sigma: reduce_gsigma(m),
    }
}

fn resonant(g: Complex64, m: Mode, c: Complex64, rho: Complex64) -> bool {
    g.norm() <= 1e-12 * ((c * m.k * m.k).norm() + (rho * m.omega * m.omega).norm() + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullSolution {
    pub u: Complex64,
    pub sigma: Complex64,
    pub p: Complex64,
    pub eps: Complex64,
}

/// Solves the four transformed relations for `(u, sigma, p, eps)` as one
/// linear system.
pub fn full_solve_point(
    m: Mode,
    c: Complex64,
    s: Complex64,
    rho: Complex64,
    f: Complex64,
) -> Result<FullSolution, WillisError> {
    if !resonant(system_gf_point(m, c, s, rho), m, c, rho) {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let ik = i * m.k;
        let iw = i * m.omega;
        // unknowns (u, sigma, p, eps)
        let a = Matrix4::new(
            -ik, zero, zero, one, //
            iw * s, one, zero, -c, //
            iw * rho, zero, one, -s.conj(), //
            zero, ik, iw, zero,
        );
        let b = Vector4::new(zero, zero, zero, -f);
        if let Some(x) = a.lu().solve(&b) {
            if x.iter().all(finite) {
                return Ok(FullSolution {
                    u: x[0],
                    sigma: x[1],
                    p: x[2],
                    eps: x[3],
                });
            }
        }
    }
    Err(WillisError::Resonance { k: m.k, omega: m.omega })
}

pub fn full_solve(m: &WillisModuli, f: &[Complex64]) -> Result<Vec<FullSolution>, WillisError> {
    if f.len() != m.len() {
        return Err(WillisError::Length {
            expected: m.len(),
            got: f.len(),
        });
    }
    (0..m.len())
        .map(|i| full_solve_point(m.modes[i], m.c_hat[i], m.s_hat[i], m.rho_hat[i], f[i]))
        .collect()
}

/// `(C, rho)` reproducing `(G_f, G_sigma)` with `S = 0`.
pub fn recover_zero_coupling_point(
    m: Mode,
    g_f: Complex64,
    g_sigma: Complex64,
) -> Result<(Complex64, Complex64), WillisError> {
    if m.k == 0.0 || m.omega == 0.0 {
        return Err(WillisError::Undefined { k: m.k, omega: m.omega });
    }
    let c = g_sigma / (Complex64::i() * m.k);
    let rho = (c * m.k * m.k - g_f) / (m.omega * m.omega);
    Ok((c, rho))
}

pub fn recover_zero_coupling(r: &ReducedKernels) -> Result<WillisModuli, WillisError> {
    let n = r.modes.len();
    let mut c = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    for i in 0..n {
        let (ci, ri) = recover_zero_coupling_point(r.modes[i], r.g_f[i], r.g_sigma[i])?;
        c.push(ci);
        rho.push(ri);
    }
    WillisModuli::new(r.modes.clone(), c, vec![Complex64::new(0.0, 0.0); n], rho)
}

/// `u = u0 + f / G_f`.
pub fn eigenstrain_solve(
    m: &WillisModuli,
    f: &[Complex64],
    u0: &[Complex64],
) -> Result<Vec<Complex64>, WillisError> {
    for v in [f, u0] {
        if v.len() != m.len() {
            return Err(WillisError::Length {
                expected: m.len(),
                got: v.len(),
            });
        }
    }
    (0..m.len())
        .map(|i| {
            let g = gf_point(m.modes[i], m.c_hat[i], m.s_hat[i], m.rho_hat[i]);
            if resonant(g, m.modes[i], m.c_hat[i], m.rho_hat[i]) {
                Err(WillisError::Resonance {
                    k: m.modes[i].k,
                    omega: m.modes[i].omega,
                })
            } else {
                Ok(u0[i] + f[i] / g)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    pub equivalent: bool,
    /// `max |G_1 - G_2| / max(|G_1|, |G_2|, 1)` over both kernels.
    pub max_deviation: f64,
}

/// Whether two sets of moduli give the same reduced kernels.
pub fn equivalence_check(m1: &WillisModuli, m2: &WillisModuli) -> Result<Equivalence, WillisError> {
    if m1.modes != m2.modes {
        return Err(WillisError::LatticeMismatch);
    }
    let (r1, r2) = (reduce(m1), reduce(m2));
    let mut dev: f64 = 0.0;
    for (a, b) in r1.g_f.iter().zip(&r2.g_f).chain(r1.g_sigma.iter().zip(&r2.g_sigma)) {
        dev = dev.max((a - b).norm() / a.norm().max(b.norm()).max(1.0));
    }
    Ok(Equivalence {
        equivalent: dev <= 1e-10,
        max_deviation: dev,
    })
}
