use std::path::Path;

use gamma_core::willis::{
    eigenstrain_solve, equivalence_check, full_solve_point, gf_point, recover_zero_coupling, reduce,
    system_gf_point, Equivalence, Mode, ReducedKernels, WillisError, WillisModuli,
};
use gamma_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{complex_vec, ForcingSpec, ModuliSpec, RunConfig};
use crate::report::{Finding, Results};
use crate::{Outcome, RunError};

/// `|u_full - f / G|` against `tol (1 + |u_full|)` for one kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub tolerance: f64,
    pub compared: usize,
    pub passed: usize,
    pub max_relative_deviation: f64,
}

impl OracleComparison {
    fn new(tolerance: f64) -> Self {
        OracleComparison {
            tolerance,
            compared: 0,
            passed: 0,
            max_relative_deviation: 0.0,
        }
    }

    fn add(&mut self, u_full: Complex64, u_kernel: Complex64) {
        let dev = (u_full - u_kernel).norm() / (1.0 + u_full.norm());
        self.compared += 1;
        if dev <= self.tolerance {
            self.passed += 1;
        }
        self.max_relative_deviation = self.max_relative_deviation.max(dev);
    }

    pub fn all_pass(&self) -> bool {
        self.passed == self.compared
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WillisResults {
    pub modes: usize,
    pub kernels: ReducedKernels,
    /// Solution of the four transformed relations against `f / G_f`.
    pub oracle: OracleComparison,
    /// The same against the kernel the four relations themselves imply.
    pub system_kernel: OracleComparison,
    /// `max |i k sigma + i omega p + f|` over solved modes.
    pub max_momentum_residual: f64,
    pub resonances: Vec<Mode>,
    /// Only when every `S` vanishes: worst `|C' - C|`, `|rho' - rho|` after
    /// reduce then recover.
    pub zero_coupling_round_trip: Option<f64>,
    /// Recovered zero-coupling moduli against the originals.
    pub equivalence: Option<Equivalence>,
    /// `max |G_f(S + i beta) - G_f(S)| / max(|G_f|, 1)`.
    pub gf_shift_invariance: f64,
    pub eigenstrain_u: Option<Vec<Complex64>>,
}

fn moduli(cfg: &RunConfig) -> Result<WillisModuli, RunError> {
    let w = cfg
        .willis
        .as_ref()
        .ok_or_else(|| RunError::Config("missing `willis`".into()))?;
    let modes = || {
        w.lattice
            .as_ref()
            .map(|l| l.modes())
            .ok_or_else(|| RunError::Config("missing `willis.lattice`".into()))
    };
    let m = match &w.moduli {
        ModuliSpec::Constant { c, s, rho } => WillisModuli::constant(modes()?, c.value(), s.value(), rho.value()),
        ModuliSpec::Samples { c, s, rho } => {
            WillisModuli::new(modes()?, complex_vec(c), complex_vec(s), complex_vec(rho))
        }
        ModuliSpec::Random { count } => Ok(WillisModuli::random(*count, cfg.seed)),
    };
    m.map_err(|e| RunError::Config(e.to_string()))
}

fn forcing(cfg: &RunConfig, n: usize) -> Vec<Complex64> {
    match cfg.willis.as_ref().map(|w| &w.forcing) {
        Some(ForcingSpec::Random) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(1);
            (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        }
        Some(ForcingSpec::Constant { value }) => vec![value.value(); n],
        None => vec![Complex64::new(1.0, 0.0); n],
    }
}

fn write_kernels(path: &Path, r: &ReducedKernels) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| RunError::Io(e.to_string()))?;
    w.write_record(["k", "omega", "gf_re", "gf_im", "gsigma_re", "gsigma_im"])
        .map_err(|e| RunError::Io(e.to_string()))?;
    for i in 0..r.modes.len() {
        let m = r.modes[i];
        w.write_record(
            [m.k, m.omega, r.g_f[i].re, r.g_f[i].im, r.g_sigma[i].re, r.g_sigma[i].im].map(|x| format!("{x:e}")),
        )
        .map_err(|e| RunError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| RunError::Io(e.to_string()))
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let m = moduli(cfg)?;
    if m.is_empty() {
        return Err(RunError::Config("the Willis lattice is empty".into()));
    }
    let n = m.len();
    let f = forcing(cfg, n);
    let kernels = reduce(&m);
    let mut findings = Vec::new();
    let mut oracle = OracleComparison::new(1e-10);
    let mut system = OracleComparison::new(1e-10);
    let mut momentum: f64 = 0.0;
    let mut resonances = Vec::new();
    let i = Complex64::i();
    for p in 0..n {
        let mode = m.modes[p];
        let (c, s, rho) = (m.c_hat[p], m.s_hat[p], m.rho_hat[p]);
        match full_solve_point(mode, c, s, rho, f[p]) {
            Ok(sol) => {
                oracle.add(sol.u, f[p] / kernels.g_f[p]);
                system.add(sol.u, f[p] / system_gf_point(mode, c, s, rho));
                let r = i * mode.k * sol.sigma + i * mode.omega * sol.p + f[p];
                momentum = momentum.max(r.norm());
            }
            Err(WillisError::Resonance { k, omega }) => {
                resonances.push(mode);
                findings.push(
                    Finding::new("resonance", format!("k={k:e}, omega={omega:e}"), gf_point(mode, c, s, rho).norm(), "the kernel vanishes at this mode")
                        .metric("k", k)
                        .metric("omega", omega),
                );
            }
            Err(e) => return Err(RunError::Check(e.to_string())),
        }
    }
    if !oracle.all_pass() {
        findings.push(
            Finding::new(
                "willis-kernel-sign",
                "G_f",
                oracle.max_relative_deviation,
                "the eliminated relations give k^2 C - omega k (S - conj S) - omega^2 rho",
            )
            .metric("failing_modes", (oracle.compared - oracle.passed) as f64)
            .metric("system_kernel_max_deviation", system.max_relative_deviation),
        );
    }

    let degenerate = m.modes.iter().any(|x| x.k == 0.0 || x.omega == 0.0);
    let (zero_coupling_round_trip, equivalence) = if degenerate {
        findings.push(Finding::new(
            "recovery-undefined",
            "zero-coupling",
            0.0,
            "recovery needs k != 0 and omega != 0 at every mode",
        ));
        (None, None)
    } else {
        let rec = recover_zero_coupling(&kernels).map_err(|e| RunError::Check(e.to_string()))?;
        let rt = if m.s_hat.iter().all(|s| s.norm() == 0.0) {
            let mut worst: f64 = 0.0;
            for p in 0..n {
                worst = worst
                    .max((rec.c_hat[p] - m.c_hat[p]).norm())
                    .max((rec.rho_hat[p] - m.rho_hat[p]).norm());
            }
            Some(worst)
        } else {
            None
        };
        let eq = equivalence_check(&m, &rec).map_err(|e| RunError::Check(e.to_string()))?;
        (rt, Some(eq))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2);
    let mut shift: f64 = 0.0;
    for p in 0..n {
        let beta = rng.random_range(-5.0..5.0);
        let g0 = kernels.g_f[p];
        let g1 = gf_point(m.modes[p], m.c_hat[p], m.s_hat[p] + Complex64::new(0.0, beta), m.rho_hat[p]);
        shift = shift.max((g1 - g0).norm() / g0.norm().max(1.0));
    }

    let eigenstrain_u = match cfg.willis.as_ref().and_then(|w| w.u0) {
        Some(u0) if resonances.is_empty() => {
            Some(eigenstrain_solve(&m, &f, &vec![u0.value(); n]).map_err(|e| RunError::Check(e.to_string()))?)
        }
        _ => None,
    };

    let name = &cfg.outputs.kernels;
    write_kernels(&out.join(name), &kernels)?;

    let passed = oracle.all_pass()
        && zero_coupling_round_trip.is_none_or(|d| d <= 1e-12)
        && equivalence.as_ref().is_none_or(|e| e.equivalent)
        && shift <= 1e-12;
    Ok(Outcome {
        passed,
        results: Results::Willis(WillisResults {
            modes: n,
            kernels,
            oracle,
            system_kernel: system,
            max_momentum_residual: momentum,
            resonances,
            zero_coupling_round_trip,
            equivalence,
            gf_shift_invariance: shift,
            eigenstrain_u,
        }),
        findings,
        outputs: vec![name.clone()],
    })
}
