//! The modewise constraint `P^dagger J` against divergence-form operators
//! evaluated by central differences on plane waves.

use gamma_core::symbols::{constraint_residual, PhysicsId, SpectralPoint};
use gamma_core::tensor::ComplexVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Field<'a> = Box<dyn Fn([f64; 4]) -> Vec<Complex64> + 'a>;

fn plane_wave(amp: &ComplexVector, k: [f64; 3], w: f64) -> Field<'_> {
    Box::new(move |x: [f64; 4]| {
        let phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2] - w * x[3];
        let e = Complex64::from_polar(1.0, phase);
        amp.iter().map(|a| a * e).collect()
    })
}

fn d<'a>(f: &'a Field<'a>, axis: usize, h: f64) -> Field<'a> {
    Box::new(move |x: [f64; 4]| {
        let (mut p, mut m) = (x, x);
        p[axis] += h;
        m[axis] -= h;
        f(p).iter().zip(f(m)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    })
}

fn random_amp(rng: &mut ChaCha8Rng, n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `-div d + div div q` (`ncomp` potential components).
fn grad2_divergence(j: &Field, ncomp: usize, h: f64) -> Vec<Complex64> {
    let mut r = vec![Complex64::new(0.0, 0.0); ncomp];
    let x0 = [0.0; 4];
    for a in 0..3 {
        let da = d(j, a, h);
        let v = da(x0);
        for c in 0..ncomp {
            r[c] -= v[a * ncomp + c];
        }
        for b in 0..3 {
            let dab = d(&da, b, h);
            let v = dab(x0);
            for c in 0..ncomp {
                r[c] += v[3 * ncomp + (3 * a + b) * ncomp + c];
            }
        }
    }
    r
}

/// `div d/dt J_1 - div J_2 - d/dt J_3 + J_4`.
fn seepage_divergence(j: &Field, h: f64) -> Vec<Complex64> {
    let x0 = [0.0; 4];
    let mut r = j(x0)[7];
    let dt = d(j, 3, h);
    r -= dt(x0)[6];
    for a in 0..3 {
        let da = d(j, a, h);
        r -= da(x0)[3 + a];
        let dat = d(&da, 3, h);
        r += dat(x0)[a];
    }
    vec![r]
}

fn check(physics: PhysicsId, n: usize, fd: impl Fn(&Field, f64) -> Vec<Complex64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(physics.index() as u64 + 100);
    for _ in 0..20 {
        let k = [rng.random_range(0.1..2.0), rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)];
        let w = if physics.is_static() { 0.0 } else { rng.random_range(0.1..2.0) };
        let amp = random_amp(&mut rng, n);
        let exact = constraint_residual(physics, &amp, &SpectralPoint::new(&k, w)).unwrap();
        let j = plane_wave(&amp, k, w);
        let err = |h: f64| -> f64 {
            fd(&j, h).iter().zip(exact.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        let scale = exact.norm().max(1.0);
        assert!(e1 < 1e-3 * scale, "{physics}: {e1}");
        // second order: halving h divides the error by four
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.1, "{physics}: ratio {ratio}");
    }
}

#[test]
fn charge_conservation() {
    check(PhysicsId::Grad2Electrostatics, 12, |j, h| grad2_divergence(j, 1, h));
}

#[test]
fn force_balance() {
    check(PhysicsId::Grad2Elasticity, 36, |j, h| grad2_divergence(j, 3, h));
}

#[test]
fn seepage_balance() {
    check(PhysicsId::Seepage, 8, seepage_divergence);
}
