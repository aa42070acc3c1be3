//! Seeded random samples of admissible states, gradients and frames.

use rand::Rng;

use crate::dissipation::GradientField;
use crate::fluid::{Eos, GodunovState, Mode};
use crate::tensor::{self, Mat4, Vec4};

/// A random direction on the unit 2-sphere.
pub fn unit_direction<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// (θ, ψ) log-uniform in θ ∈ [0.01, 100], uniform in ψ ∈ [−5, 5].
pub fn random_thermo_point<R: Rng>(rng: &mut R) -> (f64, f64) {
    let theta = 10f64.powf(rng.gen_range(-2.0..2.0));
    (theta, rng.gen_range(-5.0..5.0))
}

/// A state with θ ∈ [0.5, 2], ψ ∈ [−1, 1] and speed below 0.7.
pub fn random_state<R: Rng>(rng: &mut R, eos: &dyn Eos) -> GodunovState {
    let theta = rng.gen_range(0.5..2.0);
    let psi = rng.gen_range(-1.0..1.0);
    let dir = unit_direction(rng);
    let speed = rng.gen_range(0.0..0.7);
    let v = dir.map(|x| x * speed);
    GodunovState::moving(theta, &v, psi, eos.mode()).expect("sampled state is admissible")
}

pub fn random_boost<R: Rng>(rng: &mut R, max_speed: f64) -> Mat4 {
    let dir = unit_direction(rng);
    let speed = rng.gen_range(0.0..max_speed);
    tensor::boost(&dir.map(|x| x * speed)).expect("subluminal boost")
}

/// Entries uniform in [−1, 1]; the ψ row is zero in barotropic mode.
pub fn random_gradient<R: Rng>(rng: &mut R, mode: Mode) -> GradientField {
    let mut g = [[0.0; 4]; 5];
    for row in g.iter_mut().take(mode.fields()) {
        for x in row.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
    }
    GradientField::new(g, mode)
}

pub fn random_antisymmetric<R: Rng>(rng: &mut R) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in i + 1..4 {
            let v = rng.gen_range(-1.0..1.0);
            m[i][j] = v;
            m[j][i] = -v;
        }
    }
    m
}

/// A covector with ξ^βξ_β = 1 and |ξ_0| ≤ 2.
pub fn random_spacelike_unit<R: Rng>(rng: &mut R) -> Vec4 {
    let a: f64 = rng.gen_range(-2.0..2.0);
    let n = unit_direction(rng);
    let s = (1.0 + a * a).sqrt();
    [a, n[0] * s, n[1] * s, n[2] * s]
}

/// (λ, μ, ν) uniform in (0, 1]³.
pub fn random_shift<R: Rng>(rng: &mut R) -> (f64, f64, f64) {
    let mut draw = || 1.0 - rng.gen_range(0.0..1.0);
    (draw(), draw(), draw())
}
