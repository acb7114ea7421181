#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zerofid::quantum::{haar_isometry_kraus, haar_unitary};
use zerofid::{channel_from_kraus, Channel, Complex64, ComplexMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    random_matrix(n, n, rng).hermitian_part()
}

pub fn random_density(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let a = random_matrix(d, d, rng);
    let rho = &a * &a.adjoint();
    let tr = rho.trace().re;
    rho.scale(1.0 / tr)
}

/// A channel together with the Kraus operators that define it.
pub fn random_kraus_channel(n: usize, env: usize, seed: u64) -> (Channel, Vec<ComplexMatrix>) {
    let kraus = haar_isometry_kraus(1 << n, env, &mut rng(seed));
    (channel_from_kraus(n, &kraus).unwrap(), kraus)
}

/// Σᵢ KᵢρKᵢ†, independent of the Choi representation.
pub fn apply_kraus(kraus: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
    for k in kraus {
        out = &out + &(&(k * rho) * &k.adjoint());
    }
    out
}

pub fn local_unitaries(n: usize, seed: u64) -> Vec<ComplexMatrix> {
    let mut r = rng(seed);
    (0..n).map(|_| haar_unitary(2, &mut r)).collect()
}

pub fn pauli(which: char) -> ComplexMatrix {
    let c = Complex64::new;
    let e = match which {
        'I' => [c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)],
        'X' => [c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
        'Y' => [c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)],
        'Z' => [c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)],
        _ => panic!("unknown Pauli {which}"),
    };
    ComplexMatrix::new(2, 2, e.to_vec()).unwrap()
}
