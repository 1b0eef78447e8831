//! Dense matrix exponential via Padé approximation with scaling and
//! squaring (Higham's degree-13 scheme with order-dependent θ thresholds).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

type M = DMatrix<C64>;

fn pade(a: &M, b_coeffs: &[f64]) -> M {
    // Evaluate the (m, m) Padé numerator/denominator and solve.
    let n = a.nrows();
    let id = M::identity(n, n);
    let a2 = a * a;
    let b = |i: usize| C64::new(b_coeffs[i], 0.0);
    match b_coeffs.len() {
        8 => {
            // m = 7
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            let u = a * (&a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
            let v = &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
            solve(&v, &u)
        }
        14 => {
            // m = 13, split evaluation
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            let u = a
                * (&a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
                    + &a6 * b(7)
                    + &a4 * b(5)
                    + &a2 * b(3)
                    + &id * b(1));
            let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
                + &a6 * b(6)
                + &a4 * b(4)
                + &a2 * b(2)
                + &id * b(0);
            solve(&v, &u)
        }
        _ => unreachable!("unsupported Padé order"),
    }
}

fn solve(v: &M, u: &M) -> M {
    // (V − U)^{-1} (V + U)
    let lhs = v - u;
    let rhs = v + u;
    lhs.lu().solve(&rhs).expect("Padé denominator is nonsingular")
}

fn one_norm(a: &M) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// e^A for a square complex matrix.
pub fn expm(a: &M) -> M {
    const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
    const B13: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let nrm = one_norm(a);
    if nrm <= 0.95 {
        return pade(a, &B7);
    }
    const THETA13: f64 = 5.371920351148152;
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a * C64::new(0.5f64.powi(s as i32), 0.0);
    let mut e = pade(&scaled, &B13);
    for _ in 0..s {
        e = &e * &e;
    }
    e
}
