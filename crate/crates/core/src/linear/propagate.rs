use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

type CMat = DMatrix<Complex64>;

const PADE13: [f64; 14] = [
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
const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &CMat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let id = CMat::identity(n, n);
    if n == 0 {
        return id;
    }
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * Complex64::new(0.5f64.powi(s), 0.0);
    let b = PADE13.map(|x| Complex64::new(x, 0.0));
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .expect("Padé denominator is nonsingular after scaling");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Connected components of the coupling graph of `a`, each sorted.
pub fn block_partition(a: &CMat) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && a[(i, j)] != Complex64::new(0.0, 0.0) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

/// `exp(t a)`, exponentiating each decoupled block separately.
pub fn propagator(a: &CMat, t: f64) -> CMat {
    let n = a.nrows();
    let mut out = CMat::zeros(n, n);
    let tc = Complex64::new(t, 0.0);
    for block in block_partition(a) {
        let m = block.len();
        let sub = CMat::from_fn(m, m, |i, j| a[(block[i], block[j])] * tc);
        let e = expm(&sub);
        for (i, &bi) in block.iter().enumerate() {
            for (j, &bj) in block.iter().enumerate() {
                out[(bi, bj)] = e[(i, j)];
            }
        }
    }
    out
}

const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = a y` from 0 to `t` with the Dormand-Prince 5(4) pair.
pub fn dormand_prince(
    a: &CMat,
    y0: &DVector<Complex64>,
    t: f64,
    rtol: f64,
    atol: f64,
) -> Result<DVector<Complex64>> {
    let mut y = y0.clone();
    if t == 0.0 {
        return Ok(y);
    }
    let norm = one_norm(a).max(1e-12);
    let mut h = (0.1 / norm).min(t);
    let mut time = 0.0;
    let mut k: Vec<DVector<Complex64>> = vec![a * &y; 7];
    let mut steps = 0usize;
    while time < t {
        steps += 1;
        if steps > 10_000_000 {
            return Err(Error::NonFinite(
                "adaptive integration did not finish".into(),
            ));
        }
        let last = h >= t - time;
        if last {
            h = t - time;
        }
        for s in 1..7 {
            let mut stage = y.clone();
            for (j, kj) in k.iter().enumerate().take(s) {
                let w = DP_A[s][j];
                if w != 0.0 {
                    stage.axpy(Complex64::new(h * w, 0.0), kj, Complex64::new(1.0, 0.0));
                }
            }
            k[s] = a * stage;
        }
        // The seventh stage is evaluated at the fifth-order solution.
        let mut next = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            let w = DP_A[6][j];
            if w != 0.0 {
                next.axpy(Complex64::new(h * w, 0.0), kj, Complex64::new(1.0, 0.0));
            }
        }
        let mut err = 0.0f64;
        for i in 0..y.len() {
            let e: Complex64 = (0..7).map(|j| k[j][i] * DP_E[j]).sum::<Complex64>() * h;
            let scale = atol + rtol * y[i].norm().max(next[i].norm());
            err = err.max(e.norm() / scale);
        }
        if !err.is_finite() {
            return Err(Error::NonFinite("adaptive integration".into()));
        }
        if err <= 1.0 {
            time = if last { t } else { time + h };
            y = next;
            k[0] = k[6].clone();
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(y)
}
