//! Adaptive Gauss–Kronrod (7/15) integration with caller-supplied breakpoints,
//! plus a fixed four-point Gauss–Legendre rule.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the center
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const GL4_X: [f64; 2] = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL4_W: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

/// Four-point Gauss–Legendre rule on `[a, b]`; exact for cubics.
pub fn gauss_legendre4<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for k in 0..2 {
        let dx = h * GL4_X[k];
        s += GL4_W[k] * (f(c - dx) + f(c + dx));
    }
    s * h
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// `breaks` are points where `f` is known to be non-smooth; those outside
/// `(a, b)` are ignored. The interval with the largest error estimate is
/// bisected until the summed estimate falls below `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<Integral> {
    if !(b > a) {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut nodes: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    nodes.push(a);
    nodes.push(b);
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    nodes.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));

    let max_intervals = 20_000 + 4 * nodes.len();
    let mut heap = BinaryHeap::with_capacity(2 * nodes.len());
    let mut err = 0.0;
    for w in nodes.windows(2) {
        let p = Piece::new(&f, w[0], w[1]);
        err += p.err;
        heap.push(p);
    }
    let mut evaluations = 15 * heap.len();

    while err > tol {
        if heap.len() >= max_intervals {
            return Err(Error::QuadratureNonConvergence {
                estimate: err,
                tolerance: tol,
            });
        }
        let worst = heap.pop().expect("at least one interval");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval cannot be split further in floating point
            err -= worst.err;
            heap.push(Piece { err: 0.0, ..worst });
            continue;
        }
        let left = Piece::new(&f, worst.lo, mid);
        let right = Piece::new(&f, mid, worst.hi);
        evaluations += 30;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        if heap.len() % 512 == 0 {
            // running updates accumulate cancellation error
            err = heap.iter().map(|p| p.err).sum();
        }
    }

    // sum left to right so the result does not depend on refinement order
    let mut pieces = heap.into_vec();
    pieces.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    Ok(Integral {
        value: pieces.iter().map(|p| p.value).sum(),
        error: pieces.iter().map(|p| p.err).sum(),
        evaluations,
    })
}

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl Piece {
    fn new<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Self {
        let (value, err) = gk15(f, lo, hi);
        Self { lo, hi, value, err }
    }
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}
