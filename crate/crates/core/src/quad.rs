//! Quadrature and summation helpers shared by every module.

const GL_X: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_W: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Ten-point Gauss–Legendre rule on `[x0, x1]`. Never evaluates `f` at the ends.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, x0: f64, x1: f64) -> f64 {
    let mid = 0.5 * (x0 + x1);
    let half = 0.5 * (x1 - x0);
    let mut acc = 0.0;
    for (xi, wi) in GL_X.iter().zip(GL_W) {
        acc += wi * (f(mid - half * xi) + f(mid + half * xi));
    }
    acc * half
}

/// Outcome of adaptive integration; `converged` is false when the depth cap was hit.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub converged: bool,
}

/// Adaptive bisecting Gauss–Legendre quadrature with a mixed absolute/relative tolerance.
///
/// The smoothstep substitution x = x0 + (x1 − x0)(3t² − 2t³) has a Jacobian vanishing
/// at both ends, which tames integrable endpoint singularities.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, x0: f64, x1: f64, rel_tol: f64) -> Integral {
    if x0 == x1 {
        return Integral { value: 0.0, converged: true };
    }
    let len = x1 - x0;
    let g = |t: f64| {
        let x = x0 + len * t * t * (3.0 - 2.0 * t);
        let jac = 6.0 * t * (1.0 - t) * len;
        if jac == 0.0 {
            0.0
        } else {
            f(x) * jac
        }
    };
    let whole = gauss_legendre(&g, 0.0, 1.0);
    let mut state = Refine { rel_tol, budget: MAX_SEGMENTS, noisy: false, failed: false };
    let value = state.refine(&g, 0.0, 1.0, whole, 0);
    Integral { value, converged: !state.failed && value.is_finite() }
}

/// Segment budget per adaptive call; beyond it refinement stops.
const MAX_SEGMENTS: usize = 4_000;
/// Relative noise level below which pieces are accepted regardless of the requested tolerance.
const NOISE: f64 = 1e-11;

struct Refine {
    rel_tol: f64,
    budget: usize,
    noisy: bool,
    failed: bool,
}

impl Refine {
    fn refine<F: Fn(f64) -> f64>(&mut self, f: &F, x0: f64, x1: f64, whole: f64, depth: u32) -> f64 {
        let mid = 0.5 * (x0 + x1);
        let left = gauss_legendre(f, x0, mid);
        let right = gauss_legendre(f, mid, x1);
        let halves = left + right;
        if !halves.is_finite() {
            self.failed = true;
            return halves;
        }
        let err = (halves - whole).abs();
        // Roundoff floor: coordinate maps lose a few digits near infinite endpoints.
        let floor = 1e-300 + NOISE * (left.abs() + right.abs());
        if err <= self.rel_tol * halves.abs() + floor {
            return halves;
        }
        if depth >= 44 || self.budget == 0 || mid <= x0 || mid >= x1 {
            // Roundoff-limited pieces are fine; a large disagreement means divergence.
            if err > 1e-8 * halves.abs() {
                self.failed = true;
            }
            self.noisy = true;
            return halves;
        }
        self.budget -= 1;
        self.refine(f, x0, mid, left, depth + 1) + self.refine(f, mid, x1, right, depth + 1)
    }
}

/// Pairwise (cascade) summation: deterministic for a given slice and
/// accurate to O(log n) ulps, independent of how the slice was filled.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Piecewise-linear interpolation on an increasing abscissa; clamps outside.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = xs.partition_point(|&t| t <= x) - 1;
    let t = (x - xs[j]) / (xs[j + 1] - xs[j]);
    ys[j] + t * (ys[j + 1] - ys[j])
}
