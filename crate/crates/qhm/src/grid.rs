//! Local stencil machinery on the uniform x-grid.
//!
//! Everything here works in grid units (one unit = one grid step). Off-grid
//! evaluation uses barycentric interpolation on `order` consecutive nodes in
//! the second (true-quotient) form: constants reproduce exactly because the
//! numerator and denominator accumulate in the identical order, and an exact
//! node hit bypasses interpolation altogether.

/// Binomial coefficient as f64; exact for the small stencil sizes used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for j in 0..k {
        v = v * (n - j) as f64 / (j + 1) as f64;
    }
    v
}

/// Finite-difference weights via the divided-difference recursion
/// (Fornberg). Nodes `x`, expansion point `z`, derivatives up to `m`.
/// Returns w[j][k] = weight of node j for the k-th derivative.
fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut w = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    w[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[i][k] = c1 * (k as f64 * w[i - 1][k - 1] - c5 * w[i - 1][k]) / c2;
                }
                w[i][0] = -c1 * c5 * w[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                w[j][k] = (c4 * w[j][k] - k as f64 * w[j][k - 1]) / c3;
            }
            w[j][0] = c4 * w[j][0] / c3;
        }
        c1 = c2;
    }
    w
}

/// Centered first-derivative half-weights at unit spacing: with
/// t = 1..order/2, f'(i) ~= sum_t w[t-1] * (f[i+t] - f[i-t]).
/// The antisymmetric pair form makes the derivative of any constant an
/// exact zero.
pub fn fd_half_weights(order: usize) -> Vec<f64> {
    assert!(order >= 2 && order % 2 == 0, "order must be even and >= 2");
    let half = order / 2;
    let nodes: Vec<f64> = (-(half as i64)..=half as i64).map(|t| t as f64).collect();
    let w = fd_weights(0.0, &nodes, 1);
    (1..=half).map(|t| w[half + t][1]).collect()
}

/// Precomputed interpolation of f at every grid target i + sigma, for a
/// fixed real shift sigma (grid units) shared by all i. The stencil is the
/// `order` consecutive nodes centered on the interval containing the target.
#[derive(Debug, Clone)]
pub struct ShiftPlan {
    /// Offset of the first stencil node relative to the output node i.
    pub first: i64,
    /// Un-normalized barycentric coefficients per stencil node.
    pub coeffs: Vec<f64>,
    /// Denominator: sum of `coeffs` in storage order.
    pub denom: f64,
    /// The shift is an exact whole number of grid steps; `first` is that
    /// number and `coeffs`/`denom` are unused.
    pub node_hit: bool,
}

impl ShiftPlan {
    pub fn new(sigma: f64, order: usize) -> ShiftPlan {
        assert!(order >= 4 && order % 2 == 0);
        let k = sigma.floor();
        let frac = sigma - k;
        let k = k as i64;
        if frac == 0.0 {
            return ShiftPlan { first: k, coeffs: Vec::new(), denom: 1.0, node_hit: true };
        }
        let half = (order / 2) as i64;
        // Nodes k - (half-1) .. k + half bracket the target k + frac.
        let first = k - (half - 1);
        let mut coeffs = Vec::with_capacity(order);
        let mut denom = 0.0;
        for j in 0..order {
            let lambda = if j % 2 == 0 { binomial(order - 1, j) } else { -binomial(order - 1, j) };
            // Distance target - node = frac + (half-1) - j.
            let c = lambda / (frac + (half - 1) as f64 - j as f64);
            denom += c;
            coeffs.push(c);
        }
        ShiftPlan { first, coeffs, denom, node_hit: false }
    }

    /// Inclusive range of stencil offsets relative to the output node.
    pub fn offset_range(&self) -> (i64, i64) {
        if self.node_hit {
            (self.first, self.first)
        } else {
            (self.first, self.first + self.coeffs.len() as i64 - 1)
        }
    }
}

/// Barycentric predictor at a point from a punctured symmetric stencil:
/// nodes at offsets -half..-1 and 1..half around the target, target itself
/// excluded. Returns (coefficients in node order, denominator); the
/// predicted value is (sum_j c_j f_j) / denom.
pub fn punctured_predictor(order: usize) -> (Vec<i64>, Vec<f64>, f64) {
    assert!(order >= 4 && order % 2 == 0);
    let half = (order / 2) as i64;
    let offsets: Vec<i64> = (-half..=half).filter(|&o| o != 0).collect();
    let mut coeffs = Vec::with_capacity(offsets.len());
    let mut denom = 0.0;
    for (j, &oj) in offsets.iter().enumerate() {
        let mut lambda = 1.0;
        for (l, &ol) in offsets.iter().enumerate() {
            if l != j {
                lambda /= (oj - ol) as f64;
            }
        }
        // Evaluate the second barycentric form at the target (offset 0).
        let c = lambda / (0 - oj) as f64;
        denom += c;
        coeffs.push(c);
    }
    (offsets, coeffs, denom)
}
