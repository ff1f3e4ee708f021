//! Interpolating cubic splines over a chord-length parameter.

/// One coordinate of a piecewise cubic `a + b t + c t^2 + d t^3` per knot interval.
#[derive(Debug, Clone)]
struct Cubic1 {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut beta = diag[0];
    x[0] = rhs[0] / beta;
    for i in 1..n {
        c[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i];
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i + 1] * x[i + 1];
    }
    x
}

/// Solves a cyclic tridiagonal system with corner entries `lower[0]` (row 0,
/// last column) and `upper[n-1]` (last row, column 0) via Sherman-Morrison.
fn solve_cyclic(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let (alpha, beta) = (upper[n - 1], lower[0]);
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;
    let x = solve_tridiagonal(lower, &bb, upper, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(lower, &bb, upper, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

impl Cubic1 {
    /// Second-derivative formulation; `m` holds the knot second derivatives.
    fn from_moments(y: &[f64], h: &[f64], m: &[f64]) -> Self {
        let n = h.len();
        let mut out = Cubic1 {
            a: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
            c: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
        };
        for i in 0..n {
            out.a.push(y[i]);
            out.b.push((y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0);
            out.c.push(m[i] / 2.0);
            out.d.push((m[i + 1] - m[i]) / (6.0 * h[i]));
        }
        out
    }

    fn natural(y: &[f64], h: &[f64]) -> Self {
        let n = h.len();
        let mut m = vec![0.0; n + 1];
        if n >= 2 {
            let k = n - 1;
            let mut lower = vec![0.0; k];
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                lower[i] = h[i];
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                upper[i] = h[i + 1];
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h[i + 1] - (y[i + 1] - y[i]) / h[i]);
            }
            let inner = solve_tridiagonal(&lower, &diag, &upper, &rhs);
            m[1..n].copy_from_slice(&inner);
        }
        Self::from_moments(y, h, &m)
    }

    /// `y` has `n + 1` entries with `y[n] == y[0]`.
    fn periodic(y: &[f64], h: &[f64]) -> Self {
        let n = h.len();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let hp = h[(i + n - 1) % n];
            let yp = y[(i + n - 1) % n];
            lower[i] = hp;
            diag[i] = 2.0 * (hp + h[i]);
            upper[i] = h[i];
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - yp) / hp);
        }
        let mut m = solve_cyclic(&lower, &diag, &upper, &rhs);
        m.push(m[0]);
        Self::from_moments(y, h, &m)
    }

    fn eval(&self, i: usize, t: f64) -> f64 {
        self.a[i] + t * (self.b[i] + t * (self.c[i] + t * self.d[i]))
    }
}

/// Planar interpolating cubic spline through waypoints.
#[derive(Debug, Clone)]
pub(crate) struct PlanarSpline {
    knots: Vec<f64>,
    x: Cubic1,
    y: Cubic1,
}

impl PlanarSpline {
    /// Fits through `points`. A closed spline expects `points.last() ==
    /// points.first()` and is periodic in value and first two derivatives;
    /// an open spline has zero curvature at both ends.
    pub(crate) fn fit(points: &[(f64, f64)], closed: bool) -> Self {
        let h: Vec<f64> = points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
            .collect();
        let mut knots = vec![0.0];
        for hi in &h {
            knots.push(knots.last().unwrap() + hi);
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        let (x, y) = if closed && h.len() >= 3 {
            (Cubic1::periodic(&xs, &h), Cubic1::periodic(&ys, &h))
        } else {
            (Cubic1::natural(&xs, &h), Cubic1::natural(&ys, &h))
        };
        PlanarSpline { knots, x, y }
    }

    pub(crate) fn param_length(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub(crate) fn eval(&self, u: f64) -> (f64, f64) {
        let n = self.knots.len() - 1;
        let i = match self.knots.binary_search_by(|k| k.total_cmp(&u)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        };
        let t = u - self.knots[i];
        (self.x.eval(i, t), self.y.eval(i, t))
    }
}
