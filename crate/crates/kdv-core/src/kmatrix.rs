//! The 2×2 projection matrix K(v) and the expansion of its inverse.

use crate::scalar::Scalar;
use crate::soliton::SolitonContext;

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<S> {
    pub a: S,
    pub b: S,
    pub c: S,
    pub d: S,
}

impl<S: Scalar> Mat2<S> {
    pub fn new(a: S, b: S, c: S, d: S) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn det(&self) -> S {
        self.a * self.d - self.b * self.c
    }

    /// Plain inverse; callers check the determinant threshold first.
    pub fn inverse(&self) -> Self {
        let det = self.det();
        Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det)
    }

    pub fn apply(&self, x: (S, S)) -> (S, S) {
        (self.a * x.0 + self.b * x.1, self.c * x.0 + self.d * x.1)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn scale(&self, s: S) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn map<T>(&self, f: impl Fn(S) -> T) -> Mat2<T> {
        Mat2 { a: f(self.a), b: f(self.b), c: f(self.c), d: f(self.d) }
    }
}

impl Mat2<f64> {
    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        [self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d]
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()))
    }
}

/// K(v) together with the functionals b₁..b₄ of v, so that K(v) = K(0) + [[b₁, b₂], [b₃, b₄]].
#[derive(Clone, Copy, Debug)]
pub struct ProjectionMatrix {
    pub k: Mat2<f64>,
    pub b: [f64; 4],
}

/// b₁ = ⟨(x∂+2)v, φ⟩, b₂ = ⟨∂v, φ⟩, b₃ = ⟨(x∂+2)v, ζ⟩, b₄ = ⟨∂v, ζ⟩.
pub fn b_functionals<S: Scalar>(ctx: &SolitonContext, v: &[S]) -> [S; 4] {
    let g = &ctx.grid;
    let dv = g.d1(v);
    let gv: Vec<S> = (0..v.len()).map(|i| dv[i] * g.x[i] + v[i] * 2.0).collect();
    [
        g.dot_w(&gv, &ctx.phi),
        g.dot_w(&dv, &ctx.phi),
        g.dot_w(&gv, &ctx.zeta),
        g.dot_w(&dv, &ctx.zeta),
    ]
}

/// K at v = 0 on the context's grid.
pub fn k_zero(ctx: &SolitonContext) -> Mat2<f64> {
    let g = &ctx.grid;
    Mat2::new(
        g.dot(&ctx.gphi, &ctx.phi),
        0.0,
        g.dot(&ctx.gphi, &ctx.zeta),
        g.dot(&ctx.d1phi, &ctx.zeta),
    )
}

/// K at v = 0 from the continuum values [[9c^{3/2}, 0], [9, −(9/2)c^{1/2}]].
pub fn k_zero_exact(c_star: f64) -> Mat2<f64> {
    Mat2::new(9.0 * c_star.powf(1.5), 0.0, 9.0, -4.5 * c_star.sqrt())
}

/// K(v) built from the quadrature inner products of the matrix definition:
/// [[⟨(x∂+2)[φ+v], φ⟩, ⟨∂v, φ⟩], [⟨(x∂+2)[φ+v], ζ⟩, ⟨∂[φ+v], ζ⟩]].
pub fn k_matrix(ctx: &SolitonContext, v: &[f64]) -> ProjectionMatrix {
    let b = b_functionals(ctx, v);
    let k0 = k_zero(ctx);
    let k = Mat2::new(k0.a + b[0], b[1], k0.c + b[2], k0.d + b[3]);
    ProjectionMatrix { k, b }
}

/// Order-`order` Taylor term of K(v)⁻¹ about the discrete K(0):
/// K₀⁻¹, −K₀⁻¹BK₀⁻¹ or K₀⁻¹BK₀⁻¹BK₀⁻¹ with B = [[b₁, b₂], [b₃, b₄]].
pub fn k_inverse_taylor(ctx: &SolitonContext, v: &[f64], order: usize) -> Mat2<f64> {
    let b = b_functionals(ctx, v);
    taylor_about(&k_zero(ctx), b, order)
}

fn taylor_about(k0: &Mat2<f64>, b: [f64; 4], order: usize) -> Mat2<f64> {
    let p = k0.inverse();
    let bm = Mat2::new(b[0], b[1], b[2], b[3]);
    match order {
        0 => p,
        1 => p.mul(&bm).mul(&p).scale(-1.0),
        2 => p.mul(&bm).mul(&p).mul(&bm).mul(&p),
        _ => panic!("k_inverse_taylor supports orders 0, 1, 2"),
    }
}

/// The same three terms written out entrywise in c* and b₁..b₄, expanding 1/det K
/// as a geometric series around det K(0) = −(81/2)c*².
pub fn k_inverse_taylor_closed_form(c_star: f64, b: [f64; 4], order: usize) -> Mat2<f64> {
    let c = c_star;
    let [b1, b2, b3, b4] = b;
    let cp = |e: f64| c.powf(e);
    match order {
        0 => Mat2::new(cp(-1.5), 0.0, 2.0 * cp(-2.0), -2.0 * cp(-0.5)).scale(1.0 / 9.0),
        1 => Mat2::new(
            -0.5 * cp(-3.0) * b1 - cp(-3.5) * b2,
            cp(-2.0) * b2,
            cp(-2.0) * b3 + 2.0 * cp(-2.5) * b4 - cp(-3.5) * b1 - 2.0 * cp(-4.0) * b2,
            -2.0 * cp(-1.0) * b4 + 2.0 * cp(-2.5) * b2,
        )
        .scale(2.0 / 81.0),
        2 => {
            let f1 = -2.0 * cp(-2.5) * b4 + cp(-3.5) * b1 + 2.0 * cp(-4.0) * b2;
            let f2 = -4.0 * cp(-3.0) * b4 * b4 - cp(-5.0) * b1 * b1 - 4.0 * cp(-6.0) * b2 * b2
                + 2.0 * cp(-4.0) * b1 * b4
                + 8.0 * cp(-4.5) * b2 * b4
                - 4.0 * cp(-5.5) * b1 * b2
                + 2.0 * cp(-4.0) * b3 * b2;
            let adj = Mat2::new(b4, -b2, -b3, b1).scale(f1);
            let base = Mat2::new(-0.5 * cp(0.5), 0.0, -1.0, cp(1.5)).scale(f2);
            adj.add(&base).scale(2.0 / 729.0)
        }
        _ => panic!("k_inverse_taylor_closed_form supports orders 0, 1, 2"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use proptest::prelude::*;

    fn ctx(c: f64, n: usize) -> SolitonContext {
        let l = 40.0;
        SolitonContext::with_defaults(SpatialGrid::new(l, n).unwrap(), c, 0.5).unwrap()
    }

    fn bump(ctx: &SolitonContext) -> Vec<f64> {
        ctx.grid
            .x
            .iter()
            .map(|x| (x - 1.0) * (-(x + 0.5) * (x + 0.5) / 3.0).exp() + 0.3 * (-(x - 2.0) * (x - 2.0)).exp())
            .collect()
    }

    #[test]
    fn k_at_zero_matches_continuum() {
        for &c in &[1.0, 3.0] {
            let ctx = ctx(c, 1 << 16);
            let k = k_matrix(&ctx, &vec![0.0; ctx.len()]).k;
            let e = k_zero_exact(c);
            assert!((k.a / e.a - 1.0).abs() < 1e-6);
            assert_eq!(k.b, 0.0);
            assert!((k.c / e.c - 1.0).abs() < 1e-6);
            assert!((k.d / e.d - 1.0).abs() < 1e-6);
            assert!((k.det() / (-40.5 * c * c) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn order_zero_closed_form() {
        let p = k_inverse_taylor_closed_form(1.0, [0.0; 4], 0);
        let want = Mat2::new(1.0, 0.0, 2.0, -2.0).scale(1.0 / 9.0);
        assert!(p.max_abs_diff(&want) < 1e-15);
        let ctx = ctx(1.0, 1 << 14);
        let z = vec![0.0; ctx.len()];
        let d = k_inverse_taylor(&ctx, &z, 0).max_abs_diff(&want);
        assert!(d < 1e-6, "{d}");
        assert_eq!(k_inverse_taylor(&ctx, &z, 1).max_abs_diff(&Mat2::new(0.0, 0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn taylor_remainder_is_cubic() {
        let ctx = ctx(3.0, 4096);
        let w = bump(&ctx);
        let mut errs = Vec::new();
        let eps = [1e-1, 1e-2, 1e-3];
        for &e in &eps {
            let v: Vec<f64> = w.iter().map(|x| e * x).collect();
            let exact = k_matrix(&ctx, &v).k.inverse();
            let approx = (0..3).fold(Mat2::new(0.0, 0.0, 0.0, 0.0), |m, k| m.add(&k_inverse_taylor(&ctx, &v, k)));
            errs.push(exact.max_abs_diff(&approx));
        }
        let slope = (errs[0].ln() - errs[1].ln()) / (10f64.ln());
        assert!(slope >= 2.9, "slope {slope}, errors {errs:?}");
        assert!(errs[2] < errs[1]);
    }

    proptest! {
        #[test]
        fn closed_form_equals_product_form_about_continuum_k0(
            c in 0.5f64..5.0, b1 in -1.0f64..1.0, b2 in -1.0f64..1.0, b3 in -1.0f64..1.0, b4 in -1.0f64..1.0
        ) {
            let b = [b1, b2, b3, b4];
            let k0 = k_zero_exact(c);
            for order in 0..3 {
                let lhs = k_inverse_taylor_closed_form(c, b, order);
                let rhs = taylor_about(&k0, b, order);
                let scale = rhs.map(f64::abs);
                let s = scale.a.max(scale.b).max(scale.c).max(scale.d).max(1e-12);
                prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * s.max(1.0), "order {}", order);
            }
        }
    }
}
