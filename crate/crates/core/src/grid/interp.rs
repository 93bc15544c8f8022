use super::ScalarField;

pub(super) fn bilinear(field: &ScalarField, x: [f64; 2]) -> Option<f64> {
    let grid = field.grid();
    let (i, j, s, t) = grid.locate(x)?;
    let f00 = field.at(i, j);
    let f10 = field.at(i + 1, j);
    let f01 = field.at(i, j + 1);
    let f11 = field.at(i + 1, j + 1);
    // skip corners with zero weight so nodes on a mask edge remain sampleable
    let mut acc = 0.0;
    for (w, f) in [((1.0 - s) * (1.0 - t), f00), (s * (1.0 - t), f10), ((1.0 - s) * t, f01), (s * t, f11)] {
        if w == 0.0 {
            continue;
        }
        if !f.is_finite() {
            return None;
        }
        acc += w * f;
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use crate::grid::{DomainMask, GridSpec, ScalarField};

    #[test]
    fn bilinear_reproduces_bilinear_functions() {
        let g = GridSpec::covering((0.0, 2.0), (-1.0, 1.0), 0.25).unwrap();
        let m = Arc::new(DomainMask::rectangle(g));
        let f = ScalarField::from_fn(m, |x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]);
        for &p in &[[0.3, 0.1], [1.99, -0.99], [2.0, 1.0], [0.0, -1.0], [1.1, 0.77]] {
            let exact = 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
            assert!((f.sample(p).unwrap() - exact).abs() < 1e-13);
        }
        assert!(f.sample([2.5, 0.0]).is_none());
    }
}
