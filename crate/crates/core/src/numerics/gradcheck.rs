//! Finite-difference verification of autodiff gradients.

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// (tensor name, flat coordinate) of the worst disagreement.
    pub worst: Option<(String, usize)>,
    pub coords_checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

/// Central-difference check of `analytic` gradients against the scalar
/// function `f` evaluated at perturbed parameters.
///
/// Relative error per coordinate is `|a - b| / max(|a|, |b|, 1e-8)`. With
/// `max_coords_per_tensor` set, an evenly spaced subset of coordinates is
/// checked per tensor; `None` checks all of them. `params` is restored
/// before returning.
pub fn finite_diff_check<F>(
    names: &[&str],
    params: &mut [Tensor],
    analytic: &[Tensor],
    h: f64,
    max_coords_per_tensor: Option<usize>,
    mut f: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&[Tensor]) -> Result<f64>,
{
    if h <= 0.0 {
        return Err(Error::invalid(format!("step h must be positive, got {h}")));
    }
    assert_eq!(params.len(), analytic.len());
    assert_eq!(params.len(), names.len());

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: None,
        coords_checked: 0,
    };

    for ti in 0..params.len() {
        let len = params[ti].len();
        if len == 0 {
            continue;
        }
        let stride = match max_coords_per_tensor {
            Some(max) if max > 0 && len > max => len.div_ceil(max),
            _ => 1,
        };
        let mut coord = 0;
        while coord < len {
            let orig = params[ti].data()[coord];

            params[ti].data_mut()[coord] = orig + h;
            let f_plus = f(params)?;
            params[ti].data_mut()[coord] = orig - h;
            let f_minus = f(params)?;
            params[ti].data_mut()[coord] = orig;

            if !f_plus.is_finite() || !f_minus.is_finite() {
                return Err(Error::non_finite(format!(
                    "objective at perturbed `{}`[{coord}]",
                    names[ti]
                )));
            }

            let numeric = (f_plus - f_minus) / (2.0 * h);
            let a = analytic[ti].data()[coord];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst = Some((names[ti].to_string(), coord));
            }
            report.coords_checked += 1;
            coord += stride;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::tape::Tape;

    #[test]
    fn sum_of_squares_matches_analytic_2w() {
        let mut params = vec![Tensor::vector(vec![0.5, -1.5, 2.0])];
        let analytic = vec![Tensor::vector(vec![1.0, -3.0, 4.0])];
        let report = finite_diff_check(
            &["w"],
            &mut params,
            &analytic,
            1e-5,
            None,
            |p| Ok(p[0].data().iter().map(|x| x * x).sum()),
        )
        .unwrap();
        assert!(report.max_rel_err < 1e-7, "err {}", report.max_rel_err);
        assert_eq!(report.coords_checked, 3);
        // params restored
        assert_eq!(params[0].data(), &[0.5, -1.5, 2.0]);
    }

    #[test]
    fn constant_function_passes_via_floor() {
        let mut params = vec![Tensor::vector(vec![1.0, 2.0])];
        let analytic = vec![Tensor::zeros(&[2])];
        let report =
            finite_diff_check(&["w"], &mut params, &analytic, 1e-5, None, |_| Ok(7.0)).unwrap();
        assert!(report.max_rel_err < 1e-6);
    }

    #[test]
    fn detects_wrong_gradient() {
        let mut params = vec![Tensor::scalar(1.0)];
        let analytic = vec![Tensor::scalar(5.0)]; // true gradient is 2.0
        let report = finite_diff_check(&["w"], &mut params, &analytic, 1e-5, None, |p| {
            Ok(p[0].item() * p[0].item())
        })
        .unwrap();
        assert!(report.max_rel_err > 0.5);
        assert_eq!(report.worst.as_ref().unwrap().0, "w");
    }

    #[test]
    fn tape_composite_graph_agrees() {
        // loss = sigmoid(w . x) * tanh(w . x) through the tape
        let x = Tensor::vector(vec![0.3, -0.7, 0.9]);
        let eval = |p: &[Tensor]| -> crate::error::Result<f64> {
            let mut t = Tape::new();
            let w = t.leaf(Tensor::from_vec(&[1, 3], p[0].data().to_vec())?);
            let xv = t.leaf(x.clone());
            let y = t.matvec(w, xv)?;
            let s = t.sigmoid(y);
            let th = t.tanh(y);
            let prod = t.mul(s, th)?;
            Ok(t.value(prod).item())
        };
        let mut params = vec![Tensor::vector(vec![0.2, 0.4, -0.6])];

        let analytic = {
            let mut t = Tape::new();
            let w = t.leaf(Tensor::from_vec(&[1, 3], params[0].data().to_vec()).unwrap());
            let xv = t.leaf(x.clone());
            let y = t.matvec(w, xv).unwrap();
            let s = t.sigmoid(y);
            let th = t.tanh(y);
            let prod = t.mul(s, th).unwrap();
            t.backward(prod).unwrap();
            vec![Tensor::vector(t.grad(w).unwrap().data().to_vec())]
        };

        let report =
            finite_diff_check(&["w"], &mut params, &analytic, 1e-5, None, eval).unwrap();
        assert!(report.max_rel_err < 1e-9, "err {}", report.max_rel_err);
    }

    #[test]
    fn non_positive_h_rejected() {
        let mut params = vec![Tensor::scalar(1.0)];
        let analytic = vec![Tensor::scalar(0.0)];
        assert!(
            finite_diff_check(&["w"], &mut params, &analytic, 0.0, None, |_| Ok(0.0)).is_err()
        );
    }
}
