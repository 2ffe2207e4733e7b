use crate::error::{Error, Result};

use super::tape::{NodeId, Tape};
use super::tensor::Tensor;

/// Smallest and largest finite-difference step accepted by [`check_gradients`].
pub const MIN_STEP: f64 = 1e-7;
pub const MAX_STEP: f64 = 1e-3;

/// Compare the tape gradient of a scalar graph against central finite
/// differences, component by component.
///
/// `build` receives a fresh tape and the leaf holding `point`, and returns
/// the scalar output node. The error for component `i` is
/// `|analytic_i - numeric_i| / max(1, |analytic_i|)`; the maximum over all
/// components is returned.
pub fn check_gradients<F>(build: F, point: &Tensor, step: f64) -> Result<f64>
where
    F: Fn(&mut Tape, NodeId) -> NodeId,
{
    if !(MIN_STEP..=MAX_STEP).contains(&step) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {step} outside [{MIN_STEP}, {MAX_STEP}]"
        )));
    }
    let mut tape = Tape::new();
    let x = tape.leaf("point");
    let out = build(&mut tape, x);
    if tape.leaves().len() != 1 {
        return Err(Error::InvalidArgument(
            "gradient-check builder must not add leaves".into(),
        ));
    }

    let eval = |p: &Tensor| -> Result<f64> {
        let values = tape.forward(&tape.bind_all(vec![p.clone()])?)?;
        values.scalar(out).ok_or_else(|| {
            Error::InvalidArgument("gradient-check output is not scalar".into())
        })
    };

    let values = tape.forward(&tape.bind_all(vec![point.clone()])?)?;
    let grads = tape.backward(&values, out)?;
    let analytic = grads.get(x).expect("point is a leaf");

    let mut worst = 0.0_f64;
    let mut probe = point.clone();
    for i in 0..point.len() {
        let base = point.data()[i];
        probe.data_mut()[i] = base + step;
        let up = eval(&probe)?;
        probe.data_mut()[i] = base - step;
        let down = eval(&probe)?;
        probe.data_mut()[i] = base;

        let numeric = (up - down) / (2.0 * step);
        if !numeric.is_finite() {
            return Err(Error::Numerical(format!(
                "finite difference for component {i} is not finite"
            )));
        }
        let a = analytic.data()[i];
        worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
    }
    Ok(worst)
}
