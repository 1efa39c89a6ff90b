use super::net::HeadedNet;
use super::train::Objective;
use super::Matrix;
use crate::error::{Error, Result};
use crate::seed;

/// Largest relative disagreement between analytic gradients and central
/// finite differences over the objective's trainable parameters:
/// `|a - d| / (|a| + |d| + 1e-12)`.
///
/// The whole batch is one mini-batch; `prepare_batch` runs once at `epoch`
/// with the unperturbed outputs, so adaptive targets and sampled pairs are
/// held fixed while differencing.
pub fn grad_check(
    objective: &mut dyn Objective,
    net: &HeadedNet,
    x: &Matrix,
    y: &[usize],
    epoch: usize,
    h: f64,
) -> Result<f64> {
    if !(1e-7..=1e-4).contains(&h) {
        return Err(Error::InvalidInput(format!("step {h} outside [1e-7, 1e-4]")));
    }
    let rows: Vec<usize> = (0..x.rows()).collect();
    let (out, cache) = net.forward_cached(x)?;
    let mut rng = seed::rng(0);
    objective.prepare_batch(epoch, &rows, &out, &mut rng);
    let eval = objective.loss(&rows, y, &out)?;
    let analytic = net.backward(&cache, &out, &eval.grads);

    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for group in objective.trainable() {
        let Some(range) = net.group_range(group) else { continue };
        for i in range {
            let orig = net.params()[i];
            probe.params_mut()[i] = orig + h;
            let plus = objective.loss(&rows, y, &probe.forward(x)?)?.value;
            probe.params_mut()[i] = orig - h;
            let minus = objective.loss(&rows, y, &probe.forward(x)?)?.value;
            probe.params_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[i];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs() + 1e-12);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
