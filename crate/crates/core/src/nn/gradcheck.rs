use alloc::vec::Vec;

use rand::RngCore;

use super::{LossKind, Mode, Network, NnError, Tensor};

/// Largest relative error between backpropagated gradients and central
/// finite differences of the train-mode loss, over every parameter.
///
/// With `replay_masks` each dropout layer reuses the mask drawn by the
/// analytic pass; without it every perturbed forward draws fresh masks and
/// the comparison is expected to fail. The network's state is restored
/// before returning.
pub fn grad_check(
    net: &mut Network,
    x: &Tensor,
    y: &Tensor,
    loss: LossKind,
    step: f64,
    replay_masks: bool,
    rng: &mut dyn RngCore,
) -> Result<f64, NnError> {
    let saved = net.state_flat();
    net.set_dropout_replay(replay_masks);
    let outcome = check(net, x, y, loss, step, rng);
    net.set_dropout_replay(false);
    net.clear_caches();
    net.set_state_flat(&saved)?;
    outcome
}

fn check(
    net: &mut Network,
    x: &Tensor,
    y: &Tensor,
    loss: LossKind,
    step: f64,
    rng: &mut dyn RngCore,
) -> Result<f64, NnError> {
    let y_hat = net.forward(x, Mode::Train, rng)?;
    net.backward(&y_hat, y, loss)?;
    let analytic = net.grads_flat();
    let base = net.params_flat();
    let mut probe = base.clone();
    let mut eval = |net: &mut Network, p: &[f64]| -> Result<f64, NnError> {
        net.set_params_flat(p)?;
        let out = net.forward(x, Mode::Train, rng)?;
        loss.value(y.data(), out.data())
    };
    let mut worst = 0.0f64;
    let mut numeric = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        probe[i] = base[i] + step;
        let up = eval(net, &probe)?;
        probe[i] = base[i] - step;
        let down = eval(net, &probe)?;
        probe[i] = base[i];
        numeric.push((up - down) / (2.0 * step));
    }
    net.set_params_flat(&base)?;
    for (a, fd) in analytic.iter().zip(&numeric) {
        let denom = a.abs().max(fd.abs()).max(1e-12);
        worst = worst.max((a - fd).abs() / denom);
    }
    Ok(worst)
}
