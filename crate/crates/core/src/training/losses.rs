use gesture_autograd::{Graph, Var};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GeneratorOutput;

/// Weights of the face (L2), body (L1) and hand (L1) terms and of the
/// adversarial term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub face: f64,
    pub body: f64,
    pub hand: f64,
    pub adversarial: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { face: 0.37, body: 600.0, hand: 840.0, adversarial: 5.0 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("face", self.face), ("body", self.body), ("hand", self.hand), ("adversarial", self.adversarial)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("loss weight {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Weighted sum of already reduced per-stream losses.
    pub fn combine(&self, face: f64, body: f64, hand: f64) -> f64 {
        self.face * face + self.body * body + self.hand * hand
    }

    /// Regression loss plus the weighted generator adversarial term.
    pub fn total(&self, regression: f64, g_loss: f64) -> f64 {
        regression + self.adversarial * g_loss
    }
}

/// Scalar nodes of the regression objective.
#[derive(Clone, Copy, Debug)]
pub struct RegressionTerms {
    pub face: Var,
    pub body: Var,
    pub hand: Var,
    pub total: Var,
}

/// `w_face * L2(face) + w_body * L1(body) + w_hand * L1(hand)`.
pub fn regression_loss(
    g: &mut Graph,
    pred: &GeneratorOutput,
    target: [Var; 3],
    w: &LossWeights,
) -> Result<RegressionTerms> {
    let face = g.l2_loss(pred.face, target[0])?;
    let body = g.l1_loss(pred.body, target[1])?;
    let hand = g.l1_loss(pred.hand, target[2])?;
    let a = g.scale(face, w.face)?;
    let b = g.scale(body, w.body)?;
    let c = g.scale(hand, w.hand)?;
    let ab = g.add(a, b)?;
    let total = g.add(ab, c)?;
    Ok(RegressionTerms { face, body, hand, total })
}

#[derive(Clone, Copy, Debug)]
pub struct AdversarialLosses {
    pub d_loss: Var,
    pub g_loss: Var,
}

/// Discriminator and generator objectives from probabilities on real and
/// fake pairs. The generator term is `BCE(D(fake), 1)`, or `-BCE(D(fake), 0)`
/// when `saturating` is set.
pub fn adversarial_losses(g: &mut Graph, d_real: Var, d_fake: Var, saturating: bool) -> Result<AdversarialLosses> {
    let n_real = g.value(d_real).len();
    let n_fake = g.value(d_fake).len();
    let real = g.bce_loss(d_real, &vec![1.0; n_real])?;
    let fake = g.bce_loss(d_fake, &vec![0.0; n_fake])?;
    let d_loss = g.add(real, fake)?;
    let g_loss = if saturating {
        let l = g.bce_loss(d_fake, &vec![0.0; n_fake])?;
        g.scale(l, -1.0)?
    } else {
        g.bce_loss(d_fake, &vec![1.0; n_fake])?
    };
    Ok(AdversarialLosses { d_loss, g_loss })
}
