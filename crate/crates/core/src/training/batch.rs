use gesture_autograd::{Graph, Tensor, Var};

use crate::annotation::{to_channel_major, Stream, TrainingWindow};
use crate::audio::FEATURE_DIMS;
use crate::error::{Error, Result};

/// Stacked training windows in `[N, C, T]` layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub features: Tensor,
    pub face: Tensor,
    pub body: Tensor,
    pub hand: Tensor,
}

fn stack(windows: &[&TrainingWindow], dims: usize, pick: impl Fn(&TrainingWindow) -> &[f64]) -> Result<Tensor> {
    let t = windows[0].len();
    let mut data = Vec::with_capacity(windows.len() * dims * t);
    for w in windows {
        data.extend(to_channel_major(pick(w), t, dims));
    }
    Ok(Tensor::new(vec![windows.len(), dims, t], data)?)
}

impl Batch {
    pub fn from_windows(windows: &[&TrainingWindow]) -> Result<Self> {
        let Some(first) = windows.first() else {
            return Err(Error::Contract("a batch needs at least one window".into()));
        };
        if windows.iter().any(|w| w.len() != first.len()) {
            return Err(Error::Contract("all windows of a batch must have the same length".into()));
        }
        Ok(Self {
            features: stack(windows, FEATURE_DIMS, |w| &w.features)?,
            face: stack(windows, Stream::Face.dims(), |w| &w.face)?,
            body: stack(windows, Stream::Body.dims(), |w| &w.body)?,
            hand: stack(windows, Stream::Hand.dims(), |w| &w.hand)?,
        })
    }

    pub fn len(&self) -> usize {
        self.features.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn window_length(&self) -> usize {
        self.features.shape()[2]
    }

    pub fn target(&self, s: Stream) -> &Tensor {
        match s {
            Stream::Face => &self.face,
            Stream::Body => &self.body,
            Stream::Hand => &self.hand,
        }
    }

    /// Adds the targets to `g` as constants, in `[face, body, hand]` order.
    pub fn target_vars(&self, g: &mut Graph) -> [Var; 3] {
        [g.constant(self.face.clone()), g.constant(self.body.clone()), g.constant(self.hand.clone())]
    }
}
