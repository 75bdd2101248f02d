//! Reverse-mode automatic differentiation for 1D convolutional sequence models.
//!
//! The engine is deliberately narrow: fp64 tensors laid out as `[N, C, T]`,
//! a fixed set of ops (width-3 convolution, batch norm, max pooling,
//! nearest upsampling, activations, a dense layer, channel concatenation and
//! the regression/classification losses), and Adam.
//!
//! ```
//! use gesture_autograd::{Graph, Tensor};
//!
//! let mut g = Graph::new();
//! let x = g.input(Tensor::new(vec![1, 4], vec![1.0, -2.0, 3.0, 0.5]).unwrap());
//! let y = g.relu(x).unwrap();
//! let loss = g.sum(y).unwrap();
//! let grads = g.backward(loss).unwrap();
//! assert_eq!(grads.get(x).unwrap(), &[1.0, 0.0, 1.0, 1.0]);
//! ```

mod adam;
mod error;
pub mod gradcheck;
mod graph;
mod kernels;
mod param;
mod tensor;

pub use adam::Adam;
pub use error::{AutogradError, Result};
pub use graph::{Gradients, Graph, Mode, Var, BCE_CLAMP, BN_EPS, BN_MOMENTUM};
pub use param::{BatchNormState, BnId, ParamId, ParamKey, ParamStore, Parameter};
pub use tensor::Tensor;
