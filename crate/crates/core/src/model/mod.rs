//! Generator and discriminator networks and their checkpoints.

mod blocks;
mod checkpoint;
mod discriminator;
mod generator;

pub use checkpoint::{load_checkpoint, load_checkpoint_expecting, save_checkpoint, CHECKPOINT_VERSION};
pub use discriminator::{Discriminator, DiscriminatorConfig, DISCRIMINATOR_BLOCKS, DISCRIMINATOR_INPUT_CHANNELS};
pub use generator::{Generator, GeneratorConfig, GeneratorOutput, DECODER_BLOCKS, ENCODER_BLOCKS, TEMPORAL_FACTOR};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator and discriminator of one subject-specific run.
#[derive(Clone, Debug)]
pub struct ModelBundle {
    pub generator: Generator,
    pub discriminator: Discriminator,
    pub subject_id: String,
    pub iteration: u64,
}

impl ModelBundle {
    pub fn new(
        gen: GeneratorConfig,
        disc: DiscriminatorConfig,
        subject_id: impl Into<String>,
        seed: u64,
    ) -> crate::Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            generator: Generator::new(gen, &mut rng)?,
            discriminator: Discriminator::new(disc, &mut rng)?,
            subject_id: subject_id.into(),
            iteration: 0,
        })
    }
}
