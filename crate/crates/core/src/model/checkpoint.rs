use std::collections::BTreeMap;
use std::path::Path;

use gesture_autograd::{ParamStore, Tensor};
use serde::{Deserialize, Serialize};

use super::{DiscriminatorConfig, GeneratorConfig, ModelBundle};
use crate::error::{Error, Result};
use crate::formats::{ArrayContainer, NamedArray};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    generator: GeneratorConfig,
    discriminator: DiscriminatorConfig,
    subject_id: String,
    iteration: u64,
    step_counts: BTreeMap<String, u64>,
    batches_tracked: BTreeMap<String, u64>,
}

fn export(store: &ParamStore, arrays: &mut Vec<NamedArray>, header: &mut Header) {
    for p in store.params() {
        let shape = p.value.shape().to_vec();
        arrays.push(NamedArray::new(p.name.clone(), shape.clone(), p.value.data().to_vec()));
        arrays.push(NamedArray::new(format!("{}.adam_m", p.name), shape.clone(), p.adam_m.clone()));
        arrays.push(NamedArray::new(format!("{}.adam_v", p.name), shape, p.adam_v.clone()));
        header.step_counts.insert(p.name.clone(), p.step_count);
    }
    for bn in store.batchnorms() {
        let c = bn.channels();
        arrays.push(NamedArray::new(format!("{}.running_mean", bn.name), vec![c], bn.running_mean.clone()));
        arrays.push(NamedArray::new(format!("{}.running_var", bn.name), vec![c], bn.running_var.clone()));
        header.batches_tracked.insert(bn.name.clone(), bn.batches_tracked);
    }
}

/// Writes every parameter, Adam moment, running statistic and counter.
pub fn save_checkpoint(model: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let mut header = Header {
        generator: *model.generator.config(),
        discriminator: *model.discriminator.config(),
        subject_id: model.subject_id.clone(),
        iteration: model.iteration,
        step_counts: BTreeMap::new(),
        batches_tracked: BTreeMap::new(),
    };
    let mut arrays = Vec::new();
    export(&model.generator.store, &mut arrays, &mut header);
    export(&model.discriminator.store, &mut arrays, &mut header);
    let container = ArrayContainer { version: CHECKPOINT_VERSION, header: serde_json::to_value(&header)?, arrays };
    container.write(path)
}

fn import(store: &mut ParamStore, arrays: &BTreeMap<&str, &NamedArray>, header: &Header) -> Result<usize> {
    let fetch = |name: &str, shape: &[usize]| -> Result<Vec<f64>> {
        let a = arrays.get(name).ok_or_else(|| Error::Checkpoint(format!("missing array {name}")))?;
        if a.shape != shape {
            return Err(Error::Checkpoint(format!("array {name} has shape {:?}, expected {shape:?}", a.shape)));
        }
        Ok(a.data.clone())
    };
    let mut used = 0;
    for p in store.params_mut() {
        let shape = p.value.shape().to_vec();
        p.value = Tensor::new(shape.clone(), fetch(&p.name, &shape)?)?;
        p.adam_m = fetch(&format!("{}.adam_m", p.name), &shape)?;
        p.adam_v = fetch(&format!("{}.adam_v", p.name), &shape)?;
        p.step_count = *header
            .step_counts
            .get(&p.name)
            .ok_or_else(|| Error::Checkpoint(format!("missing step count for {}", p.name)))?;
        p.grad = None;
        used += 3;
    }
    for bn in store.batchnorms_mut() {
        let c = bn.channels();
        bn.running_mean = fetch(&format!("{}.running_mean", bn.name), &[c])?;
        bn.running_var = fetch(&format!("{}.running_var", bn.name), &[c])?;
        bn.batches_tracked = *header
            .batches_tracked
            .get(&bn.name)
            .ok_or_else(|| Error::Checkpoint(format!("missing batch count for {}", bn.name)))?;
        used += 2;
    }
    Ok(used)
}

/// Restores a bundle; the architecture comes from the stored configs.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let container = ArrayContainer::read(path).map_err(|e| match e {
        Error::Io { .. } => e,
        other => Error::Checkpoint(other.to_string()),
    })?;
    if container.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "{}: version {} is not supported (expected {CHECKPOINT_VERSION})",
            path.display(),
            container.version
        )));
    }
    let header: Header = serde_json::from_value(container.header.clone())
        .map_err(|e| Error::Checkpoint(format!("{}: bad header: {e}", path.display())))?;
    let mut model = ModelBundle::new(header.generator, header.discriminator, header.subject_id.clone(), 0)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    model.iteration = header.iteration;
    let mut by_name = BTreeMap::new();
    for a in &container.arrays {
        if by_name.insert(a.name.as_str(), a).is_some() {
            return Err(Error::Checkpoint(format!("duplicate array {}", a.name)));
        }
    }
    let used = import(&mut model.generator.store, &by_name, &header)?
        + import(&mut model.discriminator.store, &by_name, &header)?;
    if used != by_name.len() {
        return Err(Error::Checkpoint(format!("{} arrays do not belong to this architecture", by_name.len() - used)));
    }
    Ok(model)
}

/// Like [`load_checkpoint`], but rejects checkpoints built from other configs.
pub fn load_checkpoint_expecting(
    path: impl AsRef<Path>,
    generator: &GeneratorConfig,
    discriminator: &DiscriminatorConfig,
) -> Result<ModelBundle> {
    let model = load_checkpoint(path)?;
    if model.generator.config() != generator || model.discriminator.config() != discriminator {
        return Err(Error::Checkpoint(format!(
            "checkpoint was built with {:?} / {:?}, expected {generator:?} / {discriminator:?}",
            model.generator.config(),
            model.discriminator.config()
        )));
    }
    Ok(model)
}
