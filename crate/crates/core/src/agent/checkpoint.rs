//! Binary checkpoint: `QROUTECK`, a little-endian `u32` version, a `u64`
//! header length, a JSON header, then every tensor as little-endian `f32`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::AdamSettings;
use super::{AgentConfig, AgentError, AgentModel, OptimizerState, Params, Tensor};
use crate::topology::Topology;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"QROUTECK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Offset into the payload, in `f32` elements.
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    topology_fingerprint: String,
    config: AgentConfig,
    optimizer: AdamSettings,
    tensors: Vec<TensorEntry>,
}

fn all_tensors<'a>(model: &'a AgentModel, opt: &'a OptimizerState) -> Vec<(String, &'a Tensor)> {
    let names = model.params.names();
    let mut out = Vec::new();
    for (prefix, params) in [("", &model.params), ("adam.m.", &opt.m), ("adam.v.", &opt.v)] {
        for (name, t) in names.iter().zip(params.tensors()) {
            out.push((format!("{prefix}{name}"), t));
        }
    }
    out
}

pub fn save_checkpoint(model: &AgentModel, opt: &OptimizerState, path: impl AsRef<Path>) -> Result<(), AgentError> {
    let tensors = all_tensors(model, opt);
    let mut offset = 0;
    let mut manifest = Vec::with_capacity(tensors.len());
    for (name, t) in &tensors {
        manifest.push(TensorEntry {
            name: name.clone(),
            shape: t.shape.clone(),
            offset,
        });
        offset += t.len();
    }
    let header = Header {
        version: CHECKPOINT_VERSION,
        topology_fingerprint: model.topology_fingerprint.clone(),
        config: model.config.clone(),
        optimizer: opt.settings.clone(),
        tensors: manifest,
    };
    let header = serde_json::to_vec(&header).map_err(|e| AgentError::Corrupt(e.to_string()))?;

    let mut bytes = Vec::with_capacity(20 + header.len() + 4 * offset);
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&header);
    for (_, t) in &tensors {
        for &v in &t.data {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    file.sync_all()?;
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> AgentError {
    AgentError::Corrupt(msg.into())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(AgentModel, OptimizerState), AgentError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 20 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let header_end = usize::try_from(header_len)
        .ok()
        .and_then(|n| n.checked_add(20))
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| corrupt("header length exceeds file"))?;
    let header: Header = serde_json::from_slice(&bytes[20..header_end]).map_err(|e| corrupt(e.to_string()))?;
    if header.version != version {
        return Err(corrupt("header version disagrees with preamble"));
    }
    let payload = &bytes[header_end..];
    if payload.len() % 4 != 0 {
        return Err(corrupt("payload is not a whole number of f32 values"));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();

    // Build the expected layout from the config, then fill it by name.
    let mut model = AgentModel::new(header.config, header.topology_fingerprint, 0)?;
    let mut opt = OptimizerState::new(&model, header.optimizer.learning_rate, header.optimizer.lr_decay);
    opt.settings = header.optimizer;
    let names = model.params.names();
    let expected: Vec<String> = ["", "adam.m.", "adam.v."]
        .iter()
        .flat_map(|p| names.iter().map(move |n| format!("{p}{n}")))
        .collect();
    if header.tensors.len() != expected.len() {
        return Err(corrupt(format!(
            "expected {} tensors, found {}",
            expected.len(),
            header.tensors.len()
        )));
    }
    let mut used = 0;
    let targets: Vec<&mut Params> = vec![&mut model.params, &mut opt.m, &mut opt.v];
    let mut slots: Vec<&mut Tensor> = targets.into_iter().flat_map(|p| p.tensors_mut()).collect();
    for (i, entry) in header.tensors.iter().enumerate() {
        if entry.name != expected[i] {
            return Err(corrupt(format!("tensor {i} is {:?}, expected {:?}", entry.name, expected[i])));
        }
        let slot = &mut slots[i];
        if entry.shape != slot.shape {
            return Err(AgentError::ShapeMismatch(format!(
                "{}: {:?} vs {:?}",
                entry.name, entry.shape, slot.shape
            )));
        }
        let end = entry
            .offset
            .checked_add(slot.len())
            .filter(|&e| e <= values.len())
            .ok_or_else(|| corrupt(format!("{} runs past the payload", entry.name)))?;
        for (dst, &src) in slot.data.iter_mut().zip(&values[entry.offset..end]) {
            *dst = f64::from(src);
        }
        used += slot.len();
    }
    drop(slots);
    if used != values.len() {
        return Err(corrupt("payload has trailing values"));
    }
    if !model.params.is_finite() {
        return Err(AgentError::NonFinite("checkpoint parameters"));
    }
    Ok((model, opt))
}

/// Loads and rejects checkpoints trained for a different coupling graph.
pub fn load_checkpoint_for(
    path: impl AsRef<Path>,
    topology: &Topology,
) -> Result<(AgentModel, OptimizerState), AgentError> {
    let (model, opt) = load_checkpoint(path)?;
    model.check_topology(topology)?;
    Ok((model, opt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::adam_step;

    fn trained(t: &Topology) -> (AgentModel, OptimizerState) {
        let mut model = AgentModel::for_topology(t, 9);
        let mut opt = OptimizerState::with_defaults(&model);
        let mut g = model.params.zeros_like();
        for (i, tensor) in g.tensors_mut().into_iter().enumerate() {
            tensor.data.iter_mut().enumerate().for_each(|(j, v)| *v = ((i + 7 * j) as f64).cos());
        }
        adam_step(&mut model, &g, &mut opt).unwrap();
        opt.decay_learning_rate();
        (model, opt)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = Topology::ring(5).unwrap();
        let (model, opt) = trained(&t);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.ckpt");
        save_checkpoint(&model, &opt, &path).unwrap();
        let (m2, o2) = load_checkpoint_for(&path, &t).unwrap();
        assert_eq!(model, m2);
        assert_eq!(opt, o2);
        let path2 = dir.path().join("again.ckpt");
        save_checkpoint(&m2, &o2, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn wrong_topology_rejected() {
        let (model, opt) = trained(&Topology::ring(5).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.ckpt");
        save_checkpoint(&model, &opt, &path).unwrap();
        assert!(matches!(
            load_checkpoint_for(&path, &Topology::line(5).unwrap()),
            Err(AgentError::TopologyMismatch { .. })
        ));
    }

    #[test]
    fn damage_is_detected() {
        let (model, opt) = trained(&Topology::ring(5).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.ckpt");
        save_checkpoint(&model, &opt, &path).unwrap();
        let bytes = fs::read(&path).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        fs::write(&path, &bad).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(AgentError::Corrupt(_))));

        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(load_checkpoint(&path).is_err());

        let mut long = bytes.clone();
        long.extend_from_slice(&0f32.to_le_bytes());
        fs::write(&path, &long).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
