//! Versioned binary checkpoints: header, JSON metadata, raw little-endian
//! parameter arrays, optimizer moments, trailing SHA-256.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{init_model, AdamState, BackboneModel, ModelError, ModelKind, Tensor, TrainConfig};

const MAGIC: &[u8; 8] = b"UCDSCKPT";
const FORMAT_VERSION: u32 = 1;

/// Provenance carried inside a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: TrainConfig,
    pub id_map_digest: [u8; 32],
    pub dataset: String,
    pub method: String,
    pub best_epoch: usize,
}

pub fn save_checkpoint(
    path: &Path,
    model: &BackboneModel,
    state: &AdamState,
    meta: &CheckpointMeta,
) -> Result<(), ModelError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(match model.kind() {
        ModelKind::Pmf => 0,
        ModelKind::Neumf => 1,
    });
    let meta_json = serde_json::to_vec(meta).expect("meta serializes");
    buf.extend_from_slice(&(meta_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&meta_json);

    let write_tensors = |buf: &mut Vec<u8>, tensors: &[&Tensor]| {
        buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for t in tensors {
            buf.extend_from_slice(&(t.rows() as u64).to_le_bytes());
            buf.extend_from_slice(&(t.cols() as u64).to_le_bytes());
            for &x in t.data() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
    };
    write_tensors(&mut buf, &model.params());
    buf.extend_from_slice(&state.step_count().to_le_bytes());
    let (m, v) = state.moments();
    write_tensors(&mut buf, &m.iter().collect::<Vec<_>>());
    write_tensors(&mut buf, &v.iter().collect::<Vec<_>>());

    let digest: [u8; 32] = Sha256::digest(&buf).into();
    buf.extend_from_slice(&digest);
    fs::write(path, &buf).map_err(|e| ModelError::CheckpointIo {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_checkpoint(
    path: &Path,
) -> Result<(BackboneModel, AdamState, CheckpointMeta), ModelError> {
    let buf = fs::read(path).map_err(|e| ModelError::CheckpointIo {
        path: path.display().to_string(),
        source: e,
    })?;
    if buf.len() < MAGIC.len() + 32 {
        return Err(ModelError::Checksum);
    }
    let (body, stored) = buf.split_at(buf.len() - 32);
    let digest: [u8; 32] = Sha256::digest(body).into();
    if digest != stored {
        return Err(ModelError::Checksum);
    }

    let mut cur = Cursor { body, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(ModelError::Malformed("bad magic".into()));
    }
    let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(ModelError::VersionMismatch(version));
    }
    let kind = match cur.take(1)?[0] {
        0 => ModelKind::Pmf,
        1 => ModelKind::Neumf,
        k => return Err(ModelError::Malformed(format!("unknown model kind tag {k}"))),
    };
    let meta_len = u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize;
    let meta: CheckpointMeta = serde_json::from_slice(cur.take(meta_len)?)
        .map_err(|e| ModelError::Malformed(format!("meta json: {e}")))?;

    let params = cur.read_tensors()?;
    if params.is_empty() {
        return Err(ModelError::Malformed("no parameter tensors".into()));
    }
    let n_users = params[0].rows();
    let n_items = params[1].rows();
    let mut model = init_model(kind, &meta.config, n_users, n_items)?;
    {
        let mut slots = model.params_mut();
        if slots.len() != params.len() {
            return Err(ModelError::Malformed(format!(
                "expected {} tensors, found {}",
                slots.len(),
                params.len()
            )));
        }
        for (slot, loaded) in slots.iter_mut().zip(params) {
            if slot.rows() != loaded.rows() || slot.cols() != loaded.cols() {
                return Err(ModelError::Malformed("tensor shape mismatch".into()));
            }
            slot.data_mut().copy_from_slice(loaded.data());
        }
    }

    let t = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
    let m = cur.read_tensors()?;
    let v = cur.read_tensors()?;
    Ok((model, AdamState::from_parts(m, v, t), meta))
}

struct Cursor<'a> {
    body: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if self.pos + n > self.body.len() {
            return Err(ModelError::Malformed("unexpected end of checkpoint".into()));
        }
        let slice = &self.body[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn read_tensors(&mut self) -> Result<Vec<Tensor>, ModelError> {
        let count = u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let rows = u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize;
            let cols = u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize;
            let raw = self.take(rows * cols * 8)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(Tensor::from_data(rows, cols, data));
        }
        Ok(tensors)
    }
}
