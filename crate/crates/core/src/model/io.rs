//! Versioned JSON model files.
//!
//! ```text
//! { "version": 1, "kind": "gbdt" | "decision_tree", "config": {...},
//!   "base_score": f64, "learning_rate": f64, "feature_names": [..],
//!   "bin_edges": [[..], ..], "trees": [node, ..] }
//! node := {"split": {"feature", "threshold", "missing_goes_left", "gain", "left", "right"}}
//!       | {"leaf": {"value"}}
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{GbdtModel, ModelError, TreeNode};

pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize)]
struct ModelFileRef<'a> {
    version: u32,
    #[serde(flatten)]
    model: &'a GbdtModel,
}

#[derive(Deserialize)]
struct ModelFile {
    #[allow(dead_code)]
    version: u32,
    #[serde(flatten)]
    model: GbdtModel,
}

pub fn save_model<W: Write>(model: &GbdtModel, mut sink: W) -> Result<(), ModelError> {
    serde_json::to_writer_pretty(
        &mut sink,
        &ModelFileRef {
            version: MODEL_VERSION,
            model,
        },
    )
    .map_err(|e| ModelError::Io(e.into()))?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(())
}

pub fn load_model<R: Read>(mut source: R) -> Result<GbdtModel, ModelError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| ModelError::CorruptModel(format!("unreadable: {e}")))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| ModelError::CorruptModel(format!("invalid JSON: {e}")))?;
    match value.get("version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(MODEL_VERSION) => {}
        Some(v) => {
            return Err(ModelError::CorruptModel(format!(
                "unsupported model version {v}, expected {MODEL_VERSION}"
            )))
        }
        None => return Err(ModelError::CorruptModel("missing `version` field".into())),
    }
    // Re-parse from text so floats go through the exact round-trip parser.
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| ModelError::CorruptModel(format!("bad field: {e}")))?;
    validate(&file.model)?;
    Ok(file.model)
}

fn validate(m: &GbdtModel) -> Result<(), ModelError> {
    let corrupt = |msg: String| Err(ModelError::CorruptModel(msg));
    if m.bin_edges.len() != m.feature_names.len() {
        return corrupt(format!(
            "{} bin edge lists for {} features",
            m.bin_edges.len(),
            m.feature_names.len()
        ));
    }
    if !m.base_score.is_finite() || !m.learning_rate.is_finite() {
        return corrupt("non-finite base score or learning rate".into());
    }
    for (i, tree) in m.trees.iter().enumerate() {
        if tree.depth() > m.config.max_depth {
            return corrupt(format!("tree {i} deeper than max_depth {}", m.config.max_depth));
        }
        let mut stack = vec![tree];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf { value } if !value.is_finite() => {
                    return corrupt(format!("tree {i} has a non-finite leaf"))
                }
                TreeNode::Leaf { .. } => {}
                TreeNode::Split {
                    feature,
                    left,
                    right,
                    ..
                } => {
                    if *feature >= m.feature_names.len() {
                        return corrupt(format!("tree {i} splits on unknown feature {feature}"));
                    }
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
    }
    Ok(())
}
