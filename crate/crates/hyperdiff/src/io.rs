//! File formats: hypergraph datasets and one-step diffusion pairs.
//!
//! Both formats are JSON with an explicit `format_version` (currently 1).
//! Hyperedges are written in canonical form (members strictly increasing).
//! Optional blocks (`labels`, `features`, `masks`) are present as `null`
//! rather than omitted. f64 values round-trip exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::tensor::Tensor2D;

pub const FORMAT_VERSION: u32 = 1;

/// Node index lists for train/val/test membership.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl MaskIndices {
    /// Convert to boolean membership masks over `n` nodes. Each split must be
    /// non-empty and every index in range.
    pub fn bool_masks(&self, n: usize) -> Result<(Vec<bool>, Vec<bool>, Vec<bool>)> {
        let build = |name: &str, idx: &[usize]| -> Result<Vec<bool>> {
            if idx.is_empty() {
                return Err(Error::Validation(format!("{name} split is empty")));
            }
            let mut mask = vec![false; n];
            for &i in idx {
                if i >= n {
                    return Err(Error::Validation(format!(
                        "{name} split index {i} out of range for {n} nodes"
                    )));
                }
                mask[i] = true;
            }
            Ok(mask)
        };
        Ok((build("train", &self.train)?, build("val", &self.val)?, build("test", &self.test)?))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    num_nodes: usize,
    hyperedges: Vec<Vec<usize>>,
    labels: Option<Vec<usize>>,
    features: Option<Vec<Vec<f64>>>,
    masks: Option<MaskIndices>,
    format_version: u32,
}

/// In-memory dataset: structure plus optional labels/features/split masks.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub hypergraph: Hypergraph,
    pub labels: Option<Vec<usize>>,
    pub features: Option<Tensor2D>,
    pub masks: Option<MaskIndices>,
}

impl Dataset {
    pub fn new(hypergraph: Hypergraph) -> Self {
        Dataset { hypergraph, labels: None, features: None, masks: None }
    }

    pub fn num_nodes(&self) -> usize {
        self.hypergraph.num_nodes()
    }

    /// Boolean mask vectors (train, val, test) over nodes.
    pub fn mask_vectors(&self) -> Option<(Vec<bool>, Vec<bool>, Vec<bool>)> {
        let m = self.masks.as_ref()?;
        let n = self.num_nodes();
        let to_bool = |idx: &[usize]| {
            let mut v = vec![false; n];
            for &i in idx {
                v[i] = true;
            }
            v
        };
        Some((to_bool(&m.train), to_bool(&m.val), to_bool(&m.test)))
    }
}

fn check_indices(name: &str, idx: &[usize], n: usize) -> Result<()> {
    for &i in idx {
        if i >= n {
            return Err(Error::Validation(format!(
                "{name} mask references node {i}, but num_nodes is {n}"
            )));
        }
    }
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Validation(format!("{name} mask contains duplicates")));
    }
    Ok(())
}

pub fn dataset_to_json(ds: &Dataset) -> Result<String> {
    let n = ds.num_nodes();
    if let Some(labels) = &ds.labels {
        if labels.len() != n {
            return Err(Error::Validation(format!(
                "labels length {} does not match num_nodes {n}",
                labels.len()
            )));
        }
    }
    if let Some(f) = &ds.features {
        if f.rows() != n {
            return Err(Error::Validation(format!(
                "features have {} rows but num_nodes is {n}",
                f.rows()
            )));
        }
    }
    let file = DatasetFile {
        num_nodes: n,
        hyperedges: ds
            .hypergraph
            .edges()
            .iter()
            .map(|e| e.iter().map(|&v| v as usize).collect())
            .collect(),
        labels: ds.labels.clone(),
        features: ds
            .features
            .as_ref()
            .map(|f| (0..f.rows()).map(|r| f.row(r).to_vec()).collect()),
        masks: ds.masks.clone(),
        format_version: FORMAT_VERSION,
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    std::fs::write(path, dataset_to_json(ds)?)?;
    Ok(())
}

pub fn dataset_from_json(text: &str) -> Result<Dataset> {
    let file: DatasetFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("dataset: {e}")))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "dataset: unsupported format_version {} (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    let n = file.num_nodes;
    // Bounds are validated here (naming the hyperedge) so the error points at
    // the file, not at the structure builder.
    for (e, members) in file.hyperedges.iter().enumerate() {
        for &v in members {
            if v >= n {
                return Err(Error::Parse(format!(
                    "dataset: hyperedge {e} references node {v}, but num_nodes is {n}"
                )));
            }
        }
    }
    let hypergraph = Hypergraph::build(n, file.hyperedges)?;
    if let Some(labels) = &file.labels {
        if labels.len() != n {
            return Err(Error::Parse(format!(
                "dataset: labels length {} does not match num_nodes {n}",
                labels.len()
            )));
        }
    }
    let features = match file.features {
        None => None,
        Some(rows) => {
            if rows.len() != n {
                return Err(Error::Parse(format!(
                    "dataset: features have {} rows but num_nodes is {n}",
                    rows.len()
                )));
            }
            let width = rows.first().map_or(0, Vec::len);
            for (i, r) in rows.iter().enumerate() {
                if r.len() != width {
                    return Err(Error::Parse(format!(
                        "dataset: feature row {i} has length {}, expected {width}",
                        r.len()
                    )));
                }
            }
            Some(Tensor2D::from_rows(&rows))
        }
    };
    if let Some(m) = &file.masks {
        check_indices("train", &m.train, n)?;
        check_indices("val", &m.val, n)?;
        check_indices("test", &m.test, n)?;
    }
    Ok(Dataset { hypergraph, labels: file.labels, features, masks: file.masks })
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    dataset_from_json(&text)
}

/// One (input, one-step-output) diffusion pair; single channel per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pair {
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairsFile {
    /// Path (as given at generation time) of the hypergraph dataset the pairs
    /// were generated on.
    pub hypergraph_ref: String,
    pub pairs: Vec<Pair>,
    /// Generator configuration echo, kept schema-free.
    pub config: serde_json::Value,
    pub format_version: u32,
}

pub fn pairs_to_json(file: &PairsFile) -> Result<String> {
    let mut s = serde_json::to_string_pretty(file)?;
    s.push('\n');
    Ok(s)
}

pub fn save_pairs(path: &Path, file: &PairsFile) -> Result<()> {
    std::fs::write(path, pairs_to_json(file)?)?;
    Ok(())
}

pub fn load_pairs(path: &Path) -> Result<PairsFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let file: PairsFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("pairs: {e}")))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "pairs: unsupported format_version {} (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let hg = Hypergraph::build(4, vec![vec![3, 1, 0], vec![1, 2]]).unwrap();
        Dataset {
            hypergraph: hg,
            labels: Some(vec![0, 1, 1, 0]),
            features: Some(Tensor2D::from_rows(&[
                vec![0.5, -1.25],
                vec![1.0, 0.1],
                vec![0.0, 2.0],
                vec![-3.5, 0.75],
            ])),
            masks: Some(MaskIndices { train: vec![0, 1], val: vec![2], test: vec![3] }),
        }
    }

    #[test]
    fn roundtrip_is_lossless() {
        let ds = sample();
        let text = dataset_to_json(&ds).unwrap();
        let back = dataset_from_json(&text).unwrap();
        assert_eq!(back, ds);
        // Hyperedges are written canonically.
        assert!(text.find("\"hyperedges\"").is_some());
        assert_eq!(back.hypergraph.edge(0), &[0, 1, 3]);
        // Serialization itself is deterministic.
        assert_eq!(text, dataset_to_json(&back).unwrap());
    }

    #[test]
    fn optional_blocks_roundtrip_as_null() {
        let ds = Dataset::new(Hypergraph::build(2, vec![vec![0, 1]]).unwrap());
        let text = dataset_to_json(&ds).unwrap();
        assert!(text.contains("\"labels\": null"));
        assert!(text.contains("\"features\": null"));
        assert!(text.contains("\"masks\": null"));
        assert_eq!(dataset_from_json(&text).unwrap(), ds);
    }

    #[test]
    fn bad_node_index_names_hyperedge() {
        let text = r#"{
            "num_nodes": 3,
            "hyperedges": [[0, 1], [1, 7]],
            "labels": null, "features": null, "masks": null,
            "format_version": 1
        }"#;
        let err = dataset_from_json(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("hyperedge 1"), "{msg}");
        assert!(msg.contains("node 7"), "{msg}");
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let text = r#"{"num_nodes":1,"hyperedges":[[0]],"labels":null,"features":null,"masks":null,"format_version":2}"#;
        let err = dataset_from_json(text).unwrap_err();
        assert!(err.to_string().contains("format_version 2"));
    }

    #[test]
    fn unknown_keys_and_malformed_json_are_parse_errors() {
        let unknown = r#"{"num_nodes":1,"hyperedges":[[0]],"labels":null,"features":null,"masks":null,"format_version":1,"extra":5}"#;
        assert!(matches!(dataset_from_json(unknown), Err(Error::Parse(_))));
        let truncated = r#"{"num_nodes": 1, "hyperedges": [[0]"#;
        let err = dataset_from_json(truncated).unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn mask_validation() {
        let mut ds = sample();
        ds.masks = Some(MaskIndices { train: vec![0, 9], val: vec![], test: vec![] });
        let text = dataset_to_json(&ds).unwrap();
        assert!(dataset_from_json(&text).is_err());
        ds.masks = Some(MaskIndices { train: vec![0, 0], val: vec![], test: vec![] });
        let text = dataset_to_json(&ds).unwrap();
        let err = dataset_from_json(&text).unwrap_err();
        assert!(err.to_string().contains("duplicates"));
    }

    #[test]
    fn pairs_roundtrip() {
        let pf = PairsFile {
            hypergraph_ref: "hypergraph.json".into(),
            pairs: vec![Pair { h0: vec![1.0, -0.5], h1: vec![0.25, 0.125] }],
            config: serde_json::json!({"eta": 0.5}),
            format_version: FORMAT_VERSION,
        };
        let text = pairs_to_json(&pf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.json");
        std::fs::write(&path, &text).unwrap();
        assert_eq!(load_pairs(&path).unwrap(), pf);
    }
}
