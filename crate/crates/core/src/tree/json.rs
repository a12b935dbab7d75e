//! Tree persistence:
//! `{"attributes":[..],"labels":[..],"root":{"kind":"split",...}}` with
//! leaves `{"kind":"leaf","lp":{"g":0.95,...},"mass":m}`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

use super::{DtudTree, Leaf, Node, TreeConfig};

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    attributes: Vec<String>,
    labels: Vec<String>,
    root: NodeDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<TreeConfig>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum NodeDoc {
    Split {
        attr: usize,
        threshold: f64,
        left: Box<NodeDoc>,
        right: Box<NodeDoc>,
    },
    Leaf {
        lp: Map<String, Value>,
        mass: f64,
    },
}

fn to_doc(node: &Node, labels: &[String]) -> NodeDoc {
    match node {
        Node::Leaf(leaf) => NodeDoc::Leaf {
            lp: labels
                .iter()
                .zip(&leaf.lp)
                .map(|(l, p)| (l.clone(), Value::from(*p)))
                .collect(),
            mass: leaf.mass,
        },
        Node::Split {
            attr,
            threshold,
            left,
            right,
        } => NodeDoc::Split {
            attr: *attr,
            threshold: *threshold,
            left: Box::new(to_doc(left, labels)),
            right: Box::new(to_doc(right, labels)),
        },
    }
}

fn from_doc(doc: NodeDoc, labels: &[String]) -> Result<Node> {
    match doc {
        NodeDoc::Leaf { lp, mass } => {
            let mut probs = vec![0.0; labels.len()];
            for (name, value) in lp {
                let idx = labels
                    .iter()
                    .position(|l| *l == name)
                    .ok_or_else(|| Error::Format(format!("leaf names unknown label '{name}'")))?;
                probs[idx] = value
                    .as_f64()
                    .ok_or_else(|| Error::Format(format!("lp of '{name}' is not a number")))?;
            }
            Ok(Node::Leaf(Leaf::new(probs, mass)))
        }
        NodeDoc::Split {
            attr,
            threshold,
            left,
            right,
        } => Ok(Node::Split {
            attr,
            threshold,
            left: Box::new(from_doc(*left, labels)?),
            right: Box::new(from_doc(*right, labels)?),
        }),
    }
}

impl DtudTree {
    pub fn to_json(&self) -> String {
        let doc = TreeDoc {
            attributes: self.attributes.clone(),
            labels: self.labels.clone(),
            root: to_doc(&self.root, &self.labels),
            config: self.config,
        };
        serde_json::to_string_pretty(&doc).expect("tree serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDoc = serde_json::from_str(text)?;
        let root = from_doc(doc.root, &doc.labels)?;
        let tree = DtudTree {
            attributes: doc.attributes,
            labels: doc.labels,
            root,
            config: doc.config,
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::build_tree;
    use crate::uncertain::{make_marginal, Dataset, UncertainTuple};
    use proptest::prelude::*;

    #[test]
    fn wire_format_shape() {
        let tree = DtudTree {
            attributes: vec!["T4".into()],
            labels: vec!["g".into(), "p".into()],
            root: Node::Split {
                attr: 0,
                threshold: 1.81,
                left: Box::new(Node::Leaf(Leaf::new(vec![0.95, 0.05], 10.0))),
                right: Box::new(Node::Leaf(Leaf::new(vec![0.1, 0.9], 5.5))),
            },
            config: None,
        };
        let v: Value = serde_json::from_str(&tree.to_json()).unwrap();
        assert_eq!(v["root"]["kind"], "split");
        assert_eq!(v["root"]["threshold"], 1.81);
        assert_eq!(v["root"]["left"]["kind"], "leaf");
        assert_eq!(v["root"]["left"]["lp"]["g"], 0.95);
        assert_eq!(v["root"]["right"]["mass"], 5.5);
        assert_eq!(DtudTree::from_json(&tree.to_json()).unwrap(), tree);
    }

    #[test]
    fn rejects_bad_documents() {
        let bad_lp = r#"{"attributes":["x"],"labels":["g","p"],
            "root":{"kind":"leaf","lp":{"g":0.7,"p":0.7},"mass":1}}"#;
        assert!(DtudTree::from_json(bad_lp).is_err());
        let unknown = r#"{"attributes":["x"],"labels":["g"],
            "root":{"kind":"leaf","lp":{"q":1.0},"mass":1}}"#;
        assert!(DtudTree::from_json(unknown).is_err());
        let bad_attr = r#"{"attributes":["x"],"labels":["g"],
            "root":{"kind":"split","attr":3,"threshold":1.0,
              "left":{"kind":"leaf","lp":{"g":1.0},"mass":1},
              "right":{"kind":"leaf","lp":{"g":1.0},"mass":1}}}"#;
        assert!(DtudTree::from_json(bad_attr).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lossless_round_trip(
            rows in proptest::collection::vec((proptest::array::uniform2(0.1f64..10.0), 0usize..3), 4..30),
            r in 0.0f64..0.3,
        ) {
            let tuples = rows
                .iter()
                .enumerate()
                .map(|(i, (x, l))| {
                    let m = x.iter().map(|&v| make_marginal(v, r).unwrap()).collect();
                    UncertainTuple::new(i.to_string(), m, Some(*l))
                })
                .collect();
            let d = Dataset::new(vec!["a".into(), "b".into()], vec!["g".into(), "m".into(), "p".into()], tuples).unwrap();
            let tree = build_tree(&d, &TreeConfig { max_layers: 4, ..TreeConfig::default() }).unwrap();
            let back = DtudTree::from_json(&tree.to_json()).unwrap();
            prop_assert_eq!(back, tree);
        }
    }
}
