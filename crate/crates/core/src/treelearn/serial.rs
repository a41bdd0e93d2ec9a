//! Line-oriented model format, one node per line in pre-order:
//!
//! ```text
//! F <n_trees> <seed> <global_majority>   (forests only)
//! N <feature_index> <threshold>
//! L <label> <wf_count> <lf_count>
//! ```

use super::{ForestModel, Model, TreeError, TreeNode};
use crate::dataset::N_FEATURES;
use crate::traceio::Priority;

pub fn serialize_model(model: &Model) -> String {
    let mut out = String::new();
    match model {
        Model::Tree(t) => write_node(t, &mut out),
        Model::Forest(f) => {
            out.push_str(&format!("F {} {} {}\n", f.n_trees, f.seed, f.global_majority));
            for t in &f.trees {
                write_node(t, &mut out);
            }
        }
    }
    out
}

fn write_node(node: &TreeNode, out: &mut String) {
    match node {
        TreeNode::Leaf { label, counts } => {
            out.push_str(&format!("L {} {} {}\n", label, counts[0], counts[1]));
        }
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push_str(&format!("N {feature} {threshold}\n"));
            write_node(left, out);
            write_node(right, out);
        }
    }
}

struct Lines<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Lines<'a> {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
            .filter(|(_, toks)| !toks.is_empty())
            .collect();
        Lines { lines, pos: 0 }
    }

    fn next(&mut self) -> Result<(usize, Vec<&'a str>), TreeError> {
        let last = self.lines.last().map_or(0, |l| l.0);
        let item = self.lines.get(self.pos).cloned().ok_or(TreeError::Parse {
            line: last + 1,
            message: "unexpected end of model".into(),
        })?;
        self.pos += 1;
        Ok(item)
    }

    fn peek_is_forest(&self) -> bool {
        self.lines.first().is_some_and(|l| l.1[0] == "F")
    }

    fn finish(&self) -> Result<(), TreeError> {
        match self.lines.get(self.pos) {
            None => Ok(()),
            Some((line, _)) => Err(TreeError::Parse {
                line: *line,
                message: "trailing content after model".into(),
            }),
        }
    }
}

fn field<T: std::str::FromStr>(toks: &[&str], i: usize, line: usize, what: &str) -> Result<T, TreeError> {
    toks.get(i)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| TreeError::Parse {
            line,
            message: format!("bad or missing {what}"),
        })
}

fn arity(toks: &[&str], n: usize, line: usize) -> Result<(), TreeError> {
    if toks.len() == n {
        Ok(())
    } else {
        Err(TreeError::Parse {
            line,
            message: format!("expected {n} fields, got {}", toks.len()),
        })
    }
}

fn read_node(lines: &mut Lines<'_>) -> Result<TreeNode, TreeError> {
    let (line, toks) = lines.next()?;
    match toks[0] {
        "L" => {
            arity(&toks, 4, line)?;
            let label: Priority = field(&toks, 1, line, "label")?;
            let wf: u64 = field(&toks, 2, line, "WF count")?;
            let lf: u64 = field(&toks, 3, line, "LF count")?;
            Ok(TreeNode::leaf(label, [wf, lf]))
        }
        "N" => {
            arity(&toks, 3, line)?;
            let feature: usize = field(&toks, 1, line, "feature index")?;
            if feature >= N_FEATURES {
                return Err(TreeError::Parse {
                    line,
                    message: format!("feature index {feature} out of range"),
                });
            }
            let threshold: f64 = field(&toks, 2, line, "threshold")?;
            if !threshold.is_finite() {
                return Err(TreeError::Parse {
                    line,
                    message: "threshold is not finite".into(),
                });
            }
            let left = read_node(lines)?;
            let right = read_node(lines)?;
            Ok(TreeNode::internal(feature, threshold, left, right))
        }
        other => Err(TreeError::Parse {
            line,
            message: format!("unknown record `{other}`"),
        }),
    }
}

pub fn deserialize_model(text: &str) -> Result<Model, TreeError> {
    let mut lines = Lines::new(text);
    let model = if lines.peek_is_forest() {
        let (line, toks) = lines.next()?;
        arity(&toks, 4, line)?;
        let n_trees: usize = field(&toks, 1, line, "tree count")?;
        let seed: u64 = field(&toks, 2, line, "seed")?;
        let global_majority: Priority = field(&toks, 3, line, "global majority")?;
        if n_trees == 0 {
            return Err(TreeError::Parse {
                line,
                message: "forest needs at least one tree".into(),
            });
        }
        let trees = (0..n_trees)
            .map(|_| read_node(&mut lines))
            .collect::<Result<Vec<_>, _>>()?;
        Model::Forest(ForestModel {
            trees,
            n_trees,
            seed,
            global_majority,
        })
    } else {
        Model::Tree(read_node(&mut lines)?)
    };
    lines.finish()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaf_line() {
        let m = Model::Tree(TreeNode::leaf(Priority::WF, [3, 1]));
        assert_eq!(serialize_model(&m), "L WF 3 1\n");
        assert_eq!(deserialize_model("L WF 3 1\n").unwrap(), m);
    }

    #[test]
    fn forest_roundtrip() {
        let t = TreeNode::internal(8, 0.0005, TreeNode::leaf(Priority::LF, [1, 9]), TreeNode::leaf(Priority::WF, [7, 2]));
        let m = Model::Forest(ForestModel {
            trees: vec![t.clone(), TreeNode::leaf(Priority::WF, [4, 4])],
            n_trees: 2,
            seed: u64::MAX,
            global_majority: Priority::LF,
        });
        let text = serialize_model(&m);
        assert!(text.starts_with("F 2 18446744073709551615 LF\nN 8 0.0005\n"));
        assert_eq!(deserialize_model(&text).unwrap(), m);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = deserialize_model("N 0 1.5\nL WF 1 0\n").unwrap_err();
        assert_eq!(err, TreeError::Parse { line: 3, message: "unexpected end of model".into() });
        let err = deserialize_model("N 0 1.5\nL XX 1 0\nL LF 0 1\n").unwrap_err();
        assert!(matches!(err, TreeError::Parse { line: 2, .. }));
        let err = deserialize_model("L WF 1 0\nL WF 1 0\n").unwrap_err();
        assert!(matches!(err, TreeError::Parse { line: 2, .. }));
        assert!(deserialize_model("N 12 0\nL WF 1 0\nL WF 1 0\n").is_err());
        assert!(deserialize_model("").is_err());
    }
}
