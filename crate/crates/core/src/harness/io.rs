//! JSON interchange: family descriptors, section files and isomorphism specs.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::builders::{self, LengthProfile};
use crate::error::{Error, Result};
use crate::family::{MonotoneFamily, Orientation, Transition};
use crate::grid::TimeGrid;
use crate::isomorphism::{FamilyIsomorphism, ReferenceNode, WeightProfile};
use crate::norm::{Exponent, NormedNode};
use crate::section::Section;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_json<T: DeserializeOwned>(text: &str, context: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::json(context, &e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialise");
    s.push('\n');
    s
}

/// Either explicit node times or `n` cell-centred nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl GridSpec {
    pub fn build(&self) -> Result<TimeGrid> {
        match (&self.nodes, self.n) {
            (Some(nodes), None) => TimeGrid::new(self.t_start, self.t_end, nodes.clone()),
            (None, Some(n)) => TimeGrid::uniform(self.t_start, self.t_end, n),
            _ => Err(Error::InvalidGrid(
                "give exactly one of `nodes` and `n`".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionSpec {
    Identity,
    Mask(Vec<bool>),
    /// Row-major dense matrix.
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitTransition {
    pub from: usize,
    pub to: usize,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum BuilderSpec {
    NestedLq {
        q: Exponent,
        mesh: usize,
        lengths: LengthProfile,
    },
    SupCounterexample {
        mesh: usize,
    },
    AffineComposition {
        mesh: usize,
    },
    WeightedHilbert {
        mesh: usize,
    },
    /// Hand-built family: one norm per node and one adjacent transition per cell.
    Explicit {
        nodes: Vec<NormedNode>,
        transitions: Vec<TransitionSpec>,
        #[serde(default)]
        coords: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        explicit: Vec<ExplicitTransition>,
        #[serde(default)]
        orientation: Orientation,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub grid: GridSpec,
    pub builder: BuilderSpec,
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::param("empty matrix"));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            expected: ncols,
            found: bad.len(),
        });
    }
    Ok(DMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.iter().flatten().copied(),
    ))
}

impl FamilyDescriptor {
    pub fn build(&self) -> Result<MonotoneFamily> {
        let grid = self.grid.build()?;
        let family = match &self.builder {
            BuilderSpec::NestedLq { q, mesh, lengths } => builders::nested_lq(lengths, *q, *mesh, grid)?,
            BuilderSpec::SupCounterexample { mesh } => builders::sup_counterexample(*mesh, grid)?,
            BuilderSpec::AffineComposition { mesh } => builders::affine_composition(*mesh, grid)?,
            BuilderSpec::WeightedHilbert { mesh } => builders::weighted_hilbert(*mesh, grid)?,
            BuilderSpec::Explicit {
                nodes,
                transitions,
                coords,
                explicit,
                orientation,
            } => {
                let adjacent = transitions
                    .iter()
                    .map(|t| {
                        Ok(match t {
                            TransitionSpec::Identity => Transition::Identity,
                            TransitionSpec::Mask(m) => Transition::Mask(m.clone()),
                            TransitionSpec::Matrix(rows) => Transition::Dense(matrix_from_rows(rows)?),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let label = self.label.clone().unwrap_or_else(|| "explicit".into());
                let mut family = MonotoneFamily::new(label, grid, nodes.clone(), adjacent)?
                    .with_orientation(*orientation);
                if let Some(c) = coords {
                    family = family.with_coords(c.clone())?;
                }
                for e in explicit {
                    family = family.with_explicit_transition(e.from, e.to, matrix_from_rows(&e.matrix)?)?;
                }
                family
            }
        };
        Ok(match &self.label {
            Some(label) => family.with_label(label.clone()),
            None => family,
        })
    }
}

pub fn load_family(path: &Path) -> Result<Arc<MonotoneFamily>> {
    let desc: FamilyDescriptor = load_json(path)?;
    Ok(Arc::new(desc.build()?))
}

/// `{family_ref, values}` with one array per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionFile {
    pub family_ref: String,
    pub values: Vec<Vec<f64>>,
}

impl SectionFile {
    pub fn from_section(u: &Section) -> Self {
        Self {
            family_ref: u.family().label().to_string(),
            values: u.values().iter().map(|v| v.as_slice().to_vec()).collect(),
        }
    }

    /// Attaches the values to `family`, whose label must equal `family_ref`.
    pub fn into_section(self, family: Arc<MonotoneFamily>) -> Result<Section> {
        if self.family_ref != family.label() {
            return Err(Error::FamilyMismatch(self.family_ref, family.label().to_string()));
        }
        let values = self.values.into_iter().map(DVector::from_vec).collect();
        Section::new(family, values)
    }
}

pub fn load_section(path: &Path, family: Arc<MonotoneFamily>) -> Result<Section> {
    let file: SectionFile = load_json(path)?;
    file.into_section(family)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IsoSpec {
    Identity {
        #[serde(default)]
        reference: ReferenceNode,
    },
    Weight {
        w: WeightProfile,
        #[serde(default)]
        reference: ReferenceNode,
    },
    AffineComposition,
}

impl IsoSpec {
    pub fn build(&self, family: &MonotoneFamily, seed: u64) -> Result<FamilyIsomorphism> {
        match self {
            IsoSpec::Identity { reference } => FamilyIsomorphism::identity(family, *reference, seed),
            IsoSpec::Weight { w, reference } => {
                FamilyIsomorphism::weight(family, &w.values(family.grid())?, *reference, seed)
            }
            IsoSpec::AffineComposition => FamilyIsomorphism::affine_composition(family, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::check_family;

    #[test]
    fn builder_descriptor_round_trip() {
        let text = r#"{
            "label": "shrinking",
            "grid": {"t_start": 0.0, "t_end": 1.0, "n": 16},
            "builder": {"kind": "nested_lq", "params": {"q": 2, "mesh": 32,
                        "lengths": {"affine": {"at_zero": 1.0, "slope": -0.5}}}}
        }"#;
        let desc: FamilyDescriptor = parse_json(text, "test").unwrap();
        let fam = desc.build().unwrap();
        assert_eq!(fam.label(), "shrinking");
        assert_eq!(fam.len(), 16);
        let again: FamilyDescriptor = parse_json(&to_json_pretty(&desc), "again").unwrap();
        assert_eq!(again, desc);
    }

    #[test]
    fn explicit_descriptor_builds_and_checks() {
        let text = r#"{
            "label": "hand",
            "grid": {"t_start": 0.0, "t_end": 1.0, "nodes": [0.25, 0.75]},
            "builder": {"kind": "explicit", "params": {
                "nodes": [
                    {"dim": 2, "kind": "weighted_lq", "q": 2, "weights": [1, 1], "mask": [true, true]},
                    {"dim": 2, "kind": "weighted_lq", "q": 2, "weights": [1, 1], "mask": [true, false]}
                ],
                "transitions": [{"matrix": [[1, 0], [0, 0]]}]
            }}
        }"#;
        let fam = parse_json::<FamilyDescriptor>(text, "test").unwrap().build().unwrap();
        assert!(check_family(&fam, 20, 1, 1e-12).passed());
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_json::<FamilyDescriptor>("{\n  \"grid\": [1,\n}", "cfg").unwrap_err();
        match err {
            Error::Json { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn section_file_checks_family_ref() {
        let fam = Arc::new(MonotoneFamily::constant(
            "c",
            TimeGrid::uniform(0.0, 1.0, 2).unwrap(),
            NormedNode::euclidean(1),
        ));
        let file = SectionFile {
            family_ref: "other".into(),
            values: vec![vec![1.0], vec![2.0]],
        };
        assert!(matches!(file.clone().into_section(fam.clone()), Err(Error::FamilyMismatch(..))));
        let u = SectionFile { family_ref: "c".into(), ..file }.into_section(fam).unwrap();
        assert_eq!(SectionFile::from_section(&u).values[1], vec![2.0]);
    }

    #[test]
    fn iso_spec_named_and_sampled_weights() {
        let a: IsoSpec = parse_json(r#"{"kind": "weight", "w": "affine"}"#, "t").unwrap();
        let b: IsoSpec = parse_json(r#"{"kind": "weight", "w": [1.0, 2.0]}"#, "t").unwrap();
        let fam = MonotoneFamily::constant(
            "c",
            TimeGrid::uniform(0.0, 1.0, 2).unwrap(),
            NormedNode::euclidean(2),
        );
        assert!(a.build(&fam, 0).is_ok());
        assert_eq!(b.build(&fam, 0).unwrap().forward_bounds, vec![1.0, 2.0]);
    }
}
