//! Packaged instances and codes.
//!
//! Hand-transcribed topologies live as JSON under `data/` and are compiled
//! into the library. Setting `CODEX_DATA_DIR` makes every loader look in
//! that directory first. The DFZ network and its quaternary table code are
//! not shipped; they load only from `CODEX_DATA_DIR`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::InstanceError;
use crate::galois::{selector, FieldSpec, Matrix};
use crate::index::{validate_index_instance, IndexInstance, RawIndexInstance};
use crate::netcode::{LinearNetworkCode, RawLinearNetworkCode, RawTableNetworkCode, TableNetworkCode};
use crate::network::{validate_network, NetworkInstance, RawEdge, RawNetwork};
use crate::solver::{MatroidSpec, RawMatroidSpec};

pub const DATA_DIR_ENV: &str = "CODEX_DATA_DIR";

pub const BUILTIN_NAMES: [&str; 4] = ["butterfly", "m-network", "non-pappus", "dfz-n3"];

pub const DFZ_CITATION: &str =
    "R. Dougherty, C. Freiling, K. Zeger, Insufficiency of linear coding in network information flow, IEEE Trans. Inf. Theory 51(8), 2005";

const PACKAGED: [(&str, &str); 5] = [
    ("manifest.json", include_str!("../data/manifest.json")),
    ("butterfly.json", include_str!("../data/butterfly.json")),
    ("m-network.json", include_str!("../data/m-network.json")),
    ("m-network-routing.json", include_str!("../data/m-network-routing.json")),
    ("non-pappus-subnetwork.json", include_str!("../data/non-pappus-subnetwork.json")),
];

/// Contents of a data file: `CODEX_DATA_DIR` first, then the packaged copy.
pub fn data_file(file: &str) -> Option<String> {
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let path = PathBuf::from(dir).join(file);
        if let Ok(text) = std::fs::read_to_string(&path) {
            return Some(text);
        }
    }
    PACKAGED.iter().find(|(name, _)| *name == file).map(|(_, text)| text.to_string())
}

fn parse<T: serde::de::DeserializeOwned>(file: &str, text: &str) -> Result<T, InstanceError> {
    serde_json::from_str(text).map_err(|e| InstanceError::Parse { file: file.to_string(), message: e.to_string() })
}

fn load<T: serde::de::DeserializeOwned>(name: &str, file: &str, citation: &str) -> Result<T, InstanceError> {
    let text = data_file(file).ok_or_else(|| InstanceError::MissingData {
        name: name.to_string(),
        file: file.to_string(),
        citation: citation.to_string(),
    })?;
    parse(file, &text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub kind: String,
    pub source: String,
    #[serde(default)]
    pub optional: bool,
}

pub fn manifest() -> BTreeMap<String, ManifestEntry> {
    parse("manifest.json", &data_file("manifest.json").expect("manifest is packaged")).expect("packaged manifest parses")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuiltinInstance {
    Network(NetworkInstance),
    Index(IndexInstance),
}

impl BuiltinInstance {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            BuiltinInstance::Network(net) => serde_json::to_value(net.to_raw()),
            BuiltinInstance::Index(inst) => serde_json::to_value(inst.to_raw()),
        }
        .expect("instances serialize")
    }
}

pub fn builtin_instance(name: &str) -> Result<BuiltinInstance, InstanceError> {
    match name {
        "butterfly" => Ok(BuiltinInstance::Index(butterfly()?)),
        "m-network" => Ok(BuiltinInstance::Network(m_network()?)),
        "non-pappus" => Ok(BuiltinInstance::Network(build_non_pappus()?)),
        "dfz-n3" => Ok(BuiltinInstance::Network(dfz_network()?)),
        other => Err(InstanceError::UnknownInstance(other.to_string())),
    }
}

pub fn butterfly() -> Result<IndexInstance, InstanceError> {
    let raw: RawIndexInstance = load("butterfly", "butterfly.json", "packaged")?;
    Ok(validate_index_instance(&raw)?)
}

/// Two transmissions `x1 + x2 + x3` and `x1 + x4` over GF(2).
pub fn butterfly_code() -> crate::indexcode::LinearIndexCode {
    let f = FieldSpec::prime(2).expect("prime");
    let g = Matrix::from_rows(&f, &[[1u32, 1], [1, 0], [1, 0], [0, 1]]).expect("entries in field");
    crate::indexcode::LinearIndexCode::new(1, 4, 2, g).expect("4 x 2")
}

/// Three messages, five relays that each forward a single edge built from
/// two messages, and seven receivers. Any linear code must put exactly half
/// of each of its two messages on every relay edge, so linear codes exist
/// exactly for even block lengths.
pub fn m_network() -> Result<NetworkInstance, InstanceError> {
    let raw: RawNetwork = load("m-network", "m-network.json", "packaged")?;
    Ok(validate_network(&raw, true)?)
}

/// Routing code of block length 2 over GF(2) for [`m_network`].
pub fn m_network_routing_code(net: &NetworkInstance) -> Result<LinearNetworkCode, InstanceError> {
    let raw: RawLinearNetworkCode = load("m-network-routing", "m-network-routing.json", "packaged")?;
    Ok(LinearNetworkCode::from_raw(net, &raw)?)
}

pub fn dfz_network() -> Result<NetworkInstance, InstanceError> {
    let raw: RawNetwork = load("dfz-n3", "dfz-n3.json", DFZ_CITATION)?;
    Ok(validate_network(&raw, false)?)
}

/// The quaternary block-length-2 table code for [`dfz_network`].
pub fn dfz_table_code(net: &NetworkInstance) -> Result<TableNetworkCode, InstanceError> {
    let raw: RawTableNetworkCode = load("dfz-n3-code", "dfz-n3-code.json", DFZ_CITATION)?;
    Ok(TableNetworkCode::from_raw(net, &raw)?)
}

/// The eight lines of the non-Pappus configuration and the 76 remaining
/// triples of `{1..9}`, both 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonPappusLines {
    pub dependent: Vec<[usize; 3]>,
    pub independent: Vec<[usize; 3]>,
}

/// The line missing from the non-Pappus configuration.
pub const PAPPUS_LINE: [usize; 3] = [7, 8, 9];

impl NonPappusLines {
    pub fn standard() -> Self {
        let dependent = vec![[1, 2, 3], [1, 5, 7], [3, 5, 9], [2, 4, 7], [4, 5, 6], [2, 6, 9], [1, 6, 8], [3, 4, 8]];
        let mut independent = Vec::new();
        for a in 1..=9 {
            for b in a + 1..=9 {
                for c in b + 1..=9 {
                    if !dependent.contains(&[a, b, c]) {
                        independent.push([a, b, c]);
                    }
                }
            }
        }
        NonPappusLines { dependent, independent }
    }

    pub fn matroid(&self) -> MatroidSpec {
        MatroidSpec::new(&RawMatroidSpec {
            description: Some("non-Pappus matroid".into()),
            elements: 9,
            rank: 3,
            dependent: self.dependent.clone(),
            independent: self.independent.clone(),
        })
        .expect("well-formed triples")
    }

    /// The Pappus configuration: the same points with [`PAPPUS_LINE`] made
    /// dependent.
    pub fn pappus_matroid(&self) -> MatroidSpec {
        let mut dependent = self.dependent.clone();
        dependent.push(PAPPUS_LINE);
        MatroidSpec::new(&RawMatroidSpec {
            description: Some("Pappus matroid".into()),
            elements: 9,
            rank: 3,
            dependent,
            independent: self.independent.iter().copied().filter(|t| *t != PAPPUS_LINE).collect(),
        })
        .expect("well-formed triples")
    }
}

pub const BUILTIN_MATROIDS: [&str; 4] = ["non-pappus", "pappus", "fano", "u23"];

pub fn builtin_matroid(name: &str) -> Option<MatroidSpec> {
    let all_triples = |n: usize, lines: &[[usize; 3]]| {
        let mut independent = Vec::new();
        for a in 1..=n {
            for b in a + 1..=n {
                for c in b + 1..=n {
                    if !lines.contains(&[a, b, c]) {
                        independent.push([a, b, c]);
                    }
                }
            }
        }
        independent
    };
    match name {
        "non-pappus" => Some(NonPappusLines::standard().matroid()),
        "pappus" => Some(NonPappusLines::standard().pappus_matroid()),
        "fano" => {
            let lines = [[1, 2, 4], [2, 3, 5], [3, 4, 6], [4, 5, 7], [1, 5, 6], [2, 6, 7], [1, 3, 7]];
            let raw = RawMatroidSpec {
                description: Some("Fano plane".into()),
                elements: 7,
                rank: 3,
                dependent: lines.to_vec(),
                independent: all_triples(7, &lines),
            };
            MatroidSpec::new(&raw).ok()
        }
        "u23" => MatroidSpec::new(&RawMatroidSpec {
            description: Some("uniform matroid U(2,3)".into()),
            elements: 3,
            rank: 2,
            dependent: vec![],
            independent: vec![],
        })
        .ok(),
        _ => None,
    }
}

/// Relay part of the non-Pappus network together with the vertex that
/// forwards each matroid element. Each such vertex sends the same symbol
/// on all of its out-edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonPappusSubnetwork {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub network: RawNetwork,
    pub elements: BTreeMap<usize, String>,
}

pub fn non_pappus_subnetwork() -> Result<NonPappusSubnetwork, InstanceError> {
    let file = "non-pappus-subnetwork.json";
    let text = data_file(file).ok_or_else(|| InstanceError::MissingSubnetworkFile(file.into()))?;
    let sub: NonPappusSubnetwork =
        serde_json::from_str(&text).map_err(|e| InstanceError::MissingSubnetworkFile(format!("{file}: {e}")))?;
    if (1..=9).any(|i| !sub.elements.get(&i).is_some_and(|v| sub.network.vertices.contains(v))) {
        return Err(InstanceError::MissingSubnetworkFile(format!("{file}: elements 1..9 must name vertices")));
    }
    Ok(sub)
}

/// Completes a relay subnetwork: for every independent triple `{i,j,k}` a
/// node `n{i}{j}{k}` fed by the vertices of elements `i`, `j`, `k`, with
/// three output edges demanding `x1`, `x2`, `x3`. Returned in canonical
/// strict form.
pub fn build_non_pappus_from(sub: &NonPappusSubnetwork, lines: &NonPappusLines) -> Result<NetworkInstance, InstanceError> {
    let mut raw = sub.network.clone();
    let mut next_id = raw.edges.iter().map(|e| e.id).max().unwrap_or(0) + 1;
    let mut push = |raw: &mut RawNetwork, tail: &str, head: &str| {
        raw.edges.push(RawEdge { id: next_id, tail: tail.into(), head: head.into() });
        next_id += 1;
        next_id - 1
    };
    for t in &lines.independent {
        let node = format!("n{}{}{}", t[0], t[1], t[2]);
        raw.vertices.push(node.clone());
        for e in t {
            push(&mut raw, &sub.elements[e], &node);
        }
        for msg in 1..=3 {
            let sink = format!("{node}-x{msg}");
            raw.vertices.push(sink.clone());
            let id = push(&mut raw, &node, &sink);
            raw.demands.insert(id, msg);
        }
    }
    raw.description = Some("non-Pappus network".into());
    Ok(validate_network(&raw, false)?.canonical_reindex())
}

pub fn build_non_pappus() -> Result<NetworkInstance, InstanceError> {
    build_non_pappus_from(&non_pappus_subnetwork()?, &NonPappusLines::standard())
}

/// The nine maps `F_3^6 -> F_3^2` of the block-length-2 representation, as
/// `6 x 2` matrices acting on `(x, y, w, z, u, v)` with `x1 = (x, y)`,
/// `x2 = (w, z)`, `x3 = (u, v)`.
pub fn non_pappus_functions() -> Vec<Matrix> {
    // each entry: coefficients of the first and second output symbol
    const F: [[[u32; 6]; 2]; 9] = [
        [[1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0]],
        [[1, 0, 1, 0, 0, 0], [0, 1, 0, 1, 0, 0]],
        [[0, 0, 1, 0, 0, 0], [0, 0, 0, 1, 0, 0]],
        [[1, 0, 0, 2, 1, 0], [0, 1, 1, 1, 0, 2]],
        [[0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 1]],
        [[1, 0, 0, 2, 2, 2], [0, 1, 1, 1, 1, 0]],
        [[1, 0, 0, 0, 0, 1], [0, 1, 0, 0, 1, 2]],
        [[1, 0, 1, 1, 1, 0], [0, 1, 1, 0, 0, 2]],
        [[0, 0, 1, 0, 1, 0], [0, 0, 0, 1, 0, 1]],
    ];
    let f = FieldSpec::prime(3).expect("prime");
    F.iter().map(|rows| Matrix::from_rows(&f, rows).expect("entries in GF(3)").transpose()).collect()
}

/// The block-length-2 GF(3) code on a network built by
/// [`build_non_pappus_from`]: every out-edge of element `i`'s vertex and
/// the edge feeding it carry `f_i`; output edges carry their demand.
pub fn non_pappus_vector_code_from(
    net: &NetworkInstance,
    sub: &NonPappusSubnetwork,
) -> Result<LinearNetworkCode, InstanceError> {
    let functions = non_pappus_functions();
    let field = functions[0].field().clone();
    let element_of: BTreeMap<&str, usize> = sub.elements.iter().map(|(&i, v)| (v.as_str(), i - 1)).collect();
    let vertex = |v: usize| net.vertices()[v].as_str();
    let coeffs = (0..net.m())
        .map(|i| {
            let e = &net.edges()[i];
            if let Some(d) = net.demand(i) {
                return Ok(selector(&field, 3, 2, d));
            }
            element_of
                .get(vertex(e.tail))
                .or_else(|| element_of.get(vertex(e.head)))
                .map(|&el| functions[el].clone())
                .ok_or(InstanceError::MissingSubnetworkFile(format!(
                    "edge {} touches no element vertex",
                    e.id
                )))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LinearNetworkCode::new(field, 2, 3, coeffs)?)
}

pub fn non_pappus_vector_code(net: &NetworkInstance) -> Result<LinearNetworkCode, InstanceError> {
    non_pappus_vector_code_from(net, &non_pappus_subnetwork()?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankViolation {
    /// 1-based elements.
    pub elements: Vec<usize>,
    pub rank: usize,
    pub expected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultilinearReport {
    pub n: usize,
    pub singletons: usize,
    pub pairs: usize,
    pub dependent_triples: usize,
    pub independent_triples: usize,
    pub violations: Vec<RankViolation>,
}

impl MultilinearReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that the stacked maps have rank `n` times the matroid rank on
/// every singleton, pair and listed triple. Each function is a
/// `(dimension) x n` matrix; all must share the field and shape.
pub fn check_multilinear_representation(functions: &[Matrix], lines: &NonPappusLines) -> MultilinearReport {
    let n = functions.first().map_or(0, Matrix::cols);
    let mut violations = Vec::new();
    let mut check = |set: &[usize], expected: usize| {
        let parts: Vec<&Matrix> = set.iter().map(|&i| &functions[i - 1]).collect();
        let rank = Matrix::hstack(parts[0].field(), parts[0].rows(), &parts).map_or(0, |m| m.rank());
        if rank != expected {
            violations.push(RankViolation { elements: set.to_vec(), rank, expected });
        }
    };
    let count = functions.len();
    for i in 1..=count {
        check(&[i], n);
    }
    for i in 1..=count {
        for j in i + 1..=count {
            check(&[i, j], 2 * n);
        }
    }
    for t in &lines.dependent {
        check(t, 2 * n);
    }
    for t in &lines.independent {
        check(t, 3 * n);
    }
    MultilinearReport {
        n,
        singletons: count,
        pairs: count * count.saturating_sub(1) / 2,
        dependent_triples: lines.dependent.len(),
        independent_triples: lines.independent.len(),
        violations,
    }
}
