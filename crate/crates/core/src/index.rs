//! Index coding instances: `k` messages and a set of clients, each wanting
//! one message and holding a subset of the others as side information.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::IndexError;

/// A client may list several wanted messages; it is expanded into one
/// client per wanted message on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Wants {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawClient {
    pub wants: Wants,
    pub has: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawIndexInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub clients: Vec<RawClient>,
}

/// A client `(x, H)`, 0-based message indices, `has` sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Client {
    pub wants: usize,
    pub has: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexInstance {
    description: Option<String>,
    k: usize,
    names: Option<Vec<String>>,
    clients: Vec<Client>,
}

impl IndexInstance {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn clients(&self) -> &[Client] {
        &self.clients
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn description(&self) -> Option<&str> {
        self.description.as_deref()
    }

    /// Display name of message `i` (0-based).
    pub fn name(&self, i: usize) -> String {
        match &self.names {
            Some(names) => names[i].clone(),
            None => format!("x{}", i + 1),
        }
    }

    /// Position of a client, if present.
    pub fn position(&self, client: &Client) -> Option<usize> {
        self.clients.binary_search(client).ok()
    }

    pub fn to_raw(&self) -> RawIndexInstance {
        RawIndexInstance {
            description: self.description.clone(),
            k: self.k,
            names: self.names.clone(),
            clients: self
                .clients
                .iter()
                .map(|c| RawClient { wants: Wants::One(c.wants + 1), has: c.has.iter().map(|h| h + 1).collect() })
                .collect(),
        }
    }

    /// Renames messages by `perm[i]` (new index of old message `i`).
    pub fn relabel(&self, perm: &[usize]) -> IndexInstance {
        let clients = self
            .clients
            .iter()
            .map(|c| Client { wants: perm[c.wants], has: c.has.iter().map(|&h| perm[h]).collect() })
            .collect();
        let names = self.names.as_ref().map(|ns| {
            let mut out = ns.clone();
            for (i, name) in ns.iter().enumerate() {
                out[perm[i]] = name.clone();
            }
            out
        });
        IndexInstance::from_clients(self.k, names, clients, self.description.clone())
            .expect("relabeling preserves validity")
    }

    pub(crate) fn from_clients(
        k: usize,
        names: Option<Vec<String>>,
        clients: Vec<Client>,
        description: Option<String>,
    ) -> Result<IndexInstance, IndexError> {
        let mut set = BTreeSet::new();
        for (pos, mut c) in clients.into_iter().enumerate() {
            if c.wants >= k {
                return Err(IndexError::UnknownMessageId(c.wants + 1));
            }
            if let Some(&h) = c.has.iter().find(|&&h| h >= k) {
                return Err(IndexError::UnknownMessageId(h + 1));
            }
            c.has.sort_unstable();
            c.has.dedup();
            if c.has.contains(&c.wants) {
                return Err(IndexError::WantsInHas { client: pos, wants: c.wants + 1 });
            }
            if !set.insert(c) {
                log::warn!("duplicate client at position {pos} dropped");
            }
        }
        Ok(IndexInstance { description, k, names, clients: set.into_iter().collect() })
    }
}

impl Serialize for IndexInstance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IndexInstance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawIndexInstance::deserialize(d)?;
        validate_index_instance(&raw).map_err(serde::de::Error::custom)
    }
}

/// Checks `x ∉ H` and message ranges, expands multi-want clients, drops
/// duplicates and sorts the clients.
pub fn validate_index_instance(raw: &RawIndexInstance) -> Result<IndexInstance, IndexError> {
    if let Some(names) = &raw.names {
        if names.len() != raw.k {
            return Err(IndexError::BadNames { expected: raw.k, got: names.len() });
        }
    }
    let mut clients = Vec::new();
    for c in &raw.clients {
        let wants: Vec<usize> = match &c.wants {
            Wants::One(w) => vec![*w],
            Wants::Many(ws) => ws.clone(),
        };
        for &id in wants.iter().chain(&c.has) {
            if id == 0 || id > raw.k {
                return Err(IndexError::UnknownMessageId(id));
            }
        }
        for w in wants {
            clients.push(Client { wants: w - 1, has: c.has.iter().map(|h| h - 1).collect() });
        }
    }
    IndexInstance::from_clients(raw.k, raw.names.clone(), clients, raw.description.clone())
}

/// Largest number of distinct messages wanted by clients sharing one
/// has-set; a lower bound on the rate of any index code.
pub fn compute_mu(inst: &IndexInstance) -> usize {
    let mut groups: BTreeMap<&[usize], BTreeSet<usize>> = BTreeMap::new();
    for c in inst.clients() {
        groups.entry(&c.has).or_default().insert(c.wants);
    }
    groups.values().map(BTreeSet::len).max().unwrap_or(0)
}
