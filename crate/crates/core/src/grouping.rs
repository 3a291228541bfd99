//! Input-feature groups, the group regularizer and group pruning.
//!
//! For a partition of the `p` input columns into `k` groups, the penalty is
//! `τ = Σ_i √p_i ‖θ_i‖_F`, where `θ_i` is the block of first-layer rows
//! belonging to group `i`. With no hidden layer and one output this is the
//! group-lasso penalty; with singleton groups it is the ℓ1 norm.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{ForwardPass, Network};

/// Norm below which a group block is treated as sitting at the origin.
pub const NORM_FLOOR: f64 = 1e-12;

/// Disjoint groups of column indices covering `0..p` exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    names: Vec<String>,
    p: usize,
}

impl GroupPartition {
    pub fn new(groups: Vec<Vec<usize>>, p: usize) -> Result<Self> {
        let names = (0..groups.len()).map(|i| format!("g{i}")).collect();
        Self::with_names(groups, names, p)
    }

    pub fn with_names(groups: Vec<Vec<usize>>, names: Vec<String>, p: usize) -> Result<Self> {
        if names.len() != groups.len() {
            return Err(Error::InvalidPartition(format!(
                "{} names for {} groups",
                names.len(),
                groups.len()
            )));
        }
        let mut owner: Vec<Option<usize>> = vec![None; p];
        for (i, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidPartition(format!("group {i} is empty")));
            }
            for &c in g {
                let slot = owner
                    .get_mut(c)
                    .ok_or_else(|| Error::InvalidPartition(format!("group {i} lists column {c}, but p = {p}")))?;
                if let Some(prev) = *slot {
                    return Err(Error::InvalidPartition(format!(
                        "column {c} belongs to both group {prev} and group {i}"
                    )));
                }
                *slot = Some(i);
            }
        }
        if let Some(c) = owner.iter().position(Option::is_none) {
            return Err(Error::InvalidPartition(format!("column {c} is not in any group")));
        }
        Ok(GroupPartition { groups, names, p })
    }

    /// Consecutive column blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let groups = sizes
            .iter()
            .map(|&s| {
                let g: Vec<usize> = (start..start + s).collect();
                start += s;
                g
            })
            .collect();
        Self::new(groups, start)
    }

    /// One group per column.
    pub fn singletons(p: usize) -> Self {
        Self::new((0..p).map(|c| vec![c]).collect(), p).expect("singletons form a partition")
    }

    /// A single group holding every column.
    pub fn whole(p: usize) -> Result<Self> {
        Self::new(vec![(0..p).collect()], p)
    }

    /// Parses a manifest `{"groups": [{"name": .., "columns": [..]}, ..]}`
    /// against a dataset of width `p`.
    pub fn from_manifest_str(json: &str, p: usize) -> Result<Self> {
        let manifest: GroupManifest = serde_json::from_str(json)?;
        manifest.into_partition(p)
    }

    pub fn from_manifest_file(path: &Path, p: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        Self::from_manifest_str(&text, p)
    }

    pub fn to_manifest(&self) -> GroupManifest {
        GroupManifest {
            label: None,
            groups: self
                .groups
                .iter()
                .zip(&self.names)
                .map(|(g, n)| ManifestGroup {
                    name: n.clone(),
                    columns: g.clone(),
                })
                .collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Columns of group `i` (equivalently, its first-layer rows).
    pub fn group(&self, i: usize) -> &[usize] {
        &self.groups[i]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn size(&self, i: usize) -> usize {
        self.groups[i].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.k() {
            Ok(())
        } else {
            Err(Error::GroupOutOfRange { index: i, k: self.k() })
        }
    }

    fn check_net(&self, net: &Network) -> Result<()> {
        if net.input_dim() != self.p {
            return Err(Error::dims(format!(
                "partition covers {} columns, network takes {} inputs",
                self.p,
                net.input_dim()
            )));
        }
        Ok(())
    }
}

/// JSON group manifest. `label` names the label column when the manifest
/// accompanies a CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub groups: Vec<ManifestGroup>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestGroup {
    pub name: String,
    pub columns: Vec<usize>,
}

impl GroupManifest {
    pub fn into_partition(self, p: usize) -> Result<GroupPartition> {
        let (names, groups) = self.groups.into_iter().map(|g| (g.name, g.columns)).unzip();
        GroupPartition::with_names(groups, names, p)
    }
}

/// Per-group pruning flags. Flags only ever go from false to true.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityMask {
    flags: Vec<bool>,
}

impl SparsityMask {
    pub fn new(k: usize) -> Self {
        SparsityMask { flags: vec![false; k] }
    }

    /// Reconstructs the mask from a network's pruned rows: a group is sparse
    /// when every one of its rows was pruned.
    pub fn from_network(net: &Network, part: &GroupPartition) -> Result<Self> {
        part.check_net(net)?;
        let pruned = net.pruned_rows();
        Ok(SparsityMask {
            flags: part.groups().iter().map(|g| g.iter().all(|&r| pruned[r])).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.flags.len()
    }

    pub fn is_sparse(&self, i: usize) -> bool {
        self.flags[i]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn sparse_groups(&self) -> Vec<usize> {
        (0..self.k()).filter(|&i| self.flags[i]).collect()
    }

    pub fn live_groups(&self) -> Vec<usize> {
        (0..self.k()).filter(|&i| !self.flags[i]).collect()
    }

    pub fn num_sparse(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// `‖θ_i‖_F`, the plain Frobenius norm of group `i`'s first-layer rows.
pub fn group_norm(net: &Network, part: &GroupPartition, i: usize) -> Result<f64> {
    part.check_net(net)?;
    part.check_index(i)?;
    let w = net.first_layer().weights();
    Ok(part
        .group(i)
        .iter()
        .flat_map(|&r| w.row(r))
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt())
}

/// `τ_i = √p_i · ‖θ_i‖_F`.
pub fn group_regularizer(net: &Network, part: &GroupPartition, i: usize) -> Result<f64> {
    let norm = group_norm(net, part, i)?;
    Ok((part.size(i) as f64).sqrt() * norm)
}

/// `τ = Σ_i τ_i`.
pub fn total_regularizer(net: &Network, part: &GroupPartition) -> Result<f64> {
    part.check_net(net)?;
    (0..part.k()).map(|i| group_regularizer(net, part, i)).sum()
}

/// Subgradient of `τ_i` w.r.t. `θ_i`, as a `p_i × q` block whose rows follow
/// the group's column order. At (or within [`NORM_FLOOR`] of) the origin the
/// zero subgradient is returned.
pub fn regularizer_subgradient(net: &Network, part: &GroupPartition, mask: &SparsityMask, i: usize) -> Result<Matrix> {
    part.check_index(i)?;
    if mask.is_sparse(i) {
        return Err(Error::ContractViolation(format!(
            "group {i} is sparse; its regularizer has no live parameters"
        )));
    }
    let norm = group_norm(net, part, i)?;
    let q = net.first_hidden_dim();
    let rows = part.group(i);
    let mut out = Matrix::zeros(rows.len(), q);
    if norm > NORM_FLOOR {
        let scale = (rows.len() as f64).sqrt() / norm;
        let w = net.first_layer().weights();
        for (k, &r) in rows.iter().enumerate() {
            out.row_mut(k)
                .iter_mut()
                .zip(w.row(r))
                .for_each(|(o, v)| *o = scale * v);
        }
    }
    Ok(out)
}

/// Copy of `batch` with group `i`'s columns set to zero.
pub fn masked_batch(part: &GroupPartition, i: usize, batch: &Matrix) -> Result<Matrix> {
    part.check_index(i)?;
    if batch.cols() != part.p() {
        return Err(Error::dims(format!(
            "batch has {} columns, partition covers {}",
            batch.cols(),
            part.p()
        )));
    }
    let mut out = batch.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        for &c in part.group(i) {
            row[c] = 0.0;
        }
    }
    Ok(out)
}

/// Output of the network with group `i` disconnected from the first layer.
///
/// The first layer is linear and bias-free, so zeroing the group's input
/// columns is the same computation as zeroing its weight rows; the network
/// itself is not copied.
pub fn masked_forward(net: &Network, part: &GroupPartition, i: usize, batch: &Matrix) -> Result<Matrix> {
    part.check_net(net)?;
    net.predict(&masked_batch(part, i, batch)?)
}

/// Same result as [`masked_forward`] on `pass.input()`, up to rounding, but
/// reuses the cached first pre-activation: group `i`'s contribution
/// `X[:, g_i] θ_i` is subtracted instead of redoing the full first layer.
pub fn masked_output_from_pass(net: &Network, part: &GroupPartition, i: usize, pass: &ForwardPass) -> Result<Matrix> {
    part.check_net(net)?;
    part.check_index(i)?;
    let rows = part.group(i);
    let x = pass.input();
    let w = net.first_layer().weights();
    let mut z = pass.pre_activations()[0].clone();
    for r in 0..x.rows() {
        let xr = x.row(r);
        let zr = z.row_mut(r);
        for &c in rows {
            let v = xr[c];
            if v != 0.0 {
                zr.iter_mut().zip(w.row(c)).for_each(|(z, w)| *z -= v * w);
            }
        }
    }
    net.predict_from_first_pre(z)
}

/// Sets `θ_i = 0`, freezes those rows and marks group `i` sparse.
pub fn prune_group(net: &mut Network, part: &GroupPartition, mask: &mut SparsityMask, i: usize) -> Result<()> {
    part.check_net(net)?;
    part.check_index(i)?;
    if mask.k() != part.k() {
        return Err(Error::dims(format!(
            "mask has {} flags for {} groups",
            mask.k(),
            part.k()
        )));
    }
    if mask.flags[i] {
        return Err(Error::ContractViolation(format!("group {i} is already sparse")));
    }
    net.prune_rows(part.group(i));
    mask.flags[i] = true;
    Ok(())
}
